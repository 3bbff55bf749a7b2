"""Training stages of the review model, the plug-in and the alternative adaptation strategies.

Every stage updates its modules in place and returns a :class:`StageResult`
with the loss on a fixed evaluation batch before and after the stage.
Given a **state_path**, a stage snapshots itself every ``log_every`` steps
(see :func:`~fewSUM.checkpoint.save_train_state`) and an interrupted stage
continues from its last snapshot, bit-for-bit as if it had never stopped.

Index
-----
.. currentmodule:: fewSUM.training
.. autosummary::
    STAGE_NAMES
    StageConfig
    StageResult
    AdamState
    adam_step
    select_trainable
    pretrain_lm
    train_loo
    novelty_phase
    plugin_init
    plugin_finetune
    joint_finetune
    usl_finetune
    mtl_train
    mtl_schedule
    with_task_embedding
    set_deterministic

API
---
.. autodata:: STAGE_NAMES
.. autoclass:: StageConfig
    :members: from_dict
.. autoclass:: StageResult
.. autoclass:: AdamState
.. autofunction:: adam_step
.. autofunction:: select_trainable
.. autofunction:: pretrain_lm
.. autofunction:: train_loo
.. autofunction:: novelty_phase
.. autofunction:: plugin_init
.. autofunction:: plugin_finetune
.. autofunction:: joint_finetune
.. autofunction:: usl_finetune
.. autofunction:: mtl_train
.. autofunction:: mtl_schedule
.. autofunction:: with_task_embedding
.. autofunction:: set_deterministic

"""

import os
import json
import dataclasses
from fnmatch import fnmatchcase
from dataclasses import dataclass, field
from itertools import cycle
from typing import (
    Tuple, Dict, List, Optional, Mapping, Any, Sequence, Callable, Iterator, NamedTuple
)

import h5py
import numpy as np
import torch
from torch import nn
from nanoutils import PathType

from .logger import logger
from .exceptions import StageAbort
from .textproc import BpeModel
from .batches import Example, Batch, collate, iter_batches
from .ops import cross_entropy
from .model import EncoderGenerator, loo_loss
from .plugin import PropertyPlugin, DistanceWeights, plugin_distance, distance_components
from .hdf5_log import update_hdf5_log
from .checkpoint import TrainState, save_train_state, load_train_state

__all__ = [
    'STAGE_NAMES', 'MODES', 'StageConfig', 'StageResult', 'AdamState', 'adam_step',
    'select_trainable', 'pretrain_lm', 'train_loo', 'novelty_phase', 'plugin_init',
    'plugin_finetune', 'joint_finetune', 'usl_finetune', 'mtl_train', 'mtl_schedule',
    'with_task_embedding', 'set_deterministic'
]

#: The names of all training stages.
STAGE_NAMES: Tuple[str, ...] = (
    'pretrain_lm', 'train_loo', 'novelty_phase', 'plugin_init', 'plugin_finetune',
    'joint_finetune', 'usl_finetune', 'mtl'
)

#: Checkpoint mode labels of the adaptation strategies.
MODES: Mapping[str, str] = {
    'fewsum': 'FewSum', 'usl': 'USL', 'usl_finetune': 'USL+F', 'mtl': 'MTL',
}

#: Trainable tensors of the joint fine-tuning stage.
JOINT_TRAINABLE = ('layers.*.cross_attn.*', 'layers.*.norm2.*', 'plugin.*')

_Params = Dict[str, nn.Parameter]


@dataclass(frozen=True)
class StageConfig:
    """Settings of a single training stage.

    Attributes
    ----------
    name : :class:`str`
        One of :data:`STAGE_NAMES`.
    lr : :class:`float`
        The Adam learning rate.
    steps : :class:`int`
        The number of optimizer steps.
    batch_size : :class:`int`
        The number of examples per batch.
    novelty_lambda : :class:`float`
        The scaling of the novelty penalty.
    frozen, trainable : :class:`Tuple[str, ...]<typing.Tuple>`
        :mod:`fnmatch` patterns of parameter names; plug-in names carry a ``"plugin."`` prefix.
        If **trainable** is non-empty, only matching parameters are updated.
    seed : :class:`int`
        Seeds dropout and batch shuffling.
    mix_ratio : :class:`Tuple[int, int]<typing.Tuple>`
        The number of review and summary batches per cycle (multi-task stage only).
    epochs : :class:`int`, optional
        The epoch count of the original schedule; recorded only.
    log_every : :class:`int`
        Record the training loss every so many steps.
    clip_norm : :class:`float`
        The maximum global gradient norm.
    eval_size : :class:`int`
        The number of examples in the fixed evaluation batch.

    """

    name: str
    lr: float = 1e-3
    steps: int = 100
    batch_size: int = 8
    novelty_lambda: float = 0.0
    frozen: Tuple[str, ...] = ()
    trainable: Tuple[str, ...] = ()
    seed: int = 0
    mix_ratio: Tuple[int, int] = (1, 1)
    epochs: Optional[int] = None
    log_every: int = 10
    clip_norm: float = 1.0
    eval_size: int = 32
    betas: Tuple[float, float] = (0.9, 0.999)
    eps: float = 1e-8

    def __post_init__(self) -> None:
        if self.name not in STAGE_NAMES:
            raise ValueError(f"'name' expected one of {STAGE_NAMES!r}; "
                             f"observed value: {self.name!r}")
        elif self.lr <= 0:
            raise ValueError(f"'lr' must be larger than 0; observed value: {self.lr!r}")
        elif self.steps < 0:
            raise ValueError(f"'steps' must be non-negative; observed value: {self.steps!r}")
        elif self.batch_size < 1:
            raise ValueError(f"'batch_size' must be larger than 0; "
                             f"observed value: {self.batch_size!r}")
        elif self.novelty_lambda < 0:
            raise ValueError(f"'novelty_lambda' must be non-negative; "
                             f"observed value: {self.novelty_lambda!r}")
        elif min(self.mix_ratio) < 0 or sum(self.mix_ratio) < 1:
            raise ValueError(f"invalid 'mix_ratio': {self.mix_ratio!r}")

    @classmethod
    def from_dict(cls, name: str, dct: Mapping[str, Any]) -> 'StageConfig':
        """Construct a stage config from a mapping, ignoring unknown keys."""
        names = {f.name for f in dataclasses.fields(cls)}
        kwargs = {k: v for k, v in dct.items() if k in names and k != 'name'}
        for k in ('frozen', 'trainable', 'mix_ratio', 'betas'):
            if k in kwargs:
                kwargs[k] = tuple(kwargs[k])
        return cls(name=name, **kwargs)


class StageResult(NamedTuple):
    """The outcome of a training stage."""

    name: str
    steps: int
    initial_loss: float
    final_loss: float
    history: List[Tuple[int, float]]


@dataclass
class AdamState:
    """Bias-corrected Adam moments of a set of named parameters."""

    params: _Params
    lr: float = 1e-3
    betas: Tuple[float, float] = (0.9, 0.999)
    eps: float = 1e-8
    optimizer: torch.optim.Adam = field(init=False, repr=False)

    def __post_init__(self) -> None:
        self.optimizer = torch.optim.Adam(
            list(self.params.values()), lr=self.lr, betas=self.betas, eps=self.eps
        )

    @property
    def step_count(self) -> int:
        """:class:`int`: Get the number of performed steps."""
        states = self.optimizer.state.values()
        return max((int(s['step']) for s in states if 'step' in s), default=0)


def adam_step(params: _Params, grads: Mapping[str, Optional[torch.Tensor]],
              state: AdamState, lr: Optional[float] = None) -> None:
    """Apply a single Adam update to **params** in place.

    Raises
    ------
    :exc:`~fewSUM.exceptions.StageAbort`
        Raised if a gradient contains non-finite values.

    """
    for name, p in params.items():
        g = grads.get(name)
        if g is not None and not bool(torch.isfinite(g).all()):
            raise StageAbort(f"non-finite gradient in {name!r} "
                             f"(step {state.step_count + 1}); aborting the stage")
        p.grad = None if g is None else g.detach().clone()

    if lr is not None:
        for group in state.optimizer.param_groups:
            group['lr'] = lr
    state.optimizer.step()


def _named_params(model: nn.Module, plugin: Optional[nn.Module] = None) -> _Params:
    ret = dict(model.named_parameters())
    if plugin is not None:
        ret.update({f'plugin.{k}': v for k, v in plugin.named_parameters()})
    return ret


def _matches(name: str, patterns: Sequence[str]) -> bool:
    return any(fnmatchcase(name, pat) for pat in patterns)


def select_trainable(params: Mapping[str, nn.Parameter], frozen: Sequence[str] = (),
                     trainable: Sequence[str] = ()) -> _Params:
    """Return the parameters not matched by **frozen** and, if given, matched by **trainable**."""
    return {
        k: v for k, v in params.items()
        if not _matches(k, frozen) and (not trainable or _matches(k, trainable))
    }


def set_deterministic(seed: Optional[int] = None) -> None:
    """Disable op-level parallelism and non-deterministic kernels; optionally seed :mod:`torch`."""
    torch.use_deterministic_algorithms(True)
    torch.set_num_threads(1)
    if seed is not None:
        torch.manual_seed(seed)


_LossFn = Callable[[Batch], Tuple[torch.Tensor, Dict[str, float]]]


def _epochs(examples: Sequence[Example], bpe: BpeModel, batch_size: int,
            rng: np.random.Generator) -> Iterator[Batch]:
    while True:
        yield from iter_batches(examples, bpe, batch_size, rng)


def _resume(path: PathType, name: str, config: str, trainable: _Params,
            state: AdamState) -> Optional[TrainState]:
    ts = load_train_state(path)
    if ts is None:
        return None
    elif ts.stage != name or ts.config != config or ts.params.keys() != trainable.keys():
        logger.warning(f'Stage {name!r}: ignoring the stale train state {os.fspath(path)!r}')
        return None

    with torch.no_grad():
        for k, p in trainable.items():
            p.copy_(ts.params[k])
    state_dict = state.optimizer.state_dict()
    state_dict['state'] = ts.optimizer
    state.optimizer.load_state_dict(state_dict)
    return ts


def _run_stage(cfg: StageConfig, modules: Sequence[nn.Module], params: _Params,
               batches: Iterator[Batch], loss_fn: _LossFn, eval_batch: Batch,
               log: Optional[h5py.Group] = None,
               state_path: Optional[PathType] = None) -> StageResult:
    trainable = select_trainable(params, cfg.frozen, cfg.trainable)
    if not trainable:
        raise ValueError(f"stage {cfg.name!r}: no trainable parameters")

    saved = {k: p.requires_grad for k, p in params.items()}
    for k, p in params.items():
        p.requires_grad_(k in trainable)

    def evaluate() -> float:
        for m in modules:
            m.eval()
        with torch.no_grad():
            return float(loss_fn(eval_batch)[0])

    config = json.dumps(dataclasses.asdict(cfg), sort_keys=True)
    try:
        state = AdamState(trainable, cfg.lr, cfg.betas, cfg.eps)
        ts = None if state_path is None else _resume(state_path, cfg.name, config,
                                                     trainable, state)
        history: List[Tuple[int, float]]
        if ts is None:
            start, initial, history = 0, evaluate(), []
        else:
            # Batches are drawn from a seeded stream; replay it up to the saved step
            start, initial, history = ts.step, ts.initial_loss, list(ts.history)
            for _ in range(start):
                next(batches)
            torch.set_rng_state(ts.rng_state)
            logger.info(f'Stage {cfg.name!r}: resuming after step {start}')
        logger.info(f'Stage {cfg.name!r}: {len(trainable)} trainable tensors, '
                    f'{cfg.steps} steps, initial loss {initial:.6f}')

        for step in range(start + 1, cfg.steps + 1):
            for m in modules:
                m.train()
            batch = next(batches)
            loss, components = loss_fn(batch)
            if not bool(torch.isfinite(loss)):
                raise StageAbort(f"stage {cfg.name!r}: non-finite loss {float(loss)!r} "
                                 f"at step {step}; components: {components!r}")

            state.optimizer.zero_grad(set_to_none=True)
            loss.backward()
            grads = {k: p.grad for k, p in trainable.items()}
            torch.nn.utils.clip_grad_norm_(
                [g for g in grads.values() if g is not None], cfg.clip_norm
            )
            adam_step(trainable, grads, state)

            if step % cfg.log_every == 0 or step == cfg.steps:
                history.append((step, float(loss)))
                if log is not None:
                    update_hdf5_log(log, cfg.name, step, float(loss), components)
                if state_path is not None and step < cfg.steps:
                    save_train_state(state_path, cfg.name, config, step, initial, history,
                                     trainable, state.optimizer)

        final = evaluate()
    finally:
        for k, p in params.items():
            p.requires_grad_(saved[k])

    if state_path is not None and os.path.isfile(state_path):
        os.remove(state_path)
    logger.info(f'Stage {cfg.name!r}: final loss {final:.6f}')
    return StageResult(cfg.name, cfg.steps, initial, final, history)


def _setup(cfg: StageConfig, examples: Sequence[Example],
           bpe: BpeModel) -> Tuple[Iterator[Batch], Batch]:
    if not examples:
        raise ValueError(f"stage {cfg.name!r}: no training examples")
    torch.manual_seed(cfg.seed)
    rng = np.random.default_rng(cfg.seed)
    eval_batch = collate(examples[:cfg.eval_size], bpe)
    return _epochs(examples, bpe, cfg.batch_size, rng), eval_batch


def _nll_fn(model: EncoderGenerator, use_sources: bool = True, use_props: bool = True,
            novelty_lambda: float = 0.0, use_task: bool = False) -> _LossFn:
    def loss_fn(batch: Batch) -> Tuple[torch.Tensor, Dict[str, float]]:
        props = batch.props if use_props else torch.zeros_like(batch.props)
        out = loo_loss(
            model, batch.sources if use_sources else None, batch.target_in, batch.target_out,
            props, novelty_lambda, task=batch.task if use_task else None,
        )
        return out.loss, out.components()
    return loss_fn


def pretrain_lm(model: EncoderGenerator, examples: Sequence[Example], bpe: BpeModel,
                cfg: StageConfig, log: Optional[h5py.Group] = None,
                state_path: Optional[PathType] = None) -> StageResult:
    """Train the layer stack as an unconditional language model.

    Neither sources nor properties are used: attention over the memory is skipped
    and the property vector is zero.

    """
    batches, eval_batch = _setup(cfg, examples, bpe)
    loss_fn = _nll_fn(model, use_sources=False, use_props=False)
    return _run_stage(cfg, [model], _named_params(model), batches, loss_fn, eval_batch,
                      log, state_path)


def train_loo(model: EncoderGenerator, examples: Sequence[Example], bpe: BpeModel,
              cfg: StageConfig, use_oracle: bool = True,
              log: Optional[h5py.Group] = None,
              state_path: Optional[PathType] = None) -> StageResult:
    """Train the leave-one-out objective, conditioned on the oracle properties if **use_oracle**.

    Without **use_oracle** the property vector is zero, so the property columns
    of the input projection receive no gradient.

    """
    batches, eval_batch = _setup(cfg, examples, bpe)
    loss_fn = _nll_fn(model, use_props=use_oracle)
    return _run_stage(cfg, [model], _named_params(model), batches, loss_fn, eval_batch,
                      log, state_path)


def novelty_phase(model: EncoderGenerator, examples: Sequence[Example], bpe: BpeModel,
                  cfg: StageConfig, log: Optional[h5py.Group] = None,
                  state_path: Optional[PathType] = None) -> StageResult:
    """Continue leave-one-out training with the novelty penalty scaled by ``cfg.novelty_lambda``."""
    batches, eval_batch = _setup(cfg, examples, bpe)
    loss_fn = _nll_fn(model, novelty_lambda=cfg.novelty_lambda)
    return _run_stage(cfg, [model], _named_params(model), batches, loss_fn, eval_batch,
                      log, state_path)


def _distance_fn(model: EncoderGenerator, plugin: PropertyPlugin,
                 weights: DistanceWeights) -> _LossFn:
    def loss_fn(batch: Batch) -> Tuple[torch.Tensor, Dict[str, float]]:
        if batch.sources is None:
            raise ValueError('the plug-in requires source reviews')
        model.eval()
        with torch.no_grad():
            memory = model.encode(batch.sources)
        pred = plugin(memory)
        return plugin_distance(pred, batch.props, weights), distance_components(pred, batch.props)
    return loss_fn


def plugin_init(model: EncoderGenerator, plugin: PropertyPlugin, examples: Sequence[Example],
                bpe: BpeModel, cfg: StageConfig, weights: DistanceWeights = DistanceWeights(),
                log: Optional[h5py.Group] = None,
                state_path: Optional[PathType] = None) -> StageResult:
    """Fit the plug-in to the oracle properties of leave-one-out examples.

    The model stays frozen.

    """
    batches, eval_batch = _setup(cfg, examples, bpe)
    cfg = dataclasses.replace(cfg, trainable=cfg.trainable or ('plugin.*',))
    params = _named_params(model, plugin)
    loss_fn = _distance_fn(model, plugin, weights)
    return _run_stage(cfg, [plugin], params, batches, loss_fn, eval_batch, log, state_path)


def plugin_finetune(model: EncoderGenerator, plugin: PropertyPlugin,
                    examples: Sequence[Example], bpe: BpeModel, cfg: StageConfig,
                    weights: DistanceWeights = DistanceWeights(),
                    log: Optional[h5py.Group] = None,
                    state_path: Optional[PathType] = None) -> StageResult:
    """Fit the plug-in to the oracle properties of the annotated summaries.

    **examples** are built by :func:`~fewSUM.batches.summary_examples`,
    whose targets carry a rating deviation of 0.

    """
    return plugin_init(model, plugin, examples, bpe, cfg, weights, log, state_path)


def joint_finetune(model: EncoderGenerator, plugin: PropertyPlugin,
                   examples: Sequence[Example], bpe: BpeModel, cfg: StageConfig,
                   log: Optional[h5py.Group] = None,
                   state_path: Optional[PathType] = None) -> StageResult:
    """Maximize the summary likelihood with properties predicted by the plug-in.

    Only the attention over the sources (and its layer norm) and the plug-in are updated.

    """
    batches, eval_batch = _setup(cfg, examples, bpe)
    cfg = dataclasses.replace(cfg, trainable=cfg.trainable or JOINT_TRAINABLE)

    def loss_fn(batch: Batch) -> Tuple[torch.Tensor, Dict[str, float]]:
        if batch.sources is None:
            raise ValueError('joint fine-tuning requires source reviews')
        memory = model.encode(batch.sources)
        props = plugin(memory)
        logits = model.generate(batch.target_in, memory, props)
        nll = cross_entropy(logits, batch.target_out)
        return nll, {'nll': float(nll)}

    params = _named_params(model, plugin)
    return _run_stage(cfg, [model, plugin], params, batches, loss_fn, eval_batch, log, state_path)


def usl_finetune(model: EncoderGenerator, examples: Sequence[Example], bpe: BpeModel,
                 cfg: StageConfig, log: Optional[h5py.Group] = None,
                 state_path: Optional[PathType] = None) -> StageResult:
    """Fine-tune all parameters on summaries conditioned on their sources, without properties."""
    batches, eval_batch = _setup(cfg, examples, bpe)
    loss_fn = _nll_fn(model, use_props=False)
    return _run_stage(cfg, [model], _named_params(model), batches, loss_fn, eval_batch,
                      log, state_path)


def mtl_schedule(ratio: Tuple[int, int]) -> Iterator[str]:
    """Yield the infinite task sequence of a (review, summary) batch ratio.

    Examples
    --------
    .. code:: python

        >>> from itertools import islice
        >>> from fewSUM.training import mtl_schedule

        >>> ''.join(islice(mtl_schedule((1, 1)), 6))
        'RSRSRS'
        >>> ''.join(islice(mtl_schedule((2, 1)), 6))
        'RRSRRS'

    """
    n_review, n_summary = ratio
    return cycle('R' * n_review + 'S' * n_summary)


def with_task_embedding(model: EncoderGenerator, tie: bool = False) -> EncoderGenerator:
    """Return a copy of **model** with a two-row task embedding; all other tensors are copied."""
    cfg = dataclasses.replace(model.cfg, n_tasks=2, tie_tasks=tie)
    torch.manual_seed(0)
    ret = EncoderGenerator(cfg).to(model.embed.dtype)
    missing, unexpected = ret.load_state_dict(model.state_dict(), strict=False)
    if unexpected or any(k != 'task_embed' for k in missing):
        raise ValueError(f"incompatible model: missing {missing!r}, unexpected {unexpected!r}")
    return ret


def mtl_train(model: EncoderGenerator, review_examples: Sequence[Example],
              summary_examples: Sequence[Example], bpe: BpeModel, cfg: StageConfig,
              log: Optional[h5py.Group] = None,
              state_path: Optional[PathType] = None) -> StageResult:
    """Train on an interleaved stream of review and summary batches with a task embedding.

    Batches alternate following :func:`mtl_schedule`; **model** must have a task embedding,
    see :func:`with_task_embedding`.

    """
    if model.task_embed is None:
        raise ValueError('multi-task training requires a model with a task embedding')
    review_batches, _ = _setup(cfg, review_examples, bpe)
    rng = np.random.default_rng(cfg.seed + 1)
    summary_batches = _epochs(summary_examples, bpe, cfg.batch_size, rng)
    eval_batch = collate(summary_examples[:cfg.eval_size], bpe)

    def stream() -> Iterator[Batch]:
        for task in mtl_schedule(cfg.mix_ratio):
            yield next(review_batches) if task == 'R' else next(summary_batches)

    loss_fn = _nll_fn(model, use_props=False, use_task=True)
    return _run_stage(cfg, [model], _named_params(model), stream(), loss_fn, eval_batch,
                      log, state_path)
