"""The ``fewsum`` command-line interface.

Every subcommand works on a run directory (``--run-dir`` or the ``FEWSUM_RUN_DIR``
environment variable) holding the artefacts, checkpoints and the ``run.hdf5`` manifest.
Completed training stages are skipped when re-run with an unchanged configuration.

Exit codes: 0 on success, 1 on usage errors and 2 on runtime failures.

Index
-----
.. currentmodule:: fewSUM.cli
.. autosummary::
    SUBCOMMANDS
    build_parser
    dispatch
    main

API
---
.. autodata:: SUBCOMMANDS
.. autofunction:: build_parser
.. autofunction:: dispatch
.. autofunction:: main

"""

import os
import sys
import json
import argparse
import dataclasses
from typing import Optional, Sequence, List, Dict, Callable, NamedTuple, NoReturn, Tuple

import h5py
import numpy as np
import pandas as pd
import torch

from .__version__ import __version__
from .logger import logger
from .config import validate_config, parse_config, dump_config, RunConfig
from .corpus import (
    load_reviews, write_reviews, filter_reviews, make_groups, write_groups, read_groups,
    load_annotated, write_annotated, cross_domain_split, leave_one_out,
    AnnotatedSet, AnnotatedEntry, Review, LooInstance
)
from .textproc import BpeModel, TokenSeq, train_bpe, encode
from .oracle import compute_properties
from .batches import lm_examples, loo_examples, summary_examples, TASK_SUMMARY
from .model import EncoderGenerator, encode_sources
from .plugin import PropertyPlugin, plugin_forward
from .checkpoint import save_checkpoint, load_checkpoint, Checkpoint
from .training import (
    MODES, StageConfig, StageResult, set_deterministic, pretrain_lm, train_loo, novelty_phase,
    plugin_init, plugin_finetune, joint_finetune, usl_finetune, mtl_train, with_task_embedding
)
from .decoding import decode_summary, write_summaries, read_summaries, SummaryRecord
from .baselines import BASELINES, run_baseline
from .evaluation import (
    evaluate_rouge, rouge_table, text_characteristics, cross_domain_report, write_report
)
from .synthetic import write_synthetic_corpus
from .run_dir import RunDirectory
from .hdf5_log import log_to_dataframe, reset_hdf5_log
from .property_dset import (
    create_prop_group, create_prop_dset, update_prop_dset, prop_to_dataframe, dump_properties
)

__all__ = ['SUBCOMMANDS', 'build_parser', 'dispatch', 'main']

#: The names of all subcommands.
SUBCOMMANDS: Tuple[str, ...] = (
    'make-corpus', 'validate-config', 'preprocess', 'train-bpe', 'pretrain-lm', 'train-loo',
    'novelty', 'plugin-init', 'plugin-finetune', 'joint-finetune', 'usl-finetune', 'mtl',
    'summarize', 'baseline', 'evaluate', 'analyze-text', 'cross-domain', 'properties',
    'export-log', 'pipeline'
)

#: Summarization modes and the stage whose checkpoint they decode with.
DECODE_STAGES: Dict[str, str] = {
    'fewsum': 'joint_finetune', 'usl': 'usl', 'usl_finetune': 'usl_finetune', 'mtl': 'mtl',
}

ENV_RUN_DIR = 'FEWSUM_RUN_DIR'


class UsageError(Exception):
    """Raised by :class:`_Parser` instead of exiting."""


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> NoReturn:
        self.print_usage(sys.stderr)
        raise UsageError(f'{self.prog}: error: {message}')


class _Context(NamedTuple):
    args: argparse.Namespace
    run: RunDirectory
    normalized: Dict[str, object]
    cfg: RunConfig
    seed: int


def build_parser() -> argparse.ArgumentParser:
    """Construct the argument parser of all subcommands."""
    common = _Parser(add_help=False)
    common.add_argument('--config', metavar='PATH', default=None,
                        help='a YAML file overriding the preset')
    common.add_argument('--preset', choices=('paper', 'desk'), default=None,
                        help='the base preset (default: desk)')
    common.add_argument('--seed', type=int, default=0, help='the run seed')
    common.add_argument('--run-dir', metavar='PATH', default=None,
                        help=f'the run directory; overridden by ${ENV_RUN_DIR}')
    common.add_argument('--deterministic', action='store_true',
                        help='disable op-level parallelism for bit-exact runs')

    parser = _Parser(prog='fewsum', description='Few-shot opinion summarization.')
    parser.add_argument('--version', action='version', version=f'%(prog)s {__version__}')
    sub = parser.add_subparsers(dest='command', metavar='COMMAND', parser_class=_Parser)
    sub.required = True

    def add(name: str, help: str) -> argparse.ArgumentParser:
        return sub.add_parser(name, parents=[common], help=help)

    p = add('make-corpus', 'write the synthetic desk corpus')
    p.add_argument('--out', metavar='DIR', default=None)

    add('validate-config', 'print the normalized configuration')

    p = add('preprocess', 'filter reviews and form groups')
    p.add_argument('--in', dest='inp', metavar='PATH', default=None)
    p.add_argument('--out', metavar='DIR', default=None)

    p = add('train-bpe', 'learn the subword merges')
    p.add_argument('--in', dest='inp', metavar='PATH', default=None)

    add('pretrain-lm', 'train the unconditional language model')
    p = add('train-loo', 'train the leave-one-out objective')
    p.add_argument('--no-oracle', action='store_true', help='train without properties (USL)')
    add('novelty', 'continue training with the novelty penalty')
    add('plugin-init', 'fit the plug-in on unannotated reviews')

    for name, help in (('plugin-finetune', 'fit the plug-in on annotated summaries'),
                       ('joint-finetune', 'fine-tune the plug-in and source attention'),
                       ('usl-finetune', 'fine-tune the USL model on summaries'),
                       ('mtl', 'multi-task training on reviews and summaries')):
        p = add(name, help)
        p.add_argument('--annotated', metavar='PATH', default=None)
        if name == 'mtl':
            p.add_argument('--tie-tasks', action='store_true', help='share one task embedding')

    p = add('summarize', 'generate summaries of an annotated split')
    p.add_argument('--annotated', metavar='PATH', default=None)
    p.add_argument('--mode', choices=tuple(DECODE_STAGES), default='fewsum')
    p.add_argument('--split', default=None)
    p.add_argument('--out', metavar='PATH', default=None)

    p = add('baseline', 'run an extractive or trivial baseline')
    p.add_argument('name', choices=BASELINES)
    p.add_argument('--annotated', metavar='PATH', default=None)
    p.add_argument('--split', default=None)
    p.add_argument('--out', metavar='PATH', default=None)

    for name, help in (('evaluate', 'score summaries with ROUGE'),
                       ('analyze-text', 'POV and length characteristics of summaries')):
        p = add(name, help)
        p.add_argument('--annotated', metavar='PATH', default=None)
        p.add_argument('--summaries', metavar='PATH', nargs='+', required=True)
        p.add_argument('--split', default=None)

    p = add('cross-domain', 'build a cross-domain split or report cross-domain scores')
    p.add_argument('--annotated', metavar='PATH', default=None)
    p.add_argument('--target', default=None, help='write the cross-domain split of this domain')
    p.add_argument('--scores', metavar='PATH', default=None,
                   help='a JSON file mapping domains to ROUGE-L scores')
    p.add_argument('--out', metavar='PATH', default=None)

    p = add('properties', 'dump oracle and plug-in properties of leave-one-out instances')
    p.add_argument('--limit', type=int, default=None, help='the maximum number of groups')

    p = add('export-log', 'export the training log as CSV')
    p.add_argument('--out', metavar='PATH', default=None)
    p.add_argument('--reset', action='store_true', help='clear the log after exporting it')

    p = add('pipeline', 'run all stages in order')
    p.add_argument('--reviews', metavar='PATH', default=None)
    p.add_argument('--annotated', metavar='PATH', default=None)
    return parser


""" ##################################  Helpers  ################################## """


def _annotated_path(ctx: _Context) -> str:
    path = getattr(ctx.args, 'annotated', None)
    return path if path is not None else ctx.run.path('corpus', 'annotated.jsonl')


def _annotated(ctx: _Context) -> AnnotatedSet:
    c = ctx.cfg.corpus
    return load_annotated(_annotated_path(ctx), c.split_spec, c.n_sources, c.n_references)


def _bpe(ctx: _Context) -> BpeModel:
    path = ctx.run.path('bpe.model')
    if not os.path.isfile(path):
        raise RuntimeError("no subword model found; run 'train-bpe' first")
    return BpeModel.load(path)


def _groups(ctx: _Context) -> list:
    path = ctx.run.path('groups.jsonl')
    if not os.path.isfile(path):
        raise RuntimeError("no review groups found; run 'preprocess' first")
    return read_groups(path)


def _load(ctx: _Context, *stages: str) -> Checkpoint:
    for stage in stages:
        if ctx.run.is_complete(stage):
            logger.info(f'Loading the {stage!r} checkpoint')
            return load_checkpoint(ctx.run.checkpoint_path(stage))
    raise RuntimeError(f"missing prerequisite: none of the stages {stages!r} is complete")


def _new_model(ctx: _Context, bpe: BpeModel) -> EncoderGenerator:
    cfg = dataclasses.replace(ctx.cfg.model, vocab_size=len(bpe))
    torch.manual_seed(ctx.seed)
    return EncoderGenerator(cfg)


def _stage_cfg(ctx: _Context, name: str, offset: int) -> StageConfig:
    return dataclasses.replace(ctx.cfg.stages[name], seed=ctx.seed * 100 + offset)


def _finish(ctx: _Context, marker: str, result: StageResult, model: EncoderGenerator,
            plugin: Optional[PropertyPlugin] = None, mode: str = MODES['fewsum']) -> None:
    metadata = {'seed': ctx.seed, 'initial_loss': result.initial_loss,
                'final_loss': result.final_loss, 'steps': result.steps}
    digest = save_checkpoint(ctx.run.checkpoint_path(marker), model, plugin,
                             stage=marker, mode=mode, metadata=metadata)
    ctx.run.mark_stage(marker, digest)
    logger.info(f'Stage {marker!r} complete: loss {result.initial_loss:.4f} -> '
                f'{result.final_loss:.4f}')


def _skip(ctx: _Context, marker: str) -> bool:
    if ctx.run.is_complete(marker):
        logger.info(f'Stage {marker!r} is already complete; skipping')
        return True
    return False


def _max_words(ctx: _Context) -> int:
    return ctx.cfg.filter.max_words


""" ##################################  Commands  ################################# """


def _make_corpus(ctx: _Context) -> None:
    out = ctx.args.out or ctx.run.path('corpus')
    synthetic = dataclasses.replace(ctx.cfg.synthetic, seed=ctx.seed)
    write_synthetic_corpus(out, synthetic)


def _validate_config(ctx: _Context) -> None:
    sys.stdout.write(dump_config(ctx.normalized))


def _preprocess(ctx: _Context) -> None:
    inp = ctx.args.inp or ctx.run.path('corpus', 'reviews.jsonl')
    out = ctx.args.out or ctx.run.dirname
    os.makedirs(out, exist_ok=True)

    reviews = load_reviews(inp)
    cfg = ctx.cfg.filter.resolve(reviews)
    kept = filter_reviews(reviews, cfg)
    groups = make_groups(kept, ctx.cfg.corpus.group_size, seed=ctx.seed)
    write_reviews(os.path.join(out, 'reviews.filtered.jsonl'), kept)
    write_groups(os.path.join(out, 'groups.jsonl'), groups)
    logger.info(f'Kept {len(kept)} of {len(reviews)} reviews in {len(groups)} groups '
                f'(popularity cut-off: {cfg.max_reviews_per_product})')


def _train_bpe(ctx: _Context) -> None:
    inp = ctx.args.inp or ctx.run.path('reviews.filtered.jsonl')
    texts = [r.text for r in load_reviews(inp)]
    annotated = _annotated_path(ctx)
    if os.path.isfile(annotated):
        texts += [s for e in _annotated(ctx).split('train') for s in e.references]
    bpe = train_bpe(texts, ctx.cfg.bpe_merges)
    bpe.save(ctx.run.path('bpe.model'))
    logger.info(f'Learned {bpe.merge_count} merges; vocabulary size {len(bpe)}')


def _pretrain_lm(ctx: _Context) -> None:
    if _skip(ctx, 'pretrain_lm'):
        return
    bpe = _bpe(ctx)
    reviews: List[Review] = [r for g in _groups(ctx) for r in g.reviews]
    model = _new_model(ctx, bpe)
    examples = lm_examples(bpe, reviews, model.cfg.max_len)
    with ctx.run.open_log() as log:
        result = pretrain_lm(model, examples, bpe, _stage_cfg(ctx, 'pretrain_lm', 1),
                             log, ctx.run.state_path('pretrain_lm'))
    _finish(ctx, 'pretrain_lm', result, model)


def _train_loo(ctx: _Context) -> None:
    use_oracle = not ctx.args.no_oracle
    marker = 'train_loo' if use_oracle else 'usl'
    if _skip(ctx, marker):
        return
    bpe = _bpe(ctx)
    model = _load(ctx, 'pretrain_lm').model
    examples = loo_examples(bpe, _groups(ctx), model.cfg.max_len, _max_words(ctx), use_oracle)
    with ctx.run.open_log() as log:
        result = train_loo(model, examples, bpe, _stage_cfg(ctx, 'train_loo', 2), use_oracle,
                           log, ctx.run.state_path(marker))
    _finish(ctx, marker, result, model, mode=MODES['fewsum' if use_oracle else 'usl'])


def _novelty(ctx: _Context) -> None:
    if _skip(ctx, 'novelty_phase'):
        return
    bpe = _bpe(ctx)
    model = _load(ctx, 'train_loo').model
    examples = loo_examples(bpe, _groups(ctx), model.cfg.max_len, _max_words(ctx))
    with ctx.run.open_log() as log:
        result = novelty_phase(model, examples, bpe, _stage_cfg(ctx, 'novelty_phase', 3),
                               log, ctx.run.state_path('novelty_phase'))
    _finish(ctx, 'novelty_phase', result, model)


def _plugin_init(ctx: _Context) -> None:
    if _skip(ctx, 'plugin_init'):
        return
    bpe = _bpe(ctx)
    model = _load(ctx, 'novelty_phase', 'train_loo').model
    torch.manual_seed(ctx.seed + 1)
    plugin = PropertyPlugin(ctx.cfg.plugin, model.cfg.d_model)
    examples = loo_examples(bpe, _groups(ctx), model.cfg.max_len, _max_words(ctx))
    with ctx.run.open_log() as log:
        result = plugin_init(model, plugin, examples, bpe, _stage_cfg(ctx, 'plugin_init', 4),
                             ctx.cfg.distance, log, ctx.run.state_path('plugin_init'))
    _finish(ctx, 'plugin_init', result, model, plugin)


def _summary_examples(ctx: _Context, bpe: BpeModel, model: EncoderGenerator,
                      use_oracle: bool = True) -> list:
    entries = _annotated(ctx).split('train')
    if not entries:
        raise RuntimeError('the annotated training split is empty')
    return summary_examples(bpe, entries, model.cfg.max_len, _max_words(ctx), use_oracle)


def _plugin_finetune(ctx: _Context) -> None:
    if _skip(ctx, 'plugin_finetune'):
        return
    bpe = _bpe(ctx)
    ckpt = _load(ctx, 'plugin_init')
    assert ckpt.plugin is not None
    examples = _summary_examples(ctx, bpe, ckpt.model)
    with ctx.run.open_log() as log:
        result = plugin_finetune(ckpt.model, ckpt.plugin, examples, bpe,
                                 _stage_cfg(ctx, 'plugin_finetune', 5), ctx.cfg.distance,
                                 log, ctx.run.state_path('plugin_finetune'))
    _finish(ctx, 'plugin_finetune', result, ckpt.model, ckpt.plugin)


def _joint_finetune(ctx: _Context) -> None:
    if _skip(ctx, 'joint_finetune'):
        return
    bpe = _bpe(ctx)
    ckpt = _load(ctx, 'plugin_finetune')
    assert ckpt.plugin is not None
    examples = _summary_examples(ctx, bpe, ckpt.model)
    with ctx.run.open_log() as log:
        result = joint_finetune(ckpt.model, ckpt.plugin, examples, bpe,
                                _stage_cfg(ctx, 'joint_finetune', 6),
                                log, ctx.run.state_path('joint_finetune'))
    _finish(ctx, 'joint_finetune', result, ckpt.model, ckpt.plugin)


def _usl_finetune(ctx: _Context) -> None:
    if _skip(ctx, 'usl_finetune'):
        return
    bpe = _bpe(ctx)
    model = _load(ctx, 'usl').model
    examples = _summary_examples(ctx, bpe, model, use_oracle=False)
    with ctx.run.open_log() as log:
        result = usl_finetune(model, examples, bpe, _stage_cfg(ctx, 'usl_finetune', 7),
                              log, ctx.run.state_path('usl_finetune'))
    _finish(ctx, 'usl_finetune', result, model, mode=MODES['usl_finetune'])


def _mtl(ctx: _Context) -> None:
    if _skip(ctx, 'mtl'):
        return
    bpe = _bpe(ctx)
    model = with_task_embedding(_load(ctx, 'usl').model, tie=ctx.args.tie_tasks)
    reviews = loo_examples(bpe, _groups(ctx), model.cfg.max_len, _max_words(ctx), False)
    summaries = _summary_examples(ctx, bpe, model, use_oracle=False)
    with ctx.run.open_log() as log:
        result = mtl_train(model, reviews, summaries, bpe, _stage_cfg(ctx, 'mtl', 8),
                           log, ctx.run.state_path('mtl'))
    _finish(ctx, 'mtl', result, model, mode=MODES['mtl'])


def _split(ctx: _Context) -> str:
    return getattr(ctx.args, 'split', None) or ctx.cfg.eval_split


def _summarize(ctx: _Context) -> str:
    mode = ctx.args.mode
    bpe = _bpe(ctx)
    ckpt = _load(ctx, DECODE_STAGES[mode])
    plugin = ckpt.plugin if mode == 'fewsum' else None
    task = TASK_SUMMARY if mode == 'mtl' else None

    records = []
    for entry in _annotated(ctx).split(_split(ctx)):
        records.append(decode_summary(ckpt.model, bpe, entry.sources, ctx.cfg.decode,
                                      plugin=plugin, group_id=entry.group_id, task=task))
    out = ctx.args.out or ctx.run.path('summaries', f'{mode}.jsonl')
    write_summaries(out, records)
    unfinished = sum(not r.finished for r in records)
    logger.info(f'Wrote {len(records)} summaries to {out!r} ({unfinished} unfinished)')
    return out


def _baseline(ctx: _Context) -> str:
    name = ctx.args.name
    records = [
        SummaryRecord(e.group_id, run_baseline(name, e.sources, seed=ctx.seed))
        for e in _annotated(ctx).split(_split(ctx))
    ]
    out = ctx.args.out or ctx.run.path('summaries', f'{name}.jsonl')
    write_summaries(out, records)
    logger.info(f'Wrote {len(records)} {name} summaries to {out!r}')
    return out


def _system_name(path: str) -> str:
    return os.path.splitext(os.path.basename(path))[0]


def _read_mapping(path: str) -> Dict[str, str]:
    return {r.group_id: r.summary for r in read_summaries(path)}


def _evaluate(ctx: _Context) -> pd.DataFrame:
    annotated = _annotated(ctx)
    reports = [
        evaluate_rouge(_read_mapping(p), annotated, _split(ctx), ctx.cfg.eval_aggregate,
                       system=_system_name(p))
        for p in ctx.args.summaries
    ]
    df = rouge_table(reports)
    write_report(df, ctx.run.path('reports', 'rouge'))
    domains = pd.concat({r.system: r.per_domain for r in reports}, names=['system'])
    write_report(domains, ctx.run.path('reports', 'rouge_per_domain'))
    sys.stdout.write(df.to_string(float_format='{:.4f}'.format) + '\n')
    return df


def _analyze_text(ctx: _Context) -> None:
    entries: List[AnnotatedEntry] = _annotated(ctx).split(_split(ctx))
    rows = {'gold': text_characteristics([r for e in entries for r in e.references], entries)}
    for p in ctx.args.summaries:
        rows[_system_name(p)] = text_characteristics(_read_mapping(p), entries)
    df = pd.DataFrame(
        [tc.pov + (tc.len_diff,) for tc in rows.values()],
        index=pd.Index(list(rows), name='system'),
        columns=['1st', '2nd', '3rd', 'NoPr', 'Len'],
    )
    write_report(df, ctx.run.path('reports', 'text'))
    sys.stdout.write(df.to_string(float_format='{:.1f}'.format) + '\n')


def _cross_domain(ctx: _Context) -> None:
    args = ctx.args
    if (args.target is None) == (args.scores is None):
        raise UsageError("cross-domain: expected exactly one of '--target' or '--scores'")

    if args.target is not None:
        split = cross_domain_split(_annotated(ctx), args.target, seed=ctx.seed)
        out = args.out or ctx.run.path('corpus', f'annotated.cross.{args.target}.jsonl')
        write_annotated(out, split)
        logger.info(f'Wrote the cross-domain split of {args.target!r} to {out!r}')
        return

    with open(args.scores, 'r', encoding='utf-8') as f:
        scores = json.load(f)
    df = cross_domain_report(scores)
    write_report(df, args.out or ctx.run.path('reports', 'cross_domain'))
    sys.stdout.write(df.to_string(float_format='{:.4f}'.format, na_rep='n/a') + '\n')


def _properties(ctx: _Context) -> pd.DataFrame:
    groups = _groups(ctx)[:ctx.args.limit]
    instances = [i for g in groups for i in leave_one_out(g)]
    ids = [f'{i.group_id}/{i.target.id}' for i in instances]
    oracle = [compute_properties(i, _max_words(ctx)) for i in instances]

    plugin_ckpt: Optional[Checkpoint] = None
    for stage in ('joint_finetune', 'plugin_finetune', 'plugin_init'):
        if ctx.run.is_complete(stage):
            plugin_ckpt = load_checkpoint(ctx.run.checkpoint_path(stage))
            break

    filename = ctx.run.path('reports', 'properties.hdf5')
    with h5py.File(filename, 'w', libver='latest') as f:
        group = create_prop_group(f, ids)
        update_prop_dset(create_prop_dset(group, 'oracle'), oracle)
        if plugin_ckpt is not None:
            assert plugin_ckpt.plugin is not None
            update_prop_dset(create_prop_dset(group, 'plugin'),
                             _plugin_predictions(ctx, plugin_ckpt, instances))
            prop_to_dataframe(group['plugin']).to_csv(ctx.run.path('reports', 'plugin.csv'))

    df = dump_properties(ctx.run.path('reports', 'oracle.csv'), ids, oracle)
    logger.info(f'Wrote the properties of {len(ids)} instances to {filename!r}')
    return df


def _plugin_predictions(ctx: _Context, ckpt: Checkpoint,
                        instances: Sequence[LooInstance]) -> np.ndarray:
    bpe = _bpe(ctx)
    model, plugin = ckpt.model, ckpt.plugin
    assert plugin is not None
    model.eval()
    plugin.eval()
    max_len = model.cfg.max_len
    ret = []
    with torch.no_grad():
        for i in instances:
            sources = [TokenSeq(encode(bpe, r.text).ids[:max_len], bpe.pad_id) for r in i.sources]
            ret.append(plugin_forward(plugin, encode_sources(model, sources))[0].double().numpy())
    return np.stack(ret) if ret else np.empty((0, model.cfg.n_properties))


def _export_log(ctx: _Context) -> pd.DataFrame:
    out = ctx.args.out or ctx.run.path('reports', 'log.csv')
    with ctx.run.open_log() as group:
        df = log_to_dataframe(group)
        if ctx.args.reset:
            reset_hdf5_log(group)
    df.to_csv(out)
    logger.info(f'Exported {len(df)} log records to {out!r}')
    return df


def _pipeline(ctx: _Context) -> None:
    args = ctx.args
    args.out, args.inp, args.split, args.tie_tasks = None, None, None, False
    if args.reviews is None and not os.path.isfile(ctx.run.path('corpus', 'reviews.jsonl')):
        _make_corpus(ctx)

    if not os.path.isfile(ctx.run.path('groups.jsonl')):
        args.inp = args.reviews
        _preprocess(ctx)
        args.inp = None
    if not os.path.isfile(ctx.run.path('bpe.model')):
        _train_bpe(ctx)

    args.no_oracle = False
    for func in (_pretrain_lm, _train_loo, _novelty, _plugin_init, _plugin_finetune,
                 _joint_finetune):
        func(ctx)
    args.no_oracle = True
    for func in (_train_loo, _usl_finetune, _mtl):
        func(ctx)

    summaries = []
    for mode in DECODE_STAGES:
        args.mode = mode
        summaries.append(_summarize(ctx))
    for name in BASELINES:
        args.name = name
        summaries.append(_baseline(ctx))
    args.summaries = summaries
    _evaluate(ctx)
    _analyze_text(ctx)


COMMANDS: Dict[str, Callable[[_Context], object]] = {
    'make-corpus': _make_corpus,
    'validate-config': _validate_config,
    'preprocess': _preprocess,
    'train-bpe': _train_bpe,
    'pretrain-lm': _pretrain_lm,
    'train-loo': _train_loo,
    'novelty': _novelty,
    'plugin-init': _plugin_init,
    'plugin-finetune': _plugin_finetune,
    'joint-finetune': _joint_finetune,
    'usl-finetune': _usl_finetune,
    'mtl': _mtl,
    'summarize': _summarize,
    'baseline': _baseline,
    'evaluate': _evaluate,
    'analyze-text': _analyze_text,
    'cross-domain': _cross_domain,
    'properties': _properties,
    'export-log': _export_log,
    'pipeline': _pipeline,
}


def dispatch(argv: Optional[Sequence[str]] = None) -> int:
    """Run a single subcommand and return its exit code.

    Returns
    -------
    :class:`int`
        0 on success, 1 on usage errors and 2 on runtime failures.

    """
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as ex:
        sys.stderr.write(f'{ex}\n')
        return 1
    except SystemExit as ex:  # --help and --version
        return int(ex.code or 0)

    try:
        normalized = validate_config(args.config, args.preset)
        cfg = parse_config(normalized)
        run_dir = os.environ.get(ENV_RUN_DIR) or args.run_dir
        run = RunDirectory(run_dir)
        run.bind_config(normalized, args.seed)
        if args.deterministic:
            set_deterministic(args.seed)

        ctx = _Context(args, run, normalized, cfg, args.seed)
        COMMANDS[args.command](ctx)
    except UsageError as ex:
        sys.stderr.write(f'{ex}\n')
        return 1
    except Exception as ex:
        logger.error(f'{args.command}: {ex.__class__.__name__}: {ex}')
        return 2
    return 0


def main() -> NoReturn:
    """The console entry point."""
    sys.exit(dispatch())
