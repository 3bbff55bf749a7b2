"""Tests for :mod:`fewSUM.plugin`."""

import math

import numpy as np
import torch
from assertionlib import assertion

from fewSUM.model import Memory
from fewSUM.oracle import PropertyVector
from fewSUM.plugin import (
    PluginConfig, DistanceWeights, plugin_forward, plugin_distance, to_property_vectors,
    distance_components
)
from fewSUM.batches import loo_examples, collate
from fewSUM.testing_utils import (
    TINY_BPE, TINY_GROUPS, tiny_model, tiny_plugin, sampled_gradients
)

BATCH = collate(loo_examples(TINY_BPE, TINY_GROUPS[:1], max_len=24)[:2], TINY_BPE)


def test_plugin_config() -> None:
    """Test :class:`fewSUM.plugin.PluginConfig` and :class:`fewSUM.plugin.DistanceWeights`."""
    assertion.assert_(PluginConfig, d_state=31, exception=ValueError)
    assertion.assert_(PluginConfig, n_layers=0, exception=ValueError)
    assertion.assert_(PluginConfig, n_properties=8, exception=ValueError)
    assertion.assert_(DistanceWeights, w_pov=-1.0, exception=ValueError)
    assertion.eq(DistanceWeights.from_dict({'w_pov': 0.5, 'unknown': 1}).w_pov, 0.5)


def test_plugin_forward() -> None:
    """The output has a valid coverage block and a point-of-view block on the simplex."""
    model = tiny_model().eval()
    plugin = tiny_plugin(model).eval()
    with torch.no_grad():
        out = plugin_forward(plugin, model.encode(BATCH.sources))

    assertion.eq(tuple(out.shape), (2, 9))
    assertion(bool(((out[:, :3] > 0) & (out[:, :3] < 1)).all()))
    torch.testing.assert_close(out[:, 3:7].sum(dim=-1), torch.ones(2))

    vecs = to_property_vectors(out)
    assertion.len_eq(vecs, 2)
    assertion.isinstance(vecs[0], PropertyVector)


def test_permutation_invariance() -> None:
    """Permuting the memory positions leaves the output bit-identical."""
    model = tiny_model().eval()
    plugin = tiny_plugin(model).eval()
    with torch.no_grad():
        memory = model.encode(BATCH.sources)
        ref = plugin_forward(plugin, memory)

        perm = torch.flip(torch.arange(BATCH.sources.shape[1]), dims=(0,))
        out1 = plugin_forward(plugin, model.encode(BATCH.sources[:, perm]))

        rng = np.random.default_rng(0)
        idx = torch.as_tensor(rng.permutation(memory.states.shape[1]))
        out2 = plugin_forward(plugin, Memory(memory.states[:, idx], memory.mask[:, idx]))

    torch.testing.assert_close(ref, out1)
    assertion.eq(ref.tolist(), out2.tolist())


def test_plugin_forward_raise() -> None:
    """A memory without attendable positions is rejected."""
    model = tiny_model()
    plugin = tiny_plugin(model)
    memory = Memory(torch.zeros(1, 3, model.cfg.d_model), torch.zeros(1, 3, dtype=torch.bool))
    assertion.assert_(plugin_forward, plugin, memory, exception=ValueError)


def test_plugin_distance() -> None:
    """Test :func:`fewSUM.plugin.plugin_distance`."""
    target = torch.tensor([0.5, 0.2, 0.4, 0.5, 0.0, 0.5, 0.0, 1.0, 0.1])
    assertion.isclose(float(plugin_distance(target, target)), 0.0, abs_tol=1e-6)

    pred = target.clone()
    pred[0] += 0.2
    pred[7] -= 0.5
    pred[8] += 1.0
    ref = 0.5 * 0.2 + 1.0 * 0.5 + 0.1 * 1.0
    assertion.isclose(float(plugin_distance(pred, target)), ref, rel_tol=1e-5)

    pred = target.clone()
    pred[3:7] = torch.tensor([0.25, 0.25, 0.25, 0.25])
    kl = 0.5 * math.log(0.5 / 0.25) * 2
    w = DistanceWeights(w_pov=1.0)
    assertion.isclose(float(plugin_distance(pred, target, w)), kl, rel_tol=1e-4)

    batch = torch.stack([target, pred])
    per_item = plugin_distance(batch, torch.stack([target, target]), w, reduce=False)
    assertion.eq(tuple(per_item.shape), (2,))
    assertion.assert_(plugin_distance, target[:8], target[:8], exception=ValueError)


def test_distance_components() -> None:
    """Test :func:`fewSUM.plugin.distance_components`."""
    target = torch.tensor([[0.5, 0.2, 0.4, 0.5, 0.0, 0.5, 0.0, 1.0, 0.1]])
    pred = target.clone()
    pred[0, 7] = 2.0
    comp = distance_components(pred, target)
    assertion.eq(set(comp), {'coverage', 'rating_dev', 'length_dev', 'pov'})
    assertion.isclose(comp['rating_dev'], 1.0)
    assertion.isclose(comp['coverage'], 0.0, abs_tol=1e-6)


def test_gradcheck_params() -> None:
    """Autograd matches central differences on 20 sampled parameters of the distance loss."""
    model = tiny_model(dtype=torch.float64).eval()
    plugin = tiny_plugin(model).eval()
    with torch.no_grad():
        memory = model.encode(BATCH.sources)
    target = BATCH.props.double()
    weights = DistanceWeights(w_pov=2.0)

    def loss_fn() -> torch.Tensor:
        return plugin_distance(plugin_forward(plugin, memory), target, weights)

    for name, i, analytical, numerical in sampled_gradients(loss_fn, plugin, n=20, seed=2):
        err = abs(analytical - numerical)
        assert err <= 1e-4 * max(abs(analytical), abs(numerical), 1e-4), (name, i)
