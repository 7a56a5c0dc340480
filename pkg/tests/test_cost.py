"""Tests for the analytic parameter and multiply counts."""

import numpy as np
import pytest

from bcresnet.config.settings import ModelConfig
from bcresnet.core.counter import MultCounter
from bcresnet.core.tensor import ForwardContext
from bcresnet.nn.cost import cost_report, count_mults, count_params
from bcresnet.nn.model import build

PUBLISHED_PARAMS = {1: 9_200, 1.5: 17_200, 2: 27_300, 3: 54_200, 6: 188_000, 8: 321_000}
PUBLISHED_MULTS = {1: 3.1e6, 3: 16.2e6, 8: 89.1e6}


@pytest.mark.parametrize("tau, published", sorted(PUBLISHED_PARAMS.items()))
def test_params_close_to_published(tau, published):
    """Parameter counts stay within 3% of the published table."""

    assert abs(count_params(ModelConfig(tau=tau)) - published) <= 0.03 * published


@pytest.mark.parametrize(
    "tau, params",
    [(1, 9_200), (1.5, 17_106), (2, 27_220), (3, 54_072), (6, 187_620), (8, 320_812)],
)
def test_params_exact(tau, params):
    """Exact counts pin the layer map."""

    assert count_params(ModelConfig(tau=tau)) == params


@pytest.mark.parametrize("tau, published", sorted(PUBLISHED_MULTS.items()))
def test_mults_near_published(tau, published):
    """Multiply counts at W=100 land near the published figures."""

    mults = count_mults(ModelConfig(tau=tau), frames=100)
    assert abs(mults - published) <= 0.35 * published


@pytest.mark.parametrize(
    "tau, frames, mults",
    [(1, 100, 2_740_000), (3, 100, 15_228_000), (8, 100, 87_328_000), (1, 98, 2_685_200)],
)
def test_mults_exact(tau, frames, mults):
    """Exact multiplies under the documented counting convention."""

    assert count_mults(ModelConfig(tau=tau), frames=frames) == mults


@pytest.mark.parametrize("tau", [1, 3, 8])
@pytest.mark.parametrize("frames", [98, 100])
def test_runtime_counter_matches_analytic_count(tau, frames):
    """The kernels count exactly the multiplies the cost model predicts."""

    cfg = ModelConfig(tau=tau)
    counter = MultCounter()
    x = np.zeros((1, 1, 40, frames), np.float32)
    build(cfg).forward(x, ForwardContext(training=False, counter=counter))
    assert counter.total == count_mults(cfg, frames=frames)
    assert counter.per_layer == cost_report(cfg, frames).by_name()


def test_counter_accumulates_per_label_and_resets():
    """Repeated forwards add up until the counter is reset."""

    cfg = ModelConfig()
    model = build(cfg)
    counter = MultCounter()
    x = np.zeros((1, 1, 40, 98), np.float32)
    for _ in range(2):
        model.forward(x, ForwardContext(training=False, counter=counter))
    assert counter.total == 2 * count_mults(cfg)
    assert dict(counter) == counter.per_layer
    counter.reset()
    assert counter.total == 0


def test_mults_are_linear_in_frames():
    """Time is never strided, so doubling W doubles the multiplies."""

    cfg = ModelConfig(tau=1)
    assert count_mults(cfg, frames=200) == 2 * count_mults(cfg, frames=100)


@pytest.mark.parametrize("tau", [1, 1.5, 3, 8])
@pytest.mark.parametrize("combine_mode", ["broadcast_add", "sigmoid_attention"])
def test_every_row_scales_with_frames(tau, combine_mode):
    """The classifier included, each ledger row is proportional to W."""

    cfg = ModelConfig(tau=tau, combine_mode=combine_mode)
    short = cost_report(cfg, 49).by_name()
    long = cost_report(cfg, 98).by_name()
    assert {name: 2 * mults for name, mults in short.items()} == long
    assert long["classifier"] == 98 * cfg.width(32) * cfg.n_classes


def test_doubling_tau_roughly_quadruples_cost():
    """Pointwise layers dominate, so tau=2 costs between 2x and 4x of tau=1."""

    base = ModelConfig(tau=1)
    double = ModelConfig(tau=2)
    assert 2 < count_params(double) / count_params(base) < 4
    assert 2 < count_mults(double) / count_mults(base) < 4


def test_costs_increase_with_tau():
    """Params and multiplies are monotone in tau."""

    taus = [1, 1.5, 2, 3, 6, 8]
    params = [count_params(ModelConfig(tau=t)) for t in taus]
    mults = [count_mults(ModelConfig(tau=t)) for t in taus]
    assert params == sorted(params)
    assert mults == sorted(mults)


def test_variants_change_costs():
    """Plain BN has fewer affine scalars; attention adds elementwise products."""

    base = ModelConfig(tau=1)
    assert count_params(base.model_copy(update={"norm_mode": "bn"})) < count_params(base)
    attention = base.model_copy(update={"combine_mode": "sigmoid_attention"})
    assert count_mults(attention) > count_mults(base)
    assert count_params(attention) == count_params(base)


def test_table_ends_with_totals_line():
    """The printed table closes with exact and abbreviated totals."""

    table = cost_report(ModelConfig(tau=1), frames=100).table()
    assert table.splitlines()[-1] == "total params=9200 (9.2k) mults=2740000 (2.74M)"
    assert "blocks.0.f2.ssn" in table
