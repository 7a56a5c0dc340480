"""Finite-difference verification of every backward pass.

Each check builds a small float64 problem, contracts the output with a fixed
random upstream gradient ``g`` into the scalar ``L = sum(out * g)`` and
compares the analytic gradients of every input and parameter against
central differences of ``L``. Probes whose perturbation flips a ReLU sign or
a max-pool winner are skipped using the forward kink trace.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Dict, List, Optional, Protocol

import numpy as np

from ..core import functional as F
from ..core.conv import ConvSpec
from ..core.tensor import FloatArray, ForwardContext
from ..nn.block import BCResBlock, BlockConfig, CombineMode, NormMode
from ..nn.layers import (
    BatchNorm,
    ChannelDropout,
    Conv2d,
    FreqPool,
    Layer,
    ReduceMode,
    ReLU,
    SubSpectralNorm,
    Swish,
)
from ..training.loss import cross_entropy

logger = logging.getLogger(__name__)

DEFAULT_STEP = 1e-3
DEFAULT_THRESHOLD = 1e-5
DTYPE = np.dtype(np.float64)


class CheckStatus(str, Enum):
    """Outcome of one gradient check."""

    PASSED = "passed"
    FAILED = "failed"


@dataclass(slots=True)
class GradCheckResult:
    """Worst relative error of one op or block."""

    name: str
    """Check label, e.g. ``conv2d.depthwise_dilated`` or ``block.transition``."""
    kind: str
    """``op`` or ``block``."""
    max_rel_error: float
    """Worst ``max|a - n| / max(max|a|, max|n|)`` over the checked arrays."""
    worst: str
    """Input or parameter the maximum was found in."""
    probes: int
    """Finite-difference probes evaluated."""
    skipped: int
    """Probes dropped because they crossed a kink."""
    status: CheckStatus
    """PASSED when :attr:`max_rel_error` is below the threshold."""


@dataclass(slots=True)
class GradCheckReport:
    """All check results of one run."""

    seed: int
    """Seed the inputs were drawn with."""
    threshold: float
    """Pass bound on the relative error."""
    results: List[GradCheckResult] = field(default_factory=list)
    """Results in execution order."""

    @property
    def passed(self) -> bool:
        """True when every check passed."""

        return all(result.status is CheckStatus.PASSED for result in self.results)

    @property
    def op_checks(self) -> int:
        """Number of distinct op-level checks."""

        return sum(1 for result in self.results if result.kind == "op")

    def table(self) -> str:
        """One line per check plus a verdict line."""

        lines = [f"{'check':<28} {'kind':<6} {'max_rel_error':>14} {'probes':>7}  status"]
        for r in self.results:
            lines.append(
                f"{r.name:<28} {r.kind:<6} {r.max_rel_error:>14.3e} {r.probes:>7}  "
                f"{r.status.value}"
            )
        failed = [r.name for r in self.results if r.status is CheckStatus.FAILED]
        verdict = "all passed" if not failed else f"FAILED: {', '.join(failed)}"
        lines.append(
            f"{len(self.results)} checks ({self.op_checks} ops) threshold={self.threshold:g} "
            f"seed={self.seed}: {verdict}"
        )
        return "\n".join(lines)


class GradCase(Protocol):
    """Builds one check from a seeded generator."""

    def __call__(self, rng: np.random.Generator) -> "_Case":  # pragma: no cover - interface stub
        """Return the problem to verify."""


@dataclass(slots=True)
class _Case:
    name: str
    kind: str
    inputs: Dict[str, FloatArray]
    forward: Callable[[ForwardContext], FloatArray]
    backward: Callable[[FloatArray], Dict[str, FloatArray]]
    training: bool = True


def _normal(rng: np.random.Generator, *shape: int) -> FloatArray:
    return rng.standard_normal(shape).astype(DTYPE)


def _layer_case(
    name: str,
    kind: str,
    layer: Layer,
    x: FloatArray,
    training: bool = True,
) -> _Case:
    params = layer.parameters()
    inputs: Dict[str, FloatArray] = {"x": x}
    inputs.update({param.name: param.data for param in params})

    def backward(dy: FloatArray) -> Dict[str, FloatArray]:
        for param in params:
            param.zero_grad()
        grads = {"x": layer.backward(dy)}
        grads.update({param.name: param.grad.copy() for param in params})
        return grads

    return _Case(
        name, kind, inputs, lambda ctx: layer.forward(inputs["x"], ctx), backward, training
    )


def _conv(name: str, cin: int, cout: int, spec: ConvSpec, shape: tuple[int, int]) -> GradCase:
    def case(rng: np.random.Generator) -> _Case:
        layer = Conv2d(name, cin, cout, spec, rng, DTYPE)
        return _layer_case(name, "op", layer, _normal(rng, 2, cin, *shape))

    return case


def _batch_norm(training: bool) -> GradCase:
    name = "batch_norm.train" if training else "batch_norm.eval"

    def case(rng: np.random.Generator) -> _Case:
        layer = BatchNorm(name, 3, DTYPE)
        params = layer.params
        params.gamma.data[...] = rng.uniform(0.5, 1.5, params.size)
        params.beta.data[...] = rng.standard_normal(params.size)
        params.running_mean[...] = rng.standard_normal(params.size)
        params.running_var[...] = rng.uniform(0.5, 2.0, params.size)
        return _layer_case(name, "op", layer, _normal(rng, 3, 3, 4, 5), training)

    return case


def _subspectral_norm(rng: np.random.Generator) -> _Case:
    layer = SubSpectralNorm("subspectral_norm", 2, 2, DTYPE)
    layer.params.gamma.data[...] = rng.uniform(0.5, 1.5, layer.params.size)
    layer.params.beta.data[...] = rng.standard_normal(layer.params.size)
    return _layer_case("subspectral_norm", "op", layer, _normal(rng, 3, 2, 6, 4))


def _elementwise(name: str, factory: Callable[[], Layer]) -> GradCase:
    def case(rng: np.random.Generator) -> _Case:
        return _layer_case(name, "op", factory(), 2.0 * _normal(rng, 2, 3, 4, 5))

    return case


def _sigmoid(rng: np.random.Generator) -> _Case:
    inputs = {"x": 2.0 * _normal(rng, 2, 3, 1, 5)}
    return _Case(
        "sigmoid",
        "op",
        inputs,
        lambda ctx: F.sigmoid(inputs["x"]),
        lambda dy: {"x": F.sigmoid_backward(dy, F.sigmoid(inputs["x"]))},
    )


def _broadcast_freq(rng: np.random.Generator) -> _Case:
    inputs = {"x": _normal(rng, 2, 3, 1, 4)}
    return _Case(
        "broadcast_freq",
        "op",
        inputs,
        lambda ctx: F.broadcast_freq(inputs["x"], 5),
        lambda dy: {"x": F.broadcast_freq_backward(dy)},
    )


def _avg_pool_time(rng: np.random.Generator) -> _Case:
    inputs = {"x": _normal(rng, 2, 3, 2, 6)}
    return _Case(
        "avg_pool_time",
        "op",
        inputs,
        lambda ctx: F.avg_pool_time(inputs["x"]),
        lambda dy: {"x": F.avg_pool_time_backward(dy, inputs["x"].shape[3])},
    )


def _cross_entropy(rng: np.random.Generator) -> _Case:
    inputs = {"logits": 2.0 * _normal(rng, 4, 5)}
    labels = rng.integers(0, 5, size=4)

    def forward(ctx: ForwardContext) -> FloatArray:
        return np.asarray(cross_entropy(inputs["logits"], labels)[0])

    def backward(dy: FloatArray) -> Dict[str, FloatArray]:
        return {"logits": cross_entropy(inputs["logits"], labels)[1] * dy}

    return _Case("cross_entropy", "op", inputs, forward, backward)


OP_CASES: Dict[str, GradCase] = {
    "conv2d": _conv("conv2d", 3, 4, ConvSpec((3, 3), padding=(1, 1), bias=True), (5, 6)),
    "conv2d.grouped_strided": _conv(
        "conv2d.grouped_strided", 4, 6, ConvSpec((3, 2), stride=(2, 1), groups=2), (7, 5)
    ),
    "conv2d.depthwise_dilated": _conv(
        "conv2d.depthwise_dilated",
        3,
        3,
        ConvSpec.depthwise((1, 3), 3, dilation=(1, 2), padding=(0, 2)),
        (1, 7),
    ),
    "conv2d.pointwise": _conv("conv2d.pointwise", 3, 5, ConvSpec.pointwise(bias=True), (2, 3)),
    "batch_norm.train": _batch_norm(True),
    "batch_norm.eval": _batch_norm(False),
    "subspectral_norm": _subspectral_norm,
    "swish": _elementwise("swish", lambda: Swish("swish")),
    "sigmoid": _sigmoid,
    "relu": _elementwise("relu", lambda: ReLU("relu")),
    "avg_pool_freq": _elementwise("avg_pool_freq", lambda: FreqPool("avg_pool_freq", "avg")),
    "max_pool_freq": _elementwise("max_pool_freq", lambda: FreqPool("max_pool_freq", "max")),
    "broadcast_freq": _broadcast_freq,
    "channel_dropout": _elementwise(
        "channel_dropout", lambda: ChannelDropout("channel_dropout", 0.5)
    ),
    "avg_pool_time": _avg_pool_time,
    "cross_entropy": _cross_entropy,
}
"""Op-level checks keyed by name."""


BLOCK_BATCH = 4
BLOCK_FRAMES = 8
FILTER_NORM = 4.0
"""Per-channel norm of every block filter that feeds a normalization layer."""


def _condition(block: BCResBlock) -> BCResBlock:
    # outputs are invariant to the scale of a conv feeding a norm, while the
    # truncation error of a central difference on it grows as (step / |w|)^2
    feeds_norm = [block.f2.layers[0], block.f1.layers[0]]
    if block.front is not None:
        feeds_norm.append(block.front.layers[0])
    for layer in feeds_norm:
        if isinstance(layer, Conv2d):
            weight = layer.weight.data
            norms = np.sqrt(np.sum(weight**2, axis=(1, 2, 3), keepdims=True))
            weight *= FILTER_NORM / norms
    return block


def block_cases(
    *,
    reduce_mode: ReduceMode = "avg",
    combine_mode: CombineMode = "broadcast_add",
    norm_mode: NormMode = "ssn",
    use_2d_residual: bool = True,
) -> Dict[str, GradCase]:
    """One normal and one transition block check for the given variant.

    Inputs hold ``BLOCK_BATCH x BLOCK_FRAMES`` samples per frequency row so the
    training-mode norm statistics are not taken over a handful of values.
    """

    variant = dict(
        reduce_mode=reduce_mode,
        combine_mode=combine_mode,
        norm_mode=norm_mode,
        use_2d_residual=use_2d_residual,
    )

    def normal(rng: np.random.Generator) -> _Case:
        cfg = BlockConfig(4, 4, temporal_dilation=2, **variant)  # type: ignore[arg-type]
        block = _condition(BCResBlock("block.normal", cfg, rng, DTYPE))
        x = _normal(rng, BLOCK_BATCH, 4, 10, BLOCK_FRAMES)
        return _layer_case("block.normal", "block", block, x)

    def transition(rng: np.random.Generator) -> _Case:
        cfg = BlockConfig(3, 4, stride=(2, 1), **variant)  # type: ignore[arg-type]
        block = _condition(BCResBlock("block.transition", cfg, rng, DTYPE))
        x = _normal(rng, BLOCK_BATCH, 3, 20, BLOCK_FRAMES)
        return _layer_case("block.transition", "block", block, x)

    return {"block.normal": normal, "block.transition": transition}


def _same_kinks(a: List[np.ndarray], b: List[np.ndarray]) -> bool:
    return len(a) == len(b) and all(np.array_equal(x, y) for x, y in zip(a, b))


def _relative_error(analytic: FloatArray, numeric: FloatArray) -> float:
    if analytic.size == 0:
        return 0.0
    scale = max(float(np.max(np.abs(analytic))), float(np.max(np.abs(numeric))))
    if scale == 0.0:
        return 0.0
    return float(np.max(np.abs(analytic - numeric))) / scale


def check_case(
    case: _Case,
    seed: int,
    *,
    step: float = DEFAULT_STEP,
    threshold: float = DEFAULT_THRESHOLD,
) -> GradCheckResult:
    """Compare analytic and central-difference gradients of ``case``."""

    def run(kinks: Optional[List[np.ndarray]]) -> FloatArray:
        # same dropout masks on every evaluation
        ctx = ForwardContext(
            training=case.training, rng=np.random.default_rng(seed), kinks=kinks
        )
        return case.forward(ctx)

    base_kinks: List[np.ndarray] = []
    out = run(base_kinks)
    upstream = np.random.default_rng(seed + 1).standard_normal(np.shape(out))
    analytic = case.backward(np.asarray(upstream, dtype=DTYPE))

    def loss(kinks: List[np.ndarray]) -> float:
        return float(np.sum(run(kinks) * upstream))

    worst, worst_name = 0.0, ""
    probes = skipped = 0
    for name, array in case.inputs.items():
        kept_a: List[float] = []
        kept_n: List[float] = []
        grad = analytic[name]
        for index in np.ndindex(array.shape):
            original = array[index]
            plus_kinks: List[np.ndarray] = []
            minus_kinks: List[np.ndarray] = []
            array[index] = original + step
            plus = loss(plus_kinks)
            array[index] = original - step
            minus = loss(minus_kinks)
            array[index] = original
            if not (_same_kinks(plus_kinks, base_kinks) and _same_kinks(minus_kinks, base_kinks)):
                skipped += 1
                continue
            probes += 1
            kept_a.append(float(grad[index]))
            kept_n.append((plus - minus) / (2.0 * step))
        error = _relative_error(np.asarray(kept_a), np.asarray(kept_n))
        if error >= worst:
            worst, worst_name = error, name
    status = CheckStatus.PASSED if worst < threshold else CheckStatus.FAILED
    if status is CheckStatus.FAILED:
        logger.warning(
            "gradcheck failed check=%s worst=%s rel_error=%.3e", case.name, worst_name, worst
        )
    return GradCheckResult(case.name, case.kind, worst, worst_name, probes, skipped, status)


def run_gradchecks(
    seed: int = 0,
    *,
    threshold: float = DEFAULT_THRESHOLD,
    step: float = DEFAULT_STEP,
    reduce_mode: ReduceMode = "avg",
    combine_mode: CombineMode = "broadcast_add",
    norm_mode: NormMode = "ssn",
    use_2d_residual: bool = True,
) -> GradCheckReport:
    """Run every op check and one normal plus one transition block check."""

    report = GradCheckReport(seed=seed, threshold=threshold)
    cases = dict(OP_CASES)
    cases.update(
        block_cases(
            reduce_mode=reduce_mode,
            combine_mode=combine_mode,
            norm_mode=norm_mode,
            use_2d_residual=use_2d_residual,
        )
    )
    for offset, (name, factory) in enumerate(cases.items()):
        rng = np.random.default_rng(np.random.SeedSequence((seed, offset)))
        result = check_case(factory(rng), seed, step=step, threshold=threshold)
        logger.debug("gradcheck check=%s rel_error=%.3e", name, result.max_rel_error)
        report.results.append(result)
    logger.info(
        "gradcheck seed=%d checks=%d passed=%s", seed, len(report.results), report.passed
    )
    return report


__all__ = [
    "CheckStatus",
    "DEFAULT_STEP",
    "DEFAULT_THRESHOLD",
    "BLOCK_BATCH",
    "BLOCK_FRAMES",
    "FILTER_NORM",
    "GradCase",
    "GradCheckReport",
    "GradCheckResult",
    "OP_CASES",
    "block_cases",
    "check_case",
    "run_gradchecks",
]
