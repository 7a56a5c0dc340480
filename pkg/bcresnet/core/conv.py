"""Grouped, strided, dilated 2-D convolution with its backward pass.

Convolutions are evaluated tap by tap: for every kernel offset the matching
strided window of the padded input is multiplied against the tap's weight
slice and accumulated. Depthwise convolutions take an elementwise fast path;
everything else goes through a batched ``matmul`` per group.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .counter import MultCounter
from .tensor import ConfigurationError, FloatArray

Pair = tuple[int, int]


@dataclass(frozen=True, slots=True)
class ConvSpec:
    """Geometry of a 2-D convolution over (frequency, time)."""

    kernel: Pair
    """Kernel size ``(kh, kw)``."""
    stride: Pair = (1, 1)
    """Step ``(sh, sw)`` between output sites."""
    dilation: Pair = (1, 1)
    """Spacing ``(dh, dw)`` between kernel taps."""
    padding: Pair = (0, 0)
    """Zeros added on each side ``(ph, pw)``."""
    groups: int = 1
    """Number of channel groups; equal to the channel count for depthwise."""
    bias: bool = False
    """Whether a per-output-channel bias is added."""

    @classmethod
    def depthwise(
        cls,
        kernel: Pair,
        channels: int,
        *,
        stride: Pair = (1, 1),
        dilation: Pair = (1, 1),
        padding: Pair = (0, 0),
    ) -> "ConvSpec":
        """Spec for a per-channel spatial convolution."""

        return cls(kernel, stride, dilation, padding, groups=channels)

    @classmethod
    def pointwise(cls, *, bias: bool = False) -> "ConvSpec":
        """Spec for a 1x1 cross-channel convolution."""

        return cls((1, 1), bias=bias)

    def output_hw(self, h: int, w: int) -> Pair:
        """Return the output ``(height, width)`` for an ``h`` x ``w`` input."""

        kh, kw = self.kernel
        sh, sw = self.stride
        dh, dw = self.dilation
        ph, pw = self.padding
        oh = (h + 2 * ph - dh * (kh - 1) - 1) // sh + 1
        ow = (w + 2 * pw - dw * (kw - 1) - 1) // sw + 1
        if oh < 1 or ow < 1:
            msg = (
                f"Convolution {self.kernel} with dilation {self.dilation} and padding "
                f"{self.padding} yields empty output for input {h}x{w}"
            )
            raise ConfigurationError(msg)
        return oh, ow

    def weight_shape(self, in_channels: int, out_channels: int) -> tuple[int, int, int, int]:
        """Return ``(out, in / groups, kh, kw)`` after validating the groups."""

        self.check_channels(in_channels, out_channels)
        return out_channels, in_channels // self.groups, self.kernel[0], self.kernel[1]

    def check_channels(self, in_channels: int, out_channels: int) -> None:
        """Raise unless ``groups`` divides both channel counts."""

        if self.groups < 1 or in_channels % self.groups or out_channels % self.groups:
            msg = (
                f"groups={self.groups} must divide in_channels={in_channels} "
                f"and out_channels={out_channels}"
            )
            raise ConfigurationError(msg)

    def mults(self, in_channels: int, out_channels: int, h: int, w: int) -> int:
        """Multiplies for one sample: output elements x taps x inputs per group."""

        oh, ow = self.output_hw(h, w)
        kh, kw = self.kernel
        return out_channels * oh * ow * kh * kw * (in_channels // self.groups)


def _tap_window(spec: ConvSpec, i: int, j: int, oh: int, ow: int) -> tuple[slice, slice]:
    sh, sw = spec.stride
    dh, dw = spec.dilation
    top = i * dh
    left = j * dw
    return (
        slice(top, top + sh * (oh - 1) + 1, sh),
        slice(left, left + sw * (ow - 1) + 1, sw),
    )


def _pad(x: FloatArray, spec: ConvSpec) -> FloatArray:
    ph, pw = spec.padding
    if ph == 0 and pw == 0:
        return x
    return np.pad(x, ((0, 0), (0, 0), (ph, ph), (pw, pw)))


def _validate(x: FloatArray, weight: FloatArray, spec: ConvSpec) -> None:
    if x.ndim != 4 or weight.ndim != 4:
        msg = f"conv2d expects 4-D input and weight, got {x.shape} and {weight.shape}"
        raise ConfigurationError(msg)
    expected = spec.weight_shape(x.shape[1], weight.shape[0])
    if weight.shape != expected:
        msg = f"Weight shape {weight.shape} does not match expected {expected}"
        raise ConfigurationError(msg)


def conv2d(
    x: FloatArray,
    weight: FloatArray,
    spec: ConvSpec,
    bias: FloatArray | None = None,
    *,
    counter: MultCounter | None = None,
    label: str = "conv2d",
) -> FloatArray:
    """Convolve ``x`` (n, c, h, w) with ``weight`` (c', c / groups, kh, kw)."""

    _validate(x, weight, spec)
    n, cin, h, w = x.shape
    cout = weight.shape[0]
    oh, ow = spec.output_hw(h, w)
    kh, kw = spec.kernel
    g = spec.groups
    cin_g = cin // g
    cout_g = cout // g
    xp = _pad(x, spec)

    if cin_g == 1 and cout_g == 1:
        out = np.zeros((n, cout, oh, ow), dtype=x.dtype)
        for i in range(kh):
            for j in range(kw):
                rows, cols = _tap_window(spec, i, j, oh, ow)
                out += xp[:, :, rows, cols] * weight[None, :, 0, i, j, None, None]
    else:
        xg = xp.reshape(n, g, cin_g, xp.shape[2], xp.shape[3])
        wg = weight.reshape(g, cout_g, cin_g, kh, kw)
        acc = np.zeros((n, g, cout_g, oh * ow), dtype=x.dtype)
        for i in range(kh):
            for j in range(kw):
                rows, cols = _tap_window(spec, i, j, oh, ow)
                tap = xg[:, :, :, rows, cols].reshape(n, g, cin_g, oh * ow)
                acc += np.matmul(wg[None, :, :, :, i, j], tap)
        out = acc.reshape(n, cout, oh, ow)

    if spec.bias:
        if bias is None or bias.shape != (cout,):
            msg = f"conv2d with bias needs a ({cout},) bias vector"
            raise ConfigurationError(msg)
        out += bias[None, :, None, None]
    if counter is not None:
        counter.add(label, n * spec.mults(cin, cout, h, w))
    return out


def conv2d_backward(
    dout: FloatArray,
    x: FloatArray,
    weight: FloatArray,
    spec: ConvSpec,
) -> tuple[FloatArray, FloatArray, FloatArray | None]:
    """Return gradients ``(dx, dweight, dbias)`` for :func:`conv2d`."""

    n, cin, h, w = x.shape
    cout = weight.shape[0]
    oh, ow = dout.shape[2], dout.shape[3]
    kh, kw = spec.kernel
    ph, pw = spec.padding
    g = spec.groups
    cin_g = cin // g
    cout_g = cout // g
    xp = _pad(x, spec)
    dxp = np.zeros(xp.shape, dtype=xp.dtype)
    dweight = np.zeros(weight.shape, dtype=weight.dtype)

    if cin_g == 1 and cout_g == 1:
        for i in range(kh):
            for j in range(kw):
                rows, cols = _tap_window(spec, i, j, oh, ow)
                dweight[:, 0, i, j] = np.einsum("nchw,nchw->c", dout, xp[:, :, rows, cols])
                dxp[:, :, rows, cols] += dout * weight[None, :, 0, i, j, None, None]
    else:
        xg = xp.reshape(n, g, cin_g, xp.shape[2], xp.shape[3])
        dxg = dxp.reshape(n, g, cin_g, xp.shape[2], xp.shape[3])
        wg = weight.reshape(g, cout_g, cin_g, kh, kw)
        dwg = dweight.reshape(g, cout_g, cin_g, kh, kw)
        dg = dout.reshape(n, g, cout_g, oh * ow)
        for i in range(kh):
            for j in range(kw):
                rows, cols = _tap_window(spec, i, j, oh, ow)
                tap = xg[:, :, :, rows, cols].reshape(n, g, cin_g, oh * ow)
                dwg[:, :, :, i, j] = np.matmul(dg, tap.transpose(0, 1, 3, 2)).sum(axis=0)
                dtap = np.matmul(wg[None, :, :, :, i, j].transpose(0, 1, 3, 2), dg)
                dxg[:, :, :, rows, cols] += dtap.reshape(n, g, cin_g, oh, ow)

    dx = dxp[:, :, ph : ph + h, pw : pw + w] if (ph or pw) else dxp
    dbias = dout.sum(axis=(0, 2, 3)) if spec.bias else None
    return np.ascontiguousarray(dx), dweight, dbias


__all__ = ["ConvSpec", "conv2d", "conv2d_backward"]
