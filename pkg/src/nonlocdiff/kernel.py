"""Compactly supported interaction kernels and their midpoint-rule stencils.

All kernels are radial, vanish for ``|z| >= 1`` (horizon fixed at 1) and are
strictly positive inside the unit ball.  A :class:`Stencil` is the kernel
sampled at integer grid displacements ``d`` with ``|d h| < 1``; its weights
``J(d h) h^N`` discretize every spatial integral in the package.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .errors import BadSpacing, InvalidParameter


class KernelShape(str, Enum):
    CONST_BALL = "const_ball"
    QUARTIC_BUMP = "quartic_bump"
    COSINE_BUMP = "cosine_bump"


# Integral of the unit-amplitude profile over the unit ball, per (shape, N).
_UNIT_INTEGRALS = {
    (KernelShape.CONST_BALL, 1): 2.0,
    (KernelShape.CONST_BALL, 2): math.pi,
    (KernelShape.QUARTIC_BUMP, 1): 16.0 / 15.0,
    (KernelShape.QUARTIC_BUMP, 2): math.pi / 3.0,
    (KernelShape.COSINE_BUMP, 1): 1.0,
    (KernelShape.COSINE_BUMP, 2): math.pi / 2.0 - 2.0 / math.pi,
}


def horizon_cells(h: float) -> int:
    """Number of grid cells per horizon; raises BadSpacing unless ``1/h`` is an integer."""
    if not (h > 0 and math.isfinite(h)):
        raise BadSpacing(f"BadSpacing: spacing must be positive, got {h!r}")
    M = round(1.0 / h)
    if M < 1 or abs(M * h - 1.0) > 1e-12:
        raise BadSpacing(f"BadSpacing: horizon 1 is not an integer multiple of h={h!r}")
    return M


@dataclass(frozen=True)
class Kernel:
    """Radial kernel ``J(z) = amplitude * g(|z|)`` supported in the open unit ball.

    ``g`` is 1 (const_ball), ``(1 - r^2)^2`` (quartic_bump) or
    ``(1 + cos(pi r)) / 2`` (cosine_bump).  Use :meth:`normalized` to pick the
    amplitude from a target L1 norm.
    """

    shape: KernelShape
    dimension: int = 1
    amplitude: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "shape", KernelShape(self.shape))
        if self.dimension not in (1, 2):
            raise InvalidParameter(f"kernel dimension must be 1 or 2, got {self.dimension}")
        if not math.isfinite(self.amplitude):
            raise InvalidParameter("kernel amplitude must be finite")

    @classmethod
    def normalized(cls, shape, dimension: int = 1, l1_norm: float = 1.0) -> Kernel:
        shape = KernelShape(shape)
        if not (l1_norm > 0 and math.isfinite(l1_norm)):
            raise InvalidParameter(f"l1_norm must be positive and finite, got {l1_norm!r}")
        return cls(shape, dimension, l1_norm / _UNIT_INTEGRALS[shape, dimension])

    @property
    def l1_norm(self) -> float:
        """Closed-form integral of J over R^N."""
        return self.amplitude * _UNIT_INTEGRALS[self.shape, self.dimension]

    def radial(self, r):
        """J as a function of ``r = |z|``; exactly zero for ``r >= 1``."""
        r = np.asarray(r, dtype=float)
        inside = r < 1.0
        if self.shape is KernelShape.CONST_BALL:
            g = np.ones_like(r)
        elif self.shape is KernelShape.QUARTIC_BUMP:
            g = (1.0 - r * r) ** 2
        else:
            g = 0.5 * (1.0 + np.cos(np.pi * r))
        return np.where(inside, self.amplitude * g, 0.0)

    def __call__(self, z):
        return kernel_eval(self, z)

    def stencil(self, h: float) -> Stencil:
        return build_stencil(self, h)


def kernel_eval(kernel: Kernel, z):
    """Evaluate J at points ``z``.

    For ``N = 1`` ``z`` may be a scalar or any array of coordinates; for
    ``N = 2`` the last axis holds the two components.
    """
    z = np.asarray(z, dtype=float)
    if kernel.dimension == 1:
        if z.ndim > 1 and z.shape[-1] == 1:
            z = z[..., 0]
        r = np.abs(z)
    else:
        if z.shape[-1] != 2:
            raise ValueError("two-dimensional kernel needs points with 2 components")
        r = np.hypot(z[..., 0], z[..., 1])
    out = kernel.radial(r)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True, eq=False)
class Stencil:
    """Integer displacements and midpoint weights for one kernel and spacing."""

    offsets: np.ndarray  # (n, N) integer displacements
    weights: np.ndarray  # (n,)
    h: float
    kernel: Kernel | None = field(default=None)

    def __post_init__(self):
        offsets = np.atleast_2d(np.asarray(self.offsets, dtype=np.int64))
        if offsets.shape[0] == 1 and np.ndim(self.offsets) == 1:
            offsets = offsets.T
        weights = np.asarray(self.weights, dtype=float)
        if weights.shape != (offsets.shape[0],):
            raise ValueError("one weight per offset required")
        offsets.setflags(write=False)
        weights.setflags(write=False)
        object.__setattr__(self, "offsets", offsets)
        object.__setattr__(self, "weights", weights)

    @property
    def dimension(self) -> int:
        return self.offsets.shape[1]

    @property
    def weight_sum(self) -> float:
        return float(self.weights.sum())

    def __len__(self):
        return len(self.weights)


def build_stencil(kernel: Kernel, h: float) -> Stencil:
    M = horizon_cells(h)
    rng = np.arange(-M, M + 1)
    if kernel.dimension == 1:
        offsets = rng[:, None]
    else:
        a, b = np.meshgrid(rng, rng, indexing="ij")
        offsets = np.column_stack([a.ravel(), b.ravel()])
    # |d h| < 1  <=>  |d|^2 < M^2, decided in integers
    sq = (offsets * offsets).sum(axis=1)
    offsets = offsets[sq < M * M]
    r = np.sqrt((offsets * offsets).sum(axis=1)) * h
    weights = kernel.radial(r) * h**kernel.dimension
    return Stencil(offsets, weights, h, kernel)


def _outside_support(offsets: np.ndarray, h: float) -> np.ndarray:
    sq = (offsets * offsets).sum(axis=1)
    try:
        M = horizon_cells(h)
    except BadSpacing:
        return np.sqrt(sq) * h >= 1.0
    return sq >= M * M


def kernel_l1_norm(kernel: Kernel, stencil: Stencil) -> tuple[float, float]:
    """Closed-form norm and the stencil quadrature of it."""
    return kernel.l1_norm, stencil.weight_sum


def validate_kernel(kernel: Kernel, stencil: Stencil) -> list[str]:
    """Names of violated kernel invariants at the stencil offsets (empty if valid)."""
    violations = []
    w = stencil.weights
    d = stencil.offsets
    if kernel.dimension != stencil.dimension:
        violations.append("DimensionMismatch")
    if not math.isfinite(kernel.l1_norm):
        violations.append("NonFiniteNorm")
    if np.any(w < 0):
        violations.append("NegativeWeight")
    outside = _outside_support(d, stencil.h)
    if np.any(outside & (w != 0)):
        violations.append("SupportViolation")
    if np.any(~outside & (w == 0)):
        violations.append("ZeroInsideSupport")
    if kernel.amplitude <= 0 and "NegativeWeight" not in violations:
        violations.append("NonPositiveAmplitude")
    return violations
