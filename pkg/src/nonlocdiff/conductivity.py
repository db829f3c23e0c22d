"""Conductivities k(u, v), their Lipschitz moduli and zero sets.

Every family is vectorized over numpy arrays.  ``lip_modulus(a, b)`` returns a
``K`` with

    |k(u,v) - k(u',v')| <= K(|u|+|u'|, |v|+|v'|) (|u-u'| + |v-v'|),

which is what the window-length formula consumes.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import InvalidParameter, NotLipschitzForEvolution, UndefinedAt


class Family(str, Enum):
    LINEAR = "linear"
    P_LAPLACIAN = "p_laplacian"
    POROUS_MEDIUM = "porous_medium"
    POROUS_MEDIUM_ALT = "porous_medium_alt"
    PRODUCT_SHIFT = "product_shift"
    SIN_SQUARED = "sin_squared"


class ZeroSetKind(str, Enum):
    EMPTY = "empty"
    DIAGONAL = "diagonal"  # F(U) = {U}
    REFLECTION = "reflection"  # F(U) = {-U}
    INVOLUTION = "involution"  # F(U) = {-a/U}
    COUNTABLE_LADDER = "countable_ladder"  # F(U) = {-U + sgn(n) sqrt|n|}


_PARAMS = {
    Family.LINEAR: (),
    Family.P_LAPLACIAN: ("p",),
    Family.POROUS_MEDIUM: ("m",),
    Family.POROUS_MEDIUM_ALT: ("m",),
    Family.PRODUCT_SHIFT: ("a", "m"),
    Family.SIN_SQUARED: (),
}


@dataclass(frozen=True)
class ZeroSet:
    """Values ``V`` with ``k(U, V) = 0`` for one ``U``."""

    kind: ZeroSetKind
    U: float
    values: tuple[float, ...]

    def __contains__(self, v):
        return any(v == x for x in self.values)

    def __iter__(self):
        return iter(self.values)

    def __len__(self):
        return len(self.values)


def signed_sqrt(n):
    """``sgn(n) sqrt(|n|)``, the signed square root used by the sin-squared ladder."""
    n = np.asarray(n, dtype=float)
    return np.sign(n) * np.sqrt(np.abs(n))


def _sin_pi_sq(x):
    # sin^2(pi x) has period 1, so reduce first: integer x gives an exact zero.
    r = x - np.rint(x)
    return np.sin(np.pi * r) ** 2


@dataclass(frozen=True)
class Conductivity:
    family: Family
    p: float | None = None
    m: float | None = None
    a: float | None = None

    def __post_init__(self):
        try:
            family = Family(self.family)
        except ValueError:
            raise InvalidParameter(f"unknown conductivity family {self.family!r}") from None
        object.__setattr__(self, "family", family)
        for name in ("p", "m", "a"):
            value = getattr(self, name)
            if name in _PARAMS[family]:
                if value is None or not math.isfinite(value):
                    raise InvalidParameter(f"{family.value} needs a finite parameter {name!r}")
                object.__setattr__(self, name, float(value))
            elif value is not None:
                raise InvalidParameter(f"{family.value} takes no parameter {name!r}")
        if family is Family.P_LAPLACIAN and self.p < 2:
            raise InvalidParameter(f"p_laplacian needs p >= 2, got p={self.p}")
        if family in (Family.POROUS_MEDIUM, Family.POROUS_MEDIUM_ALT) and self.m <= 1:
            raise InvalidParameter(f"{family.value} needs m > 1, got m={self.m}")
        if family is Family.PRODUCT_SHIFT:
            if self.a == 0:
                raise InvalidParameter("product_shift needs a != 0")
            if self.m <= 0:
                raise InvalidParameter(f"product_shift needs m > 0, got m={self.m}")

    # constructors ------------------------------------------------------
    @classmethod
    def linear(cls):
        return cls(Family.LINEAR)

    @classmethod
    def p_laplacian(cls, p):
        return cls(Family.P_LAPLACIAN, p=p)

    @classmethod
    def porous_medium(cls, m):
        return cls(Family.POROUS_MEDIUM, m=m)

    @classmethod
    def porous_medium_alt(cls, m):
        return cls(Family.POROUS_MEDIUM_ALT, m=m)

    @classmethod
    def product_shift(cls, a, m):
        return cls(Family.PRODUCT_SHIFT, a=a, m=m)

    @classmethod
    def sin_squared(cls):
        return cls(Family.SIN_SQUARED)

    @classmethod
    def from_config(cls, cfg: dict) -> Conductivity:
        cfg = dict(cfg)
        family = cfg.pop("family", None)
        params = cfg.pop("parameters", {})
        params = {**params, **cfg}
        unknown = set(params) - {"p", "m", "a"}
        if unknown:
            raise InvalidParameter(f"unknown conductivity parameters {sorted(unknown)}")
        return cls(family, **params)

    def to_config(self) -> dict:
        out = {"family": self.family.value}
        out.update({k: getattr(self, k) for k in _PARAMS[self.family]})
        return out

    def __str__(self):
        params = ",".join(f"{k}={getattr(self, k):g}" for k in _PARAMS[self.family])
        return f"{self.family.value}({params})" if params else self.family.value

    # evaluation --------------------------------------------------------
    def __call__(self, u, v):
        return k_eval(self, u, v)

    @property
    def satisfies_k3(self) -> bool:
        """Whether ``k(u, v) = 0`` forces ``u = v`` or ``u = -v``."""
        return self.family in (
            Family.LINEAR,
            Family.P_LAPLACIAN,
            Family.POROUS_MEDIUM,
            Family.POROUS_MEDIUM_ALT,
        )

    @property
    def evolution_ok(self) -> bool:
        f = self.family
        if f is Family.P_LAPLACIAN:
            return self.p >= 3
        if f in (Family.POROUS_MEDIUM, Family.POROUS_MEDIUM_ALT):
            return self.m >= 2
        if f is Family.PRODUCT_SHIFT:
            return self.m >= 1
        return True

    def require_evolution(self):
        if not self.evolution_ok:
            raise NotLipschitzForEvolution(
                f"NotLipschitzForEvolution: {self} is not locally Lipschitz, "
                "so no contraction window exists"
            )

    def lip_modulus(self, a, b):
        return lip_modulus(self, a, b)

    def zero_set(self, U, n_range=(-100, 100)) -> ZeroSet:
        return zero_set(self, U, n_range)


def k_eval(c: Conductivity, u, v):
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    f = c.family
    if f is Family.LINEAR:
        out = np.ones(np.broadcast(u, v).shape)
    elif f is Family.P_LAPLACIAN:
        out = np.abs(u - v) ** (c.p - 2.0)
    elif f is Family.POROUS_MEDIUM:
        out = np.abs(u + v) ** (c.m - 1.0)
    elif f is Family.POROUS_MEDIUM_ALT:
        out = np.abs(u) ** (c.m - 1.0) + np.abs(v) ** (c.m - 1.0)
    elif f is Family.PRODUCT_SHIFT:
        out = np.abs(c.a + u * v) ** c.m
    else:
        s = u + v
        out = _sin_pi_sq(s * s)
    return float(out) if out.ndim == 0 else out


def lip_modulus(c: Conductivity, a, b):
    """Lipschitz modulus ``K(a, b)`` of ``c``; nonnegative and nondecreasing in both arguments."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    f = c.family
    with np.errstate(divide="ignore"):
        if f is Family.LINEAR:
            out = np.zeros(np.broadcast(a, b).shape)
        elif f is Family.P_LAPLACIAN:
            out = (c.p - 2.0) * (a + b) ** (c.p - 3.0)
        elif f is Family.POROUS_MEDIUM:
            out = (c.m - 1.0) * (a + b) ** (c.m - 2.0)
        elif f is Family.POROUS_MEDIUM_ALT:
            out = (c.m - 1.0) * np.maximum(a, b) ** (c.m - 2.0)
        elif f is Family.PRODUCT_SHIFT:
            # |a+uv| <= |a| + AB and |uv - u'v'| <= max(A, B)(|du| + |dv|)
            out = c.m * (abs(c.a) + a * b) ** (c.m - 1.0) * np.maximum(a, b)
        else:
            # d/ds sin^2(pi s^2) = 2 pi s sin(2 pi s^2); taken with a factor 2 of headroom
            out = 4.0 * np.pi * (a + b)
    return float(out) if out.ndim == 0 else out


def zero_set(c: Conductivity, U: float, n_range=(-100, 100)) -> ZeroSet:
    """The set ``F(U)`` of values ``V`` with ``k(U, V) = 0``.

    The sin-squared ladder is infinite; ``n_range`` (inclusive) truncates it.
    """
    U = float(U)
    f = c.family
    if f is Family.LINEAR or (f is Family.P_LAPLACIAN and c.p == 2):
        return ZeroSet(ZeroSetKind.EMPTY, U, ())
    if f is Family.P_LAPLACIAN:
        return ZeroSet(ZeroSetKind.DIAGONAL, U, (U,))
    if f is Family.POROUS_MEDIUM:
        return ZeroSet(ZeroSetKind.REFLECTION, U, (-U,))
    if f is Family.POROUS_MEDIUM_ALT:
        if U != 0:
            return ZeroSet(ZeroSetKind.EMPTY, U, ())
        return ZeroSet(ZeroSetKind.DIAGONAL, U, (0.0,))
    if f is Family.PRODUCT_SHIFT:
        if U == 0:
            raise UndefinedAt(U)
        return ZeroSet(ZeroSetKind.INVOLUTION, U, (-c.a / U,))
    lo, hi = n_range
    n = np.arange(int(lo), int(hi) + 1)
    values = -U + signed_sqrt(n)
    return ZeroSet(ZeroSetKind.COUNTABLE_LADDER, U, tuple(float(x) for x in values))


def verify_lip(c: Conductivity, lattice_bound: float, samples: int = 10_000, seed: int = 0) -> float:
    """Largest sampled excess of ``|k - k'|`` over the modulus bound (0 if none).

    Half of the quadruples are independent uniform draws on
    ``[-lattice_bound, lattice_bound]``; the other half are small perturbations,
    which probe the local difference quotient.  Excesses below floating-point
    resolution of the compared quantities are not reported.
    """
    if lattice_bound <= 0:
        raise ValueError("lattice_bound must be positive")
    c.require_evolution()
    rng = np.random.default_rng(seed)
    half = samples // 2
    u, v, u2, v2 = rng.uniform(-lattice_bound, lattice_bound, (4, samples))
    step = 1e-3 * lattice_bound * rng.uniform(-1.0, 1.0, (2, samples - half))
    u2[half:] = np.clip(u[half:] + step[0], -lattice_bound, lattice_bound)
    v2[half:] = np.clip(v[half:] + step[1], -lattice_bound, lattice_bound)
    k1 = k_eval(c, u, v)
    k2 = k_eval(c, u2, v2)
    lhs = np.abs(k1 - k2)
    rhs = lip_modulus(c, np.abs(u) + np.abs(u2), np.abs(v) + np.abs(v2)) * (
        np.abs(u - u2) + np.abs(v - v2)
    )
    slack = 16 * np.finfo(float).eps * (np.abs(k1) + np.abs(k2) + rhs)
    return float(np.max(np.maximum(lhs - rhs - slack, 0.0), initial=0.0))
