"""Named node-value profiles for initial data, collar data and sign patterns.

Each profile maps a grid to one value per active node.  Sign patterns take
values in {-1, 1}; ``sgn(0)`` is taken to be 1 throughout.
"""
from __future__ import annotations

from enum import Enum

import numpy as np

from .errors import ConfigError
from .grid import DomainGrid


class Pattern(str, Enum):
    SGN_SIN_INV = "sgn_sin_inv"
    SGN_X = "sgn_x"
    CHECKERBOARD = "checkerboard"
    SEEDED_RANDOM = "seeded_random"


def sgn(x):
    return np.where(np.asarray(x) >= 0, 1.0, -1.0)


def sign_pattern(pattern, grid: DomainGrid, seed: int = 0, origin=None) -> np.ndarray:
    """A {-1, 1}-valued function of the nodes.

    ``sgn_sin_inv`` is ``sgn(sin(1/x))`` in the first coordinate, equal to 1
    where ``x = 0`` or ``sin(1/x) = 0``; ``sgn_x`` is ``sgn(x - origin)`` with
    the origin defaulting to the midpoint of Omega along the first axis.
    """
    pattern = Pattern(pattern)
    x = grid.coords[:, 0]
    if pattern is Pattern.SGN_SIN_INV:
        with np.errstate(divide="ignore", invalid="ignore"):
            s = np.sin(1.0 / x)
        return np.where(x == 0, 1.0, sgn(s))
    if pattern is Pattern.SGN_X:
        if origin is None:
            origin = 0.5 * grid.extent[0]
        return sgn(x - origin)
    if pattern is Pattern.CHECKERBOARD:
        parity = grid.lattice_index.sum(axis=1) % 2
        return np.where(parity == 0, 1.0, -1.0)
    rng = np.random.default_rng(seed)
    return rng.choice(np.array([-1.0, 1.0]), size=grid.n_nodes)


def bump(grid: DomainGrid, amplitude=1.0, center=None, radius=None) -> np.ndarray:
    """Smooth compactly supported bump ``A exp(1 - 1/(1 - r^2))``, peak value ``A``."""
    ext = np.array(grid.extent)
    center = 0.5 * ext if center is None else np.broadcast_to(np.asarray(center, float), ext.shape)
    radius = 0.5 * ext.min() if radius is None else float(radius)
    r2 = (((grid.coords - center) / radius) ** 2).sum(axis=1)
    out = np.zeros(grid.n_nodes)
    inside = r2 < 1.0
    out[inside] = amplitude * np.exp(1.0 - 1.0 / (1.0 - r2[inside]))
    return out


def _constant(grid, value=0.0):
    return np.full(grid.n_nodes, float(value))


def _linear_ramp(grid, slope=1.0, intercept=0.0):
    return intercept + slope * grid.coords[:, 0]


def _random(grid, seed=0, low=0.0, high=1.0):
    rng = np.random.default_rng(seed)
    return rng.uniform(low, high, grid.n_nodes)


def _sgn_sin_inv(grid, amplitude=1.0):
    return amplitude * sign_pattern(Pattern.SGN_SIN_INV, grid)


def _sgn_x(grid, amplitude=1.0, origin=None):
    return amplitude * sign_pattern(Pattern.SGN_X, grid, origin=origin)


def _checkerboard(grid, amplitude=1.0):
    return amplitude * sign_pattern(Pattern.CHECKERBOARD, grid)


PROFILES = {
    "constant": _constant,
    "bump": bump,
    "linear_ramp": _linear_ramp,
    "random": _random,
    "sgn_sin_inv": _sgn_sin_inv,
    "sgn_x": _sgn_x,
    "checkerboard": _checkerboard,
}


def evaluate_profile(spec, grid: DomainGrid) -> np.ndarray:
    """Node values for a profile spec.

    ``spec`` is a number (constant) or a mapping ``{"profile": name, **params}``.
    """
    if isinstance(spec, (int, float)) and not isinstance(spec, bool):
        return _constant(grid, spec)
    if not isinstance(spec, dict) or "profile" not in spec:
        raise ConfigError(f"profile spec must be a number or have a 'profile' key: {spec!r}")
    params = dict(spec)
    name = params.pop("profile")
    try:
        fn = PROFILES[name]
    except KeyError:
        raise ConfigError(f"unknown profile {name!r}; known: {sorted(PROFILES)}") from None
    try:
        return np.asarray(fn(grid, **params), dtype=float)
    except TypeError as exc:
        raise ConfigError(f"bad parameters for profile {name!r}: {exc}") from None
