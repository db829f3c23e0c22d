"""Picard-window time integration of the nonlocal Dirichlet problem.

On a window of length ``T`` the solution is the fixed point of

    (A u)(t, x) = u(t_start, x) + int_0^t rhs(u(s))(x) ds      (x in Omega)
    (A u)(t, x) = psi(x)                                       (x in the collar)

where ``rhs(u)(x) = sum_d k(u(x), u(x + d h)) (u(x + d h) - u(x)) w_d`` and the
time integral uses the composite trapezoid rule on ``S + 1`` equispaced nodes.
The window length comes from the contraction estimate

    T = [8 |J|_1 eps max(K(eps, eps), 2 K(2 eps, 2 eps))]^-1,   eps = 2 |u(t_start)|_inf,

capped at ``window_cap``.  Windows are chained until ``t_final``; each new
window recomputes ``T`` from the current sup norm.
"""
from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .conductivity import Conductivity, k_eval
from .errors import InvalidParameter, NoConvergence, NonFiniteState, RatioViolation
from .grid import ExtremaRecord, Field, extrema
from .kernel import Stencil

log = logging.getLogger(__name__)


@dataclass
class SolverOptions:
    substeps: int = 16
    tol: float | None = None  # None: 1e-12 * max(1, eps) per window
    max_iter: int = 60
    window_cap: float = 0.1
    ratio_tolerance: float = 0.05
    threads: int = 1
    output_times: Sequence[float] | None = None  # None: every window end
    keep_iterates: bool = False

    def __post_init__(self):
        if int(self.substeps) != self.substeps or self.substeps < 1:
            raise InvalidParameter(f"substeps must be a positive integer, got {self.substeps!r}")
        if int(self.max_iter) != self.max_iter or self.max_iter < 1:
            raise InvalidParameter(f"max_iter must be a positive integer, got {self.max_iter!r}")
        if not self.window_cap > 0:
            raise InvalidParameter("window_cap must be positive")
        if not self.ratio_tolerance >= 0:
            raise InvalidParameter("ratio_tolerance must be nonnegative")
        if self.tol is not None and not self.tol > 0:
            raise InvalidParameter("tol must be positive")
        if int(self.threads) != self.threads or self.threads < 1:
            raise InvalidParameter("threads must be a positive integer")
        self.substeps = int(self.substeps)
        self.max_iter = int(self.max_iter)
        self.threads = int(self.threads)


class NonlocalRHS:
    """Vectorized right-hand side over all interior nodes.

    Called on an array whose last axis runs over the grid's active nodes;
    returns the rates at the interior nodes.  ``sign=-1`` flips the
    conductivity (used for backward solves).
    """

    def __init__(self, grid, c: Conductivity, stencil: Stencil, sign: float = 1.0, threads: int = 1):
        self.grid = grid
        self.c = c
        self.sign = float(sign)
        self.threads = threads
        self.table, self.weights = grid.neighbor_table(stencil)
        if self.table.size and self.table.min() < 0:
            raise ValueError("stencil reaches beyond the collar")  # cannot happen for a valid grid

    def _block(self, values, rows):
        ux = values[..., rows, None]
        uy = values[..., self.table[rows]]
        terms = k_eval(self.c, ux, uy) * (uy - ux) * self.weights
        return terms.sum(axis=-1)

    def __call__(self, values):
        values = np.asarray(values, dtype=float)
        n = self.grid.n_interior
        if self.threads == 1 or n < 2 * self.threads:
            out = self._block(values, slice(0, n))
        else:
            bounds = np.linspace(0, n, self.threads + 1).astype(int)
            chunks = [slice(a, b) for a, b in zip(bounds[:-1], bounds[1:])]
            with ThreadPoolExecutor(self.threads) as pool:
                parts = list(pool.map(lambda s: self._block(values, s), chunks))
            out = np.concatenate(parts, axis=-1)
        return out if self.sign == 1.0 else self.sign * out


def rhs(field: Field, c: Conductivity, stencil: Stencil, x: int | None = None):
    """Quadrature of ``int k(u(x), u(y)) [u(y) - u(x)] J(x - y) dy``.

    Returns the value at interior node ``x``, or an array over all interior
    nodes when ``x`` is None.
    """
    op = NonlocalRHS(field.grid, c, stencil)
    if x is None:
        return op(field.values)
    if not 0 <= x < field.grid.n_interior:
        raise IndexError(f"node {x} is not an interior node")
    return float(op._block(field.values, slice(x, x + 1))[0])


def window_length(c: Conductivity, kernel_l1: float, u_norm: float, cap: float) -> tuple[float, float]:
    """Contraction window ``(T, eps)`` for a start state of sup norm ``u_norm``.

    ``T`` is infinite in the formula when ``K`` vanishes (linear conductivity)
    or ``u_norm = 0``; ``cap`` bounds it in every case.
    """
    if not kernel_l1 > 0:
        raise InvalidParameter("kernel L1 norm must be positive")
    if not u_norm >= 0:
        raise InvalidParameter("u_norm must be nonnegative")
    if not cap > 0:
        raise InvalidParameter("cap must be positive")
    eps = 2.0 * u_norm
    K1 = float(c.lip_modulus(eps, eps))
    K2 = float(c.lip_modulus(2 * eps, 2 * eps))
    denom = 8.0 * kernel_l1 * eps * max(K1, 2.0 * K2)
    if not denom > 0 or not math.isfinite(denom):
        return cap, eps
    return min(cap, 1.0 / denom), eps


@dataclass
class SolveWindow:
    """One converged Picard window."""

    index: int
    t_start: float
    t_end: float
    substeps: int
    epsilon: float
    times: np.ndarray  # (S+1,)
    values: np.ndarray  # (S+1, n_nodes) final iterate
    rates: np.ndarray  # (S+1, n_interior) rhs that produced ``values``
    contraction_ratios: list[float]
    deltas: list[float]
    iterate_norms: list[float]
    iterations: int
    converged: bool
    window_formula: float = math.inf
    iterates: list[np.ndarray] | None = None

    @property
    def length(self) -> float:
        return self.t_end - self.t_start

    def values_at(self, t: float) -> np.ndarray:
        """State at time ``t``, integrating the piecewise-linear rate exactly."""
        S = self.substeps
        if t >= self.t_end:
            return self.values[S]
        dt = self.length / S
        tau = max(t - self.t_start, 0.0)
        j = min(int(tau // dt), S - 1)
        s = tau - j * dt
        if s == 0.0:
            return self.values[j]
        out = self.values[j].copy()
        n = self.rates.shape[1]
        Rj, Rk = self.rates[j], self.rates[j + 1]
        out[:n] = self.values[j, :n] + s * Rj + (0.5 * s * s / dt) * (Rk - Rj)
        return out

    def summary(self) -> dict:
        return {
            "index": self.index,
            "t_start": self.t_start,
            "t_end": self.t_end,
            "window_formula": self.window_formula,
            "epsilon": self.epsilon,
            "iterations": self.iterations,
            "converged": self.converged,
            "contraction_ratios": list(self.contraction_ratios),
            "max_iterate_norm": max(self.iterate_norms),
        }


def picard_window(
    start: Field,
    c: Conductivity,
    stencil: Stencil,
    T: float,
    substeps: int = 16,
    tol: float | None = None,
    max_iter: int = 60,
    ratio_tolerance: float = 0.05,
    *,
    sign: float = 1.0,
    t_start: float = 0.0,
    window_index: int = 0,
    threads: int = 1,
    keep_iterates: bool = False,
    operator: NonlocalRHS | None = None,
) -> SolveWindow:
    """Fixed-point iteration of the integral operator on ``[t_start, t_start + T]``.

    The first iterate is constant in time (equal to ``start``).  Iteration stops
    once the max-norm update over all time nodes and grid nodes falls to
    ``tol``.  Every ratio of successive updates is checked against
    ``0.5 + ratio_tolerance``.
    """
    if not T > 0:
        raise InvalidParameter(f"window length must be positive, got {T!r}")
    op = operator or NonlocalRHS(start.grid, c, stencil, sign=sign, threads=threads)
    S = int(substeps)
    n = start.grid.n_interior
    eps = 2.0 * start.sup_norm
    if tol is None:
        tol = 1e-12 * max(1.0, eps)
    noise = 1e-14 * max(1.0, eps)
    limit = 0.5 + ratio_tolerance
    dt = T / S

    base = start.values[:n]
    U = np.tile(start.values, (S + 1, 1))
    ratios, deltas, norms = [], [], [float(np.abs(U).max())]
    iterates = [U.copy()] if keep_iterates else None
    for it in range(1, max_iter + 1):
        R = op(U)
        if not np.all(np.isfinite(R)):
            raise NonFiniteState(f"non-finite rates in window {window_index}, iteration {it}")
        new = U.copy()
        new[0, :n] = base
        new[1:, :n] = base + np.cumsum(0.5 * dt * (R[:-1] + R[1:]), axis=0)
        delta = float(np.abs(new - U).max())
        if deltas and deltas[-1] > noise:
            ratio = delta / deltas[-1]
            ratios.append(ratio)
            if ratio > limit:
                raise RatioViolation(window_index, it, ratio, limit)
        deltas.append(delta)
        norms.append(float(np.abs(new).max()))
        U = new
        if keep_iterates:
            iterates.append(U.copy())
        if delta <= tol:
            break
    else:
        raise NoConvergence(window_index, max_iter, deltas[-1])
    return SolveWindow(
        index=window_index,
        t_start=t_start,
        t_end=t_start + T,
        substeps=S,
        epsilon=eps,
        times=t_start + dt * np.arange(S + 1),
        values=U,
        rates=R,
        contraction_ratios=ratios,
        deltas=deltas,
        iterate_norms=norms,
        iterations=it,
        converged=True,
        iterates=iterates,
    )


@dataclass
class Trajectory:
    times: list[float]
    fields: list[Field]
    extrema_trace: list[ExtremaRecord]
    windows: list[SolveWindow] = field(default_factory=list)
    direction: str = "forward"

    @property
    def initial(self) -> Field:
        return self.fields[0]

    @property
    def final(self) -> Field:
        return self.fields[-1]

    def values(self) -> np.ndarray:
        """All stored fields stacked, shape (n_times, n_nodes)."""
        return np.stack([f.values for f in self.fields])

    def __len__(self):
        return len(self.times)


def _output_grid(output_times, t_final: float) -> list[float] | None:
    if output_times is None:
        return None
    ts = sorted({float(t) for t in output_times if 0 < float(t) < t_final})
    return ts + [float(t_final)]


def _integrate(initial: Field, c: Conductivity, stencil: Stencil, t_final: float, opts, sign: float):
    if not t_final > 0:
        raise InvalidParameter(f"final time must be positive, got {t_final!r}")
    c.require_evolution()
    opts = opts or SolverOptions()
    kernel_l1 = stencil.kernel.l1_norm if stencil.kernel is not None else stencil.weight_sum
    op = NonlocalRHS(initial.grid, c, stencil, sign=sign, threads=opts.threads)
    outputs = _output_grid(opts.output_times, t_final)

    times, fields = [0.0], [initial]
    windows = []
    t, current = 0.0, initial
    pending = 0
    while t < t_final:
        T, eps = window_length(c, kernel_l1, current.sup_norm, opts.window_cap)
        remaining = t_final - t
        last = remaining <= T * (1 + 1e-12)
        length = remaining if last else T
        win = picard_window(
            current, c, stencil, length, opts.substeps, opts.tol, opts.max_iter,
            opts.ratio_tolerance, sign=sign, t_start=t, window_index=len(windows),
            keep_iterates=opts.keep_iterates, operator=op,
        )
        win.window_formula = T
        if last:
            win.t_end = t_final
        windows.append(win)
        log.debug("window %d [%g, %g] eps=%g iterations=%d", win.index, t, win.t_end, eps, win.iterations)
        if outputs is None:
            times.append(win.t_end)
            fields.append(Field(initial.grid, win.values[-1]))
        else:
            while pending < len(outputs) and (outputs[pending] <= win.t_end or last):
                times.append(outputs[pending])
                fields.append(Field(initial.grid, win.values_at(outputs[pending])))
                pending += 1
        current = Field(initial.grid, win.values[-1])
        t = win.t_end
    trace = [extrema(f, s) for f, s in zip(fields, times)]
    direction = "forward" if sign > 0 else "backward"
    return Trajectory(times, fields, trace, windows, direction)


def solve(initial: Field, c: Conductivity, stencil: Stencil, t_final: float,
          opts: SolverOptions | None = None) -> Trajectory:
    """Chain contraction windows from ``initial`` up to ``t_final``."""
    return _integrate(initial, c, stencil, t_final, opts, 1.0)


def solve_backward(initial: Field, c: Conductivity, stencil: Stencil, t_back: float,
                   opts: SolverOptions | None = None) -> Trajectory:
    """Solve backward in time for ``t_back``: forward solve with ``k -> -k``.

    ``times`` of the returned trajectory count backward, i.e. entry ``t``
    approximates ``u(-t)``.  Window lengths are unchanged by the sign flip.
    """
    return _integrate(initial, c, stencil, t_back, opts, -1.0)


def rk4_reference(initial: Field, c: Conductivity, stencil: Stencil, t_final: float, dt: float,
                  output_times: Sequence[float] | None = None, threads: int = 1) -> Trajectory:
    """Classical four-stage Runge-Kutta on the same semi-discrete system.

    Steps are shortened uniformly between consecutive output times so every
    output time is hit exactly.
    """
    if not dt > 0:
        raise InvalidParameter("dt must be positive")
    if not t_final > 0:
        raise InvalidParameter("t_final must be positive")
    op = NonlocalRHS(initial.grid, c, stencil, threads=threads)
    n = initial.grid.n_interior
    marks = _output_grid(output_times, t_final) or [float(t_final)]

    u = initial.values.copy()
    times, fields = [0.0], [initial]
    t = 0.0
    for target in marks:
        steps = max(1, math.ceil((target - t) / dt - 1e-9))
        h = (target - t) / steps
        for _ in range(steps):
            k1 = op(u)
            k2 = op(_shift(u, n, 0.5 * h, k1))
            k3 = op(_shift(u, n, 0.5 * h, k2))
            k4 = op(_shift(u, n, h, k3))
            u = _shift(u, n, h / 6.0, k1 + 2.0 * k2 + 2.0 * k3 + k4)
            if not np.all(np.isfinite(u)):
                raise NonFiniteState(f"NonFiniteState: RK4 state overflowed near t={t:g}")
        t = target
        times.append(t)
        fields.append(Field(initial.grid, u))
    trace = [extrema(f, s) for f, s in zip(fields, times)]
    return Trajectory(times, fields, trace, [], "forward")


def _shift(u, n, h, k):
    out = u.copy()
    out[:n] = u[:n] + h * k
    return out


def with_options(opts: SolverOptions | None, **changes) -> SolverOptions:
    return replace(opts or SolverOptions(), **changes)
