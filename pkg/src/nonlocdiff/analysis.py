"""Trivial solutions, residuals and qualitative checks on trajectories.

A field is *trivial* for a conductivity when every term of the nonlocal
integrand vanishes, ``k(u(x), u(y)) [u(y) - u(x)] J(x - y) = 0`` for interior
``x`` and all ``y``.  Such fields are stationary.  The checks in this module
scan solver output for the qualitative behaviour the continuous problem is
known to have: stationarity of trivial data, nonincreasing sup norm,
positivity, interior-extremum triviality, continuity of extrema traces and
Dirichlet invariance.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from functools import lru_cache
from typing import Callable

import numpy as np

from .conductivity import Conductivity, k_eval, signed_sqrt
from .errors import InvalidSpec, PreconditionFailed, QuadratureUnderResolved
from .grid import DomainGrid, Field
from .kernel import Stencil
from .profiles import Pattern, sign_pattern
from .solver import SolverOptions, Trajectory, solve


class TrivialKind(str, Enum):
    CONSTANT_U = "constant"
    PME_SIGN = "pme_sign"
    INVOLUTION = "involution"
    SINSQ_PAIR = "sinsq_pair"
    INTEGER_FIELD = "integer_field"


@dataclass(frozen=True)
class TrivialSpec:
    """Recipe for a trivial field.

    ``pme_sign`` gives ``U alpha`` with ``alpha`` in {-1, 1};
    ``involution`` gives ``U`` or ``-a/U``; ``sinsq_pair`` gives ``U`` or
    ``-U + sgn(n) sqrt|n|``; ``integer_field`` gives integers in
    ``[low, high]`` (``high`` where the pattern is +1, ``low`` where it is -1,
    or uniform integers for the seeded random pattern).
    """

    kind: TrivialKind
    U: float = 1.0
    a: float = 1.0
    n: int = 1
    low: int = -3
    high: int = 3
    pattern: Pattern = Pattern.SGN_X
    seed: int = 0
    origin: float | None = None

    def __post_init__(self):
        try:
            object.__setattr__(self, "kind", TrivialKind(self.kind))
            object.__setattr__(self, "pattern", Pattern(self.pattern))
        except ValueError as exc:
            raise InvalidSpec(f"InvalidSpec: {exc}") from None
        if not math.isfinite(self.U):
            raise InvalidSpec("InvalidSpec: U must be finite")
        if self.kind is TrivialKind.INVOLUTION and (self.U == 0 or self.a == 0):
            raise InvalidSpec("InvalidSpec: involution field needs U != 0 and a != 0")
        if self.kind is TrivialKind.SINSQ_PAIR and int(self.n) != self.n:
            raise InvalidSpec("InvalidSpec: sinsq_pair needs an integer n")
        if self.kind is TrivialKind.INTEGER_FIELD:
            if int(self.low) != self.low or int(self.high) != self.high or self.low > self.high:
                raise InvalidSpec("InvalidSpec: integer_field needs integers low <= high")

    @classmethod
    def from_config(cls, cfg: dict) -> TrivialSpec:
        cfg = dict(cfg)
        try:
            return cls(**cfg)
        except TypeError as exc:
            raise InvalidSpec(f"InvalidSpec: {exc}") from None

    def admissible_values(self) -> set[float]:
        k = self.kind
        if k is TrivialKind.CONSTANT_U:
            return {float(self.U)}
        if k is TrivialKind.PME_SIGN:
            return {float(self.U), -float(self.U)}
        if k is TrivialKind.INVOLUTION:
            return {float(self.U), -self.a / self.U}
        if k is TrivialKind.SINSQ_PAIR:
            return {float(self.U), float(-self.U + signed_sqrt(self.n))}
        return {float(i) for i in range(int(self.low), int(self.high) + 1)}


def make_trivial(spec: TrivialSpec, grid: DomainGrid) -> Field:
    """Sample a trivial field at every node, collar included."""
    alpha = sign_pattern(spec.pattern, grid, seed=spec.seed, origin=spec.origin)
    plus = alpha > 0
    k = spec.kind
    if k is TrivialKind.CONSTANT_U:
        values = np.full(grid.n_nodes, float(spec.U))
    elif k is TrivialKind.PME_SIGN:
        values = spec.U * alpha
    elif k is TrivialKind.INVOLUTION:
        values = np.where(plus, spec.U, -spec.a / spec.U)
    elif k is TrivialKind.SINSQ_PAIR:
        values = np.where(plus, spec.U, -spec.U + float(signed_sqrt(spec.n)))
    elif spec.pattern is Pattern.SEEDED_RANDOM:
        rng = np.random.default_rng(spec.seed)
        values = rng.integers(int(spec.low), int(spec.high) + 1, grid.n_nodes).astype(float)
    else:
        values = np.where(plus, float(spec.high), float(spec.low))
    return Field(grid, values)


def _terms(values, c, table, weights, ux):
    uy = values[table]
    return k_eval(c, ux, uy) * (uy - ux) * weights


def trivial_residual(field: Field, c: Conductivity, stencil: Stencil) -> float:
    """Largest single integrand term ``|k(u(x), u(y)) (u(y) - u(x)) w|`` over interior x."""
    table, weights = field.grid.neighbor_table(stencil)
    ux = field.interior_values[:, None]
    return float(np.abs(_terms(field.values, c, table, weights, ux)).max(initial=0.0))


def semitrivial_residual(field: Field, c: Conductivity, stencil: Stencil, U: float, chi: int) -> float:
    """Largest term ``|k(U, u(y)) (u(y) - U) w|`` over the horizon of node ``chi``.

    ``chi`` may be a collar node; displacements leaving the represented
    region carry no data and are skipped.
    """
    if not 0 <= chi < field.grid.n_nodes:
        raise IndexError(f"node {chi} is not an active node")
    table, weights = field.grid.neighbor_table(stencil, nodes=[chi], skip_zero=False)
    keep = table[0] >= 0
    terms = _terms(field.values, c, table[0][keep], weights[keep], float(U))
    return float(np.abs(terms).max(initial=0.0))


@dataclass
class VerificationReport:
    check_name: str
    passed: bool
    max_violation: float
    tolerance: float
    vacuous: bool = False
    details: dict = field(default_factory=dict)

    def to_record(self) -> dict:
        return {
            "name": self.check_name,
            "passed": bool(self.passed),
            "max_violation": float(self.max_violation),
            "tolerance": float(self.tolerance),
            "vacuous": bool(self.vacuous),
        }


def _report(name, violation, tol, vacuous=False, **details):
    return VerificationReport(name, bool(violation <= tol), float(violation), float(tol), vacuous, details)


def _epsilon(traj: Trajectory) -> float:
    return 2.0 * traj.extrema_trace[0].u_inf


def stationarity_drift(traj: Trajectory) -> float:
    u0 = traj.initial.values
    return max(float(np.abs(f.values - u0).max()) for f in traj.fields)


def check_stationarity(spec: TrivialSpec, grid: DomainGrid, c: Conductivity, stencil: Stencil,
                       t_final: float = 1.0, opts: SolverOptions | None = None) -> VerificationReport:
    """Solve from a trivial field and measure how far it moves."""
    start = make_trivial(spec, grid)
    residual = trivial_residual(start, c, stencil)
    if residual > 0:
        raise PreconditionFailed(
            f"PreconditionFailed: {spec.kind.value} field is not trivial for {c} "
            f"(residual {residual:.3e})"
        )
    traj = solve(start, c, stencil, t_final, opts)
    tol = 1e-13 * (1 + abs(spec.U))
    return _report("stationarity", stationarity_drift(traj), tol, residual=residual,
                   n_times=len(traj), windows=len(traj.windows))


def check_linf_decay(traj: Trajectory, decay_tol: float | None = None) -> VerificationReport:
    if not len(traj):
        raise ValueError("empty trajectory")
    tol = 1e-9 * _epsilon(traj) if decay_tol is None else decay_tol
    u_inf = np.array([r.u_inf for r in traj.extrema_trace])
    rises = np.maximum(np.diff(u_inf), 0.0)
    return _report("linf_decay", float(rises.max(initial=0.0)), tol)


def check_positivity(traj: Trajectory, c: Conductivity | None = None,
                     pos_tol: float | None = None) -> VerificationReport:
    if np.any(traj.initial.values < 0):
        raise PreconditionFailed("PreconditionFailed: initial data or psi takes negative values")
    if c is not None and not c.satisfies_k3:
        raise PreconditionFailed(f"PreconditionFailed: {c} does not satisfy (k3)")
    tol = 1e-10 * _epsilon(traj) if pos_tol is None else pos_tol
    worst = max(float(np.maximum(-f.values, 0.0).max()) for f in traj.fields)
    return _report("positivity", worst, tol)


def check_smp(traj: Trajectory, c: Conductivity, stencil: Stencil,
              smp_tol: float | None = None) -> VerificationReport:
    """Interior-extremum scan.

    A *hit* is an output time ``t0 > 0`` at which the interior supremum reaches
    the running maximum of the global supremum over ``[0, t0]`` (or the mirror
    condition for infima), up to ``smp_tol``.  Each hit must be a trivial field.
    With no hits the pass is vacuous.
    """
    if not c.satisfies_k3:
        raise PreconditionFailed(f"PreconditionFailed: {c} does not satisfy (k3)")
    tol = 1e-8 * _epsilon(traj) if smp_tol is None else smp_tol
    trace = traj.extrema_trace
    hits = []
    run_max, run_min = trace[0].u_plus, trace[0].u_minus
    for i in range(1, len(trace)):
        r = trace[i]
        run_max = max(run_max, r.u_plus)
        run_min = min(run_min, r.u_minus)
        sides = []
        if r.U_plus >= run_max - tol:
            sides.append("sup")
        if r.U_minus <= run_min + tol:
            sides.append("inf")
        if sides:
            residual = trivial_residual(traj.fields[i], c, stencil)
            hits.append({"t": r.t, "sides": sides, "residual": residual})
    worst = max((h["residual"] for h in hits), default=0.0)
    return _report("smp", worst, tol, vacuous=not hits, hits=hits)


def _sup_flux(traj: Trajectory, c: Conductivity, stencil: Stencil) -> float:
    table, weights = traj.initial.grid.neighbor_table(stencil)
    n = traj.initial.grid.n_interior
    sup = 0.0
    for f in traj.fields:
        ux = f.values[:n, None]
        uy = f.values[table]
        sup = max(sup, float(np.abs(k_eval(c, ux, uy) * (uy - ux)).max(initial=0.0)))
    return sup


def rate_bound(traj: Trajectory, c: Conductivity, stencil: Stencil) -> float:
    """``|J|_1 * sup |k (u(y) - u(x))|`` over the stored fields (quadrature norm)."""
    return stencil.weight_sum * _sup_flux(traj, c, stencil)


def check_trace_continuity(traj: Trajectory, c: Conductivity, stencil: Stencil,
                           slack: float = 0.05) -> VerificationReport:
    """Jump rates of the interior extrema traces against the a priori rate bound."""
    if len(traj) < 3:
        raise ValueError("trace continuity needs at least three output times")
    t = np.array(traj.times)
    Up = np.array([r.U_plus for r in traj.extrema_trace])
    Um = np.array([r.U_minus for r in traj.extrema_trace])
    dt = np.diff(t)
    jumps = np.maximum(np.abs(np.diff(Up)), np.abs(np.diff(Um)))
    bound = rate_bound(traj, c, stencil)
    rates = jumps / dt
    return _report("trace_continuity", float(rates.max()), bound * (1 + slack),
                   bound=bound, max_jump=float(jumps.max()))


def ut_increments(traj: Trajectory, c: Conductivity, stencil: Stencil, sign: float = 1.0):
    """Time steps and sup-norm changes of the semi-discrete rate between outputs."""
    from .solver import NonlocalRHS

    op = NonlocalRHS(traj.initial.grid, c, stencil, sign=sign)
    rates = op(traj.values())
    return np.diff(np.array(traj.times)), np.abs(np.diff(rates, axis=0)).max(axis=1)


def check_time_regularity(traj: Trajectory, c: Conductivity, stencil: Stencil,
                          slack: float = 0.05) -> VerificationReport:
    """Finite-difference time derivatives against the a priori rate bound."""
    vals = traj.values()[:, : traj.initial.grid.n_interior]
    dt = np.diff(np.array(traj.times))
    fd = (np.abs(np.diff(vals, axis=0)).max(axis=1) / dt).max(initial=0.0)
    bound = rate_bound(traj, c, stencil)
    return _report("time_regularity", float(fd), bound * (1 + slack), bound=bound)


def check_dirichlet(traj: Trajectory, psi=None) -> VerificationReport:
    """Collar values of every stored field must equal ``psi`` bit for bit."""
    ref = traj.initial.collar_values if psi is None else np.asarray(psi, dtype=float)
    worst, identical = 0.0, True
    for f in traj.fields:
        same = np.array_equal(f.collar_values, ref)
        identical &= same
        if not same:
            worst = max(worst, float(np.abs(f.collar_values - ref).max()))
    rep = _report("dirichlet_invariance", worst, 0.0)
    rep.passed = bool(identical)
    return rep


def check_contraction(traj: Trajectory, ratio_tolerance: float = 0.05) -> VerificationReport:
    ratios = [r for w in traj.windows for r in w.contraction_ratios]
    worst = max(ratios, default=0.0)
    return _report("contraction", worst, 0.5 + ratio_tolerance, n_ratios=len(ratios))


def check_ball_confinement(traj: Trajectory) -> VerificationReport:
    """Every Picard iterate stays in the ball of radius eps = 2 |u(t_start)|."""
    excess = 0.0
    for w in traj.windows:
        excess = max(excess, max(w.iterate_norms) - w.epsilon)
    return _report("ball_confinement", excess, 0.0)


# weak porous-medium residual -------------------------------------------------


def _g(s):
    return -1.0 / (1.0 - s * s)


def _dg(s):
    return -2.0 * s / (1.0 - s * s) ** 2


def _d2g(s):
    q = 1.0 - s * s
    return -2.0 / q**2 - 8.0 * s * s / q**3


def _on_support(fn):
    def wrapped(s):
        s = np.asarray(s, dtype=float)
        out = np.zeros_like(s)
        inside = np.abs(s) < 1.0
        out[inside] = fn(s[inside])
        return out
    return wrapped


@dataclass(frozen=True)
class TestFunction:
    """Separable test function ``theta(t) phi0(x)`` with derivatives."""

    theta: Callable
    dtheta: Callable
    phi0: Callable
    d2phi0: Callable
    dphi0_at_0: float
    theta_integral: float
    t_interval: tuple[float, float] = (0.0, 1.0)
    x_interval: tuple[float, float] = (-1.0, 1.0)

    __test__ = False  # not a pytest class


@lru_cache(maxsize=None)
def _bump_integral() -> float:
    from scipy.integrate import quad

    val, _ = quad(lambda s: math.exp(_g(s)), -1.0, 1.0, epsabs=0.0, epsrel=1e-12, limit=200)
    return val


def canonical_test_function() -> TestFunction:
    """``theta`` a unit-mass smooth bump on (0, 1); ``phi0(x) = x exp(-1/(1 - x^2))``.

    ``phi0'(0) = 1/e``.
    """
    c = 2.0 / _bump_integral()  # theta(t) = c exp(g(2t - 1)) has unit mass

    theta = _on_support(lambda s: c * np.exp(_g(s)))
    dtheta = _on_support(lambda s: 2.0 * c * np.exp(_g(s)) * _dg(s))
    phi0 = _on_support(lambda x: x * np.exp(_g(x)))
    d2phi0 = _on_support(lambda x: np.exp(_g(x)) * (2.0 * _dg(x) + x * _dg(x) ** 2 + x * _d2g(x)))
    return TestFunction(
        theta=lambda t: theta(2.0 * np.asarray(t) - 1.0),
        dtheta=lambda t: dtheta(2.0 * np.asarray(t) - 1.0),
        phi0=phi0,
        d2phi0=d2phi0,
        dphi0_at_0=math.exp(-1.0),
        theta_integral=1.0,
    )


def weak_pme_target(U: float, m: float, testfn: TestFunction | None = None) -> float:
    """Closed-form weak-form value for ``u = U sgn(x)``: ``-2 U|U|^(m-1) (int theta) phi0'(0)``."""
    tf = testfn or canonical_test_function()
    return -2.0 * U * abs(U) ** (m - 1) * tf.theta_integral * tf.dphi0_at_0


def _midpoints(a, b, n):
    h = (b - a) / n
    return a + h * (np.arange(n) + 0.5), h


def _weak_value(U, m, tf: TestFunction, n: int):
    t, ht = _midpoints(*tf.t_interval, n)
    x, hx = _midpoints(*tf.x_interval, n)
    u = U * np.where(x >= 0, 1.0, -1.0)
    flux = np.abs(u) ** (m - 1) * u
    # the 2D midpoint sum of a separable integrand factors into 1D sums
    time_term = (tf.dtheta(t).sum() * ht) * ((u * tf.phi0(x)).sum() * hx)
    space_term = (tf.theta(t).sum() * ht) * ((flux * tf.d2phi0(x)).sum() * hx)
    scale = (np.abs(tf.theta(t)).sum() * ht) * (np.abs(flux * tf.d2phi0(x)).sum() * hx)
    return float(time_term + space_term), float(scale)


def weak_pme_residual(U: float, m: float, testfn: TestFunction | None = None,
                      quad_n: int = 1024) -> float:
    """Midpoint-rule value of ``int int [u phi_t + |u|^(m-1) u phi_xx] dx dt`` for ``u = U sgn(x)``.

    Raises QuadratureUnderResolved when doubling ``quad_n`` moves the value by
    more than 1%.
    """
    if quad_n < 1:
        raise ValueError("quad_n must be positive")
    tf = testfn or canonical_test_function()
    coarse, _ = _weak_value(U, m, tf, quad_n)
    fine, scale = _weak_value(U, m, tf, 2 * quad_n)
    shift = abs(fine - coarse)
    ref = max(abs(fine), abs(weak_pme_target(U, m, tf)))
    if shift > 0.01 * ref and shift > 1e-9 * scale:
        raise QuadratureUnderResolved(
            f"QuadratureUnderResolved: quad_n={quad_n} -> {coarse:.6g}, "
            f"2*quad_n -> {fine:.6g}"
        )
    return coarse
