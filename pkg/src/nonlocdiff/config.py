"""Run configuration: a JSON document, nested or with flat dotted keys.

Everything is validated up front, before any compute::

    {
      "grid": {"extent": [1.0], "h": 0.015625},
      "kernel": {"shape": "const_ball", "dimension": 1, "l1_norm": 1.0},
      "conductivity": {"family": "porous_medium", "parameters": {"m": 2}},
      "initial": {"profile": "bump"},
      "psi": 0.0,
      "t_final": 0.25,
      "output_times": {"every": 0.0625},
      "snapshot_times": [0.25],
      "solver": {"substeps": 16},
      "verify": {"checks": "auto", "matrix": "default"},
      "seed": 1
    }

``"grid.h": 0.015625`` is the same as ``"grid": {"h": 0.015625}``.
"""
from __future__ import annotations

import copy
import json
import math
from dataclasses import dataclass, field, fields
from pathlib import Path

import numpy as np

from .analysis import TrivialSpec, make_trivial
from .conductivity import Conductivity
from .errors import ConfigError, InvalidParameter
from .grid import DomainGrid, Field
from .kernel import Kernel, Stencil
from .profiles import PROFILES, evaluate_profile
from .solver import SolverOptions

CHECKS = (
    "stationarity",
    "linf_decay",
    "positivity",
    "smp",
    "trace_continuity",
    "time_regularity",
    "dirichlet_invariance",
    "contraction",
    "ball_confinement",
)
FAULTS = ("mutate_collar",)

_TOP_KEYS = {
    "grid", "kernel", "conductivity", "initial", "psi", "t_final", "output_times",
    "snapshot_times", "solver", "verify", "trivial", "seed", "output_dir", "name",
}


def unflatten(doc: dict) -> dict:
    """Expand dotted keys into nested mappings."""
    out: dict = {}
    for key, value in doc.items():
        if isinstance(value, dict):
            value = unflatten(value)
        parts = key.split(".")
        node = out
        for p in parts[:-1]:
            node = node.setdefault(p, {})
            if not isinstance(node, dict):
                raise ConfigError(f"key {key!r} conflicts with a scalar entry")
        if isinstance(value, dict) and isinstance(node.get(parts[-1]), dict):
            node[parts[-1]] = merge(node[parts[-1]], value)
        else:
            node[parts[-1]] = value
    return out


def merge(base: dict, override: dict) -> dict:
    """Recursive dict merge; ``override`` wins."""
    out = copy.deepcopy(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(out.get(key), dict):
            out[key] = merge(out[key], value)
        else:
            out[key] = copy.deepcopy(value)
    return out


@dataclass
class VerifyOptions:
    checks: tuple[str, ...] | None = None  # None: every check whose preconditions hold
    vacuous_pass: bool = True
    inject_fault: str | None = None
    matrix: list[dict] = field(default_factory=list)
    decay_tol: float | None = None
    pos_tol: float | None = None
    smp_tol: float | None = None
    slack: float = 0.05

    @classmethod
    def from_config(cls, cfg: dict | None) -> VerifyOptions:
        cfg = dict(cfg or {})
        unknown = set(cfg) - {f.name for f in fields(cls)}
        if unknown:
            raise ConfigError(f"unknown verify options {sorted(unknown)}")
        checks = cfg.pop("checks", "auto")
        if checks == "auto":
            checks = None
        elif isinstance(checks, list) and all(c in CHECKS for c in checks):
            checks = tuple(checks)
        else:
            raise ConfigError(f"verify.checks must be 'auto' or a list drawn from {list(CHECKS)}")
        fault = cfg.get("inject_fault")
        if fault is not None and fault not in FAULTS:
            raise ConfigError(f"unknown fault {fault!r}; known: {list(FAULTS)}")
        matrix = cfg.pop("matrix", [])
        if matrix == "default":
            matrix = default_matrix()
        if not isinstance(matrix, list) or not all(isinstance(m, dict) for m in matrix):
            raise ConfigError("verify.matrix must be 'default' or a list of run overrides")
        for key in ("decay_tol", "pos_tol", "smp_tol"):
            if cfg.get(key) is not None and not cfg[key] > 0:
                raise ConfigError(f"verify.{key} must be positive")
        return cls(checks=checks, matrix=[unflatten(m) for m in matrix], **cfg)


def default_matrix() -> list[dict]:
    """Every builtin conductivity against smooth, discontinuous and random data, plus trivial runs."""
    conductivities = {
        "linear": {"family": "linear"},
        "pm2": {"family": "porous_medium", "m": 2},
        "pm3": {"family": "porous_medium", "m": 3},
        "pl3": {"family": "p_laplacian", "p": 3},
        "pmalt2": {"family": "porous_medium_alt", "m": 2},
        "shift": {"family": "product_shift", "a": 1, "m": 1},
        "sinsq": {"family": "sin_squared"},
    }
    profiles = {
        "constant": 1.0,
        "bump": {"profile": "bump"},
        "random01": {"profile": "random", "seed": 1},
        "random11": {"profile": "random", "seed": 1, "low": -1.0, "high": 1.0},
        "sgnsin": {"profile": "sgn_sin_inv", "amplitude": 0.7},
    }
    runs = [
        {"name": f"{cn}/{pn}", "conductivity": c, "initial": p, "psi": 0.0}
        for cn, c in conductivities.items()
        for pn, p in profiles.items()
    ]
    trivial = [
        ("pm2/pme_sign_sgnsin", conductivities["pm2"], {"kind": "pme_sign", "pattern": "sgn_sin_inv"}),
        ("pm3/pme_sign_checker", conductivities["pm3"], {"kind": "pme_sign", "pattern": "checkerboard"}),
        ("pm2/pme_sign_random", conductivities["pm2"], {"kind": "pme_sign", "pattern": "seeded_random", "seed": 3}),
        ("shift/involution", conductivities["shift"], {"kind": "involution", "U": 2.0, "a": 1.0}),
        ("sinsq/integer", conductivities["sinsq"], {"kind": "integer_field", "pattern": "seeded_random", "low": -1, "high": 1}),
    ]
    runs += [{"name": n, "conductivity": c, "trivial": t} for n, c, t in trivial]
    return runs


@dataclass
class RunConfig:
    name: str
    grid: DomainGrid
    kernel: Kernel
    stencil: Stencil
    conductivity: Conductivity
    initial: object
    psi: object
    t_final: float
    output_times: list[float] | None
    snapshot_times: list[float]
    solver: SolverOptions
    verify: VerifyOptions
    trivial: TrivialSpec | None
    seed: int | None
    output_dir: str | None
    document: dict

    def initial_field(self) -> Field:
        """``initial`` on Omega and ``psi`` on the collar, or the trivial field."""
        if self.trivial is not None:
            return make_trivial(self.trivial, self.grid)
        n = self.grid.n_interior
        u0 = evaluate_profile(self.initial, self.grid)
        psi = evaluate_profile(self.psi, self.grid)
        return Field(self.grid, np.concatenate([u0[:n], psi[n:]]))

    def effective(self) -> dict:
        """The validated configuration as a plain document (defaults filled in)."""
        s = self.solver
        out = {
            "name": self.name,
            "grid": {"extent": list(self.grid.extent), "h": self.grid.h},
            "kernel": {
                "shape": self.kernel.shape.value,
                "dimension": self.kernel.dimension,
                "l1_norm": self.kernel.l1_norm,
            },
            "conductivity": self.conductivity.to_config(),
            "initial": self.initial,
            "psi": self.psi,
            "t_final": self.t_final,
            "output_times": self.output_times,
            "snapshot_times": self.snapshot_times,
            "solver": {
                "substeps": s.substeps, "tol": s.tol, "max_iter": s.max_iter,
                "window_cap": s.window_cap, "ratio_tolerance": s.ratio_tolerance,
            },
            "seed": self.seed,
        }
        if self.trivial is not None:
            t = self.trivial
            out["trivial"] = {k: getattr(t, k) for k in ("kind", "U", "a", "n", "low", "high", "pattern", "seed", "origin")}
            out["trivial"]["kind"] = t.kind.value
            out["trivial"]["pattern"] = t.pattern.value
        return out


def _number(doc, key, default=None, positive=False):
    value = doc.get(key, default)
    if value is None:
        raise ConfigError(f"missing required key {key!r}")
    if isinstance(value, bool) or not isinstance(value, (int, float)) or not math.isfinite(value):
        raise ConfigError(f"{key} must be a finite number, got {value!r}")
    if positive and not value > 0:
        raise ConfigError(f"{key} must be positive, got {value!r}")
    return float(value)


def _seeded(spec, seed):
    """Apply the run-level seed to random profiles and patterns."""
    if seed is None or not isinstance(spec, dict):
        return spec
    if spec.get("profile") == "random" or spec.get("pattern") == "seeded_random":
        return {**spec, "seed": int(seed)}
    return spec


def _check_profile(spec, key):
    if isinstance(spec, (int, float)) and not isinstance(spec, bool):
        if not math.isfinite(spec):
            raise ConfigError(f"{key} must be finite")
        return
    if not isinstance(spec, dict) or spec.get("profile") not in PROFILES:
        raise ConfigError(f"{key}: expected a number or a named profile from {sorted(PROFILES)}")


def _times(spec, t_final, key):
    if spec is None:
        return None
    if isinstance(spec, dict):
        if set(spec) != {"every"}:
            raise ConfigError(f"{key} must be a list or {{'every': dt}}")
        dt = _number(spec, "every", positive=True)
        n = max(1, round(t_final / dt))
        if abs(n * dt - t_final) > 1e-9 * t_final:
            raise ConfigError(f"{key}.every={dt} does not divide t_final={t_final}")
        return [t_final * i / n for i in range(1, n + 1)]
    if not isinstance(spec, list):
        raise ConfigError(f"{key} must be a list or {{'every': dt}}")
    out = []
    for t in spec:
        if isinstance(t, bool) or not isinstance(t, (int, float)) or not 0 < t <= t_final:
            raise ConfigError(f"{key}: every time must lie in (0, t_final], got {t!r}")
        out.append(float(t))
    return sorted(set(out))


def build_config(doc: dict, seed: int | None = None, output_dir: str | None = None) -> RunConfig:
    """Validate a config document; ``seed`` overrides the document's seed."""
    if not isinstance(doc, dict):
        raise ConfigError("config must be a JSON object")
    doc = unflatten(doc)
    unknown = set(doc) - _TOP_KEYS
    if unknown:
        raise ConfigError(f"unknown config keys {sorted(unknown)}")
    if seed is not None:
        doc["seed"] = seed
    seed = doc.get("seed")
    if seed is not None and (isinstance(seed, bool) or not isinstance(seed, int)):
        raise ConfigError(f"seed must be an integer, got {seed!r}")

    g = doc.get("grid") or {}
    grid = DomainGrid(tuple(np.atleast_1d(g.get("extent", [1.0]))), _number(g, "h", positive=True))

    k = dict(doc.get("kernel") or {})
    unknown = set(k) - {"shape", "dimension", "l1_norm"}
    if unknown:
        raise ConfigError(f"unknown kernel keys {sorted(unknown)}")
    try:
        kernel = Kernel.normalized(
            k.get("shape", "const_ball"), int(k.get("dimension", grid.dimension)),
            _number(k, "l1_norm", 1.0, positive=True),
        )
    except ValueError as exc:
        raise ConfigError(f"kernel: {exc}") from None
    if kernel.dimension != grid.dimension:
        raise ConfigError(f"kernel dimension {kernel.dimension} != grid dimension {grid.dimension}")
    stencil = kernel.stencil(grid.h)

    if "conductivity" not in doc:
        raise ConfigError("missing required key 'conductivity'")
    conductivity = Conductivity.from_config(doc["conductivity"])

    trivial = None
    if doc.get("trivial") is not None:
        tcfg = _seeded(dict(doc["trivial"]), seed)
        trivial = TrivialSpec.from_config(tcfg)
    initial = _seeded(doc.get("initial", 0.0), seed)
    psi = _seeded(doc.get("psi", 0.0), seed)
    _check_profile(initial, "initial")
    _check_profile(psi, "psi")

    t_final = _number(doc, "t_final", 1.0, positive=True)
    output_times = _times(doc.get("output_times"), t_final, "output_times")
    snapshot_times = _times(doc.get("snapshot_times"), t_final, "snapshot_times") or [t_final]
    if output_times is not None or snapshot_times != [t_final]:
        output_times = sorted(set(output_times or []) | set(snapshot_times))

    scfg = dict(doc.get("solver") or {})
    try:
        solver = SolverOptions(**scfg, output_times=output_times)
    except TypeError as exc:
        raise ConfigError(f"solver: {exc}") from None
    except InvalidParameter as exc:
        raise ConfigError(f"solver: {exc}") from None

    verify = VerifyOptions.from_config(doc.get("verify"))
    config = RunConfig(
        name=str(doc.get("name", "run")),
        grid=grid,
        kernel=kernel,
        stencil=stencil,
        conductivity=conductivity,
        initial=initial,
        psi=psi,
        t_final=t_final,
        output_times=output_times,
        snapshot_times=snapshot_times,
        solver=solver,
        verify=verify,
        trivial=trivial,
        seed=seed,
        output_dir=output_dir or doc.get("output_dir"),
        document=doc,
    )
    # sample the profiles now so bad parameters fail before any compute
    config.initial_field()
    return config


def matrix_configs(config: RunConfig) -> list[RunConfig]:
    """One config per verify-matrix entry, each overriding the base document."""
    if not config.verify.matrix:
        return [config]
    base = {k: v for k, v in config.document.items() if k != "verify"}
    out = []
    for i, override in enumerate(config.verify.matrix):
        doc = copy.deepcopy(base)
        for key, value in override.items():
            # numeric sections merge; conductivity and data replace wholesale
            if key in ("grid", "kernel", "solver") and isinstance(doc.get(key), dict):
                doc[key] = merge(doc[key], value)
            else:
                doc[key] = copy.deepcopy(value)
        if "trivial" not in override:
            doc.pop("trivial", None)
        doc["name"] = override.get("name", f"run{i}")
        out.append(build_config(doc, output_dir=config.output_dir))
    return out


def load_config(path, seed: int | None = None, output_dir: str | None = None) -> RunConfig:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON: {exc}") from None
    return build_config(doc, seed=seed, output_dir=output_dir)
