"""Cell-centred grids on a box Omega plus its one-horizon collar.

Nodes live on a padded lattice covering ``[-1, L_i + 1]`` per axis.  A node is
*interior* if its centre lies in Omega and belongs to the *collar* if it lies
outside Omega at distance < 1.  Corner nodes of the padded 2D lattice farther
than one horizon are not represented at all.

Field values are stored as one flat vector over the active nodes: interior
nodes first (C order), then collar nodes (C order).  CSV ``node_index`` refers
to positions in that vector.
"""
from __future__ import annotations

import csv
import warnings
from dataclasses import astuple, dataclass, fields
from functools import cached_property
from pathlib import Path

import numpy as np

from .errors import BadSpacing, NonFiniteValue
from .kernel import Stencil, horizon_cells

INTERIOR, COLLAR = "interior", "collar"


@dataclass(frozen=True, eq=False)
class DomainGrid:
    extent: tuple[float, ...]
    h: float

    def __post_init__(self):
        extent = tuple(float(x) for x in np.atleast_1d(self.extent))
        if len(extent) not in (1, 2):
            raise BadSpacing(f"only 1D and 2D boxes are supported, got extent {extent}")
        object.__setattr__(self, "extent", extent)
        M = horizon_cells(self.h)
        counts = []
        for L in extent:
            n = round(L * M)
            if n < 1 or abs(n - L * M) > 1e-9 * max(1.0, L * M):
                raise BadSpacing(f"BadSpacing: extent {L} is not a multiple of h={self.h}")
            counts.append(n)
        object.__setattr__(self, "M", M)
        object.__setattr__(self, "counts", tuple(counts))
        object.__setattr__(self, "h", 1.0 / M)

        shape = tuple(n + 2 * M for n in counts)
        # twice the distance to Omega in units of h, per axis (odd integers outside)
        q2 = np.zeros(shape, dtype=np.int64)
        inside = np.ones(shape, dtype=bool)
        for axis, n in enumerate(counts):
            k = np.arange(n + 2 * M)
            q = np.where(k < M, 2 * (M - k) - 1, np.where(k >= M + n, 2 * (k - M - n) + 1, 0))
            bshape = [1] * len(shape)
            bshape[axis] = -1
            q2 = q2 + (q * q).reshape(bshape)
            inside = inside & (q == 0).reshape(bshape)
        collar = ~inside & (q2 < (2 * M) ** 2)
        interior_idx = np.flatnonzero(inside.ravel())
        collar_idx = np.flatnonzero(collar.ravel())
        active = np.full(int(np.prod(shape)), -1, dtype=np.int64)
        active[interior_idx] = np.arange(len(interior_idx))
        active[collar_idx] = len(interior_idx) + np.arange(len(collar_idx))
        object.__setattr__(self, "shape", shape)
        object.__setattr__(self, "_lattice", np.concatenate([interior_idx, collar_idx]))
        object.__setattr__(self, "_active", active.reshape(shape))

    @property
    def dimension(self) -> int:
        return len(self.extent)

    @property
    def n_interior(self) -> int:
        return int(np.prod(self.counts))

    @property
    def n_nodes(self) -> int:
        return len(self._lattice)

    @property
    def n_collar(self) -> int:
        return self.n_nodes - self.n_interior

    @cached_property
    def lattice_index(self) -> np.ndarray:
        """Multi-index on the padded lattice of every active node, shape (n_nodes, N)."""
        return np.column_stack(np.unravel_index(self._lattice, self.shape))

    @cached_property
    def coords(self) -> np.ndarray:
        """Cell-centre coordinates of every active node, shape (n_nodes, N)."""
        return (self.lattice_index - self.M + 0.5) * self.h

    @property
    def interior_coords(self) -> np.ndarray:
        return self.coords[: self.n_interior]

    @property
    def collar_coords(self) -> np.ndarray:
        return self.coords[self.n_interior :]

    def region(self, i: int) -> str:
        return INTERIOR if i < self.n_interior else COLLAR

    def node_at(self, multi_index) -> int:
        """Active-node position of a padded-lattice multi-index, or -1."""
        idx = tuple(int(i) for i in multi_index)
        if any(i < 0 or i >= s for i, s in zip(idx, self.shape)):
            return -1
        return int(self._active[idx])

    def neighbor_table(self, stencil: Stencil, nodes=None, skip_zero=True):
        """Active-node index of ``x + d h`` for every node ``x`` and stencil offset ``d``.

        Returns ``(table, weights)``; entries of -1 mark displacements that
        leave the represented region (only possible from collar nodes).
        """
        if stencil.dimension != self.dimension:
            raise ValueError("stencil and grid dimensions differ")
        if abs(stencil.h - self.h) > 1e-12 * self.h:
            raise BadSpacing(f"BadSpacing: stencil spacing {stencil.h} != grid spacing {self.h}")
        offsets, weights = stencil.offsets, stencil.weights
        if skip_zero:
            keep = np.any(offsets != 0, axis=1)
            offsets, weights = offsets[keep], weights[keep]
        if nodes is None:
            nodes = np.arange(self.n_interior)
        base = self.lattice_index[np.asarray(nodes)]
        target = base[:, None, :] + offsets[None, :, :]
        valid = np.all((target >= 0) & (target < np.array(self.shape)), axis=-1)
        clipped = np.clip(target, 0, np.array(self.shape) - 1)
        table = self._active[tuple(np.moveaxis(clipped, -1, 0))]
        table = np.where(valid, table, -1)
        return table, weights


def build_grid(extent, h: float) -> DomainGrid:
    return DomainGrid(extent, h)


@dataclass(frozen=True, eq=False)
class Field:
    """Values at every active node of a grid (interior then collar)."""

    grid: DomainGrid
    values: np.ndarray

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.shape != (self.grid.n_nodes,):
            raise ValueError(f"expected {self.grid.n_nodes} values, got shape {values.shape}")
        if not np.all(np.isfinite(values)):
            raise NonFiniteValue("NonFiniteValue: field has non-finite entries")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @property
    def interior_values(self) -> np.ndarray:
        return self.values[: self.grid.n_interior]

    @property
    def collar_values(self) -> np.ndarray:
        return self.values[self.grid.n_interior :]

    @property
    def sup_norm(self) -> float:
        return float(np.max(np.abs(self.values)))

    def with_interior(self, interior) -> Field:
        values = self.values.copy()
        values[: self.grid.n_interior] = interior
        return Field(self.grid, values)


def _sample(spec, grid: DomainGrid, name: str) -> np.ndarray:
    if callable(spec):
        x = grid.coords
        out = np.asarray(spec(x[:, 0] if grid.dimension == 1 else x), dtype=float)
        out = np.broadcast_to(out, (grid.n_nodes,))
    else:
        arr = np.asarray(spec, dtype=float)
        if arr.ndim == 0:
            out = np.full(grid.n_nodes, float(arr))
        elif arr.shape == (grid.n_nodes,):
            out = arr
        else:
            raise ValueError(f"{name}: expected a scalar, a callable or {grid.n_nodes} node values")
    if not np.all(np.isfinite(out)):
        raise NonFiniteValue(f"NonFiniteValue: {name} is not finite at every node")
    return np.array(out, dtype=float)


def make_field(grid: DomainGrid, u0, psi) -> Field:
    """Initial field: ``u0`` on interior nodes, ``psi`` on collar nodes.

    ``u0`` and ``psi`` may be scalars, arrays over all active nodes, or
    callables of the coordinates (a 1D array in 1D, an ``(n, 2)`` array in 2D).
    A scalar ``u0`` is its value on Omega.  Where a non-scalar ``u0`` disagrees
    with ``psi`` on the collar a warning is issued and ``psi`` is used.
    """
    u = _sample(u0, grid, "u0")
    p = _sample(psi, grid, "psi")
    n = grid.n_interior
    scalar_u0 = not callable(u0) and np.ndim(u0) == 0
    if not scalar_u0 and not np.array_equal(u[n:], p[n:]):
        warnings.warn("u0 and psi disagree on collar nodes; using psi there", stacklevel=2)
    values = np.concatenate([u[:n], p[n:]])
    return Field(grid, values)


@dataclass(frozen=True)
class ExtremaRecord:
    t: float
    u_plus: float
    u_minus: float
    U_plus: float
    U_minus: float
    psi_plus: float
    psi_minus: float
    u_inf: float

    def as_row(self):
        return astuple(self)


EXTREMA_COLUMNS = tuple(f.name for f in fields(ExtremaRecord))


def extrema(field: Field, t: float = 0.0) -> ExtremaRecord:
    interior, collar = field.interior_values, field.collar_values
    U_plus, U_minus = float(interior.max()), float(interior.min())
    psi_plus, psi_minus = float(collar.max()), float(collar.min())
    u_plus = max(U_plus, psi_plus)
    u_minus = min(U_minus, psi_minus)
    return ExtremaRecord(
        float(t), u_plus, u_minus, U_plus, U_minus, psi_plus, psi_minus,
        max(abs(u_plus), abs(u_minus)),
    )


# CSV -----------------------------------------------------------------------


def fmt(x: float) -> str:
    """17 significant digits: enough for an exact float round trip."""
    return format(float(x), ".17g")


def write_snapshot(path, field: Field) -> None:
    grid = field.grid
    axes = [f"x{i + 1}" for i in range(grid.dimension)]
    with open(path, "w", newline="", encoding="utf-8") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["node_index", *axes, "region", "value"])
        for i, (x, v) in enumerate(zip(grid.coords, field.values)):
            w.writerow([i, *(fmt(c) for c in x), grid.region(i), fmt(v)])


def read_snapshot(path, grid: DomainGrid) -> Field:
    values = np.empty(grid.n_nodes)
    seen = np.zeros(grid.n_nodes, dtype=bool)
    with open(path, newline="", encoding="utf-8") as f:
        for row in csv.DictReader(f):
            i = int(row["node_index"])
            if row["region"] != grid.region(i):
                raise ValueError(f"{path}: node {i} region mismatch")
            values[i] = float(row["value"])
            seen[i] = True
    if not seen.all():
        raise ValueError(f"{path}: snapshot does not cover every node of the grid")
    return Field(grid, values)


def write_trace(path, records) -> None:
    with open(path, "w", newline="", encoding="utf-8") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(EXTREMA_COLUMNS)
        for r in records:
            w.writerow([fmt(x) for x in r.as_row()])


def read_trace(path) -> list[ExtremaRecord]:
    with open(path, newline="", encoding="utf-8") as f:
        return [ExtremaRecord(*(float(row[c]) for c in EXTREMA_COLUMNS)) for row in csv.DictReader(f)]


def snapshot_path(directory, index: int) -> Path:
    return Path(directory) / f"snapshot_{index:04d}.csv"

