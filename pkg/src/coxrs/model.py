"""Domain types shared by every part of the toolkit.

The spatial domain is a finite set of grid cells (centres in km, areas in
km^2), the temporal domain a uniform ladder of epochs t_k = t0 + k*step
(step in years, k = 0..n_steps).  Earthquake counts and production volumes
are attached to the interval (t_{k-1}, t_k], so column 0 of a counts matrix
is identically zero by convention.

Internal units are fixed throughout the package: years, km^2, bara and
Nbcm.  Mixing units would silently rescale the per-volume and per-pressure
model coefficients, so conversions belong at the ingestion boundary.

All containers are immutable after construction (their arrays are marked
read-only) and safe to share across threads.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "SpaceTimeGrid",
    "PressureModel",
    "ModelParams",
    "CountsField",
    "CovariateField",
    "NoiseField",
    "build_grid",
    "rect_grid",
    "eval_mean",
]


def _readonly(a, dtype=float):
    out = np.array(a, dtype=dtype)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class SpaceTimeGrid:
    """Spatial cells plus a uniform time discretisation.

    Parameters
    ----------
    cell_ids : array of int, shape (n,)
        Unique identifiers, in canonical iteration order.  Every routine in
        the package visits cells in this order.
    centers : array, shape (n, 2)
        Cell centres in planar field coordinates (km).
    areas : array, shape (n,)
        Cell areas in km^2, strictly positive.
    t_origin : float
        Calendar epoch t0 in decimal years.
    step : float
        Time step in years, > 0.
    n_steps : int
        Number of steps m, >= 1; epochs are t_k = t0 + k*step, k = 0..m.
    """

    cell_ids: np.ndarray
    centers: np.ndarray
    areas: np.ndarray
    t_origin: float
    step: float
    n_steps: int

    def __post_init__(self):
        ids = _readonly(self.cell_ids, dtype=int)
        centers = _readonly(np.atleast_2d(self.centers))
        areas = _readonly(self.areas)
        if ids.ndim != 1 or ids.size == 0:
            raise ValueError("cell_ids must be a non-empty 1-d array")
        if len(np.unique(ids)) != ids.size:
            raise ValueError("duplicate cell ids")
        if centers.shape != (ids.size, 2) or not np.isfinite(centers).all():
            raise ValueError("centers must be a finite (n, 2) array")
        if areas.shape != (ids.size,) or not (areas > 0).all():
            raise ValueError("areas must be strictly positive, one per cell")
        if not (self.step > 0):
            raise ValueError("step must be > 0")
        if int(self.n_steps) < 1:
            raise ValueError("n_steps must be >= 1")
        object.__setattr__(self, "cell_ids", ids)
        object.__setattr__(self, "centers", centers)
        object.__setattr__(self, "areas", areas)
        object.__setattr__(self, "t_origin", float(self.t_origin))
        object.__setattr__(self, "step", float(self.step))
        object.__setattr__(self, "n_steps", int(self.n_steps))

    @property
    def n_cells(self) -> int:
        return self.cell_ids.size

    @property
    def n_epochs(self) -> int:
        """Number of epochs, n_steps + 1."""
        return self.n_steps + 1

    @property
    def times(self) -> np.ndarray:
        """Epochs t_k = t_origin + k*step, k = 0..n_steps."""
        return self.t_origin + self.step * np.arange(self.n_epochs)

    @property
    def exposure(self) -> np.ndarray:
        """Per-cell exposure step * area, shape (n_cells,)."""
        return self.step * self.areas

    def field_shape(self) -> tuple[int, int]:
        return (self.n_cells, self.n_epochs)


def build_grid(cells, t_origin, step, n_steps) -> SpaceTimeGrid:
    """Build a grid from an explicit cell list.

    Parameters
    ----------
    cells : iterable of (id, (x, y), area)
        Cell id, centre coordinates in km and area in km^2.
    t_origin, step, n_steps :
        Time discretisation, see :class:`SpaceTimeGrid`.
    """
    cells = list(cells)
    if not cells:
        raise ValueError("empty cell list")
    ids = [c[0] for c in cells]
    centers = [c[1] for c in cells]
    areas = [c[2] for c in cells]
    return SpaceTimeGrid(np.asarray(ids), np.asarray(centers, dtype=float),
                         np.asarray(areas, dtype=float), t_origin, step, n_steps)


def rect_grid(x0, y0, nx, ny, cell_size, t_origin, step, n_steps,
              mask_polygon=None) -> SpaceTimeGrid:
    """Regular nx-by-ny grid of square cells over a bounding box.

    Cell centres are offset half a cell from the lower-left corner
    ``(x0, y0)``.  When ``mask_polygon`` (a sequence of (x, y) ring
    vertices) is given, cells whose centre falls outside the polygon are
    dropped entirely; ids of the retained cells keep their row-major value
    so the same id always refers to the same location.
    """
    if nx < 1 or ny < 1 or cell_size <= 0:
        raise ValueError("need nx, ny >= 1 and cell_size > 0")
    xs = x0 + cell_size * (np.arange(nx) + 0.5)
    ys = y0 + cell_size * (np.arange(ny) + 0.5)
    gx, gy = np.meshgrid(xs, ys, indexing="xy")
    centers = np.column_stack([gx.ravel(), gy.ravel()])
    ids = np.arange(nx * ny)
    if mask_polygon is not None:
        from shapely.geometry import Point, Polygon

        poly = Polygon(mask_polygon)
        keep = np.array([poly.covers(Point(x, y)) for x, y in centers])
        if not keep.any():
            raise ValueError("mask polygon excludes every cell centre")
        ids, centers = ids[keep], centers[keep]
    areas = np.full(ids.size, float(cell_size) ** 2)
    return SpaceTimeGrid(ids, centers, areas, t_origin, step, n_steps)


class PressureModel:
    """Pore-pressure field model: deterministic mean plus white noise.

    The pressure at cell s and epoch t is X(s, t) = m(s, t) + E(s, t) with
    independent mean-zero noise of variance ``noise_var`` (bara^2).  The
    mean surface is either a tabulated per-cell-per-epoch matrix or a
    coefficient vector over a design function, so exact scenarios can be
    injected without fitting.
    """

    def __init__(self, *, table=None, design=None, beta=None, noise_var=0.0):
        if noise_var < 0:
            raise ValueError("noise_var must be >= 0")
        self.noise_var = float(noise_var)
        if table is not None:
            if design is not None or beta is not None:
                raise ValueError("give either a table or a design, not both")
            table = np.asarray(table, dtype=float)
            if table.ndim != 2 or not np.isfinite(table).all():
                raise ValueError("tabulated mean must be a finite 2-d array")
            self._table = _readonly(table)
            self._design = self._beta = None
        else:
            if design is None or beta is None:
                raise ValueError("need a (design, beta) pair or a table")
            self._table = None
            self._design = design
            self._beta = _readonly(beta)

    @classmethod
    def from_table(cls, values, noise_var=0.0) -> "PressureModel":
        """Mean surface given directly as a (n_cells, >= n_epochs) matrix."""
        return cls(table=values, noise_var=noise_var)

    @classmethod
    def from_design(cls, design, beta, noise_var=0.0) -> "PressureModel":
        """Mean surface m(s, t) = c(s, t)' beta.

        ``design`` must be callable as ``design(x, y, t)`` on broadcastable
        arrays, returning the feature matrix with one row per point.
        """
        return cls(design=design, beta=beta, noise_var=noise_var)

    @property
    def is_tabulated(self) -> bool:
        return self._table is not None

    @property
    def sigma(self) -> float:
        return math.sqrt(self.noise_var)

    def mean_at(self, grid: SpaceTimeGrid, times) -> np.ndarray:
        """Mean pressure at every cell for the given epochs.

        Returns a (n_cells, len(times)) matrix in bara.  Tabulated models
        can only be evaluated at the grid's own epoch ladder (columns of
        the table); design-based models evaluate anywhere.
        """
        times = np.atleast_1d(np.asarray(times, dtype=float))
        if self._table is not None:
            k = np.rint((times - grid.t_origin) / grid.step).astype(int)
            good = np.isclose(grid.t_origin + k * grid.step, times)
            if not good.all() or k.min() < 0 or k.max() >= self._table.shape[1]:
                raise ValueError(
                    "tabulated pressure mean has no column for requested epochs")
            if self._table.shape[0] != grid.n_cells:
                raise ValueError("tabulated mean does not match grid cell count")
            return self._table[:, k]
        x = np.repeat(grid.centers[:, 0], times.size)
        y = np.repeat(grid.centers[:, 1], times.size)
        t = np.tile(times, grid.n_cells)
        feats = np.asarray(self._design(x, y, t), dtype=float)
        vals = feats @ self._beta
        if not np.isfinite(vals).all():
            raise ValueError("pressure mean evaluation produced non-finite values")
        return vals.reshape(grid.n_cells, times.size)


def eval_mean(pm: PressureModel, grid: SpaceTimeGrid) -> np.ndarray:
    """Deterministic mean surface m(s_i, t_k) on the grid, (n_cells, n_epochs)."""
    return pm.mean_at(grid, grid.times)


@dataclass(frozen=True)
class ModelParams:
    """Intensity parameters (theta1, theta2, alpha, log_ratio).

    theta1 is the log-rate intercept, theta2 the production effect per
    Nbcm, alpha > 0 the pressure sensitivity per bara, and ``log_ratio``
    is eta = log(alpha / gamma0).  ``log_ratio = -inf`` selects the
    degenerate model in which the initial state is effectively infinite
    and the intensity depends on the pressure drop X(s, t0) - X(s, t)
    alone.
    """

    theta1: float
    theta2: float
    alpha: float
    log_ratio: float = -math.inf

    def __post_init__(self):
        for name in ("theta1", "theta2", "alpha"):
            v = float(getattr(self, name))
            if not math.isfinite(v):
                raise ValueError(f"{name} must be finite")
            object.__setattr__(self, name, v)
        if not self.alpha > 0:
            raise ValueError("alpha must be > 0")
        lr = float(self.log_ratio)
        if math.isnan(lr) or lr == math.inf:
            raise ValueError("log_ratio must be a real number or -inf")
        object.__setattr__(self, "log_ratio", lr)

    @property
    def is_reduced(self) -> bool:
        """True when eta = -inf (pressure-drop-only model)."""
        return self.log_ratio == -math.inf

    @property
    def gamma0(self) -> float:
        """Initial state alpha * exp(-eta); +inf in the reduced model."""
        if self.is_reduced:
            return math.inf
        return self.alpha * math.exp(-self.log_ratio)

    def as_array(self) -> np.ndarray:
        """(theta1, theta2, alpha) in reduced mode, else with eta appended."""
        if self.is_reduced:
            return np.array([self.theta1, self.theta2, self.alpha])
        return np.array([self.theta1, self.theta2, self.alpha, self.log_ratio])

    @classmethod
    def from_array(cls, zeta) -> "ModelParams":
        zeta = np.asarray(zeta, dtype=float)
        if zeta.shape == (3,):
            return cls(zeta[0], zeta[1], zeta[2])
        if zeta.shape == (4,):
            return cls(zeta[0], zeta[1], zeta[2], zeta[3])
        raise ValueError("parameter vector must have length 3 or 4")

    def to_dict(self) -> dict:
        return {"theta1": self.theta1, "theta2": self.theta2,
                "alpha": self.alpha, "log_ratio": self.log_ratio}

    @classmethod
    def from_dict(cls, d) -> "ModelParams":
        return cls(d["theta1"], d["theta2"], d["alpha"],
                   d.get("log_ratio", -math.inf))


def _check_field_shape(grid: SpaceTimeGrid, values: np.ndarray, what: str):
    if values.shape != grid.field_shape():
        raise ValueError(
            f"{what} has shape {values.shape}, expected {grid.field_shape()}")


@dataclass(frozen=True)
class CountsField:
    """Earthquake counts N(s_i, t_j); column 0 carries no counts."""

    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values)
        if v.ndim != 2:
            raise ValueError("counts must be a 2-d matrix")
        if not np.issubdtype(v.dtype, np.integer):
            if not np.all(v == np.rint(v)):
                raise ValueError("counts must be integers")
            v = v.astype(int)
        if (v < 0).any():
            raise ValueError("counts must be non-negative")
        if v[:, 0].any():
            raise ValueError("counts at epoch 0 must be zero (interval convention)")
        object.__setattr__(self, "values", _readonly(v, dtype=int))

    @property
    def total(self) -> int:
        return int(self.values.sum())


@dataclass(frozen=True)
class CovariateField:
    """Trailing-year production volumes V(s_i, t_j) in Nbcm."""

    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 2 or not np.isfinite(v).all():
            raise ValueError("covariates must be a finite 2-d matrix")
        object.__setattr__(self, "values", _readonly(v))


@dataclass(frozen=True)
class NoiseField:
    """One realisation e(s_i, t_j) of the pressure measurement noise."""

    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 2 or not np.isfinite(v).all():
            raise ValueError("noise field must be a finite 2-d matrix")
        object.__setattr__(self, "values", _readonly(v))


def cell_rng(seed: int, cell_index: int, stream: int = 0) -> np.random.Generator:
    """Per-cell random generator derived from (seed, cell index, stream).

    Deriving one stream per cell makes grid-parallel code reproducible
    independently of scheduling order or worker count.
    """
    return np.random.default_rng(
        np.random.SeedSequence([int(seed), int(cell_index), int(stream)]))
