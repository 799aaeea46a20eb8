"""Equal-mass recursive bisection of grid densities and no-collision features.

The density is treated as piecewise constant on pixels. Every cell is an
axis-aligned rectangle in pixel-index coordinates (pixel ``(i, j)`` covers
``[i, i + 1] x [j, j + 1]``), and a cut at a non-integer coordinate splits the
straddling column (or row) of pixels in proportion to the covered length.
This makes each child hold exactly half of its parent's mass.
"""

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ._parallel import pmap

AXES = ("vertical", "horizontal")
WEIGHTINGS = ("mass", "uniform")
FEATURE_KINDS = ("mass_center", "geom_center")

_SNAP = 1e-12


class PartitionError(ValueError):
    """A density cannot be bisected to the requested depth."""


@dataclass(frozen=True)
class SlicingSchedule:
    """Breadth-first alternating cuts.

    ``depth`` levels give ``2**depth`` cells. A "vertical" cut splits the
    ``x`` coordinate; levels alternate starting from ``first_axis``.
    """

    depth: int
    first_axis: str = "vertical"

    def __post_init__(self):
        if int(self.depth) != self.depth or self.depth < 0:
            raise ValueError(f"depth must be a nonnegative integer, got {self.depth}")
        if self.first_axis not in AXES:
            raise ValueError(f"first_axis must be one of {AXES}, got {self.first_axis!r}")
        object.__setattr__(self, "depth", int(self.depth))

    @property
    def n_cells(self):
        return 1 << self.depth

    def axis(self, level):
        """0 when level ``level`` splits ``x``, 1 when it splits ``y``."""
        start = 0 if self.first_axis == "vertical" else 1
        return (start + level) % 2


@dataclass(frozen=True)
class Cell:
    """Rectangle ``[x0, x1] x [y0, y1]`` in pixel-index coordinates."""

    address: str
    x0: float
    x1: float
    y0: float
    y1: float
    mass: float


def _overlap(lo, hi, n):
    """Index range and per-pixel covered lengths of ``[lo, hi]`` on ``n`` pixels."""
    a = max(int(np.floor(lo)), 0)
    b = min(int(np.ceil(hi)), n)
    if b <= a:
        return a, a, np.zeros(0), np.zeros(0)
    idx = np.arange(a, b, dtype=np.float64)
    left = np.maximum(idx, lo)
    right = np.minimum(idx + 1.0, hi)
    w = np.maximum(right - left, 0.0)
    mid = 0.5 * (left + right)
    return a, b, w, mid


@dataclass(frozen=True, eq=False)
class CellPartition:
    """The ``2**N`` leaf cells of a bisection, in address order."""

    cells: tuple
    shape: tuple
    schedule: SlicingSchedule

    def pixel_fractions(self, k):
        """Map ``(i, j) -> fraction`` of each pixel covered by cell ``k``."""
        frac = self.fraction_array(k)
        jj, ii = np.nonzero(frac)
        return {(int(i), int(j)): float(frac[j, i]) for i, j in zip(ii, jj)}

    def fraction_array(self, k):
        c = self.cells[k]
        h, w = self.shape
        i0, i1, wx, _ = _overlap(c.x0, c.x1, w)
        j0, j1, wy, _ = _overlap(c.y0, c.y1, h)
        out = np.zeros(self.shape)
        out[j0:j1, i0:i1] = np.outer(wy, wx)
        return out

    @property
    def addresses(self):
        return [c.address for c in self.cells]

    @property
    def masses(self):
        return np.array([c.mass for c in self.cells])


def _split(m, cell, axis):
    h, w = m.shape
    i0, i1, wx, _ = _overlap(cell.x0, cell.x1, w)
    j0, j1, wy, _ = _overlap(cell.y0, cell.y1, h)
    sub = m[j0:j1, i0:i1]
    if axis == 0:
        line = wy @ sub  # mass per unit x-length in each column
        wl, start, lo, hi = wx, i0, cell.x0, cell.x1
    else:
        line = sub @ wx
        wl, start, lo, hi = wy, j0, cell.y0, cell.y1
    seg = line * wl
    cum = np.cumsum(seg)
    total = cum[-1] if cum.size else 0.0
    if not total >= 1e-12:
        raise PartitionError(
            f"partition depth exceeds support resolution: cell {cell.address or '<root>'} "
            f"has mass {total:.3g}")
    support = sub[np.ix_(wy > 0, wx > 0)] > 0
    if np.count_nonzero(support) <= 1:
        raise PartitionError(
            f"partition depth exceeds support resolution: cell {cell.address or '<root>'} "
            "contains a single pixel")
    half = 0.5 * total
    k = int(np.searchsorted(cum, half, side="left"))
    k = min(k, cum.size - 1)
    before = cum[k - 1] if k > 0 else 0.0
    p_lo = max(start + k, lo)
    p_hi = min(start + k + 1, hi)
    f = (half - before) / seg[k]
    if f >= 1.0 - _SNAP:
        cut = p_hi
    elif f <= _SNAP:
        cut = p_lo
    else:
        cut = p_lo + f * (p_hi - p_lo)
    # cut lies inside [p_lo, p_hi] by construction
    if axis == 0:
        a = Cell(cell.address + "0", cell.x0, cut, cell.y0, cell.y1, half)
        b = Cell(cell.address + "1", cut, cell.x1, cell.y0, cell.y1, total - half)
    else:
        a = Cell(cell.address + "0", cell.x0, cell.x1, cell.y0, cut, half)
        b = Cell(cell.address + "1", cell.x0, cell.x1, cut, cell.y1, total - half)
    return a, b


def partition(d, sched):
    """Bisect ``d`` breadth-first into ``2**N`` equal-mass cells.

    Parameters
    ----------
    d : GridDensity
    sched : SlicingSchedule

    Returns
    -------
    CellPartition
        Cells in lexicographic address order; ``0`` marks the lower side of a cut.

    Raises
    ------
    PartitionError
        When a cell to be cut has (numerically) no mass or its support is a
        single pixel.
    """
    m = d.mass
    h, w = m.shape
    cells = [Cell("", 0.0, float(w), 0.0, float(h), float(m.sum()))]
    for level in range(sched.depth):
        axis = sched.axis(level)
        nxt = []
        for c in cells:
            nxt.extend(_split(m, c, axis))
        cells = nxt
    return CellPartition(tuple(cells), m.shape, sched)


@dataclass(frozen=True, eq=False)
class FeatureSet:
    """Per-cell centers of mass and geometric centers, physical coordinates."""

    addresses: tuple
    mass_centers: np.ndarray
    geom_centers: np.ndarray
    masses: np.ndarray

    def __post_init__(self):
        k = len(self.addresses)
        for name in ("mass_centers", "geom_centers"):
            a = np.asarray(getattr(self, name), dtype=np.float64)
            if a.shape != (k, 2):
                raise ValueError(f"{name} has shape {a.shape}, expected ({k}, 2)")
            object.__setattr__(self, name, a)
        ms = np.asarray(self.masses, dtype=np.float64)
        if ms.shape != (k,):
            raise ValueError("masses length disagrees with addresses")
        object.__setattr__(self, "masses", ms)
        object.__setattr__(self, "addresses", tuple(self.addresses))

    def centers(self, kind):
        if kind == "mass_center":
            return self.mass_centers
        if kind == "geom_center":
            return self.geom_centers
        raise ValueError(f"feature kind must be one of {FEATURE_KINDS}, got {kind!r}")

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            wr = csv.writer(fh)
            wr.writerow(["address", "mass", "xm_x", "xm_y", "xg_x", "xg_y"])
            for a, m, xm, xg in zip(self.addresses, self.masses, self.mass_centers,
                                    self.geom_centers):
                wr.writerow([a or "-", repr(float(m)), repr(float(xm[0])), repr(float(xm[1])),
                             repr(float(xg[0])), repr(float(xg[1]))])

    @classmethod
    def from_csv(cls, path):
        rows = list(csv.DictReader(open(path, newline="")))
        if not rows:
            raise ValueError(f"{path}: no feature rows")
        need = {"address", "mass", "xm_x", "xm_y", "xg_x", "xg_y"}
        missing = need - set(rows[0])
        if missing:
            raise ValueError(f"{path}: missing columns {sorted(missing)}")
        addr = [("" if r["address"] == "-" else r["address"]) for r in rows]
        f = lambda *k: np.array([[float(r[c]) for c in k] for r in rows])  # noqa: E731
        return cls(addr, f("xm_x", "xm_y"), f("xg_x", "xg_y"), f("mass")[:, 0])


def features(d, part):
    """No-collision features of ``d`` on the cells of ``part``.

    The mass center integrates the piecewise-constant density over each cell;
    a fractional pixel piece contributes at its own centroid. The geometric
    center averages position over the cell's positive-mass region by area.
    """
    m = d.mass
    if m.shape != tuple(part.shape):
        raise ValueError(f"partition was built on a {part.shape} grid, density is {m.shape}")
    h, w = m.shape
    k = len(part.cells)
    xm = np.empty((k, 2))
    xg = np.empty((k, 2))
    ms = np.empty(k)
    for n, c in enumerate(part.cells):
        i0, i1, wx, cx = _overlap(c.x0, c.x1, w)
        j0, j1, wy, cy = _overlap(c.y0, c.y1, h)
        sub = m[j0:j1, i0:i1]
        col = wy @ sub
        row = sub @ wx
        mass = col @ wx
        if not mass > 0:
            raise ValueError(f"cell {c.address} carries no mass for this density")
        ms[n] = mass
        xm[n, 0] = (col * wx) @ cx / mass
        xm[n, 1] = (row * wy) @ cy / mass
        s = (sub > 0).astype(np.float64)
        scol = wy @ s
        srow = s @ wx
        area = scol @ wx
        xg[n, 0] = (scol * wx) @ cx / area
        xg[n, 1] = (srow * wy) @ cy / area
    ox, oy = d.origin
    sp = d.spacing
    xm = np.column_stack((ox + xm[:, 0] * sp, oy + xm[:, 1] * sp))
    xg = np.column_stack((ox + xg[:, 0] * sp, oy + xg[:, 1] * sp))
    return FeatureSet(part.addresses, xm, xg, ms)


def nc_features(d, sched):
    """Partition and feature extraction in one call."""
    return features(d, partition(d, sched))


def _check_p(p):
    if not p >= 1:
        raise ValueError(f"p must be >= 1, got {p}")


def nc_distance(fa, fb, p=2.0, weighting="mass", feature_kind="mass_center"):
    """Discrete no-collision distance between two feature sets.

    With ``weighting="mass"`` each cell's displacement is weighted by the
    first measure's cell mass; ``"uniform"`` weights every cell by
    ``2**-N``. The two agree on equal-mass partitions.
    """
    _check_p(p)
    if weighting not in WEIGHTINGS:
        raise ValueError(f"weighting must be one of {WEIGHTINGS}, got {weighting!r}")
    if tuple(fa.addresses) != tuple(fb.addresses):
        raise ValueError("feature sets have different cell addresses")
    diff = np.linalg.norm(fa.centers(feature_kind) - fb.centers(feature_kind), axis=1)
    if weighting == "mass":
        wts = fa.masses
    else:
        wts = np.full(diff.shape[0], 1.0 / diff.shape[0])
    return float((wts @ diff**p) ** (1.0 / p))


def feature_matrix(fsets, feature_kind="mass_center", weighting="mass"):
    """Stack features into rows whose Euclidean distances are the ``p = 2`` distances.

    Row ``i`` is the concatenation of ``sqrt(w_b) * x_b`` over cells, with
    ``w_b`` the cell weight (the mass weights of the first feature set, which
    coincide for equal-mass partitions).
    """
    if not fsets:
        raise ValueError("no feature sets")
    addr = tuple(fsets[0].addresses)
    if weighting == "mass":
        wts = fsets[0].masses
    elif weighting == "uniform":
        wts = np.full(len(addr), 1.0 / len(addr))
    else:
        raise ValueError(f"weighting must be one of {WEIGHTINGS}, got {weighting!r}")
    rows = []
    for f in fsets:
        if tuple(f.addresses) != addr:
            raise ValueError("feature sets have different cell addresses")
        rows.append((np.sqrt(wts)[:, None] * f.centers(feature_kind)).ravel())
    return np.array(rows)


def features_for(ds, sched):
    """Features of every density, annotating failures with the density index."""
    ds = list(ds)
    if ds:
        shape = ds[0].mass.shape
        for k, d in enumerate(ds):
            if d.mass.shape != shape:
                raise ValueError(f"density {k} has grid {d.mass.shape}, expected {shape}")

    def one(item):
        k, d = item
        try:
            return nc_features(d, sched)
        except PartitionError as e:
            raise PartitionError(f"density {k}: {e}") from None

    return pmap(one, list(enumerate(ds)))


def distance_matrix_from_features(fsets, p=2.0, feature_kind="mass_center", weighting="mass"):
    _check_p(p)
    m = len(fsets)
    D = np.zeros((m, m))
    for i in range(m):
        for j in range(i + 1, m):
            D[i, j] = nc_distance(fsets[i], fsets[j], p, weighting, feature_kind)
    return D + D.T


def nc_distance_matrix(ds, sched, p=2.0, feature_kind="mass_center", weighting="mass"):
    """Pairwise no-collision distances of a family of densities on a common grid.

    Features are computed once per density.
    """
    ds = list(ds)
    if len(ds) < 2:
        raise ValueError("need at least two densities")
    _check_p(p)
    if feature_kind not in FEATURE_KINDS:
        raise ValueError(f"feature kind must be one of {FEATURE_KINDS}, got {feature_kind!r}")
    return distance_matrix_from_features(features_for(ds, sched), p, feature_kind, weighting)


def save_features(fsets, out_dir):
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = []
    for k, f in enumerate(fsets):
        p = out_dir / f"features_{k:04d}.csv"
        f.to_csv(p)
        paths.append(p)
    return paths
