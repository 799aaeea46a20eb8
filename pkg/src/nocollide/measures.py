"""Discrete probability measures on pixel grids and as weighted point clouds.

Conventions
-----------
A :class:`GridDensity` stores its mass as an array of shape ``(height, width)``
indexed ``mass[j, i]``; pixel ``(i, j)`` is the square with lower-left corner
``origin + (i, j) * spacing`` and center ``origin + (i + 0.5, j + 0.5) * spacing``.
Row ``j = 0`` is the bottom of the frame, so ``y`` grows with the row index.
"""

import gzip
import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

SHAPE_KINDS = ("disk", "ellipse", "gaussian")
TRANSFORM_KINDS = ("translate", "dilate", "rotate")

# Gaussians are truncated at this Mahalanobis radius before normalization.
GAUSSIAN_TRUNCATION = 4.0
# Frame-fit check for Gaussians uses the 3-sigma box.
GAUSSIAN_FIT_SIGMAS = 3.0
# Sub-pixel offsets are snapped to this dyadic step so integer-pixel shifts
# of a shape rasterize to bit-identical (shifted) arrays.
_OFFSET_QUANTUM = 2.0**-24


class ParseError(ValueError):
    """Malformed input file."""


# ---------------------------------------------------------------------------
# Grid densities and point clouds
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class GridDensity:
    """Normalized nonnegative mass on a regular grid of square pixels.

    Parameters
    ----------
    mass : array_like, shape (height, width)
        Nonnegative pixel masses. They are normalized to sum to one on
        construction, and the stored array is read-only.
    origin : (float, float)
        Physical coordinates of the lower-left corner of pixel ``(0, 0)``.
    spacing : float
        Side length of a pixel.
    """

    mass: np.ndarray
    origin: tuple = (0.0, 0.0)
    spacing: float = 1.0

    def __post_init__(self):
        m = np.array(self.mass, dtype=np.float64, copy=True)
        if m.ndim != 2 or m.shape[0] < 1 or m.shape[1] < 1:
            raise ValueError(f"mass must be a non-empty 2D array, got shape {m.shape}")
        if not np.all(np.isfinite(m)):
            raise ValueError("mass contains non-finite entries")
        if np.any(m < 0):
            raise ValueError("mass contains negative entries")
        total = m.sum()
        if total <= 0:
            raise ValueError("density has zero total mass")
        m /= total
        m.setflags(write=False)
        spacing = float(self.spacing)
        if not (spacing > 0 and math.isfinite(spacing)):
            raise ValueError(f"spacing must be positive, got {self.spacing}")
        origin = tuple(float(v) for v in self.origin)
        if len(origin) != 2:
            raise ValueError("origin must have two coordinates")
        object.__setattr__(self, "mass", m)
        object.__setattr__(self, "spacing", spacing)
        object.__setattr__(self, "origin", origin)

    @property
    def height(self):
        return self.mass.shape[0]

    @property
    def width(self):
        return self.mass.shape[1]

    @property
    def frame(self):
        return Frame(self.width, self.height, self.origin, self.spacing)

    def centers_x(self):
        return self.origin[0] + (np.arange(self.width) + 0.5) * self.spacing

    def centers_y(self):
        return self.origin[1] + (np.arange(self.height) + 0.5) * self.spacing

    def mean(self):
        """Center of mass in physical coordinates."""
        mx = self.mass.sum(axis=0) @ self.centers_x()
        my = self.mass.sum(axis=1) @ self.centers_y()
        return np.array([mx, my])

    def same_grid(self, other):
        return (
            self.mass.shape == other.mass.shape
            and self.origin == other.origin
            and self.spacing == other.spacing
        )


@dataclass(frozen=True, eq=False)
class PointCloud:
    """Weighted atoms in the plane.

    Weights are validated but not renormalized; :func:`to_pointcloud`
    produces clouds whose weights sum to one.
    """

    points: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        p = np.array(self.points, dtype=np.float64, copy=True).reshape(-1, 2)
        w = np.array(self.weights, dtype=np.float64, copy=True).reshape(-1)
        if p.shape[0] != w.shape[0]:
            raise ValueError(f"{p.shape[0]} points but {w.shape[0]} weights")
        if p.shape[0] == 0:
            raise ValueError("point cloud is empty")
        if not (np.all(np.isfinite(p)) and np.all(np.isfinite(w))):
            raise ValueError("point cloud contains non-finite values")
        if np.any(w < 0):
            raise ValueError("point cloud has negative weights")
        p.setflags(write=False)
        w.setflags(write=False)
        object.__setattr__(self, "points", p)
        object.__setattr__(self, "weights", w)

    def __len__(self):
        return self.points.shape[0]


def to_pointcloud(d, threshold=0.0, top_k=None):
    """Atoms at the centers of pixels whose mass exceeds ``threshold``.

    Parameters
    ----------
    d : GridDensity
    threshold : float, optional
        Pixels with mass ``<= threshold`` are dropped.
    top_k : int, optional
        Keep only the ``top_k`` heaviest pixels. Meant for timing sweeps; it
        changes the measure.

    Returns
    -------
    PointCloud
        Weights renormalized to one. Points are ordered row by row.
    """
    if threshold < 0:
        raise ValueError("threshold must be nonnegative")
    jj, ii = np.nonzero(d.mass > threshold)
    if ii.size == 0:
        raise ValueError("empty support: no pixel above threshold")
    w = d.mass[jj, ii]
    if top_k is not None:
        if top_k < 1:
            raise ValueError("top_k must be positive")
        keep = np.sort(np.argsort(-w, kind="stable")[:top_k])
        ii, jj, w = ii[keep], jj[keep], w[keep]
    pts = np.column_stack(
        (
            d.origin[0] + (ii + 0.5) * d.spacing,
            d.origin[1] + (jj + 0.5) * d.spacing,
        )
    )
    return PointCloud(pts, w / w.sum())


# ---------------------------------------------------------------------------
# Shapes and transforms
# ---------------------------------------------------------------------------


def rotation_matrix(t):
    """Counter-clockwise rotation by ``t`` radians.

    Quarter-turn multiples get exact entries so rotated shapes keep exact
    axis alignment.
    """
    q = t / (0.5 * math.pi)
    k = round(q)
    if abs(q - k) < 1e-12:
        c, s = ((1.0, 0.0), (0.0, 1.0), (-1.0, 0.0), (0.0, -1.0))[k % 4]
    else:
        c, s = math.cos(t), math.sin(t)
    return np.array([[c, -s], [s, c]])


def _as_matrix(cov):
    m = np.array(cov, dtype=np.float64).reshape(2, 2)
    return m


def _tuple_matrix(m):
    return ((float(m[0, 0]), float(m[0, 1])), (float(m[1, 0]), float(m[1, 1])))


@dataclass(frozen=True)
class ShapeSpec:
    """Disk, solid ellipse or Gaussian, described by center and covariance.

    For disks and ellipses ``covariance`` is the covariance of the uniform
    measure on the region, so an axis-aligned ellipse with semi-axes ``a, b``
    has ``diag(a**2 / 4, b**2 / 4)``. Rotated ellipses are kept in this form.
    Use the ``disk``, ``ellipse`` and ``gaussian`` constructors.
    """

    kind: str
    center: tuple
    covariance: tuple

    def __post_init__(self):
        if self.kind not in SHAPE_KINDS:
            raise ValueError(f"unknown shape kind {self.kind!r}")
        c = tuple(float(v) for v in self.center)
        if len(c) != 2 or not all(math.isfinite(v) for v in c):
            raise ValueError("center must be two finite coordinates")
        m = _as_matrix(self.covariance)
        if not np.all(np.isfinite(m)):
            raise ValueError("covariance has non-finite entries")
        scale = abs(m).max()
        if abs(m[0, 1] - m[1, 0]) > 1e-12 * max(scale, 1e-300):
            raise ValueError("covariance must be symmetric")
        m = 0.5 * (m + m.T)
        if np.linalg.eigvalsh(m)[0] <= 0:
            raise ValueError("covariance must be positive definite (axes must be positive)")
        if self.kind == "disk" and (m[0, 1] != 0 or m[0, 0] != m[1, 1]):
            raise ValueError("a disk needs an isotropic covariance")
        object.__setattr__(self, "center", c)
        object.__setattr__(self, "covariance", _tuple_matrix(m))

    @classmethod
    def disk(cls, center=(0.0, 0.0), radius=1.0):
        if not radius > 0:
            raise ValueError(f"radius must be positive, got {radius}")
        r2 = radius * radius / 4.0
        return cls("disk", center, ((r2, 0.0), (0.0, r2)))

    @classmethod
    def ellipse(cls, center=(0.0, 0.0), a=1.0, b=1.0, angle=0.0):
        """Solid ellipse with semi-axis ``a`` along ``x`` and ``b`` along ``y``,
        then rotated by ``angle`` about its own center."""
        if not (a > 0 and b > 0):
            raise ValueError(f"semi-axes must be positive, got a={a}, b={b}")
        r = rotation_matrix(angle)
        cov = r @ np.diag([a * a / 4.0, b * b / 4.0]) @ r.T
        return cls("ellipse", center, _tuple_matrix(0.5 * (cov + cov.T)))

    @classmethod
    def gaussian(cls, center=(0.0, 0.0), covariance=((1.0, 0.0), (0.0, 1.0))):
        return cls("gaussian", center, _tuple_matrix(_as_matrix(covariance)))

    @property
    def cov(self):
        return _as_matrix(self.covariance)

    @property
    def u(self):
        return np.array(self.center)

    @property
    def axis_aligned(self):
        return self.covariance[0][1] == 0.0

    @property
    def axes(self):
        """Semi-axes (standard deviations for Gaussians).

        Ordered ``(x, y)`` for axis-aligned shapes, otherwise major first.
        """
        scale = 1.0 if self.kind == "gaussian" else 2.0
        if self.axis_aligned:
            v = (self.covariance[0][0], self.covariance[1][1])
        else:
            v = tuple(np.linalg.eigvalsh(self.cov)[::-1])
        return (scale * math.sqrt(v[0]), scale * math.sqrt(v[1]))

    def half_extent(self, sigmas=GAUSSIAN_TRUNCATION):
        """Half side lengths of the bounding box of the support."""
        m = self.cov
        f = sigmas if self.kind == "gaussian" else 2.0
        return np.array([f * math.sqrt(m[0, 0]), f * math.sqrt(m[1, 1])])

    def to_dict(self):
        return {"kind": self.kind, "center": list(self.center),
                "covariance": [list(r) for r in self.covariance]}

    @classmethod
    def from_dict(cls, d):
        kind = d["kind"]
        center = d.get("center", (0.0, 0.0))
        if "covariance" in d:
            return cls(kind, center, d["covariance"])
        if kind == "disk":
            return cls.disk(center, d.get("radius", 1.0))
        if kind == "ellipse":
            return cls.ellipse(center, d["a"], d["b"], d.get("angle", 0.0))
        raise ValueError(f"shape {kind!r} needs a covariance")


@dataclass(frozen=True)
class TransformSpec:
    """Translation by a vector, componentwise dilation, or rotation about the origin."""

    kind: str
    value: tuple

    def __post_init__(self):
        if self.kind not in TRANSFORM_KINDS:
            raise ValueError(f"unknown transform kind {self.kind!r}")
        if self.kind == "rotate":
            v = (float(np.ravel(self.value)[0]),)
        else:
            v = tuple(float(x) for x in np.ravel(self.value))
            if len(v) != 2:
                raise ValueError(f"{self.kind} needs a 2D parameter")
            if self.kind == "dilate" and not (v[0] > 0 and v[1] > 0):
                raise ValueError("dilation factors must be positive")
        if not all(math.isfinite(x) for x in v):
            raise ValueError("transform parameter must be finite")
        object.__setattr__(self, "value", v)

    @classmethod
    def translate(cls, theta):
        return cls("translate", theta)

    @classmethod
    def dilate(cls, theta):
        return cls("dilate", theta)

    @classmethod
    def rotate(cls, t):
        return cls("rotate", (t,))


def apply_transform(shape, t):
    """Parameters of the pushforward of ``shape`` under ``t``.

    Rotations act about the physical origin, so both the center and the
    orientation turn. Dilations scale the center and the axes and require an
    axis-aligned shape.
    """
    u = shape.u
    cov = shape.cov
    kind = shape.kind
    if t.kind == "translate":
        return ShapeSpec(kind, tuple(u + np.array(t.value)), shape.covariance)
    if t.kind == "dilate":
        if not shape.axis_aligned:
            raise ValueError("unsupported composition: dilation of a non-axis-aligned shape")
        th = np.array(t.value)
        new_cov = np.diag(th) @ cov @ np.diag(th)
        if kind == "disk" and th[0] != th[1]:
            kind = "ellipse"
        return ShapeSpec(kind, tuple(u * th), _tuple_matrix(new_cov))
    r = rotation_matrix(t.value[0])
    new_u = r @ u
    if kind == "disk":
        new_cov = cov
    else:
        new_cov = r @ cov @ r.T
        new_cov = 0.5 * (new_cov + new_cov.T)
    return ShapeSpec(kind, tuple(new_u), _tuple_matrix(new_cov))


# ---------------------------------------------------------------------------
# Frames and rasterization
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Frame:
    """Pixel grid geometry: ``width x height`` pixels of side ``spacing``."""

    width: int
    height: int
    origin: tuple
    spacing: float

    def __post_init__(self):
        if int(self.width) < 1 or int(self.height) < 1:
            raise ValueError("grid dimensions must be positive")
        if not (float(self.spacing) > 0 and math.isfinite(self.spacing)):
            raise ValueError(f"spacing must be positive, got {self.spacing}")
        object.__setattr__(self, "width", int(self.width))
        object.__setattr__(self, "height", int(self.height))
        object.__setattr__(self, "origin", tuple(float(v) for v in self.origin))
        object.__setattr__(self, "spacing", float(self.spacing))

    def rasterize(self, shape, supersample=4, clip=False):
        return rasterize(shape, self.width, self.height, self.origin, self.spacing,
                         supersample=supersample, clip=clip)

    def to_dict(self):
        return {"width": self.width, "height": self.height,
                "origin": list(self.origin), "spacing": self.spacing}


def padded_frame(shapes, n, pad=0.1, lattice_step=None):
    """Square ``n x n`` frame around the union of the shapes' supports.

    The union's bounding box is enlarged by ``pad`` (relative) and centered.
    With ``lattice_step`` the spacing is shrunk to ``lattice_step / k`` for
    the smallest integer ``k`` that still covers the box, so translations by
    multiples of ``lattice_step`` are whole-pixel shifts.
    """
    lo = np.full(2, np.inf)
    hi = np.full(2, -np.inf)
    for s in shapes:
        ext = s.half_extent(GAUSSIAN_FIT_SIGMAS)
        lo = np.minimum(lo, s.u - ext)
        hi = np.maximum(hi, s.u + ext)
    if not np.all(np.isfinite(lo)):
        raise ValueError("padded_frame needs at least one shape")
    side = float((hi - lo).max()) * (1.0 + pad)
    spacing = side / n
    if lattice_step is not None:
        k = math.floor(lattice_step / spacing)
        if k < 1:
            raise ValueError("lattice step is finer than one pixel at this resolution")
        spacing = lattice_step / k
    center = 0.5 * (lo + hi)
    origin = center - 0.5 * n * spacing
    return Frame(n, n, tuple(origin), spacing)


def rasterize(shape, width, height, origin, spacing, supersample=4, clip=False):
    """Rasterize a shape by midpoint supersampling.

    Each pixel receives the average of the shape's (unnormalized) density over
    ``supersample x supersample`` midpoints; the result is normalized.

    Parameters
    ----------
    shape : ShapeSpec
    width, height : int
        Grid size in pixels.
    origin : (float, float)
        Lower-left corner of the frame.
    spacing : float
        Pixel side.
    supersample : int, optional
        Samples per pixel side.
    clip : bool, optional
        Allow the support to extend past the frame and keep the visible part.
        Otherwise the support box (3 sigma for Gaussians) must fit.

    Raises
    ------
    ValueError
        On non-positive spacing, a shape outside the frame ("empty
        rasterization"), or a shape that does not fit and ``clip`` is off.
    """
    if not (spacing > 0 and math.isfinite(spacing)):
        raise ValueError(f"spacing must be positive, got {spacing}")
    if int(supersample) < 1:
        raise ValueError("supersample must be a positive integer")
    ss = int(supersample)
    width, height = int(width), int(height)
    origin = np.asarray(origin, dtype=np.float64)
    u = shape.u

    lo_phys = origin
    hi_phys = origin + np.array([width, height]) * spacing
    fit_ext = shape.half_extent(GAUSSIAN_FIT_SIGMAS)
    tol = 1e-9 * spacing
    if not clip and (np.any(u - fit_ext < lo_phys - tol) or np.any(u + fit_ext > hi_phys + tol)):
        inside = np.all(u + fit_ext > lo_phys) and np.all(u - fit_ext < hi_phys)
        if inside:
            raise ValueError("shape does not fit in the grid frame; pass clip=True to truncate")

    # center in pixel units, split into an integer part and a snapped fraction
    c = (u - origin) / spacing
    ci = np.floor(c)
    cf = np.round((c - ci) / _OFFSET_QUANTUM) * _OFFSET_QUANTUM
    ci = ci.astype(np.int64)
    ext = shape.half_extent(GAUSSIAN_TRUNCATION) / spacing
    rel_lo = np.floor(cf - ext).astype(np.int64) - 1
    rel_hi = np.ceil(cf + ext).astype(np.int64) + 1
    i0, j0 = ci + rel_lo
    i1, j1 = ci + rel_hi
    i0, j0 = max(i0, 0), max(j0, 0)
    i1, j1 = min(i1, width), min(j1, height)
    mass = np.zeros((height, width))
    if i0 >= i1 or j0 >= j1:
        raise ValueError("empty rasterization: shape lies outside the grid")

    sub = (np.arange(ss) + 0.5) / ss
    # offsets from the shape center, physical units
    dx = ((np.arange(i0, i1) - ci[0])[:, None] + sub[None, :] - cf[0]).ravel() * spacing
    dy = ((np.arange(j0, j1) - ci[1])[:, None] + sub[None, :] - cf[1]).ravel() * spacing

    cov = shape.cov
    if shape.kind == "gaussian":
        prec = np.linalg.inv(cov)
    else:
        prec = np.linalg.inv(4.0 * cov)
    pxx, pxy, pyy = prec[0, 0], prec[0, 1], prec[1, 1]

    nx = i1 - i0
    out = np.empty((j1 - j0, nx))
    rows_per_chunk = max(1, 2_000_000 // max(dx.size, 1) // ss)
    for r0 in range(0, j1 - j0, rows_per_chunk):
        r1 = min(r0 + rows_per_chunk, j1 - j0)
        yy = dy[r0 * ss:r1 * ss, None]
        q = pxx * dx[None, :] ** 2 + 2.0 * pxy * dx[None, :] * yy + pyy * yy**2
        if shape.kind == "gaussian":
            val = np.where(q <= GAUSSIAN_TRUNCATION**2, np.exp(-0.5 * q), 0.0)
        else:
            val = (q <= 1.0).astype(np.float64)
        out[r0:r1] = val.reshape(r1 - r0, ss, nx, ss).sum(axis=(1, 3))
    mass[j0:j1, i0:i1] = out
    if not mass.sum() > 0:
        raise ValueError("empty rasterization: no sample falls inside the shape")
    return GridDensity(mass, tuple(origin), spacing)


# ---------------------------------------------------------------------------
# File formats
# ---------------------------------------------------------------------------


def save_density(d, path):
    """Write ``path`` (CSV, bottom row first) and a JSON sidecar with the frame."""
    path = Path(path)
    np.savetxt(path, d.mass, delimiter=",", fmt="%.17g")
    meta = {"width": d.width, "height": d.height, "origin": list(d.origin), "spacing": d.spacing}
    path.with_suffix(".json").write_text(json.dumps(meta, indent=2) + "\n")


def load_density(path):
    path = Path(path)
    side = path.with_suffix(".json")
    if not path.exists():
        raise FileNotFoundError(f"density file not found: {path}")
    if not side.exists():
        raise FileNotFoundError(f"missing frame sidecar: {side}")
    meta = json.loads(side.read_text())
    try:
        mass = np.loadtxt(path, delimiter=",", ndmin=2)
    except ValueError as e:
        raise ParseError(f"{path}: {e}") from None
    if mass.shape != (meta["height"], meta["width"]):
        raise ParseError(f"{path}: array shape {mass.shape} disagrees with sidecar "
                         f"({meta['height']}, {meta['width']})")
    return GridDensity(mass, tuple(meta["origin"]), meta["spacing"])


_IDX_IMAGES = 0x00000803
_IDX_LABELS = 0x00000801


def _read_bytes(path):
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"MNIST file not found: {path}")
    raw = path.read_bytes()
    if raw[:2] == b"\x1f\x8b":
        raw = gzip.decompress(raw)
    return raw


def _parse_idx(path, magic, ndim):
    raw = _read_bytes(path)
    if len(raw) < 4:
        raise ParseError(f"{path}: truncated IDX header")
    got = int.from_bytes(raw[:4], "big")
    if got != magic:
        raise ParseError(f"{path}: bad IDX magic 0x{got:08x}, expected 0x{magic:08x}")
    head = 4 + 4 * ndim
    if len(raw) < head:
        raise ParseError(f"{path}: truncated IDX header")
    dims = np.frombuffer(raw, dtype=">u4", count=ndim, offset=4).astype(np.int64)
    need = int(np.prod(dims))
    if len(raw) - head < need:
        raise ParseError(f"{path}: truncated IDX payload ({len(raw) - head} of {need} bytes)")
    data = np.frombuffer(raw, dtype=np.uint8, count=need, offset=head)
    return data.reshape(tuple(dims))


def write_idx(path, array):
    """Write a uint8 array as IDX (3D: images, 1D: labels); gzip if ``.gz``."""
    a = np.ascontiguousarray(array, dtype=np.uint8)
    magic = {3: _IDX_IMAGES, 1: _IDX_LABELS}.get(a.ndim)
    if magic is None:
        raise ValueError("IDX writer supports 1D labels and 3D images only")
    header = magic.to_bytes(4, "big") + b"".join(int(s).to_bytes(4, "big") for s in a.shape)
    raw = header + a.tobytes()
    path = Path(path)
    if path.suffix == ".gz":
        raw = gzip.compress(raw, mtime=0)
    path.write_bytes(raw)


def load_mnist_idx(images_path, labels_path, digit_filter=None, limit=None):
    """Read MNIST IDX files into unit-mass densities.

    Parameters
    ----------
    images_path, labels_path : path-like
        IDX files, optionally gzip-compressed.
    digit_filter : iterable of int, optional
        Labels to keep. Default keeps all.
    limit : int, optional
        Maximum number of images returned, taken in file order.

    Returns
    -------
    list of (GridDensity, int)
        Images are flipped so that the top of the digit has the largest ``y``;
        origin ``(0, 0)``, spacing 1.
    """
    images = _parse_idx(images_path, _IDX_IMAGES, 3)
    labels = _parse_idx(labels_path, _IDX_LABELS, 1)
    if images.shape[0] != labels.shape[0]:
        raise ParseError(f"{images_path} holds {images.shape[0]} images but "
                         f"{labels_path} holds {labels.shape[0]} labels")
    keep = None if digit_filter is None else {int(x) for x in digit_filter}
    out = []
    if limit is not None and limit <= 0:
        return out
    for k in range(images.shape[0]):
        lab = int(labels[k])
        if keep is not None and lab not in keep:
            continue
        img = images[k][::-1].astype(np.float64)
        if img.sum() == 0:
            raise ParseError(f"{images_path}: image {k} is blank")
        out.append((GridDensity(img, (0.0, 0.0), 1.0), lab))
        if limit is not None and len(out) >= limit:
            break
    return out
