"""Exact discrete W2, linearized optimal transport, and closed-form oracles."""

import csv
import math
from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from ._netsimplex import MAX_ITER, OPTIMAL, network_simplex, transport_simplex
from ._parallel import pmap
from .measures import Frame, GridDensity, PointCloud, ShapeSpec, rotation_matrix, to_pointcloud

# below this many source x target pairs every arc is handed to the simplex
DENSE_ARCS = 250_000
_CANDIDATE_K = 8
_ADD_PER_ROW = 8
_SIMPLEX_EPS = 1e-12
_PRICING_TOL = 1e-10


class SolverError(RuntimeError):
    pass


@dataclass(frozen=True, eq=False)
class TransportPlan:
    """Sparse coupling between ``n_source`` and ``n_target`` atoms."""

    n_source: int
    n_target: int
    rows: np.ndarray
    cols: np.ndarray
    mass: np.ndarray

    def dense(self):
        out = np.zeros((self.n_source, self.n_target))
        np.add.at(out, (self.rows, self.cols), self.mass)
        return out

    def row_sums(self):
        return np.bincount(self.rows, self.mass, minlength=self.n_source)

    def col_sums(self):
        return np.bincount(self.cols, self.mass, minlength=self.n_target)

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            wr = csv.writer(fh)
            wr.writerow(["i", "j", "mass"])
            for i, j, m in zip(self.rows, self.cols, self.mass):
                wr.writerow([int(i), int(j), repr(float(m))])


def _sqdist_pairs(xa, xb, rows, cols):
    d = xa[rows] - xb[cols]
    return np.einsum("ij,ij->i", d, d)


def _gaussian_map(xa, wa, xb, wb):
    """Affine map between the moment-matched Gaussians of two clouds."""
    ma = wa @ xa
    mb = wb @ xb
    ca = (xa - ma).T @ ((xa - ma) * wa[:, None])
    cb = (xb - mb).T @ ((xb - mb) * wb[:, None])
    ev, V = np.linalg.eigh(ca)
    if ev[0] <= 1e-12 * max(ev[1], 1e-300):
        return ma, mb, np.eye(2)
    ca_h = (V * np.sqrt(ev)) @ V.T
    ca_ih = (V / np.sqrt(ev)) @ V.T
    ew, W = np.linalg.eigh(ca_h @ cb @ ca_h)
    mid = (W * np.sqrt(np.maximum(ew, 0.0))) @ W.T
    A = ca_ih @ mid @ ca_ih
    return ma, mb, A


def _candidate_arcs(xa, wa, xb, wb, k):
    n, m = len(xa), len(xb)
    ma, mb, A = _gaussian_map(xa, wa, xb, wb)
    # a heavy atom has to spread over several light ones
    ka = min(k * max(1, round(m / n)), m)
    kb = min(k * max(1, round(n / m)), n)
    _, jj = cKDTree(xb).query(mb + (xa - ma) @ A.T, ka)
    rows = [np.repeat(np.arange(n), ka)]
    cols = [np.asarray(jj).reshape(-1)]
    if abs(np.linalg.det(A)) > 1e-12:
        Ainv = np.linalg.inv(A)
        _, ii = cKDTree(xa).query(ma + (xb - mb) @ Ainv.T, kb)
        rows.append(np.asarray(ii).reshape(-1))
        cols.append(np.repeat(np.arange(m), kb))
    key = np.unique(np.concatenate(rows) * m + np.concatenate(cols))
    return key // m, key % m


def _check(status, art):
    if status == MAX_ITER:
        raise SolverError("network simplex hit its pivot limit")
    if status != OPTIMAL:
        raise SolverError(f"network simplex failed with status {status}")
    if art > 1e-9:
        raise SolverError(f"transport problem infeasible (unmatched mass {art:.3g})")


def exact_w2(pa, pb):
    """Exact 2-Wasserstein distance between two weighted point clouds.

    Solves the transportation linear program with squared Euclidean cost by
    primal network simplex. Large instances start from a sparse set of
    candidate arcs (nearest neighbours under the Gaussian-matched affine map);
    whenever those are optimal the full cost matrix is priced against the
    current potentials and violating arcs join the live tree. The loop ends
    only when no pair has negative reduced cost, so the returned plan is
    optimal for the complete problem.

    Parameters
    ----------
    pa, pb : PointCloud
        Weights must have equal sums (to 1e-9).

    Returns
    -------
    distance : float
        Square root of the optimal cost.
    plan : TransportPlan
    """
    xa, wa = pa.points, pa.weights
    xb, wb = pb.points, pb.weights
    sa, sb = wa.sum(), wb.sum()
    if abs(sa - sb) > 1e-9:
        raise ValueError(f"weight-sum mismatch: {sa!r} vs {sb!r}")
    n, m = len(xa), len(xb)
    max_piv = 1000 * (n + m) + 1_000_000
    if n * m <= DENSE_ARCS:
        rows = np.repeat(np.arange(n), m)
        cols = np.tile(np.arange(m), n)
        costs = _sqdist_pairs(xa, xb, rows, cols)
        flow, _, status, art, _ = network_simplex(wa, wb, rows, cols, costs, _SIMPLEX_EPS, max_piv)
    else:
        rows, cols = _candidate_arcs(xa, wa, xb, wb, _CANDIDATE_K)
        span = max(np.ptp(np.vstack((xa, xb)), axis=0).max(), 1e-300)
        tol = _PRICING_TOL * (span * span + 1.0)
        rows, cols, flow, costs, _, status, art, _, _ = transport_simplex(
            wa, wb, xa, xb, rows, cols, _SIMPLEX_EPS, tol, _ADD_PER_ROW, max_piv)
    _check(status, art)
    keep = flow > 0
    plan = TransportPlan(n, m, rows[keep], cols[keep], flow[keep])
    cost = float(flow[keep] @ costs[keep])
    return math.sqrt(max(cost, 0.0)), plan


def w2_distance_matrix(ds, threshold=0.0):
    """Pairwise exact W2 between densities (or point clouds)."""
    clouds = [x if isinstance(x, PointCloud) else to_pointcloud(x, threshold) for x in ds]
    m = len(clouds)
    pairs = [(i, j) for i in range(m) for j in range(i + 1, m)]
    vals = pmap(lambda ij: exact_w2(clouds[ij[0]], clouds[ij[1]])[0], pairs)
    D = np.zeros((m, m))
    for (i, j), v in zip(pairs, vals):
        D[i, j] = D[j, i] = v
    return D


# ---------------------------------------------------------------------------
# Linearized optimal transport
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class LotEmbedding:
    """Barycentric transport maps from a common reference cloud.

    ``maps[k, i]`` is the image of reference atom ``i`` for target ``k``.
    """

    reference: PointCloud
    maps: np.ndarray

    def __post_init__(self):
        maps = np.asarray(self.maps, dtype=np.float64)
        if maps.ndim != 3 or maps.shape[1:] != (len(self.reference), 2):
            raise ValueError(f"maps must have shape (m, {len(self.reference)}, 2), got {maps.shape}")
        object.__setattr__(self, "maps", maps)

    def features(self):
        """Rows whose Euclidean distances are the LOT distances."""
        w = np.sqrt(self.reference.weights)
        return (self.maps * w[None, :, None]).reshape(len(self.maps), -1)


def default_lot_reference(frame, resolution=32, mean=(0.0, 0.0), cov=((25.0, 0.0), (0.0, 25.0))):
    """Gaussian reference rasterized over ``frame``'s physical extent.

    The reference uses a coarser ``resolution x resolution`` grid than the
    data; the part of the Gaussian outside the frame is dropped before
    normalization.
    """
    if resolution < 1:
        raise ValueError("resolution must be positive")
    side = max(frame.width, frame.height) * frame.spacing
    cx = frame.origin[0] + 0.5 * frame.width * frame.spacing
    cy = frame.origin[1] + 0.5 * frame.height * frame.spacing
    sp = side / resolution
    ref_frame = Frame(resolution, resolution, (cx - 0.5 * side, cy - 0.5 * side), sp)
    return ref_frame.rasterize(ShapeSpec.gaussian(mean, cov), clip=True)


def _barycentric(ref, cloud):
    _, plan = exact_w2(ref, cloud)
    w = ref.weights
    T = np.empty((len(ref), 2))
    for ax in range(2):
        T[:, ax] = np.bincount(plan.rows, plan.mass * cloud.points[plan.cols, ax],
                               minlength=len(ref))
    return T / w[:, None]


def lot_embed(reference, targets, threshold=0.0):
    """Transport maps from ``reference`` to every target by barycentric projection.

    Parameters
    ----------
    reference : GridDensity or PointCloud
    targets : list of GridDensity or PointCloud

    Returns
    -------
    LotEmbedding
    """
    ref = reference if isinstance(reference, PointCloud) else to_pointcloud(reference, 0.0)
    if np.any(ref.weights <= 0):
        raise ValueError("reference has zero-weight points")
    targets = list(targets)
    if not targets:
        raise ValueError("no targets")
    clouds = [t if isinstance(t, PointCloud) else to_pointcloud(t, threshold) for t in targets]
    maps = pmap(lambda c: _barycentric(ref, c), clouds)
    return LotEmbedding(ref, np.array(maps))


def lot_distance_matrix(emb):
    """``D[i, j] = sqrt(sum_k w_k |T_i(x_k) - T_j(x_k)|^2)``."""
    maps = emb.maps
    w = emb.reference.weights
    m = len(maps)
    if m == 0:
        raise ValueError("empty embedding")
    D = np.zeros((m, m))
    for i in range(m):
        diff = maps[i + 1:] - maps[i][None]
        D[i, i + 1:] = np.sqrt(np.einsum("kpc,kpc,p->k", diff, diff, w))
    return D + D.T


# ---------------------------------------------------------------------------
# Closed forms
# ---------------------------------------------------------------------------

ORACLE_KINDS = ("ellipse_w2", "gaussian_lot")


@dataclass(frozen=True)
class RotationOracleParams:
    """Rotation family ``R_t`` applied to a measure with center ``u``.

    For ``ellipse_w2`` the measure is uniform on the ellipse with semi-axes
    ``a, b`` (covariance ``diag(a^2, b^2) / 4``); for ``gaussian_lot`` it is
    a Gaussian with covariance ``diag(a^2, b^2)``. ``covariance`` overrides
    the diagonal form for arbitrarily oriented shapes.
    """

    u: tuple
    a: float = 1.0
    b: float = 1.0
    kind: str = "ellipse_w2"
    covariance: tuple = None

    def __post_init__(self):
        if self.kind not in ORACLE_KINDS:
            raise ValueError(f"kind must be one of {ORACLE_KINDS}, got {self.kind!r}")
        if not (self.a > 0 and self.b > 0):
            raise ValueError("a and b must be positive")
        object.__setattr__(self, "u", tuple(float(v) for v in self.u))
        if self.covariance is not None:
            c = np.asarray(self.covariance, dtype=np.float64).reshape(2, 2)
            if abs(c[0, 1] - c[1, 0]) > 1e-12 * abs(c).max() or np.linalg.eigvalsh(c)[0] <= 0:
                raise ValueError("covariance must be symmetric positive definite")
            object.__setattr__(self, "covariance", tuple(map(tuple, c)))

    @classmethod
    def from_matrix(cls, u, covariance, kind="ellipse_w2"):
        ev = np.linalg.eigvalsh(np.asarray(covariance, dtype=np.float64))
        f = 2.0 if kind == "ellipse_w2" else 1.0
        return cls(u, f * math.sqrt(ev[1]), f * math.sqrt(max(ev[0], 0.0)), kind, covariance)

    @classmethod
    def from_shape(cls, shape, kind=None):
        kind = kind or ("gaussian_lot" if shape.kind == "gaussian" else "ellipse_w2")
        return cls.from_matrix(shape.center, shape.cov, kind)

    @property
    def sigma(self):
        if self.covariance is not None:
            return np.array(self.covariance)
        f = 0.25 if self.kind == "ellipse_w2" else 1.0
        return np.diag([f * self.a**2, f * self.b**2])


def _center_term(u, dt):
    return 4.0 * (u[0] ** 2 + u[1] ** 2) * math.sin(0.5 * dt) ** 2


def analytic_w2_rotation(params, s, t):
    """W2 between the rotations by ``s`` and ``t`` of a uniform ellipse.

    Uses ``|R u - u|^2`` plus the Bures term between ``Sigma`` and
    ``R Sigma R^T``, which for uniform ellipses of equal shape is exact.
    Depends on ``s, t`` through ``t - s`` only.
    """
    dt = t - s
    S = params.sigma
    R = rotation_matrix(dt)
    tr = np.trace(S)
    det = np.linalg.det(S)
    cross = np.trace(S @ R @ S @ R.T)
    val = _center_term(params.u, dt) + 2.0 * tr - 2.0 * math.sqrt(max(cross + 2.0 * det, 0.0))
    return math.sqrt(max(val, 0.0))


def analytic_lot_rotation(params, s, t):
    """LOT distance between rotated Gaussians under a standard normal reference."""
    dt = t - s
    S = params.sigma
    defect = np.trace(S) - 2.0 * math.sqrt(max(np.linalg.det(S), 0.0))
    val = _center_term(params.u, dt) + 2.0 * defect * math.sin(dt) ** 2
    return math.sqrt(max(val, 0.0))


def analytic_rotation_matrix(params, angles, kind=None):
    kind = kind or params.kind
    fn = analytic_w2_rotation if kind == "ellipse_w2" else analytic_lot_rotation
    m = len(angles)
    D = np.zeros((m, m))
    for i in range(m):
        for j in range(i + 1, m):
            D[i, j] = D[j, i] = fn(params, angles[i], angles[j])
    return D


def analytic_w2_translation(theta1, theta2):
    return float(np.linalg.norm(np.subtract(theta1, theta2)))


def analytic_w2_dilation(theta1, theta2, c):
    t1, t2 = np.asarray(theta1, float), np.asarray(theta2, float)
    if np.any(t1 <= 0) or np.any(t2 <= 0):
        raise ValueError("dilation parameters must be positive")
    return float(np.linalg.norm(np.asarray(c) * (t1 - t2)))


def translation_matrix(thetas):
    T = np.asarray(thetas, dtype=np.float64)
    return np.linalg.norm(T[:, None, :] - T[None, :, :], axis=-1)


def dilation_matrix(thetas, c):
    T = np.asarray(thetas, dtype=np.float64)
    if np.any(T <= 0):
        raise ValueError("dilation parameters must be positive")
    return translation_matrix(T * np.asarray(c)[None, :])


def second_moments(d):
    """``c_j = sqrt(int x_j^2 d mu)`` for a piecewise-constant grid density.

    Each pixel contributes its center's square plus the in-pixel variance
    ``spacing^2 / 12``.
    """
    if not isinstance(d, GridDensity):
        raise TypeError("second_moments expects a GridDensity")
    sx = d.mass.sum(axis=0) @ d.centers_x() ** 2
    sy = d.mass.sum(axis=1) @ d.centers_y() ** 2
    v = d.spacing**2 / 12.0
    return np.sqrt(np.array([sx + v, sy + v]))


def rhombus_witness(D):
    """``D(0, pi)^2 - 2 D(0, pi/2)^2`` for a matrix over angles 0, pi/2, pi, 3pi/2.

    Zero is necessary for the four samples to sit isometrically on a circle.
    """
    D = np.asarray(D, dtype=np.float64)
    if D.shape != (4, 4):
        raise ValueError(f"rhombus witness needs a 4x4 matrix, got {D.shape}")
    return float(D[0, 2] ** 2 - 2.0 * D[0, 1] ** 2)
