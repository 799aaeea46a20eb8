"""Embeddings of distance and feature matrices, alignment, and matrix scoring."""

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components, shortest_path


class GraphError(ValueError):
    pass


def check_distance_matrix(D, tol=1e-12):
    """Validate a dense distance matrix and return it as a float array.

    Symmetry and the zero diagonal are checked relative to the largest entry.
    """
    D = np.asarray(D, dtype=np.float64)
    if D.ndim != 2 or D.shape[0] != D.shape[1]:
        raise ValueError(f"distance matrix must be square, got shape {D.shape}")
    if not np.all(np.isfinite(D)):
        raise ValueError("distance matrix has non-finite entries")
    scale = max(np.abs(D).max(initial=0.0), 1.0)
    if np.any(D < -tol * scale):
        raise ValueError("distance matrix has negative entries")
    if np.abs(D - D.T).max(initial=0.0) > tol * scale:
        raise ValueError("distance matrix is not symmetric")
    if np.abs(np.diag(D)).max(initial=0.0) > tol * scale:
        raise ValueError("distance matrix has a nonzero diagonal")
    return D


def pairwise_euclidean(X):
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X[:, None]
    m = X.shape[0]
    D = np.zeros((m, m))
    for i in range(m):
        D[i, i + 1:] = np.linalg.norm(X[i + 1:] - X[i], axis=1)
    return D + D.T


@dataclass(frozen=True, eq=False)
class Embedding:
    """``m`` points in ``k`` dimensions plus a metadata dictionary."""

    points: np.ndarray
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        p = np.asarray(self.points, dtype=np.float64)
        if p.ndim != 2 or p.shape[1] < 1:
            raise ValueError(f"embedding must be an (m, k) array with k >= 1, got {p.shape}")
        if not np.all(np.isfinite(p)):
            raise ValueError("embedding has non-finite coordinates")
        object.__setattr__(self, "points", p)
        object.__setattr__(self, "metadata", dict(self.metadata))

    def to_csv(self, path):
        path = Path(path)
        k = self.points.shape[1]
        header = "index," + ",".join(f"x{j + 1}" for j in range(k))
        body = np.column_stack((np.arange(len(self.points)), self.points))
        fmt = ["%d"] + ["%.17g"] * k
        np.savetxt(path, body, delimiter=",", header=header, comments="", fmt=fmt)
        path.with_suffix(".json").write_text(json.dumps(_jsonable(self.metadata), indent=2) + "\n")

    @classmethod
    def from_csv(cls, path):
        path = Path(path)
        arr = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        side = path.with_suffix(".json")
        meta = json.loads(side.read_text()) if side.exists() else {}
        return cls(arr[:, 1:], meta)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, np.generic):
        return obj.item()
    return obj


def _canonical_signs(X):
    """Flip each axis so its first clearly nonzero coordinate is positive."""
    X = X.copy()
    scale = max(np.abs(X).max(initial=0.0), 1e-300)
    for j in range(X.shape[1]):
        nz = np.nonzero(np.abs(X[:, j]) > 1e-10 * scale)[0]
        if nz.size and X[nz[0], j] < 0:
            X[:, j] = -X[:, j]
    return X


def classical_mds(D, k=2):
    """Torgerson scaling: eigendecomposition of the double-centered squared distances.

    Negative eigenvalues are clipped; their share of the spectrum's absolute
    mass is reported as ``negative_eigen_fraction`` (zero for Euclidean input).
    """
    D = check_distance_matrix(D)
    m = D.shape[0]
    if not 1 <= k < m:
        raise ValueError(f"need 1 <= k < m, got k={k}, m={m}")
    D2 = D**2
    B = -0.5 * (D2 - D2.mean(axis=0)[None, :] - D2.mean(axis=1)[:, None] + D2.mean())
    B = 0.5 * (B + B.T)
    evals, evecs = np.linalg.eigh(B)
    order = np.argsort(-evals, kind="stable")
    evals, evecs = evals[order], evecs[:, order]
    total = np.abs(evals).sum()
    neg = np.abs(evals[evals < 0]).sum()
    lam = np.maximum(evals[:k], 0.0)
    X = _canonical_signs(evecs[:, :k] * np.sqrt(lam)[None, :])
    meta = {
        "method": "classical",
        "eigenvalues": evals[:k].tolist(),
        "negative_eigen_fraction": float(neg / total) if total > 0 else 0.0,
    }
    return Embedding(X, meta)


def _raw_stress(X, D, iu):
    d = pairwise_euclidean(X)[iu]
    return float(((d - D[iu]) ** 2).sum())


def _smacof_run(D, X, max_iter, rel_tol, iu):
    m = D.shape[0]
    history = [_raw_stress(X, D, iu)]
    it = 0
    for it in range(1, max_iter + 1):
        d = pairwise_euclidean(X)
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = np.where(d > 0, D / d, 0.0)
        B = -ratio
        np.fill_diagonal(B, 0.0)
        np.fill_diagonal(B, -B.sum(axis=1))
        X = B @ X / m
        s = _raw_stress(X, D, iu)
        prev = history[-1]
        history.append(s)
        if prev <= 0 or (prev - s) <= rel_tol * prev:
            break
    return X, history, it


def smacof_mds(D, k=2, seed=0, restarts=4, max_iter=300, rel_tol=1e-9):
    """Metric MDS by stress majorization (Guttman transform).

    Each restart starts from a Gaussian configuration drawn from a seeded
    generator. The lowest-stress restart is returned. ``metadata["stress"]``
    is the normalized stress ``sqrt(sum (d_ij - D_ij)^2 / sum D_ij^2)``.

    Parameters
    ----------
    D : (m, m) array_like
    k : int
        Target dimension.
    seed : int
    restarts : int
    max_iter : int
        Iterations per restart.
    rel_tol : float
        Stop when the relative stress decrease falls below this.
    """
    D = np.asarray(D, dtype=np.float64)
    if not np.all(np.isfinite(D)):
        raise ValueError("distance matrix has non-finite entries")
    D = check_distance_matrix(D)
    m = D.shape[0]
    if k < 1:
        raise ValueError("k must be positive")
    if restarts < 1:
        raise ValueError("need at least one restart")
    iu = np.triu_indices(m, 1)
    denom = float((D[iu] ** 2).sum())
    scale = np.sqrt(denom / max(len(iu[0]), 1) / (2.0 * k)) if denom > 0 else 1.0
    seqs = np.random.SeedSequence(seed).spawn(restarts)
    best = None
    for r, ss in enumerate(seqs):
        rng = np.random.default_rng(ss)
        X0 = rng.standard_normal((m, k)) * scale
        X, hist, its = _smacof_run(D, X0, max_iter, rel_tol, iu)
        if best is None or hist[-1] < best[1][-1]:
            best = (X, hist, its, r)
    X, hist, its, r = best
    X = X - X.mean(axis=0)
    norm = float(np.sqrt(hist[-1] / denom)) if denom > 0 else 0.0
    meta = {
        "method": "smacof",
        "stress": norm,
        "raw_stress": hist[-1],
        "stress_history": hist,
        "seed": seed,
        "restart": r,
        "restarts": restarts,
        "iterations": its,
    }
    return Embedding(X, meta)


def svd_embed(F, k=2):
    """Rank-``k`` principal coordinates of a feature matrix (rows are samples)."""
    F = np.asarray(F, dtype=np.float64)
    if F.ndim != 2:
        raise ValueError("features must be a 2D array")
    m, d = F.shape
    if not 1 <= k <= min(m, d):
        raise ValueError(f"need 1 <= k <= min(m, d) = {min(m, d)}, got {k}")
    Fc = F - F.mean(axis=0)
    U, S, _ = np.linalg.svd(Fc, full_matrices=False)
    X = _canonical_signs(U[:, :k] * S[:k])
    return Embedding(X, {"method": "svd", "singular_values": S[:k].tolist()})


def knn_graph(D, k_neighbors):
    """Symmetrized k-nearest-neighbour graph (union of directed neighbour sets)."""
    m = D.shape[0]
    if not 1 <= k_neighbors < m:
        raise ValueError(f"need 1 <= k_neighbors < m, got {k_neighbors}")
    rows, cols, vals = [], [], []
    for i in range(m):
        order = np.argsort(D[i], kind="stable")
        nb = [j for j in order if j != i][:k_neighbors]
        rows.extend([i] * len(nb))
        cols.extend(nb)
        vals.extend(D[i, nb])
    vals = np.maximum(np.array(vals), np.finfo(float).tiny)  # keep zero-length edges
    G = csr_matrix((vals, (rows, cols)), shape=(m, m))
    return G.maximum(G.T)


def isomap(X, k_neighbors=5, k=2, features=False):
    """Isomap: kNN graph, graph geodesics, then classical MDS.

    Parameters
    ----------
    X : array_like
        Distance matrix, or a feature matrix when ``features`` is true.
    k_neighbors : int
    k : int
        Target dimension.
    """
    D = pairwise_euclidean(X) if features else check_distance_matrix(X)
    G = knn_graph(D, k_neighbors)
    n_comp, _ = connected_components(G, directed=False)
    if n_comp > 1:
        raise GraphError(f"neighbourhood graph is disconnected ({n_comp} components); "
                         "increase k_neighbors")
    geo = shortest_path(G, method="D", directed=False)
    geo = 0.5 * (geo + geo.T)
    emb = classical_mds(geo, k)
    meta = dict(emb.metadata, method="isomap", k_neighbors=k_neighbors)
    return Embedding(emb.points, meta)


def procrustes_align(X, Y):
    """Rigid (rotation, reflection, translation) alignment of ``X`` onto ``Y``.

    Returns
    -------
    residual : float
        RMS misfit after alignment divided by the RMS radius of ``Y``.
    aligned : ndarray
        ``X`` moved onto ``Y``.
    """
    X = np.asarray(X.points if isinstance(X, Embedding) else X, dtype=np.float64)
    Y = np.asarray(Y, dtype=np.float64)
    if X.shape != Y.shape:
        raise ValueError(f"shape mismatch {X.shape} vs {Y.shape}")
    my, mx = Y.mean(axis=0), X.mean(axis=0)
    Yc, Xc = Y - my, X - mx
    radius = np.sqrt((Yc**2).sum(axis=1).mean())
    if radius == 0:
        raise ValueError("degenerate reference: all points identical")
    U, _, Vt = np.linalg.svd(Xc.T @ Yc)
    aligned = Xc @ (U @ Vt) + my
    rms = np.sqrt(((aligned - Y) ** 2).sum(axis=1).mean())
    return float(rms / radius), aligned


def rescale_to_reference(D, anchor_value):
    """Scale ``D`` so its largest entry equals ``anchor_value``."""
    D = np.asarray(D, dtype=np.float64)
    top = D.max(initial=0.0)
    if not top > 0:
        raise ValueError("cannot rescale an all-zero matrix")
    return D * (anchor_value / top)


def frobenius_relative_error(D_approx, D_ref):
    A = np.asarray(D_approx, dtype=np.float64)
    B = np.asarray(D_ref, dtype=np.float64)
    if A.shape != B.shape:
        raise ValueError(f"size mismatch {A.shape} vs {B.shape}")
    nb = np.linalg.norm(B)
    if nb == 0:
        raise ValueError("reference matrix is zero")
    return float(np.linalg.norm(A - B) / nb)


def save_matrix(D, path):
    """Dense CSV with a header row and a leading column of sample indices."""
    D = np.asarray(D)
    m = D.shape[0]
    header = "index," + ",".join(str(j) for j in range(m))
    body = np.column_stack((np.arange(m), D))
    np.savetxt(path, body, delimiter=",", header=header, comments="",
               fmt=["%d"] + ["%.17g"] * m)


def load_matrix(path):
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"matrix file not found: {path}")
    arr = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return arr[:, 1:]
