"""End-to-end manifold experiments: generate a family, compute distances, embed, score."""

import copy
import csv
import json
import math
import statistics
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import embedding as emb
from ._parallel import get_threads
from .measures import (
    ShapeSpec,
    TransformSpec,
    apply_transform,
    load_mnist_idx,
    padded_frame,
    rotation_matrix,
)
from .slicing import SlicingSchedule, features_for, distance_matrix_from_features
from .transport import (
    RotationOracleParams,
    analytic_rotation_matrix,
    default_lot_reference,
    dilation_matrix,
    lot_distance_matrix,
    lot_embed,
    rhombus_witness,
    second_moments,
    translation_matrix,
    w2_distance_matrix,
)

FAMILIES = ("translation", "dilation", "rotation", "mnist")
METHODS = ("pixel_euclidean", "w2_exact", "w2_analytic", "lot", "nc_mass", "nc_geom")

DEFAULT_SETTINGS = {
    "nc_mass": {"cuts": 2, "p": 2.0, "weighting": "mass", "first_axis": "vertical"},
    "nc_geom": {"cuts": 2, "p": 2.0, "weighting": "mass", "first_axis": "vertical"},
    "lot": {"resolution": 32, "mean": None, "cov": [[25.0, 0.0], [0.0, 25.0]]},
    "w2_exact": {"max_samples": None},
    "embedding": {"method": "smacof", "k": 2, "restarts": 4, "max_iter": 300,
                  "k_neighbors": 5},
}
MNIST_EXACT_LIMIT = 200


class SpecError(ValueError):
    pass


def _merge(defaults, override):
    out = copy.deepcopy(defaults)
    for k, v in (override or {}).items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _merge(out[k], v)
        else:
            out[k] = v
    return out


@dataclass
class ExperimentSpec:
    """Inputs of one experiment.

    ``params`` describes the parameter set: ``{"grid": {"x": [lo, hi, count],
    "y": [lo, hi, count]}}`` or ``{"thetas": [[x, y], ...]}`` for translations
    and dilations, ``{"angles": count}`` (equispaced on ``[0, 2 pi)``) or
    ``{"angles": [...]}`` for rotations. Explicit translation lists may add
    ``"lattice_step"`` so the frame makes every shift a whole number of
    pixels. MNIST runs read ``mnist`` instead: ``{"images", "labels",
    "digits", "limit"}``.
    """

    family: str
    methods: list
    n: int = 128
    base: dict = None
    params: dict = None
    settings: dict = field(default_factory=dict)
    seed: int = 0
    supersample: int = 4
    mnist: dict = None

    REQUIRED = {
        "translation": ("family", "methods", "n", "base", "params"),
        "dilation": ("family", "methods", "n", "base", "params"),
        "rotation": ("family", "methods", "n", "base", "params"),
        "mnist": ("family", "methods", "mnist"),
    }

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise SpecError(f"unknown family {self.family!r}; expected one of {FAMILIES}")
        bad = [m for m in self.methods if m not in METHODS]
        if bad:
            raise SpecError(f"unknown methods {bad}; expected a subset of {METHODS}")
        if not self.methods:
            raise SpecError("methods is empty")
        if self.family != "mnist" and int(self.n) < 16:
            raise SpecError("grid size n must be at least 16")
        if self.family == "mnist" and "w2_analytic" in self.methods:
            raise SpecError("no closed form exists for the mnist family")
        self.settings = _merge(DEFAULT_SETTINGS, self.settings)
        if self.family != "mnist" and not len(self.parameters()):
            raise SpecError("parameter set is empty")

    @classmethod
    def from_dict(cls, d):
        if not isinstance(d, dict):
            raise SpecError("spec must be a JSON object")
        fam = d.get("family")
        req = cls.REQUIRED.get(fam, ("family", "methods"))
        missing = [k for k in req if k not in d]
        if fam is not None and fam not in FAMILIES:
            raise SpecError(f"unknown family {fam!r}; expected one of {FAMILIES}")
        if missing:
            raise SpecError(f"spec is missing required fields: {', '.join(missing)}")
        known = {"family", "methods", "n", "base", "params", "settings", "seed",
                 "supersample", "mnist"}
        extra = sorted(set(d) - known)
        if extra:
            raise SpecError(f"spec has unknown fields: {', '.join(extra)}")
        return cls(**{k: v for k, v in d.items()})

    @classmethod
    def from_json(cls, path):
        path = Path(path)
        try:
            d = json.loads(path.read_text())
        except json.JSONDecodeError as e:
            raise SpecError(f"{path}: invalid JSON ({e})") from None
        return cls.from_dict(d)

    def to_dict(self):
        out = {"family": self.family, "methods": list(self.methods), "n": self.n,
               "base": self.base, "params": self.params, "settings": self.settings,
               "seed": self.seed, "supersample": self.supersample}
        if self.mnist is not None:
            out["mnist"] = self.mnist
        return out

    def base_shape(self):
        return ShapeSpec.from_dict(self.base)

    def parameters(self):
        """Parameter list: ``(m, 2)`` array, or angles ``(m,)`` for rotations."""
        p = self.params or {}
        if self.family == "rotation":
            a = p.get("angles", 16)
            if isinstance(a, (int, float)) and not isinstance(a, bool):
                return 2.0 * math.pi * np.arange(int(a)) / int(a)
            return np.asarray(a, dtype=np.float64)
        if "thetas" in p:
            th = np.asarray(p["thetas"], dtype=np.float64).reshape(-1, 2)
        elif "grid" in p:
            gx = np.linspace(*p["grid"]["x"][:2], int(p["grid"]["x"][2]))
            gy = np.linspace(*p["grid"]["y"][:2], int(p["grid"]["y"][2]))
            th = np.array([(x, y) for y in gy for x in gx])
        else:
            raise SpecError("params needs 'grid' or 'thetas'")
        if self.family == "dilation" and np.any(th <= 0):
            raise SpecError("dilation parameters must be positive")
        return th

    def lattice_step(self):
        """Common step of a translation grid, used to make shifts whole pixels."""
        p = self.params or {}
        if self.family != "translation":
            return None
        if "lattice_step" in p:
            return float(p["lattice_step"])
        if "grid" not in p:
            return None
        steps = []
        for ax in ("x", "y"):
            lo, hi, cnt = p["grid"][ax]
            if int(cnt) > 1:
                steps.append((hi - lo) / (int(cnt) - 1))
        if steps and all(abs(s - steps[0]) <= 1e-12 * abs(steps[0]) for s in steps):
            return abs(steps[0])
        return None


@dataclass
class ExperimentReport:
    """Matrices, embeddings and scores of one run."""

    spec: dict
    matrices: dict = field(default_factory=dict)
    embeddings: dict = field(default_factory=dict)
    errors: dict = field(default_factory=dict)
    errors_raw: dict = field(default_factory=dict)
    residuals: dict = field(default_factory=dict)
    witness: dict = field(default_factory=dict)
    timings: dict = field(default_factory=dict)
    failures: dict = field(default_factory=dict)
    reference: str = None
    extra: dict = field(default_factory=dict)
    threads: int = 1

    def summary(self):
        return emb._jsonable({
            "reference": self.reference,
            "errors": self.errors,
            "errors_raw": self.errors_raw,
            "residuals": self.residuals,
            "witness": self.witness,
            "failures": self.failures,
            "extra": self.extra,
            "threads": self.threads,
            "timings": self.timings,
        })

    def write(self, out_dir):
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "spec.json").write_text(json.dumps(emb._jsonable(self.spec), indent=2) + "\n")
        for name, D in self.matrices.items():
            emb.save_matrix(D, out / f"D_{name}.csv")
        for name, e in self.embeddings.items():
            e.to_csv(out / f"E_{name}.csv")
        (out / "report.json").write_text(json.dumps(self.summary(), indent=2, sort_keys=True) + "\n")
        return out


def generate_family(spec):
    """Rasterize every member of a synthetic family.

    Returns
    -------
    densities : list of GridDensity
    frame : Frame
    base_density : GridDensity
        The untransformed base shape on the same frame.
    """
    base = spec.base_shape()
    params = spec.parameters()
    if spec.family == "translation":
        ts = [TransformSpec.translate(t) for t in params]
    elif spec.family == "dilation":
        ts = [TransformSpec.dilate(t) for t in params]
    elif spec.family == "rotation":
        ts = [TransformSpec.rotate(t) for t in params]
    else:
        raise SpecError(f"family {spec.family!r} is not synthetic")
    shapes = [apply_transform(base, t) for t in ts]
    frame = padded_frame(shapes + [base], spec.n, lattice_step=spec.lattice_step())
    ss = spec.supersample
    ds = [frame.rasterize(s, supersample=ss) for s in shapes]
    return ds, frame, frame.rasterize(base, supersample=ss)


def ground_truth(spec, base_density):
    """Analytic distance matrix and the parameter points it is isometric to (if any)."""
    params = spec.parameters()
    if spec.family == "translation":
        return translation_matrix(params), params
    if spec.family == "dilation":
        c = second_moments(base_density)
        return dilation_matrix(params, c), params * c[None, :]
    if spec.family == "rotation":
        shape = spec.base_shape()
        oracle = RotationOracleParams.from_shape(shape, "ellipse_w2")
        D = analytic_rotation_matrix(oracle, params)
        pts = None
        if shape.kind == "disk" or (shape.axis_aligned and shape.covariance[0][0] == shape.covariance[1][1]):
            pts = np.array([rotation_matrix(t) @ shape.u for t in params])
            if np.allclose(pts, pts[0]):
                pts = None
        return D, pts
    raise SpecError("no closed form for this family")


def _nc_matrix(ds, settings, kind):
    sched = SlicingSchedule(int(settings["cuts"]), settings.get("first_axis", "vertical"))
    fs = features_for(ds, sched)
    return distance_matrix_from_features(fs, float(settings["p"]), kind, settings["weighting"]), fs


def _lot_matrix(ds, frame, settings):
    mean = settings.get("mean")
    if mean is None:
        mean = (0.0, 0.0)
    ref = default_lot_reference(frame, int(settings["resolution"]), tuple(mean), settings["cov"])
    e = lot_embed(ref, ds)
    return lot_distance_matrix(e), e


def _embed(D, settings, seed):
    method = settings["method"]
    k = int(settings["k"])
    if method == "smacof":
        return emb.smacof_mds(D, k, seed=seed, restarts=int(settings["restarts"]),
                              max_iter=int(settings["max_iter"]))
    if method == "classical":
        return emb.classical_mds(D, k)
    if method == "isomap":
        return emb.isomap(D, int(settings["k_neighbors"]), k)
    raise SpecError(f"unknown embedding method {method!r}")


def _quarter_turn_indices(angles):
    idx = []
    for q in range(4):
        target = q * 0.5 * math.pi
        hit = np.nonzero(np.abs(np.mod(angles - target + math.pi, 2 * math.pi) - math.pi) < 1e-9)[0]
        if hit.size == 0:
            return None
        idx.append(int(hit[0]))
    return idx


def _timed(fn):
    t0 = time.perf_counter()
    out = fn()
    return out, max(time.perf_counter() - t0, 1e-9)


def compute_matrices(spec, ds, frame=None, report=None, exact_limit=None):
    """Run every requested distance method; failures are recorded, not raised."""
    report = report if report is not None else ExperimentReport(spec.to_dict())
    extras = {}
    for method in spec.methods:
        if method == "w2_analytic":
            continue
        try:
            if method == "pixel_euclidean":
                D, t = _timed(lambda: emb.pairwise_euclidean(
                    np.array([d.mass.ravel() for d in ds])))
            elif method == "w2_exact":
                limit = spec.settings["w2_exact"].get("max_samples") or exact_limit
                if limit is not None and len(ds) > limit:
                    raise RuntimeError(f"exact W2 disabled above {limit} samples "
                                       "(raise settings.w2_exact.max_samples to enable)")
                D, t = _timed(lambda: w2_distance_matrix(ds))
            elif method == "lot":
                (D, e), t = _timed(lambda: _lot_matrix(ds, frame, spec.settings["lot"]))
                extras["lot"] = e
            else:
                kind = "mass_center" if method == "nc_mass" else "geom_center"
                (D, fs), t = _timed(lambda: _nc_matrix(ds, spec.settings[method], kind))
                extras[method] = fs
            emb.check_distance_matrix(D, tol=1e-9)
            report.matrices[method] = D
            report.timings[method] = t
        except Exception as e:  # noqa: BLE001 - recorded in the report
            report.failures[method] = f"{type(e).__name__}: {e}"
    return report, extras


def run_experiment(spec, out_dir=None):
    """Run a synthetic-family experiment (or dispatch to :func:`mnist_pipeline`).

    The closed-form matrix is the reference. Every other matrix is rescaled
    so its maximum matches the reference maximum before its relative
    Frobenius error is taken (``errors``); ``errors_raw`` holds the
    unrescaled errors. The exact solver is scored unrescaled in ``errors``
    since it is meant to match the reference without calibration.
    """
    if isinstance(spec, dict):
        spec = ExperimentSpec.from_dict(spec)
    if spec.family == "mnist":
        return mnist_pipeline(spec, out_dir)
    report = ExperimentReport(spec.to_dict(), threads=get_threads())
    ds, frame, base_d = generate_family(spec)
    ref, truth_pts = ground_truth(spec, base_d)
    report.reference = "w2_analytic"
    report.extra["frame"] = frame.to_dict()
    report.extra["n_samples"] = len(ds)
    if spec.family == "rotation":
        report.extra["angles"] = spec.parameters().tolist()
    if spec.family == "dilation":
        report.extra["second_moments"] = second_moments(base_d).tolist()
    report.matrices["w2_analytic"] = ref
    compute_matrices(spec, ds, frame, report)
    _score(spec, report, ref, truth_pts)
    if "w2_analytic" not in spec.methods:
        report.matrices.pop("w2_analytic", None)
        report.embeddings.pop("w2_analytic", None)
    if out_dir is not None:
        report.write(out_dir)
    return report


def _score(spec, report, ref, truth_pts):
    anchor = ref.max()
    quarter = _quarter_turn_indices(spec.parameters()) if spec.family == "rotation" else None
    for name, D in list(report.matrices.items()):
        if name != "w2_analytic":
            report.errors_raw[name] = emb.frobenius_relative_error(D, ref)
        scaled = D if name in ("w2_analytic", "w2_exact") else emb.rescale_to_reference(D, anchor)
        if name != "w2_analytic":
            report.errors[name] = emb.frobenius_relative_error(scaled, ref)
        try:
            e = _embed(scaled, spec.settings["embedding"], spec.seed)
            report.embeddings[name] = e
            if truth_pts is not None:
                report.residuals[name] = emb.procrustes_align(e.points, truth_pts)[0]
        except Exception as ex:  # noqa: BLE001
            report.failures[f"embed_{name}"] = f"{type(ex).__name__}: {ex}"
        if quarter is not None:
            report.witness[name] = rhombus_witness(scaled[np.ix_(quarter, quarter)])


def mnist_pipeline(spec, out_dir=None):
    """Digits from IDX files: NC features, pixel and optional LOT/W2 distances,
    Isomap to 2D, and 2-means purity against the labels."""
    from sklearn.cluster import KMeans

    if isinstance(spec, dict):
        spec = ExperimentSpec.from_dict(spec)
    cfg = spec.mnist or {}
    for key in ("images", "labels"):
        if key not in cfg:
            raise SpecError(f"mnist settings are missing {key!r}")
    for key in ("images", "labels"):
        if not Path(cfg[key]).exists():
            raise FileNotFoundError(f"MNIST file not found: {cfg[key]}")
    digits = cfg.get("digits", [0, 1])
    limit = cfg.get("limit", 600)
    pairs = load_mnist_idx(cfg["images"], cfg["labels"], set(digits), limit)
    if len(pairs) < 2:
        raise SpecError("need at least two digits")
    ds = [p[0] for p in pairs]
    labels = np.array([p[1] for p in pairs])
    frame = ds[0].frame
    if spec.settings["lot"].get("mean") is None:
        centre = [frame.origin[0] + 0.5 * frame.width * frame.spacing,
                  frame.origin[1] + 0.5 * frame.height * frame.spacing]
        spec.settings["lot"]["mean"] = centre
    report = ExperimentReport(spec.to_dict(), threads=get_threads())
    report.extra["labels"] = labels.tolist()
    report.extra["n_samples"] = len(ds)
    compute_matrices(spec, ds, frame, report, exact_limit=MNIST_EXACT_LIMIT)
    est = dict(spec.settings["embedding"])
    est["method"] = "isomap" if est.get("method") == "smacof" else est["method"]
    purity = {}
    for name, D in report.matrices.items():
        try:
            e = _embed(D, est, spec.seed)
            report.embeddings[name] = e
            km = KMeans(n_clusters=2, n_init=10, random_state=spec.seed).fit(e.points)
            purity[name] = cluster_purity(km.labels_, labels)
        except Exception as ex:  # noqa: BLE001
            report.failures[f"embed_{name}"] = f"{type(ex).__name__}: {ex}"
    report.extra["purity"] = purity
    if "w2_exact" in report.matrices:
        report.reference = "w2_exact"
        ref = report.matrices["w2_exact"]
        for name, D in report.matrices.items():
            if name != "w2_exact":
                report.errors_raw[name] = emb.frobenius_relative_error(D, ref)
                report.errors[name] = emb.frobenius_relative_error(
                    emb.rescale_to_reference(D, ref.max()), ref)
    if out_dir is not None:
        report.write(out_dir)
    return report


def cluster_purity(assigned, labels):
    """Fraction of samples carrying the majority label of their cluster."""
    assigned = np.asarray(assigned)
    labels = np.asarray(labels)
    total = 0
    for c in np.unique(assigned):
        _, counts = np.unique(labels[assigned == c], return_counts=True)
        total += counts.max()
    return float(total / len(labels))


# ---------------------------------------------------------------------------
# Timing
# ---------------------------------------------------------------------------


def translation_thetas(count, lo=-1.0, hi=1.0):
    """First ``count`` points of the smallest square grid on ``[lo, hi]^2`` holding them."""
    g = max(1, math.ceil(math.sqrt(count)))
    axis = np.linspace(lo, hi, g) if g > 1 else np.array([0.5 * (lo + hi)])
    pts = np.array([(x, y) for y in axis for x in axis])
    return pts[:count], (axis[1] - axis[0]) if g > 1 else None


def timing_sweep(family, sizes, methods, settings=None, n=128, repeats=3, timeout=None,
                 cuts=(2,)):
    """Median wall-clock time to build each distance matrix.

    Parameters
    ----------
    family : {"translation", "dilation", "rotation"}
    sizes : list of int
        Sample counts, ascending.
    methods : list of str
        Distance methods; ``nc_mass``/``nc_geom`` are timed once per entry of ``cuts``.
    settings : dict, optional
        Per-method overrides as in :class:`ExperimentSpec`.
    repeats : int
        Runs per cell (at least 3); the median is reported.
    timeout : float, optional
        A cell whose first run exceeds this many seconds is marked
        ``timeout`` and larger sizes of that method are skipped.

    Returns
    -------
    list of dict
        Rows with ``method, cuts, size, seconds, repeats, status, threads``.
    """
    sizes = list(sizes)
    if sizes != sorted(sizes):
        raise ValueError("sizes must be ascending")
    if repeats < 3:
        raise ValueError("timing needs at least 3 repetitions")
    settings = _merge(DEFAULT_SETTINGS, settings)
    rows = []
    timed_out = set()
    for size in sizes:
        spec = _sweep_spec(family, size, n, methods, settings)
        ds, frame, _ = generate_family(spec)
        for method in methods:
            variants = cuts if method in ("nc_mass", "nc_geom") else (None,)
            for N in variants:
                key = (method, N)
                row = {"method": method, "cuts": "" if N is None else N, "size": size,
                       "seconds": "", "repeats": 0, "status": "ok", "threads": get_threads()}
                if key in timed_out:
                    row["status"] = "skipped"
                    rows.append(row)
                    continue
                sub = copy.deepcopy(spec)
                sub.methods = [method]
                if N is not None:
                    sub.settings[method]["cuts"] = N
                times = []
                for _ in range(repeats):
                    t = _time_method(sub, ds, frame, method)
                    times.append(t)
                    if timeout is not None and t > timeout:
                        break
                if timeout is not None and times[0] > timeout:
                    row["status"] = "timeout"
                    timed_out.add(key)
                row["seconds"] = statistics.median(times)
                row["repeats"] = len(times)
                rows.append(row)
    return rows


def _sweep_spec(family, size, n, methods, settings):
    if family == "translation":
        th, step = translation_thetas(size)
        params = {"thetas": th.tolist()}
        if step is not None:
            params["lattice_step"] = step
        base = {"kind": "disk", "center": [0, 0], "radius": 1.0}
    elif family == "dilation":
        th, _ = translation_thetas(size, 0.5, 2.0)
        params = {"thetas": th.tolist()}
        base = {"kind": "disk", "center": [0, 0], "radius": 1.0}
    elif family == "rotation":
        params = {"angles": int(size)}
        base = {"kind": "ellipse", "center": [0, 1], "a": 2.0, "b": 2.0}
    else:
        raise ValueError(f"timing sweeps support synthetic families, not {family!r}")
    methods = [m for m in methods if m != "w2_analytic"] or ["nc_mass"]
    spec = ExperimentSpec(family, methods, n=n, base=base, params=params, settings=settings)
    return spec


def _time_method(spec, ds, frame, method):
    if len(ds) < 2:
        return 0.0
    if method == "w2_analytic":
        t0 = time.perf_counter()
        ground_truth(spec, ds[0])
        return time.perf_counter() - t0
    rep, _ = compute_matrices(spec, ds, frame)
    if method in rep.failures:
        raise RuntimeError(rep.failures[method])
    return rep.timings[method]


def write_timing_csv(rows, path):
    cols = ["method", "cuts", "size", "seconds", "repeats", "status", "threads"]
    with open(path, "w", newline="") as fh:
        wr = csv.DictWriter(fh, fieldnames=cols)
        wr.writeheader()
        for r in rows:
            wr.writerow({k: r[k] for k in cols})


# ---------------------------------------------------------------------------
# Presets
# ---------------------------------------------------------------------------

PRESETS = {
    "translation": {
        "family": "translation",
        "methods": ["w2_analytic", "w2_exact", "lot", "nc_mass", "nc_geom"],
        "n": 128,
        "base": {"kind": "disk", "center": [0.0, 0.0], "radius": 1.0},
        "params": {"grid": {"x": [-1.0, 1.0, 4], "y": [-1.0, 1.0, 4]}},
        "settings": {"nc_mass": {"cuts": 2}, "nc_geom": {"cuts": 2}},
    },
    "translation-5x5": {
        "family": "translation",
        "methods": ["w2_analytic", "nc_mass", "nc_geom"],
        "n": 128,
        "base": {"kind": "disk", "center": [0.0, 0.0], "radius": 1.0},
        "params": {"grid": {"x": [-1.0, 1.0, 5], "y": [-1.0, 1.0, 5]}},
        "settings": {"nc_mass": {"cuts": 2}, "nc_geom": {"cuts": 2}},
    },
    "dilation": {
        "family": "dilation",
        "methods": ["w2_analytic", "lot", "nc_mass", "nc_geom"],
        "n": 128,
        "base": {"kind": "disk", "center": [0.0, 0.0], "radius": 1.0},
        "params": {"grid": {"x": [0.5, 2.0, 6], "y": [0.5, 4.0, 6]}},
        "settings": {"nc_mass": {"cuts": 3}, "nc_geom": {"cuts": 6}},
    },
    "rotation-ellipse": {
        "family": "rotation",
        "methods": ["w2_analytic", "w2_exact", "lot", "nc_mass", "nc_geom"],
        "n": 128,
        "base": {"kind": "ellipse", "center": [0.0, 1.0], "a": 5.0, "b": 2.0},
        "params": {"angles": 16},
        "settings": {"nc_mass": {"cuts": 3}, "nc_geom": {"cuts": 8}},
    },
    "rotation-disk": {
        "family": "rotation",
        "methods": ["w2_analytic", "lot", "nc_mass", "nc_geom"],
        "n": 128,
        "base": {"kind": "ellipse", "center": [0.0, 1.0], "a": 2.0, "b": 2.0},
        "params": {"angles": 16},
        "settings": {"nc_mass": {"cuts": 2}, "nc_geom": {"cuts": 4}},
    },
    "mnist": {
        "family": "mnist",
        "methods": ["pixel_euclidean", "nc_mass"],
        "mnist": {"images": "train-images-idx3-ubyte.gz", "labels": "train-labels-idx1-ubyte.gz",
                  "digits": [0, 1], "limit": 600},
        "settings": {"nc_mass": {"cuts": 4}, "embedding": {"method": "isomap", "k_neighbors": 5}},
    },
}


def preset(name):
    if name not in PRESETS:
        raise SpecError(f"unknown preset {name!r}; available: {', '.join(sorted(PRESETS))}")
    return ExperimentSpec.from_dict(copy.deepcopy(PRESETS[name]))
