"""Command-line interface: ``nocollide <subcommand> [flags]``."""

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import embedding as emb
from . import experiments as ex
from ._parallel import set_threads
from .measures import Frame, load_density, save_density
from .slicing import (
    FEATURE_KINDS,
    FeatureSet,
    SlicingSchedule,
    distance_matrix_from_features,
    feature_matrix,
    features_for,
    save_features,
)
from .transport import lot_distance_matrix, lot_embed, default_lot_reference, w2_distance_matrix

DISTANCE_METHODS = {
    "nc-mass": "nc_mass",
    "nc-geom": "nc_geom",
    "w2-exact": "w2_exact",
    "w2-analytic": "w2_analytic",
    "lot": "lot",
    "pixel": "pixel_euclidean",
}


class UsageError(Exception):
    """Bad invocation; reported with exit status 2."""


def _pair(text, name):
    try:
        vals = [float(v) for v in text.split(",")]
    except ValueError:
        raise UsageError(f"--{name} expects two comma-separated numbers, got {text!r}") from None
    if len(vals) != 2:
        raise UsageError(f"--{name} expects two comma-separated numbers, got {text!r}")
    return vals


def _grid(text):
    try:
        gx, gy = (int(v) for v in text.lower().split("x"))
    except ValueError:
        raise UsageError(f"--grid expects COLSxROWS, e.g. 4x4, got {text!r}") from None
    if gx < 1 or gy < 1:
        raise UsageError("--grid dimensions must be positive")
    return gx, gy


def _int_list(text, name):
    try:
        vals = [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise UsageError(f"--{name} expects comma-separated integers, got {text!r}") from None
    if not vals:
        raise UsageError(f"--{name} is empty")
    return vals


def _write_matrix(D, out_dir, stem, fmt):
    out_dir.mkdir(parents=True, exist_ok=True)
    if fmt == "json":
        p = out_dir / f"{stem}.json"
        p.write_text(json.dumps({"matrix": np.asarray(D).tolist()}) + "\n")
    else:
        p = out_dir / f"{stem}.csv"
        emb.save_matrix(D, p)
    return p


def _read_matrix(path):
    path = Path(path)
    if not path.exists():
        raise UsageError(f"input matrix not found: {path}")
    if path.suffix == ".json":
        return np.array(json.loads(path.read_text())["matrix"], dtype=np.float64)
    return emb.load_matrix(path)


def _load_inputs(input_dir):
    d = Path(input_dir)
    if not d.is_dir():
        raise UsageError(f"input directory not found: {d}")
    files = sorted(d.glob("density_*.csv"))
    if not files:
        raise UsageError(f"no density_*.csv files in {d}")
    manifest = d / "manifest.json"
    meta = json.loads(manifest.read_text()) if manifest.exists() else None
    return [load_density(f) for f in files], meta


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def cmd_gen(args):
    fam = args.family
    if args.n < 16:
        raise UsageError("--n must be at least 16")
    if args.supersample < 1:
        raise UsageError("--supersample must be positive")
    if fam == "rotation":
        if args.a <= 0 or args.b <= 0:
            raise UsageError("--a and --b must be positive")
        if args.angles < 1:
            raise UsageError("--angles must be positive")
        base = {"kind": "ellipse", "center": _pair(args.u, "u"), "a": args.a, "b": args.b}
        params = {"angles": args.angles}
    else:
        if args.radius <= 0:
            raise UsageError("--radius must be positive")
        gx, gy = _grid(args.grid)
        rx = _pair(args.range, "range")
        ry = _pair(args.range_y, "range-y") if args.range_y else rx
        if fam == "dilation" and min(rx + ry) <= 0:
            raise UsageError("dilation ranges must be positive")
        base = {"kind": "disk", "center": [0.0, 0.0], "radius": args.radius}
        params = {"grid": {"x": [rx[0], rx[1], gx], "y": [ry[0], ry[1], gy]}}
    try:
        spec = ex.ExperimentSpec(fam, ["w2_analytic"], n=args.n, base=base, params=params,
                                 seed=args.seed, supersample=args.supersample)
        ds, frame, _ = ex.generate_family(spec)
    except ValueError as e:
        raise UsageError(str(e)) from None
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    files = []
    for k, d in enumerate(ds):
        p = out / f"density_{k:04d}.csv"
        save_density(d, p)
        files.append(p.name)
    manifest = {"spec": spec.to_dict(), "frame": frame.to_dict(), "files": files,
                "parameters": spec.parameters().tolist()}
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")
    print(f"wrote {len(ds)} densities to {out}")
    return 0


def cmd_distmat(args):
    method = DISTANCE_METHODS[args.method]
    ds, meta = _load_inputs(args.input_dir)
    if len(ds) < 2:
        raise UsageError("need at least two densities")
    if args.cuts < 0:
        raise UsageError("--cuts must be nonnegative")
    if args.p < 1:
        raise UsageError("--p must be >= 1")
    if method == "w2_analytic":
        if meta is None:
            raise UsageError("w2-analytic needs the manifest.json written by `gen`")
        spec = ex.ExperimentSpec.from_dict(meta["spec"])
        if args.family and args.family != spec.family:
            raise UsageError(f"--family {args.family} disagrees with manifest ({spec.family})")
        frame = Frame(**meta["frame"])
        D, _ = ex.ground_truth(spec, frame.rasterize(spec.base_shape(), spec.supersample))
    elif method in ("nc_mass", "nc_geom"):
        kind = "mass_center" if method == "nc_mass" else "geom_center"
        fs = features_for(ds, SlicingSchedule(args.cuts, args.first_axis))
        D = distance_matrix_from_features(fs, args.p, kind, args.weighting)
    elif method == "w2_exact":
        D = w2_distance_matrix(ds)
    elif method == "lot":
        ref = default_lot_reference(ds[0].frame, args.lot_resolution)
        D = lot_distance_matrix(lot_embed(ref, ds))
    else:
        D = emb.pairwise_euclidean(np.array([d.mass.ravel() for d in ds]))
    p = _write_matrix(D, Path(args.out_dir), f"D_{method}", args.format)
    print(f"wrote {D.shape[0]}x{D.shape[1]} matrix to {p}")
    return 0


def cmd_features(args):
    ds, _ = _load_inputs(args.input_dir)
    if args.cuts < 0:
        raise UsageError("--cuts must be nonnegative")
    fs = features_for(ds, SlicingSchedule(args.cuts, args.first_axis))
    paths = save_features(fs, args.out_dir)
    print(f"wrote {len(paths)} feature files to {args.out_dir}")
    return 0


def cmd_embed(args):
    if args.k < 1:
        raise UsageError("--k must be positive")
    if args.method == "svd":
        if not args.features_dir:
            raise UsageError("svd embeds feature CSVs; pass --features-dir")
        d = Path(args.features_dir)
        files = sorted(d.glob("features_*.csv")) if d.is_dir() else []
        if not files:
            raise UsageError(f"no features_*.csv files in {d}")
        fs = [FeatureSet.from_csv(f) for f in files]
        F = feature_matrix(fs, args.feature_kind, args.weighting)
        if args.k > min(F.shape):
            raise UsageError(f"--k must be at most {min(F.shape)} for this feature matrix")
        e = emb.svd_embed(F, args.k)
    else:
        if not args.input:
            raise UsageError(f"{args.method} embeds a distance matrix; pass --input")
        D = _read_matrix(args.input)
        if args.k >= D.shape[0]:
            raise UsageError(f"--k must be smaller than the number of samples ({D.shape[0]})")
        if args.method == "smacof":
            e = emb.smacof_mds(D, args.k, seed=args.seed, restarts=args.restarts,
                               max_iter=args.max_iter)
        elif args.method == "classical":
            e = emb.classical_mds(D, args.k)
        else:
            if not 1 <= args.k_neighbors < D.shape[0]:
                raise UsageError("--k-neighbors must be in [1, m)")
            e = emb.isomap(D, args.k_neighbors, args.k)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    if args.format == "json":
        p = out / f"E_{args.method}.json"
        p.write_text(json.dumps({"points": e.points.tolist(),
                                 "metadata": emb._jsonable(e.metadata)}) + "\n")
    else:
        p = out / f"E_{args.method}.csv"
        e.to_csv(p)
    print(f"wrote {e.points.shape[0]}x{e.points.shape[1]} embedding to {p}")
    return 0


def cmd_experiment(args):
    if bool(args.spec) == bool(args.preset):
        raise UsageError("pass exactly one of --spec or --preset")
    try:
        if args.spec:
            if not Path(args.spec).exists():
                raise UsageError(f"experiment file not found: {args.spec}")
            spec = ex.ExperimentSpec.from_json(args.spec)
        else:
            spec = ex.preset(args.preset)
    except ex.SpecError as e:
        raise UsageError(str(e)) from None
    if args.seed is not None:
        spec.seed = args.seed
    report = ex.run_experiment(spec, out_dir=args.out_dir)
    for name, err in sorted(report.errors.items()):
        print(f"{name:16s} relative error {100 * err:7.3f}%   time {report.timings.get(name, 0):.3f}s")
    for name, msg in sorted(report.failures.items()):
        print(f"{name:16s} FAILED: {msg}")
    print(f"report written to {args.out_dir}")
    return 0


def cmd_bench(args):
    sizes = _int_list(args.sizes, "sizes")
    if sizes != sorted(sizes):
        raise UsageError("--sizes must be ascending")
    methods = [DISTANCE_METHODS.get(m, m) for m in args.methods.split(",") if m]
    bad = [m for m in methods if m not in ex.METHODS]
    if bad:
        raise UsageError(f"unknown methods {bad}")
    cuts = _int_list(args.cuts, "cuts")
    if args.repeats < 3:
        raise UsageError("--repeats must be at least 3")
    rows = ex.timing_sweep(args.family, sizes, methods, n=args.n, repeats=args.repeats,
                           timeout=args.timeout, cuts=cuts)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    if args.format == "json":
        p = out / "timing.json"
        p.write_text(json.dumps(rows, indent=2) + "\n")
    else:
        p = out / "timing.csv"
        ex.write_timing_csv(rows, p)
    print(f"wrote {len(rows)} timing rows to {p}")
    return 0


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


def _threads(text):
    try:
        n = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError("must be an integer") from None
    if n < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return n


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None, help="random seed (default 0)")
    common.add_argument("--threads", type=_threads, default=None,
                        help="thread budget for pairwise work (env NOCOLLIDE_THREADS)")
    common.add_argument("--out-dir", default=".", help="directory for outputs (default: .)")
    common.add_argument("--format", choices=("csv", "json"), default="csv",
                        help="output format for matrices and embeddings")

    p = argparse.ArgumentParser(prog="nocollide", parents=[common],
                                description="No-collision transport distances and embeddings.")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", parents=[common], help="rasterize a synthetic family")
    g.add_argument("--family", choices=("translation", "dilation", "rotation"), required=True)
    g.add_argument("--grid", default="4x4", help="parameter grid COLSxROWS (translation/dilation)")
    g.add_argument("--range", default="-1,1", help="parameter range LO,HI for x (and y)")
    g.add_argument("--range-y", default=None, help="separate y range LO,HI")
    g.add_argument("--radius", type=float, default=1.0, help="base disk radius")
    g.add_argument("--a", type=float, default=5.0, help="ellipse semi-axis along x (rotation)")
    g.add_argument("--b", type=float, default=2.0, help="ellipse semi-axis along y (rotation)")
    g.add_argument("--u", default="0,1", help="ellipse center X,Y (rotation)")
    g.add_argument("--angles", type=int, default=16, help="equispaced rotation angles")
    g.add_argument("--n", type=int, default=128, help="grid size in pixels")
    g.add_argument("--supersample", type=int, default=4, help="samples per pixel side")
    g.set_defaults(func=cmd_gen)

    d = sub.add_parser("distmat", parents=[common], help="pairwise distance matrix")
    d.add_argument("--method", choices=sorted(DISTANCE_METHODS), required=True)
    d.add_argument("--input-dir", required=True, help="directory written by `gen`")
    d.add_argument("--cuts", type=int, default=2, help="slicing depth N (2**N cells)")
    d.add_argument("--p", type=float, default=2.0, help="exponent p >= 1")
    d.add_argument("--weighting", choices=("mass", "uniform"), default="mass")
    d.add_argument("--first-axis", choices=("vertical", "horizontal"), default="vertical")
    d.add_argument("--family", choices=("translation", "dilation", "rotation"), default=None,
                   help="family check for w2-analytic (read from manifest)")
    d.add_argument("--lot-resolution", type=int, default=32, help="LOT reference grid size")
    d.set_defaults(func=cmd_distmat)

    f = sub.add_parser("features", parents=[common], help="write no-collision feature CSVs")
    f.add_argument("--input-dir", required=True)
    f.add_argument("--cuts", type=int, default=2)
    f.add_argument("--first-axis", choices=("vertical", "horizontal"), default="vertical")
    f.set_defaults(func=cmd_features)

    e = sub.add_parser("embed", parents=[common], help="embed a distance or feature matrix")
    e.add_argument("--method", choices=("smacof", "classical", "svd", "isomap"), required=True)
    e.add_argument("--input", help="distance matrix CSV/JSON (smacof, classical, isomap)")
    e.add_argument("--features-dir", help="feature CSV directory (svd)")
    e.add_argument("--feature-kind", choices=FEATURE_KINDS, default="mass_center")
    e.add_argument("--weighting", choices=("mass", "uniform"), default="mass")
    e.add_argument("--k", type=int, default=2, help="embedding dimension")
    e.add_argument("--restarts", type=int, default=4)
    e.add_argument("--max-iter", type=int, default=300)
    e.add_argument("--k-neighbors", type=int, default=5)
    e.set_defaults(func=cmd_embed)

    x = sub.add_parser("experiment", parents=[common], help="run a JSON-described or preset experiment")
    x.add_argument("--spec", help="experiment description (JSON)")
    x.add_argument("--preset", choices=sorted(ex.PRESETS), help="built-in experiment")
    x.set_defaults(func=cmd_experiment)

    b = sub.add_parser("bench", parents=[common], help="timing sweep")
    b.add_argument("--family", choices=("translation", "dilation", "rotation"),
                   default="translation")
    b.add_argument("--sizes", required=True, help="ascending sample counts, e.g. 9,16,25,36")
    b.add_argument("--methods", default="nc_mass,lot,w2_exact")
    b.add_argument("--cuts", default="2", help="slicing depths for NC methods, e.g. 2,3,4")
    b.add_argument("--repeats", type=int, default=3)
    b.add_argument("--timeout", type=float, default=None, help="seconds per cell")
    b.add_argument("--n", type=int, default=128)
    b.set_defaults(func=cmd_bench)
    return p


_PAIR_FLAGS = ("--range", "--range-y", "--u")


def _glue_pairs(argv):
    # argparse reads "-1,1" as an option; attach such values to their flag
    out = []
    it = iter(argv)
    for tok in it:
        if tok in _PAIR_FLAGS:
            nxt = next(it, None)
            out.append(tok if nxt is None else f"{tok}={nxt}")
        else:
            out.append(tok)
    return out


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(_glue_pairs(sys.argv[1:] if argv is None else list(argv)))
    if args.seed is None and args.command != "experiment":
        args.seed = 0
    try:
        set_threads(args.threads)
        return args.func(args)
    except UsageError as e:
        parser.error(str(e))
    except FileNotFoundError as e:
        print(f"nocollide: error: {e}", file=sys.stderr)
        return 2
    except ValueError as e:
        print(f"nocollide: error: {e}", file=sys.stderr)
        return 1
    finally:
        set_threads(None)


if __name__ == "__main__":
    sys.exit(main())
