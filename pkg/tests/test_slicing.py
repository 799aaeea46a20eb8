import itertools
import math
from fractions import Fraction

import numpy as np
import pytest

from nocollide.measures import (
    Frame,
    GridDensity,
    ShapeSpec,
    TransformSpec,
    apply_transform,
    load_mnist_idx,
    padded_frame,
)
from nocollide.slicing import (
    FeatureSet,
    PartitionError,
    SlicingSchedule,
    feature_matrix,
    features,
    nc_distance,
    nc_distance_matrix,
    nc_features,
    partition,
    save_features,
)


# -- exact rational oracle ---------------------------------------------------


def _oracle_cells(mass, depth, first=0):
    """Equal-mass bisection with Fractions; cells as (x0, x1, y0, y1)."""
    h, w = len(mass), len(mass[0])

    def cover(lo, hi, i):
        return max(Fraction(0), min(hi, i + 1) - max(lo, i))

    def line_mass(c, axis):
        x0, x1, y0, y1 = c
        n = w if axis == 0 else h
        out = []
        for k in range(n):
            tot = Fraction(0)
            for j in range(h):
                for i in range(w):
                    if (i if axis == 0 else j) != k:
                        continue
                    tot += mass[j][i] * cover(x0, x1, i) * cover(y0, y1, j)
            out.append(tot)
        return out

    cells = [(Fraction(0), Fraction(w), Fraction(0), Fraction(h))]
    for level in range(depth):
        axis = (first + level) % 2
        nxt = []
        for c in cells:
            lm = line_mass(c, axis)
            half = sum(lm) / 2
            acc = Fraction(0)
            lo, hi = (c[0], c[1]) if axis == 0 else (c[2], c[3])
            for k, v in enumerate(lm):
                if v > 0 and acc + v >= half:
                    # density along the axis is constant on the covered piece of pixel k
                    a = max(lo, Fraction(k))
                    b = min(hi, Fraction(k + 1))
                    cut = a + (half - acc) / v * (b - a)
                    break
                acc += v
            if axis == 0:
                nxt += [(c[0], cut, c[2], c[3]), (cut, c[1], c[2], c[3])]
            else:
                nxt += [(c[0], c[1], c[2], cut), (c[0], c[1], cut, c[3])]
        cells = nxt
    return cells


def _oracle_mass_center(mass, c):
    h, w = len(mass), len(mass[0])
    x0, x1, y0, y1 = c
    tot = sx = sy = Fraction(0)
    for j in range(h):
        for i in range(w):
            a, b = max(x0, i), min(x1, i + 1)
            e, f = max(y0, j), min(y1, j + 1)
            if b <= a or f <= e or mass[j][i] == 0:
                continue
            m = mass[j][i] * (b - a) * (f - e)
            tot += m
            sx += m * (a + b) / 2
            sy += m * (e + f) / 2
    return tot, sx / tot, sy / tot


@pytest.mark.parametrize("seed", range(6))
@pytest.mark.parametrize("first", ["vertical", "horizontal"])
def test_partition_and_features_match_rational_oracle(seed, first):
    rng = np.random.default_rng(seed)
    h, w = rng.integers(4, 8, size=2)
    ints = rng.integers(1, 9, size=(h, w))
    ints[rng.random((h, w)) < 0.2] = 0
    total = int(ints.sum())
    frac = [[Fraction(int(v), total) for v in row] for row in ints]
    depth = 3
    sched = SlicingSchedule(depth, first)
    d = GridDensity(ints.astype(float), (0.0, 0.0), 1.0)
    part = partition(d, sched)
    fs = features(d, part)
    cells = _oracle_cells(frac, depth, 0 if first == "vertical" else 1)
    for k, (c, oc) in enumerate(zip(part.cells, cells)):
        np.testing.assert_allclose([c.x0, c.x1, c.y0, c.y1], [float(v) for v in oc], atol=1e-12)
        m, cx, cy = _oracle_mass_center(frac, oc)
        assert float(m) == pytest.approx(1 / 8, abs=1e-12)
        np.testing.assert_allclose(fs.mass_centers[k], [float(cx), float(cy)], atol=1e-12)


# -- partition ---------------------------------------------------------------


def test_uniform_4x4_quadrants():
    d = GridDensity(np.ones((4, 4)))
    part = partition(d, SlicingSchedule(2))
    assert part.addresses == ["00", "01", "10", "11"]
    np.testing.assert_allclose(part.masses, 0.25)
    boxes = {c.address: (c.x0, c.x1, c.y0, c.y1) for c in part.cells}
    # first bit: x side, second bit: y side
    assert boxes == {"00": (0, 2, 0, 2), "01": (0, 2, 2, 4), "10": (2, 4, 0, 2), "11": (2, 4, 2, 4)}
    for k in range(4):
        assert set(part.pixel_fractions(k).values()) == {1.0}


def test_disk_n2_equal_mass(unit_disk_128):
    part = partition(unit_disk_128, SlicingSchedule(2))
    assert len(part.cells) == 4
    np.testing.assert_allclose(part.masses, 0.25, atol=1e-9)


def test_mnist_zero_n4_equal_mass_and_fractions_cover(mnist_files):
    (d, lab), = load_mnist_idx(*mnist_files, {0}, 1)
    assert lab == 0
    part = partition(d, SlicingSchedule(4))
    assert len(part.cells) == 16
    np.testing.assert_allclose(part.masses, 1 / 16, atol=1e-9)
    cover = sum(part.fraction_array(k) for k in range(16))
    np.testing.assert_allclose(cover, 1.0, atol=1e-12)
    # the fractions reproduce each cell's mass
    for k in range(16):
        assert (part.fraction_array(k) * d.mass).sum() == pytest.approx(1 / 16, abs=1e-9)


def test_schedule_axes():
    s = SlicingSchedule(4, "horizontal")
    assert [s.axis(i) for i in range(4)] == [1, 0, 1, 0]
    assert SlicingSchedule(3).n_cells == 8
    with pytest.raises(ValueError):
        SlicingSchedule(-1)
    with pytest.raises(ValueError):
        SlicingSchedule(2, "diagonal")


def test_depth_zero_single_cell(unit_disk_128):
    fs = nc_features(unit_disk_128, SlicingSchedule(0))
    assert fs.addresses == ("",)
    assert np.abs(fs.mass_centers[0]).max() < unit_disk_128.spacing


def test_single_pixel_support_raises():
    m = np.zeros((8, 8))
    m[4, 4] = 1.0
    with pytest.raises(PartitionError, match="support resolution"):
        partition(GridDensity(m), SlicingSchedule(1))


def test_two_pixel_support_depth_limit():
    m = np.zeros((8, 8))
    m[4, 2] = m[4, 5] = 1.0
    part = partition(GridDensity(m), SlicingSchedule(1))
    np.testing.assert_allclose(part.masses, 0.5)
    with pytest.raises(PartitionError):
        partition(GridDensity(m), SlicingSchedule(2))


# -- features ----------------------------------------------------------------


def test_uniform_square_centers_symmetric():
    d = GridDensity(np.ones((6, 6)), (-3.0, -3.0), 1.0)
    fs = nc_features(d, SlicingSchedule(2))
    np.testing.assert_allclose(np.abs(fs.mass_centers), 1.5, atol=1e-12)
    np.testing.assert_allclose(fs.mass_centers.mean(axis=0), 0.0, atol=1e-12)
    np.testing.assert_allclose(fs.geom_centers, fs.mass_centers, atol=1e-12)


def test_integer_shift_shifts_features_exactly():
    h = 0.04
    frame = Frame(100, 100, (-2.0, -2.0), h)
    base = frame.rasterize(ShapeSpec.disk((0, 0), 1.0))
    theta = np.array([7 * h, -3 * h])
    moved = frame.rasterize(ShapeSpec.disk(tuple(theta), 1.0))
    for depth in range(5):
        fa = nc_features(base, SlicingSchedule(depth))
        fb = nc_features(moved, SlicingSchedule(depth))
        np.testing.assert_allclose(fb.mass_centers, fa.mass_centers + theta, atol=1e-12)
        np.testing.assert_allclose(fb.geom_centers, fa.geom_centers + theta, atol=1e-12)


def test_feature_csv_roundtrip(tmp_path, unit_disk_128):
    fs = nc_features(unit_disk_128, SlicingSchedule(3))
    (p,) = save_features([fs], tmp_path)
    assert p.name == "features_0000.csv"
    back = FeatureSet.from_csv(p)
    assert back.addresses == fs.addresses
    np.testing.assert_array_equal(back.mass_centers, fs.mass_centers)
    np.testing.assert_array_equal(back.geom_centers, fs.geom_centers)


# -- distances ---------------------------------------------------------------


def test_identity_distance_zero(unit_disk_128):
    fs = nc_features(unit_disk_128, SlicingSchedule(3))
    assert nc_distance(fs, fs) == 0.0


def test_translation_3_4_gives_5():
    frame = Frame(160, 160, (-2.0, -2.0), 0.05)
    a = frame.rasterize(ShapeSpec.disk((0, 0), 1.0))
    b = frame.rasterize(ShapeSpec.disk((3.0, 4.0), 1.0))
    s = SlicingSchedule(2)
    assert abs(nc_distance(nc_features(a, s), nc_features(b, s)) - 5.0) < 1e-12


def _dilation_pair():
    disk = ShapeSpec.disk((0, 0), 1.0)
    ell = apply_transform(disk, TransformSpec.dilate((2.0, 1.0)))
    frame = padded_frame([disk, ell], 256)
    s = SlicingSchedule(3)
    fa = nc_features(frame.rasterize(disk), s)
    fb = nc_features(frame.rasterize(ell), s)
    return fa, fb


def test_dilation_equals_cell_centroid_moment_formula():
    # axis-aligned dilation commutes with median cuts, so cell b of the dilated
    # disk is the dilated cell b: the distance is |c_hat * (theta - 1)| with
    # c_hat the second moment of the base cell centroids
    fa, fb = _dilation_pair()
    c_hat = np.sqrt(fa.masses @ fa.mass_centers**2)
    expected = float(np.linalg.norm(c_hat * np.array([1.0, 0.0])))
    got = nc_distance(fa, fb)
    assert got == pytest.approx(expected, rel=2e-3)
    # centroids of 8 cells carry less second moment than the disk (c = 1/2)
    assert c_hat[0] < 0.5


@pytest.mark.xfail(strict=True, reason="with 8 cells the centroid second moment is 0.48, "
                   "about 4% below the continuum c = 1/2")
def test_dilation_matches_continuum_second_moment():
    # c_j^2 = E[x_j^2] = 1/4 for the uniform unit disk; Monte-Carlo cross-check
    rng = np.random.default_rng(0)
    pts = rng.uniform(-1, 1, size=(400_000, 2))
    pts = pts[(pts**2).sum(1) <= 1]
    c = np.sqrt((pts**2).mean(axis=0))
    np.testing.assert_allclose(c, 0.5, atol=3e-3)
    expected = float(np.linalg.norm(c * (np.array([2.0, 1.0]) - 1.0)))
    fa, fb = _dilation_pair()
    assert nc_distance(fa, fb) == pytest.approx(expected, rel=0.02)


def test_uniform_and_mass_weighting_agree(unit_disk_128):
    frame = Frame(128, 128, (-2.0, -2.0), 4.0 / 128)
    other = frame.rasterize(ShapeSpec.ellipse((0.3, -0.2), 1.2, 0.7))
    s = SlicingSchedule(3)
    fa, fb = nc_features(unit_disk_128, s), nc_features(other, s)
    uniform = nc_distance(fa, fb, weighting="uniform")
    assert nc_distance(fa, fb, weighting="mass") == pytest.approx(uniform, rel=1e-9)


def test_feature_matrix_distances_equal_p2_distances(unit_disk_128):
    frame = Frame(128, 128, (-2.0, -2.0), 4.0 / 128)
    ellipses = [ShapeSpec.ellipse((0.1 * k, 0), 1.0, 0.5 + 0.1 * k) for k in range(3)]
    ds = [unit_disk_128] + [frame.rasterize(e) for e in ellipses]
    s = SlicingSchedule(3)
    fsets = [nc_features(d, s) for d in ds]
    F = feature_matrix(fsets)
    D = nc_distance_matrix(ds, s)
    G = np.linalg.norm(F[:, None] - F[None], axis=-1)
    np.testing.assert_allclose(G, D, atol=1e-12)


def test_distance_matrix_identical_pair(unit_disk_128):
    D = nc_distance_matrix([unit_disk_128, unit_disk_128], SlicingSchedule(2))
    np.testing.assert_array_equal(D, np.zeros((2, 2)))


def test_three_density_triangle_inequality(unit_disk_128):
    frame = Frame(128, 128, (-2.0, -2.0), 4.0 / 128)
    ds = [unit_disk_128, frame.rasterize(ShapeSpec.ellipse((0.4, 0), 1.0, 0.5)),
          frame.rasterize(ShapeSpec.gaussian((-0.3, 0.2), ((0.1, 0.02), (0.02, 0.05))))]
    for p in (1, 2, 3):
        D = nc_distance_matrix(ds, SlicingSchedule(3), p=p)
        for i, j, k in itertools.permutations(range(3), 3):
            assert D[i, j] <= D[i, k] + D[k, j] + 1e-12


def test_distance_argument_errors(unit_disk_128):
    fs = nc_features(unit_disk_128, SlicingSchedule(2))
    f3 = nc_features(unit_disk_128, SlicingSchedule(3))
    with pytest.raises(ValueError):
        nc_distance(fs, fs, p=0.5)
    with pytest.raises(ValueError):
        nc_distance(fs, fs, weighting="area")
    with pytest.raises(ValueError, match="addresses"):
        nc_distance(fs, f3)
    with pytest.raises(ValueError):
        nc_distance_matrix([unit_disk_128], SlicingSchedule(2))
    with pytest.raises(ValueError, match="grid"):
        nc_distance_matrix([unit_disk_128, GridDensity(np.ones((5, 5)))], SlicingSchedule(1))


def test_partition_error_names_density():
    m = np.zeros((8, 8))
    m[2, 2] = 1.0
    good = GridDensity(np.ones((8, 8)))
    with pytest.raises(PartitionError, match="density 1"):
        nc_distance_matrix([good, GridDensity(m)], SlicingSchedule(1))


def test_nc_is_within_tolerance_of_w2_for_gaussians():
    # equal-shape Gaussians: the NC map at depth 0 is exact translation
    frame = Frame(64, 64, (-2, -2), 4 / 64)
    a = frame.rasterize(ShapeSpec.gaussian((0, 0), ((0.1, 0), (0, 0.1))))
    b = frame.rasterize(ShapeSpec.gaussian((0.5, 0.25), ((0.1, 0), (0, 0.1))))
    d0 = nc_distance(nc_features(a, SlicingSchedule(0)), nc_features(b, SlicingSchedule(0)))
    assert d0 == pytest.approx(math.hypot(0.5, 0.25), rel=1e-9)
