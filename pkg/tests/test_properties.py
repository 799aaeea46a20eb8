import itertools
import math

import numpy as np
import pytest
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from conftest import random_density
from nocollide.measures import GridDensity, PointCloud
from nocollide.slicing import SlicingSchedule, nc_distance, nc_features
from nocollide.transport import exact_w2

PROPS = settings(max_examples=50, deadline=None, derandomize=True,
                 suppress_health_check=[HealthCheck.too_slow])


def embed(m, offset, canvas, spacing=0.25, origin=(-3.0, -2.0)):
    big = np.zeros(canvas)
    h, w = m.shape
    big[offset[1]:offset[1] + h, offset[0]:offset[0] + w] = m
    return GridDensity(big, origin, spacing)


# -- translations give exactly the shift length -------------------------------


@PROPS
@given(seed=st.integers(0, 2**32 - 1), depth=st.integers(0, 4),
       s1=st.tuples(st.integers(0, 6), st.integers(0, 6)),
       s2=st.tuples(st.integers(0, 6), st.integers(0, 6)),
       first=st.sampled_from(["vertical", "horizontal"]))
def test_translation_distance_is_shift_length(seed, depth, s1, s2, first):
    rng = np.random.default_rng(seed)
    m = random_density(rng, 10, 12)
    a, b = embed(m, s1, (16, 18)), embed(m, s2, (16, 18))
    sched = SlicingSchedule(depth, first)
    d = nc_distance(nc_features(a, sched), nc_features(b, sched), p=2)
    shift = 0.25 * math.hypot(s1[0] - s2[0], s1[1] - s2[1])
    assert abs(d - shift) < 1e-9


# -- metric axioms ------------------------------------------------------------


@PROPS
@given(seed=st.integers(0, 2**32 - 1))
def test_metric_axioms(seed):
    rng = np.random.default_rng(seed)
    ds = [GridDensity(random_density(rng, 14, 14), (0.0, 0.0), 0.5) for _ in range(3)]
    for depth in range(1, 5):
        fs = [nc_features(d, SlicingSchedule(depth)) for d in ds]
        for p in (1.0, 2.0):
            for kind in ("mass_center", "geom_center"):
                D = np.array([[nc_distance(x, y, p, feature_kind=kind) for y in fs] for x in fs])
                assert np.all(np.abs(np.diag(D)) <= 1e-9)
                assert np.all(D >= -1e-9)
                np.testing.assert_allclose(D, D.T, atol=1e-9)
                for i, j, k in itertools.permutations(range(3)):
                    assert D[i, k] <= D[i, j] + D[j, k] + 1e-9


# -- exact solver vs brute force --------------------------------------------


def brute_force_w2_squared(xa, ca, xb, cb):
    """Optimal cost for weights ca/K, cb/K by enumerating permutations.

    Each atom is split into unit copies; with uniform copies an optimal plan
    is a permutation (Birkhoff), so the minimum over K! assignments is exact.
    """
    K = int(sum(ca))
    A = np.repeat(xa, ca, axis=0)
    B = np.repeat(xb, cb, axis=0)
    C = ((A[:, None] - B[None]) ** 2).sum(-1)
    rows = np.arange(K)
    return min(C[rows, list(p)].sum() for p in itertools.permutations(range(K))) / K


def counts(draw, n, K):
    cuts = sorted(draw(st.lists(st.integers(1, K - 1), min_size=n - 1, max_size=n - 1, unique=True)))
    return np.diff([0, *cuts, K])


@st.composite
def small_problem(draw):
    K = draw(st.integers(2, 7))
    n = draw(st.integers(1, min(6, K)))
    m = draw(st.integers(1, min(6, K)))
    coord = st.integers(-20, 20).map(lambda v: v / 4)
    xa = np.array(draw(st.lists(st.tuples(coord, coord), min_size=n, max_size=n)))
    xb = np.array(draw(st.lists(st.tuples(coord, coord), min_size=m, max_size=m)))
    return xa, counts(draw, n, K), xb, counts(draw, m, K)


@settings(max_examples=200, deadline=None, derandomize=True)
@given(small_problem())
def test_exact_w2_matches_brute_force(prob):
    xa, ca, xb, cb = prob
    K = ca.sum()
    d, plan = exact_w2(PointCloud(xa, ca / K), PointCloud(xb, cb / K))
    assert abs(d * d - brute_force_w2_squared(xa, ca, xb, cb)) < 1e-9
    P = plan.dense()
    np.testing.assert_allclose(P.sum(1), ca / K, atol=1e-9)
    np.testing.assert_allclose(P.sum(0), cb / K, atol=1e-9)


def test_brute_force_oracle_sanity():
    xa = np.array([[0.0, 0.0], [1.0, 0.0]])
    xb = np.array([[0.0, 1.0], [1.0, 1.0]])
    assert brute_force_w2_squared(xa, [1, 1], xb, [1, 1]) == pytest.approx(1.0)
    assert brute_force_w2_squared(xa, [2, 1], xb[:1], [3]) == pytest.approx((2 * 1 + 2) / 3)
