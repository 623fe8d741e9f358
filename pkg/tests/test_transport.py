import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from selfattract import (DominatingPolynomial, ParticleMeasure,
                         UnsupportedInputError, centered_distance, dirac,
                         displacement_interpolate, gaussian_density,
                         min_cost_assignment, p_norm, quadratic_symmetric,
                         recenter, tail_profile, tp_distance_1d, w2_distance)
from conftest import make_rng, random_atoms

ENV = DominatingPolynomial(1.0, 2)


def monotone_coupling_cost(env, m1, m2):
    """Oracle: enumerate the monotone rearrangement piece by piece and pay
    the envelope-weighted path length for each piece."""
    def pieces(m):
        order = np.argsort(m.positions, kind="stable")
        return m.positions[order], np.cumsum(m.weights[order]) / m.total_mass

    x1, c1 = pieces(m1)
    x2, c2 = pieces(m2)
    levels = np.unique(np.concatenate(([0.0], c1, c2)))
    cost = 0.0
    for lo, hi in zip(levels[:-1], levels[1:]):
        if hi <= lo:
            continue
        mid = 0.5 * (lo + hi)
        a = x1[min(np.searchsorted(c1, mid, side="left"), x1.size - 1)]
        b = x2[min(np.searchsorted(c2, mid, side="left"), x2.size - 1)]
        cost += (hi - lo) * abs(env.integral(min(a, b), max(a, b)))
    return cost


def w2_bruteforce_equal_atoms(x, y):
    n = len(x)
    best = math.inf
    for perm in itertools.permutations(range(n)):
        cost = sum((x[i] - y[perm[i]]) ** 2 for i in range(n)) / n
        best = min(best, cost)
    return math.sqrt(best)


class TestTpDistance:
    def test_identical_measures(self):
        m = dirac(0.3)
        assert tp_distance_1d(ENV, m, m).value == 0.0

    def test_dirac_pair_closed_form(self):
        d = tp_distance_1d(ENV, dirac(0.0), dirac(1.0))
        assert d.value == pytest.approx(4.0 / 3.0, abs=1e-14)

    def test_matches_monotone_coupling_oracle(self):
        gen = make_rng(21)
        for _ in range(60):
            m1 = random_atoms(gen)
            m2 = random_atoms(gen)
            got = tp_distance_1d(ENV, m1, m2).value
            want = monotone_coupling_cost(ENV, m1, m2)
            assert got == pytest.approx(want, abs=1e-10)

    def test_metric_axioms_on_atoms(self):
        gen = make_rng(13)
        for _ in range(25):
            a, b, c = (random_atoms(gen, radius=3.0) for _ in range(3))
            dab = tp_distance_1d(ENV, a, b).value
            dba = tp_distance_1d(ENV, b, a).value
            assert dab == pytest.approx(dba, abs=1e-12)
            dac = tp_distance_1d(ENV, a, c).value
            dcb = tp_distance_1d(ENV, c, b).value
            assert dab <= dac + dcb + 1e-10
            assert tp_distance_1d(ENV, a, a).value <= 1e-14


class TestW2:
    def test_dirac_pair(self):
        assert w2_distance(dirac(0.0), dirac(-2.5)).value == pytest.approx(2.5)

    def test_gaussian_grids(self):
        g1 = gaussian_density(0.0, 1.0, -10, 10, 2048)
        g2 = gaussian_density(0.0, 1.4, -10, 10, 2048)
        assert w2_distance(g1, g2).value == pytest.approx(0.4, abs=1e-4)

    def test_quantile_equals_bruteforce_assignment(self):
        gen = make_rng(2)
        for _ in range(25):
            x = gen.uniform(-3, 3, size=6)
            y = gen.uniform(-3, 3, size=6)
            m1 = ParticleMeasure(x, np.full(6, 1 / 6))
            m2 = ParticleMeasure(y, np.full(6, 1 / 6))
            got = w2_distance(m1, m2).value
            assert got == pytest.approx(w2_bruteforce_equal_atoms(x, y), abs=1e-10)

    def test_2d_assignment_method(self):
        gen = make_rng(4)
        x = gen.uniform(-2, 2, size=(5, 2))
        y = gen.uniform(-2, 2, size=(5, 2))
        m1 = ParticleMeasure(x, np.full(5, 0.2))
        m2 = ParticleMeasure(y, np.full(5, 0.2))
        got = w2_distance(m1, m2)
        assert got.method == "w2-assignment"
        best = math.inf
        for perm in itertools.permutations(range(5)):
            cost = sum(np.sum((x[i] - y[perm[i]]) ** 2) for i in range(5)) / 5
            best = min(best, cost)
        assert got.value == pytest.approx(math.sqrt(best), abs=1e-12)

    def test_2d_unequal_weights_rejected(self):
        m1 = ParticleMeasure(np.zeros((2, 2)), np.array([0.3, 0.7]))
        m2 = ParticleMeasure(np.ones((2, 2)), np.array([0.5, 0.5]))
        with pytest.raises(UnsupportedInputError):
            w2_distance(m1, m2)


@given(st.integers(0, 10_000), st.integers(2, 5))
@settings(max_examples=40, deadline=None)
def test_assignment_solver_matches_bruteforce(seed, n):
    gen = make_rng(seed)
    cost = gen.uniform(0, 10, size=(n, n))
    assign, total = min_cost_assignment(cost)
    assert sorted(assign) == list(range(n))
    best = min(sum(cost[i, p[i]] for i in range(n))
               for p in itertools.permutations(range(n)))
    assert total == pytest.approx(best, abs=1e-12)


class TestCenteredDistance:
    def test_translation_bound_common_center(self, quad):
        # tp(mu, mu(.+v)) <= |v| P(|v|) ||mu||_P after a common shift
        gen = make_rng(17)
        env = quad.bound
        for _ in range(20):
            m = random_atoms(gen, radius=2.0)
            v = float(gen.uniform(-1.5, 1.5))
            shifted = recenter(m, -v)  # atoms moved by +v
            c = float(np.average(m.positions, weights=m.weights))
            d = centered_distance(quad, m, shifted, "tp", common_center=c)
            a = recenter(m, c)
            bound = abs(v) * env(abs(v)) * p_norm(quad, a)
            assert d.value <= bound + 1e-9

    def test_own_center_cancels_translation(self, quad):
        m = random_atoms(make_rng(23), radius=2.0)
        shifted = recenter(m, -1.7)
        d = centered_distance(quad, m, shifted, "tp")
        assert d.value == pytest.approx(0.0, abs=1e-9)

    def test_gaussians_same_shape_w2(self, quad):
        g1 = gaussian_density(0.0, 1.0, -8, 8, 1024)
        g2 = gaussian_density(3.0, 1.0, -5, 11, 1024)
        d = centered_distance(quad, g1, g2, "w2")
        assert d.value == pytest.approx(0.0, abs=1e-6)

    def test_center_shift_inflation(self, quad):
        # tp after a common shift by v is at most P(|v|) times the raw tp
        gen = make_rng(31)
        env = quad.bound
        for _ in range(20):
            m1 = random_atoms(gen, radius=2.0)
            m2 = random_atoms(gen, radius=2.0)
            v = float(gen.uniform(-2, 2))
            raw = tp_distance_1d(env, m1, m2).value
            shifted = tp_distance_1d(env, recenter(m1, v), recenter(m2, v)).value
            assert shifted <= env(abs(v)) * raw + 1e-9


def test_w2_squared_bounded_by_tp_on_tail_class(quad):
    # ratio w2^2 / tp stays bounded over a family with uniform tails
    gen = make_rng(41)
    ratios = []
    for _ in range(30):
        m1 = random_atoms(gen, radius=3.0)
        m2 = random_atoms(gen, radius=3.0)
        tp = tp_distance_1d(ENV, m1, m2).value
        if tp < 1e-12:
            continue
        w2 = w2_distance(m1, m2).value
        ratios.append(w2 * w2 / tp)
    assert max(ratios) < 10.0


def test_mass_mismatch_raises_with_extension_hint():
    from selfattract import NumericFailureError

    m1 = ParticleMeasure(np.array([0.0]), np.array([1.0]))
    m2 = ParticleMeasure(np.array([1.0]), np.array([0.5]))
    with pytest.raises(NumericFailureError, match="extend the grid"):
        tp_distance_1d(ENV, m1, m2)


def test_displacement_interpolation_endpoints():
    g0 = gaussian_density(-1.0, 1.0, -8, 8, 1024)
    g1 = gaussian_density(1.5, 0.8, -8, 8, 1024)
    mid = displacement_interpolate(g0, g1, 0.5)
    assert mid.mass == pytest.approx(1.0, abs=1e-9)
    assert mid.mean() == pytest.approx(0.5 * (-1.0) + 0.5 * 1.5, abs=5e-3)
    ends = displacement_interpolate(g0, g1, 0.0)
    assert w2_distance(ends, g0).value < 5e-3
