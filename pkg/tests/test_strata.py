import numpy as np
import pytest
from fractions import Fraction

from spherecurv._rational import QQi
from spherecurv.bundles import BundleSpec
from spherecurv.errors import ZeroClass
from spherecurv.strata import (
    RationalCandidate,
    alpha_stable,
    alpha_stable_slope_form,
    div_classifier,
    existence_range,
    max_matching_order,
    series_of_rational,
)


def spec_k(k, deg_L1=0):
    return BundleSpec(deg_L1, deg_L1 + k)


def rand_fraction(rng):
    num = int(rng.integers(-9, 10))
    den = int(rng.integers(1, 10))
    return Fraction(num, den)


def rand_qqi(rng, nonzero=False):
    while True:
        q = QQi(rand_fraction(rng), rand_fraction(rng))
        if not nonzero or q:
            return q


def random_exact_candidate(rng, s, max_len):
    """Random candidate with s_minus exactly s, in generic position."""
    zero = QQi(Fraction(0))
    while True:
        y = [zero] + [rand_qqi(rng) for _ in range(s)]
        v = [zero] + [rand_qqi(rng) for _ in range(s)]
        # force the pole count: make one of the top coefficients nonzero
        if rng.random() < 0.5:
            y[s] = rand_qqi(rng, nonzero=True)
        else:
            v[s] = rand_qqi(rng, nonzero=True)
        cand = RationalCandidate(tuple(y), tuple(v))
        if cand.s_minus == s and not cand.is_zero() and cand.in_generic_position():
            return cand


class TestSeries:
    def test_geometric(self):
        rho = 0.37 + 0.4j
        cand = RationalCandidate((0j, 1.0 + 0j), (0j, rho))
        c = series_of_rational(cand, 6)
        assert np.allclose(c, [rho ** j for j in range(6)])

    def test_zero_numerator(self):
        cand = RationalCandidate((0j,), (0j, 0.5 + 0j))
        assert not np.any(series_of_rational(cand, 5))

    def test_long_division_oracle(self):
        # w^2/(1-w) = w^2 + w^3 + ...
        cand = RationalCandidate((0j, 0j, 1.0 + 0j), (0j, 1.0 + 0j))
        c = series_of_rational(cand, 5)
        assert np.allclose(c, [0, 1, 1, 1, 1])

    def test_exact_mode(self):
        half = QQi(Fraction(1, 2))
        one = QQi(Fraction(1))
        zero = QQi(Fraction(0))
        cand = RationalCandidate((zero, one), (zero, half))
        c = series_of_rational(cand, 4)
        assert [x.re for x in c] == [Fraction(1), Fraction(1, 2), Fraction(1, 4), Fraction(1, 8)]


class TestMatchingOrder:
    def test_geometric_reaches_k(self):
        k = 6
        rho = 0.8 - 0.3j
        b = np.array([rho ** j for j in range(k - 1)])
        assert max_matching_order(b, 1) == k

    def test_top_basis_vector(self):
        k = 5
        b = np.zeros(k - 1, dtype=complex)
        b[-1] = 1.0
        assert max_matching_order(b, 0) == k - 1

    def test_forward_generator_roundtrip(self):
        rng = np.random.default_rng(21)
        k = 7
        cand = random_exact_candidate(rng, 2, k)
        b = series_of_rational(
            RationalCandidate(
                tuple(complex(c) for c in cand.y), tuple(complex(c) for c in cand.v)
            ),
            k - 1,
        )
        assert max_matching_order(b, 2) == k

    def test_budget_bounds(self):
        with pytest.raises(ValueError):
            max_matching_order(np.ones(3), 5)


class TestClassifier:
    def test_geometric_is_bottom_stratum(self):
        k = 4
        rho = 0.25 + 0.6j
        b = np.array([2.0 * rho ** j for j in range(k - 1)])
        rep = div_classifier(b, spec_k(k))
        assert rep.div_eta == 3 == spec_k(k).deg_L2 - 1
        assert rep.stratum_m == 1
        assert rep.j_star == k and rep.s_minus == 1

    def test_first_basis_vector_in_p1(self):
        k = 4
        b = np.zeros(k - 1, dtype=complex)
        b[0] = 1.0
        rep = div_classifier(b, spec_k(k))
        assert rep.stratum_m == 1

    def test_top_basis_vector_in_p1(self):
        # s=0, j*=k-1 branch of the bottom stratum
        k = 5
        b = np.zeros(k - 1, dtype=complex)
        b[-1] = 1.0
        rep = div_classifier(b, spec_k(k))
        assert rep.stratum_m == 1
        assert rep.witness == "zero-h"

    def test_exact_random_bounds(self):
        rng = np.random.default_rng(22)
        k = 6
        spec = spec_k(k)
        for _ in range(25):
            b = [rand_qqi(rng) for _ in range(k - 1)]
            if not any(bool(x) for x in b):
                continue
            rep = div_classifier(b, spec, exact=True)
            assert spec.deg_L2 - 3 <= rep.div_eta <= spec.deg_L2 - 1

    def test_exact_roundtrip(self):
        rng = np.random.default_rng(23)
        for k in (3, 4, 5, 6):
            spec = spec_k(k, deg_L1=1)
            for _ in range(20):
                s = int(rng.integers(1, k // 2 + 1))
                cand = random_exact_candidate(rng, s, k)
                b = series_of_rational(cand, k - 1)
                if not any(bool(x) for x in b):
                    continue
                rep = div_classifier(b, spec, exact=True)
                assert rep.div_eta == spec.deg_L1 + k - s, (k, s, b)

    def test_scale_invariance(self):
        rng = np.random.default_rng(24)
        k = 5
        spec = spec_k(k)
        b = rng.normal(size=k - 1) + 1j * rng.normal(size=k - 1)
        base = div_classifier(b, spec)
        for c in (1e-7, 3.0 - 4.0j, 1e9j):
            rep = div_classifier(c * b, spec)
            assert rep.div_eta == base.div_eta

    def test_stratum_bounds_random(self):
        rng = np.random.default_rng(25)
        for k in (2, 3, 4, 5, 6, 7, 8):
            spec = spec_k(k)
            for _ in range(50):
                b = rng.normal(size=k - 1) + 1j * rng.normal(size=k - 1)
                rep = div_classifier(b, spec)
                assert 1 <= rep.stratum_m <= k // 2, (k, b)

    def test_generic_stratum_is_top(self):
        rng = np.random.default_rng(26)
        for k in (3, 4, 5, 6):
            spec = spec_k(k)
            hits = [div_classifier(rng.normal(size=k - 1) + 1j * rng.normal(size=k - 1), spec).stratum_m for _ in range(40)]
            assert all(m == k // 2 for m in hits), k

    def test_monotone_strata_guard(self):
        # membership div >= L2 - m is monotone in m by construction
        rng = np.random.default_rng(27)
        k = 6
        spec = spec_k(k)
        b = rng.normal(size=k - 1) + 1j * rng.normal(size=k - 1)
        rep = div_classifier(b, spec)
        for m in range(rep.stratum_m, k // 2 + 1):
            assert rep.div_eta >= spec.deg_L2 - m

    def test_zero_class(self):
        with pytest.raises(ZeroClass):
            div_classifier(np.zeros(3, dtype=complex), spec_k(4))

    def test_margin_reported(self):
        rng = np.random.default_rng(28)
        k = 5
        b = rng.normal(size=k - 1) + 1j * rng.normal(size=k - 1)
        rep = div_classifier(b, spec_k(k))
        assert rep.margin is not None and rep.margin > 0

    def test_float_and_exact_backends_agree(self):
        # two independent arithmetic paths must classify rational inputs alike
        rng = np.random.default_rng(29)
        for k in (3, 4, 5, 6):
            spec = spec_k(k, deg_L1=2)
            for _ in range(10):
                b_exact = [rand_qqi(rng) for _ in range(k - 1)]
                if not any(bool(x) for x in b_exact):
                    continue
                b_float = np.array([complex(x) for x in b_exact])
                rep_e = div_classifier(b_exact, spec, exact=True)
                rep_f = div_classifier(b_float, spec)
                assert rep_e.div_eta == rep_f.div_eta, (k, b_float)

    def test_witness_regenerates_prefix(self):
        k = 6
        rho = 0.3 - 0.2j
        b = np.array([1.5 * rho ** j for j in range(k - 1)])
        rep = div_classifier(b, spec_k(k))
        assert rep.witness != "zero-h"
        again = series_of_rational(rep.witness, k - 1)
        assert np.allclose(again, b, atol=1e-10)


class TestAlphaStable:
    def test_spec_triples(self):
        spec = spec_k(4)  # deg_L1=0, deg_L2=4
        assert alpha_stable(spec, 3, -1.0) is False
        assert alpha_stable(spec, 3, -3.0) is True
        assert alpha_stable(spec, 2, -0.5) is True

    def test_agrees_with_slope_form(self):
        # the restated chain and the direct slope inequality must coincide
        for d1, d2 in [(0, 4), (1, 5), (-2, 3)]:
            spec = BundleSpec(d1, d2)
            for div in range(d1, d2):
                for alpha in np.linspace(-6, 2, 33):
                    assert alpha_stable(spec, div, float(alpha)) == alpha_stable_slope_form(
                        spec, div, float(alpha)
                    ), (d1, d2, div, alpha)


class TestExistenceRange:
    def test_geometric_gives_4pi(self):
        k = 5
        rho = 0.4
        b = np.array([rho ** j for j in range(k - 1)])
        r = existence_range(b, spec_k(k))
        assert r.m == 1 and r.hi == pytest.approx(4 * np.pi)
        assert 2.0 in r and 14.0 not in r

    def test_top_budget_witness(self):
        rng = np.random.default_rng(30)
        k = 6
        s = k // 2
        cand = random_exact_candidate(rng, s, k)
        b = series_of_rational(cand, k - 1)
        r = existence_range(b, spec_k(k), exact=True)
        assert r.m == s and r.hi == pytest.approx(4 * np.pi * s)

    def test_k2_always_4pi(self):
        r = existence_range(np.array([0.3 + 1j]), spec_k(2))
        assert r.m == 1 and r.hi == pytest.approx(4 * np.pi)
        assert r.no_solution_band == (pytest.approx(4 * np.pi), pytest.approx(4 * np.pi))
