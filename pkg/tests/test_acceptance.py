"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the per-criterion
lines; every tolerance is pinned here, nothing is deferred.
"""

import time
from fractions import Fraction
from math import factorial

import numpy as np

from spherecurv._rational import QQi
from spherecurv.bundles import BundleSpec, ConformalFactor, HoloClass, phi_norm_sq
from spherecurv.cohomology import (
    IsometryAction,
    b_coords,
    dbar_solve,
    dual_map_H0,
    norm_equivariance_profile,
    projective_angle,
    pullback_class,
    pullback_dual,
)
from spherecurv.geometry import build_grid, laplacian_local
from spherecurv.pde import SolveConfig, _Workspace, forward_F, solve_phi_system, solve_radial
from spherecurv.strata import RationalCandidate, div_classifier, series_of_rational

from conftest import random_real_field


def _report(num, ok, detail):
    print(f"ACCEPTANCE {num:2d}: {'PASS' if ok else 'FAIL'} - {detail}")
    assert ok, detail


def spec_k(k, deg_L1=0):
    return BundleSpec(deg_L1, deg_L1 + k)


def test_01_geometry_suite():
    t0 = time.perf_counter()
    grid = build_grid(32)
    w_err = abs(grid.weights.sum() - 1.0)

    k = 3
    fn = lambda th, ph: -k * np.log(np.sin(th / 2.0))
    TH, PH = np.meshgrid(grid.colat, grid.lon, indexing="ij")
    cap = np.pi / grid.n_lat
    mask = TH > cap
    lap = laplacian_local(fn, TH, PH, h=1e-3)
    rel = np.abs(lap[mask] - 2 * np.pi * k).max() / (2 * np.pi * k)
    elapsed = time.perf_counter() - t0
    ok = w_err < 1e-12 and rel < 1e-6 and elapsed < 5.0
    _report(1, ok, f"weights err {w_err:.1e}, potential laplacian rel {rel:.1e}, {elapsed:.2f}s")


def test_02_degree_invariance():
    t0 = time.perf_counter()
    rng = np.random.default_rng(101)
    grid = build_grid(16)
    worst = 0.0
    for k in range(2, 7):
        spec = spec_k(k)
        for _ in range(100):
            u = ConformalFactor.from_values(0.5 * random_real_field(grid, rng, l_hi=12), grid)
            from spherecurv.bundles import degree_by_integration

            worst = max(worst, abs(degree_by_integration(u, spec, grid) - k))
    elapsed = time.perf_counter() - t0
    ok = worst < 1e-8 and elapsed < 30.0
    _report(2, ok, f"max degree error {worst:.1e} over 500 draws, {elapsed:.1f}s")


def test_03_p1_characterization():
    rng = np.random.default_rng(102)
    grid = build_grid(16)
    worst_hankel = 0.0
    all_div_ok = True
    for k in (3, 4, 5, 6):
        spec = spec_k(k)
        for _ in range(20):
            a0 = rng.normal() * 0.7 + 1j * rng.normal() * 0.7
            coeffs = np.array(
                [(-a0) ** (k - 2 - i) * factorial(k - 2) / (factorial(i) * factorial(k - 2 - i)) for i in range(k - 1)]
            )
            b = b_coords(HoloClass(spec, coeffs), ConformalFactor.zero(grid), grid).b
            for j in range(k - 3):
                rel = abs(b[j] * b[j + 2] - b[j + 1] ** 2) / abs(b[j + 1] ** 2)
                worst_hankel = max(worst_hankel, rel)
            rep = div_classifier(b, spec)
            all_div_ok &= rep.div_eta == spec.deg_L2 - 1
        ones = np.zeros(k - 1, dtype=complex)
        ones[0] = 1.0
        b1 = b_coords(HoloClass(spec, ones), ConformalFactor.zero(grid), grid).b
        all_div_ok &= np.abs(b1[1:]).max() < 1e-9 * abs(b1[0])
    ok = worst_hankel < 1e-7 and all_div_ok
    _report(3, ok, f"worst Hankel rel {worst_hankel:.1e}, classifier/constant-class checks {all_div_ok}")


def _rand_fraction(rng):
    return Fraction(int(rng.integers(-9, 10)), int(rng.integers(1, 10)))


def _rand_qqi(rng, nonzero=False):
    while True:
        q = QQi(_rand_fraction(rng), _rand_fraction(rng))
        if not nonzero or q:
            return q


def _random_candidate(rng, s):
    zero = QQi(Fraction(0))
    while True:
        y = [zero] + [_rand_qqi(rng) for _ in range(s)]
        v = [zero] + [_rand_qqi(rng) for _ in range(s)]
        if rng.random() < 0.5:
            y[s] = _rand_qqi(rng, nonzero=True)
        else:
            v[s] = _rand_qqi(rng, nonzero=True)
        cand = RationalCandidate(tuple(y), tuple(v))
        if cand.s_minus == s and not cand.is_zero():
            return cand


def test_04_classifier_roundtrip_exact():
    t0 = time.perf_counter()
    rng = np.random.default_rng(103)
    failures = 0
    total = 0
    for k in range(3, 9):
        spec = spec_k(k, deg_L1=1)
        for _ in range(500):
            s = int(rng.integers(1, k // 2 + 1))
            cand = _random_candidate(rng, s)
            if not cand.in_generic_position():
                continue
            b = series_of_rational(cand, k - 1)
            if not any(bool(x) for x in b):
                continue
            total += 1
            rep = div_classifier(b, spec, exact=True)
            if rep.div_eta != spec.deg_L1 + k - s:
                failures += 1
    elapsed = time.perf_counter() - t0
    ok = failures == 0 and total > 2500
    _report(4, ok, f"{failures} failures over {total} exact roundtrips, {elapsed:.1f}s")


def test_05_stratum_bounds():
    rng = np.random.default_rng(104)
    violations = 0
    for k in range(2, 9):
        spec = spec_k(k)
        for _ in range(1000):
            b = rng.normal(size=k - 1) + 1j * rng.normal(size=k - 1)
            m = div_classifier(b, spec).stratum_m
            if not 1 <= m <= k // 2:
                violations += 1
    _report(5, violations == 0, f"{violations} bound violations over 7000 random vectors")


def test_06_pde_correctness():
    cfg = SolveConfig(l_max=16)
    res = solve_phi_system(HoloClass(spec_k(2), np.array([1.0 + 0j])), 4 * np.pi, cfg)
    sup_u = np.abs(res.u.total).max()

    rng = np.random.default_rng(105)
    grid = build_grid(16)
    phi = HoloClass(spec_k(4), rng.normal(size=3) + 1j * rng.normal(size=3))
    k_vals = phi_norm_sq(phi, ConformalFactor.zero(grid), grid).values
    ws = _Workspace(grid, k_vals)
    x = rng.normal(size=ws.n) * 0.1
    op, _ = ws.jacobian_operator(x)
    d = rng.normal(size=ws.n)
    d /= np.linalg.norm(d)
    eps = 1e-6
    fd = (ws.residual_packed(x + eps * d, 1.0) - ws.residual_packed(x - eps * d, 1.0)) / (2 * eps)
    jac_rel = np.linalg.norm(op @ d - fd) / np.linalg.norm(fd)

    res2 = solve_phi_system(HoloClass(spec_k(4), np.array([0, 1.0, 0], dtype=complex)), 4 * np.pi, cfg)
    mass = grid.integrate(2 * phi_norm_sq(HoloClass(spec_k(4), np.array([0, 1.0, 0], dtype=complex)), res2.u, grid).values)
    conservation = abs(float(np.real(mass)) - res2.lam)
    accepted = [r for _, _, r in res2.continuation_trace if np.isfinite(r)]
    trace_ok = bool(accepted) and max(accepted) < 1e-8

    ok = sup_u < 1e-10 and jac_rel < 1e-6 and conservation < 1e-8 and trace_ok
    _report(6, ok, f"round sup|u| {sup_u:.1e}, jac rel {jac_rel:.1e}, conservation {conservation:.1e}")


def test_07_two_pole_existence_desk_scale():
    cfg = SolveConfig(l_max=48)
    details = []
    ok = True
    for k in (4, 5, 6):
        spec = spec_k(k)
        for a in range(1, k - 2):
            t0 = time.perf_counter()
            coeffs = np.zeros(k - 1, dtype=complex)
            coeffs[a] = 1.0
            res = solve_phi_system(HoloClass(spec, coeffs), 4 * np.pi, cfg)
            dt = time.perf_counter() - t0
            case_ok = res.converged and res.residual_sup < 1e-8 and dt < 120.0
            ok &= case_ok
            details.append(f"k={k},a={a}:{res.residual_sup:.1e}/{dt:.0f}s")
    _report(7, ok, "; ".join(details))


def test_08_radial_dichotomy():
    cfg = SolveConfig(l_max=24)
    found = solve_radial(HoloClass(spec_k(4), np.array([0, 1.0, 0], dtype=complex)), 4 * np.pi, cfg)
    absent = solve_radial(HoloClass(spec_k(4), np.array([0, 0, 1.0], dtype=complex)), 4 * np.pi, cfg)
    ok = (
        found.converged
        and found.residual_sup < 1e-8
        and not absent.converged
        and absent.mismatch_min > 10 * absent.error_estimate
    )
    _report(
        8,
        ok,
        f"root residual {found.residual_sup:.1e}; no-root min defect {absent.mismatch_min:.2e} "
        f"vs noise {absent.error_estimate:.1e}",
    )


def test_09_small_coupling_limit():
    cfg = SolveConfig(l_max=16)
    grid = build_grid(16)
    rng = np.random.default_rng(106)
    ok = True
    worst_final = 0.0
    for _ in range(5):
        phi = HoloClass(spec_k(4), rng.normal(size=3) + 1j * rng.normal(size=3))
        b0 = dual_map_H0(phi, grid)
        angles = [projective_angle(forward_F(phi, lam, cfg, grid).b, b0.b) for lam in (0.5, 0.1, 0.01)]
        ok &= angles[0] > angles[1] > angles[2] and angles[2] < 1e-2
        worst_final = max(worst_final, angles[2])
    _report(9, ok, f"worst angle at lambda=1e-2: {worst_final:.1e}, monotone decreasing")


def test_10_equivariance():
    grid = build_grid(24)
    cfg = SolveConfig(l_max=24)
    rng = np.random.default_rng(107)
    vals = random_real_field(grid, rng, l_hi=5)
    u = ConformalFactor.from_values(0.25 * vals / np.abs(vals).max(), grid)
    iso = IsometryAction.random_rotation(rng)
    worst_dev = 0.0
    for _ in range(5):
        phi = HoloClass(spec_k(4), rng.normal(size=3) + 1j * rng.normal(size=3))
        _, dev = norm_equivariance_profile(iso, phi, u, grid)
        worst_dev = max(worst_dev, dev)

    phi = HoloClass(spec_k(4), rng.normal(size=3) + 1j * rng.normal(size=3))
    lam = 2 * np.pi
    lhs = forward_F(pullback_class(iso, phi), lam, cfg, grid)
    rhs = pullback_dual(iso, forward_F(phi, lam, cfg, grid), grid)
    angle = projective_angle(lhs.b, rhs.b)
    ok = worst_dev < 1e-8 and angle < 1e-5
    _report(10, ok, f"norm-equivariance dev {worst_dev:.1e}, forward map angle {angle:.1e}")


def test_11_symmetry_audit():
    cfg = SolveConfig(l_max=48)
    grid = build_grid(48)
    spec = spec_k(7)
    coeffs = np.zeros(6, dtype=complex)
    coeffs[5] = 1.0
    coeffs[1] = -1.0  # z (z^4 - 1)
    phi = HoloClass(spec, coeffs)
    pattern = np.array([(j - 1 - 1) % 4 == 0 for j in range(1, 7)])
    worst = 0.0
    prev = None
    converged_at_top = False
    for lam in (np.pi, 2 * np.pi, 3 * np.pi, 4 * np.pi):
        res = solve_phi_system(phi, lam, cfg, initial=prev.u if prev is not None and prev.converged else None)
        if not res.converged:
            prev = None
            continue
        b = b_coords(phi, res.u, grid).b
        worst = max(worst, float(np.linalg.norm(b[~pattern]) / np.linalg.norm(b)))
        prev = res
        if abs(lam - 4 * np.pi) < 1e-12:
            converged_at_top = res.converged and res.residual_sup < 1e-8
    ok = worst < 1e-6 and converged_at_top
    _report(11, ok, f"max off-pattern mass {worst:.1e}, converged at 4*pi: {converged_at_top}")


def test_12_dbar_solver():
    grid = build_grid(48)
    rng = np.random.default_rng(108)
    ok = True
    details = []
    for k in (3, 4):
        spec = spec_k(k)
        phi = HoloClass(spec, rng.normal(size=k - 1) + 1j * rng.normal(size=k - 1))
        u = ConformalFactor.zero(grid)
        sol = dbar_solve(phi, u, grid)
        b = b_coords(phi, u, grid).b
        pf_err = np.abs(sol.p_f - b).max() / np.abs(b).max()
        case_ok = sol.report["dbar_rel_l2"] < 1e-4 and abs(sol.f_north) < 1e-8 and pf_err < 1e-4
        ok &= case_ok
        details.append(f"k={k}: res {sol.report['dbar_rel_l2']:.1e}, pf {pf_err:.1e}")
    _report(12, ok, "; ".join(details))
