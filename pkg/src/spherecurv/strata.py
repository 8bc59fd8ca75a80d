"""Classification of extension classes by the maximal-subbundle degree.

The coordinate vector b = (b_1, ..., b_{k-1}) of a class determines the
largest degree of a line subbundle of the associated rank-2 extension.  That
degree is found by a Pade-type search: over pole budgets s, find the longest
prefix of b realizable as the Taylor coefficients at w=0 of a rational
h(w) = y(w)/(1 - v(w)) with y(0) = v(0) = 0 and at most s poles away from
the north pole; the subbundle degree is

    div = deg_L1 + max_s (longest_prefix(s) + 1 - s).

The prefix condition is a linear (Hankel) recurrence on b, solved in floating
point with a relative tolerance or exactly over Gaussian rationals.  The
stratum index m = deg_L2 - div drives the solvable coupling range (0, 4*pi*m).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from ._rational import QQI_ONE, QQI_ZERO, QQi, solve_exact, sylvester_resultant
from .bundles import BundleSpec
from .errors import ZeroClass

DEFAULT_TOL = 1e-8


@dataclass(frozen=True)
class RationalCandidate:
    """h = y / (1 - v) with y(0) = v(0) = 0; coefficients low-order-first.

    Entries are complex numbers or QQi, index 0 is the constant term and must
    be zero in both y and v.
    """

    y: tuple
    v: tuple

    def __post_init__(self):
        if len(self.y) and _is_nonzero(self.y[0]) or len(self.v) and _is_nonzero(self.v[0]):
            raise ValueError("candidate requires y(0) = v(0) = 0")

    @property
    def deg_y(self) -> int:
        return _degree(self.y)

    @property
    def deg_denominator(self) -> int:
        dv = _degree(self.v)
        return dv if dv > 0 else 0

    @property
    def s_minus(self) -> int:
        """Pole count of h away from the north pole: max(deg y, deg(1 - v))."""
        return max(self.deg_y, self.deg_denominator, 0)

    def is_zero(self) -> bool:
        return self.deg_y < 0

    def in_generic_position(self, tol: float = 1e-12) -> bool:
        """No common zeros of y and 1 - v (resultant bounded away from zero)."""
        if self.is_zero():
            return _degree(self.v) < 0
        one_minus_v = _one_minus(self.v)
        if _is_exact(self.y) and _is_exact(self.v):
            res = sylvester_resultant([QQi.of(c) for c in self.y], [QQi.of(c) for c in one_minus_v])
            return bool(res)
        y = np.asarray([complex(c) for c in self.y])
        q = np.asarray([complex(c) for c in one_minus_v])
        res = _resultant_float(y, q)
        scale = max(np.abs(y).max(), np.abs(q).max()) ** (len(y) + len(q))
        return abs(res) > tol * max(scale, 1e-300)


def _is_exact(coeffs) -> bool:
    return all(isinstance(c, (QQi, Fraction, int)) for c in coeffs)


def _is_nonzero(c) -> bool:
    if isinstance(c, QQi):
        return bool(c)
    return c != 0


def _degree(coeffs) -> int:
    deg = -1
    for i, c in enumerate(coeffs):
        if _is_nonzero(c):
            deg = i
    return deg


def _one_minus(v) -> list:
    if _is_exact(v):
        out = [QQI_ONE] + [-QQi.of(c) for c in v[1:]]
    else:
        out = [1.0 + 0j] + [-complex(c) for c in v[1:]]
    return out


def _resultant_float(p, q):
    dp = int(np.nonzero(np.abs(p) > 0)[0][-1]) if np.any(p) else -1
    dq = int(np.nonzero(np.abs(q) > 0)[0][-1]) if np.any(q) else -1
    if dp < 0 or dq < 0:
        return 0.0
    if dp == 0:
        return p[0] ** dq
    if dq == 0:
        return q[0] ** dp
    n = dp + dq
    s = np.zeros((n, n), dtype=complex)
    for i in range(dq):
        s[i, i : i + dp + 1] = p[dp::-1]
    for i in range(dp):
        s[dq + i, i : i + dq + 1] = q[dq::-1]
    return np.linalg.det(s)


@dataclass(frozen=True)
class DivisorReport:
    div_eta: int
    j_star: int
    s_minus: int
    witness: object  # RationalCandidate or the string "zero-h"
    stratum_m: int
    margin: float | None = None


# ----------------------------------------------------------------------
# forward generator
# ----------------------------------------------------------------------


def series_of_rational(cand: RationalCandidate, order: int):
    """Taylor coefficients c_1..c_order of y/(1-v) at w = 0.

    Uses h = y + v*h, i.e. c_j = y_j + sum_{m>=1} v_m c_{j-m}; works for both
    complex and exact coefficients.
    """
    exact = _is_exact(cand.y) and _is_exact(cand.v)
    zero = QQI_ZERO if exact else 0j
    y = [QQi.of(c) if exact else complex(c) for c in cand.y]
    v = [QQi.of(c) if exact else complex(c) for c in cand.v]
    c = [zero] * (order + 1)
    for j in range(1, order + 1):
        acc = y[j] if j < len(y) else zero
        for m in range(1, min(j, len(v))):
            if _is_nonzero(v[m]):
                acc = acc + v[m] * c[j - m]
        c[j] = acc
    out = c[1:]
    return out if exact else np.asarray(out, dtype=complex)


# ----------------------------------------------------------------------
# matching orders
# ----------------------------------------------------------------------


def _system(b, s: int, t: int, exact: bool):
    """Rows of the prefix-t recurrence with denominator budget s.

    Row j (s+1 <= j <= t):  sum_{m=1..min(s,j-1)} q_m b_{j-m} = -b_j.
    """
    rows, rhs = [], []
    for j in range(s + 1, t + 1):
        if exact:
            row = [b[j - m - 1] if 1 <= j - m <= len(b) else QQI_ZERO for m in range(1, s + 1)]
        else:
            row = [b[j - m - 1] if 1 <= j - m <= len(b) else 0j for m in range(1, s + 1)]
        rows.append(row)
        rhs.append(-b[j - 1])
    return rows, rhs


def _consistent_float(rows, rhs, tol_abs: float):
    if not rows:
        return True, np.zeros(0, dtype=complex), 0.0
    a = np.asarray(rows, dtype=complex)
    r = np.asarray(rhs, dtype=complex)
    if a.shape[1] == 0:
        resid = float(np.linalg.norm(r))
        return resid <= tol_abs, np.zeros(0, dtype=complex), resid
    x, *_ = np.linalg.lstsq(a, r, rcond=None)
    resid = float(np.linalg.norm(a @ x - r))
    return resid <= tol_abs, x, resid


def max_matching_order(b, s: int, *, tol: float = DEFAULT_TOL, exact: bool = False) -> int:
    """Largest j* achievable over candidates with at most s poles.

    The first j*-1 coordinates of b are matched; j* = k means the whole
    vector is the Taylor prefix of an admissible rational function.
    """
    j_star, _, _ = _max_matching(b, s, tol=tol, exact=exact)
    return j_star


def _max_matching(b, s: int, *, tol: float, exact: bool):
    """(j_star, q-solution at the best t, residual at the first failing t)."""
    k = len(b) + 1
    if not 0 <= s <= k - 1:
        raise ValueError(f"pole budget s={s} outside [0, {k - 1}]")
    if exact:
        bq = [QQi.of(x) for x in b]
        best_q = [QQI_ZERO] * s
        for t in range(s + 1, k):
            rows, rhs = _system(bq, s, t, exact=True)
            ok, x = solve_exact(rows, rhs)
            if not ok:
                return t, best_q, None
            best_q = x
        return k, best_q, None
    barr = np.asarray(b, dtype=complex)
    tol_abs = tol * float(np.linalg.norm(barr))
    best_q = np.zeros(s, dtype=complex)
    for t in range(s + 1, k):
        rows, rhs = _system(barr, s, t, exact=False)
        ok, x, resid = _consistent_float(rows, rhs, tol_abs)
        if not ok:
            return t, best_q, resid
        best_q = x
    return k, best_q, None


def _witness(b, s: int, j_star: int, q, exact: bool):
    """Rebuild (y, v) from the denominator solution: y = (1-v)*B mod w^{s+1}."""
    if exact:
        bq = [QQi.of(x) for x in b]
        qfull = [QQI_ONE] + list(q)
        y = [QQI_ZERO] * (s + 1)
        for j in range(1, s + 1):
            acc = QQI_ZERO
            for m in range(0, min(j, s) + 1):
                idx = j - m
                if 1 <= idx <= len(bq) and m < len(qfull):
                    acc = acc + qfull[m] * bq[idx - 1]
            if j < j_star:
                y[j] = acc
        v = tuple([QQI_ZERO] + [-c for c in q])
        cand = RationalCandidate(tuple(y), v)
    else:
        barr = np.asarray(b, dtype=complex)
        qfull = np.concatenate([[1.0 + 0j], np.asarray(q, dtype=complex)])
        y = np.zeros(s + 1, dtype=complex)
        for j in range(1, s + 1):
            if j >= j_star:
                break
            acc = 0j
            for m in range(0, min(j, len(qfull) - 1) + 1):
                idx = j - m
                if 1 <= idx <= len(barr):
                    acc += qfull[m] * barr[idx - 1]
            y[j] = acc
        v = tuple(np.concatenate([[0j], -np.asarray(q, dtype=complex)]))
        cand = RationalCandidate(tuple(y), v)
    return "zero-h" if cand.is_zero() else cand


def div_classifier(b, spec: BundleSpec, *, tol: float = DEFAULT_TOL, exact: bool = False) -> DivisorReport:
    """Maximal line-subbundle degree of the extension with coordinates b.

    Scans pole budgets s = 0..k-1, scores each by j*(s) - s, and floors the
    result at deg_L1 (the budget-free subbundle).  Floating-point inputs get
    a margin: the smallest normalized residual among the systems that would
    have certified the next-lower stratum.
    """
    b_seq = list(b)
    k = spec.k
    if len(b_seq) != k - 1:
        raise ValueError(f"coordinate vector has length {len(b_seq)}, expected {k - 1}")
    if exact:
        if not any(bool(QQi.of(x)) for x in b_seq):
            raise ZeroClass("zero coordinate vector")
    elif not np.any(np.asarray(b_seq, dtype=complex)):
        raise ZeroClass("zero coordinate vector")

    best = None  # (score, s, j_star, q)
    for s in range(0, k):
        j_star, q, _ = _max_matching(b_seq, s, tol=tol, exact=exact)
        score = j_star - s
        if best is None or score > best[0]:
            best = (score, s, j_star, q)
    score, s, j_star, q = best
    div_eta = max(spec.deg_L1 + score, spec.deg_L1)
    witness = _witness(b_seq, s, j_star, q, exact)

    margin = None
    if not exact:
        barr = np.asarray(b_seq, dtype=complex)
        bnorm = float(np.linalg.norm(barr))
        needed = []
        for s2 in range(0, k):
            # prefix length that would certify one score higher: t+1-s2 = score+1
            t_needed = score + s2
            if s2 + 1 <= t_needed <= k - 1:
                rows, rhs = _system(barr, s2, t_needed, exact=False)
                _, _, resid = _consistent_float(rows, rhs, 0.0)
                needed.append(resid / bnorm)
        margin = min(needed) if needed else math.inf

    return DivisorReport(
        div_eta=div_eta,
        j_star=j_star,
        s_minus=s,
        witness=witness,
        stratum_m=spec.deg_L2 - div_eta,
        margin=margin,
    )


# ----------------------------------------------------------------------
# stability and coupling ranges
# ----------------------------------------------------------------------


def alpha_stable(spec: BundleSpec, div_eta: int, alpha: float) -> bool:
    """Stability of the extension at slope parameter alpha.

    Equivalent chain: deg_L1 - deg_L2 < alpha < deg_L1 + deg_L2 - 2*div, with
    alpha < 0 required on top (necessary for the metric problem).
    """
    lower = spec.deg_L1 - spec.deg_L2
    upper = spec.deg_L1 + spec.deg_L2 - 2 * div_eta
    return (lower < alpha < upper) and alpha < 0


def alpha_stable_slope_form(spec: BundleSpec, div_eta: int, alpha: float) -> bool:
    """Direct form max{deg_L1, div+alpha} < mu_alpha; oracle for alpha_stable."""
    mu = (spec.deg_L1 + spec.deg_L2 + alpha) / 2.0
    return max(spec.deg_L1, div_eta + alpha) < mu and alpha < 0


@dataclass(frozen=True)
class ExistenceRange:
    """Open solvable interval (0, 4*pi*m) plus the certified empty band."""

    m: int
    lo: float
    hi: float
    no_solution_band: tuple

    def __contains__(self, lam: float) -> bool:
        return self.lo < lam < self.hi


def existence_range(b, spec: BundleSpec, *, tol: float = DEFAULT_TOL, exact: bool = False) -> ExistenceRange:
    report = div_classifier(b, spec, tol=tol, exact=exact)
    m = report.stratum_m
    hi = 4.0 * np.pi * m
    return ExistenceRange(m=m, lo=0.0, hi=hi, no_solution_band=(hi, 2.0 * np.pi * spec.k))
