"""Newton-continuation solver for the scalar curvature system on the sphere.

The unknown is the dilation exponent in  lap(u) + 2 K e^{2u} - lambda = 0
with K the flat-metric squared norm of a holomorphic class.  Galerkin
collocation in the spherical-harmonic basis; the Jacobian
lap + 4 K e^{2u} is symmetric in the orthonormal real coefficient basis and
is inverted matrix-free with MINRES preconditioned by (sigma - lap)^{-1}.
Continuation ramps lambda from a small value (where the constant-mode
asymptotics give the initializer) with step halving on Newton failure.

A radially symmetric reduction (two-point boundary value problem in the
colatitude) is solved by shooting on the regularized momentum
p = sin(theta) u'; its boundary defect doubles as the existence probe for
axis-concentrated curvature data.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import brentq
from scipy.sparse.linalg import LinearOperator, minres

from .bundles import BundleSpec, ConformalFactor, HoloClass, phi_norm_sq
from .cohomology import DualCoords, b_coords
from .errors import InvalidLambda, NonConvergence, SweepInconclusive
from .geometry import GAUSS_CURVATURE, ScalarField, SphereGrid, build_grid


@dataclass
class SolveConfig:
    l_max: int = 32
    newton_tol: float = 1e-10
    max_newton: int = 30
    continuation_step: float = 2.0
    min_step: float = 1e-4
    lambda_init: float = 0.25
    blowup_sup: float = 14.0
    minres_rtol: float = 1e-12
    minres_maxiter: int = 800
    # collocation can fabricate under-resolved equilibria past the true
    # solvable range; accepted points must also pass a refined-grid residual.
    # Genuine solutions sit around 1e-9..1e-3 there, fabricated ones at 1e+2.
    spurious_tol: float = 1e-2
    refine_factor: float = 1.5

    def __post_init__(self):
        if self.newton_tol <= 0 or self.min_step <= 0:
            raise ValueError("newton_tol and min_step must be positive")


@dataclass
class SolveResult:
    u: ConformalFactor
    lam: float
    residual_sup: float
    converged: bool
    continuation_trace: list = field(default_factory=list)
    residual_fine: float = float("nan")

    @property
    def offset(self) -> float:
        return self.u.offset


# ----------------------------------------------------------------------
# real coefficient packing (orthonormal basis, Parseval-exact)
# ----------------------------------------------------------------------


def _pack(c: np.ndarray, l_max: int) -> np.ndarray:
    L = l_max
    parts = [c[:, L].real]
    for m in range(1, L + 1):
        col = c[m:, L + m]
        parts.append(math.sqrt(2.0) * col.real)
        parts.append(-math.sqrt(2.0) * col.imag)
    return np.concatenate(parts)


def _unpack(x: np.ndarray, l_max: int) -> np.ndarray:
    # real fields have c[l,-m] = conj(c[l,m]) in this basis (the |m| Legendre
    # factor is shared by both signs, so no Condon-Shortley flip appears)
    L = l_max
    c = np.zeros((L + 1, 2 * L + 1), dtype=complex)
    c[:, L] = x[: L + 1]
    pos = L + 1
    for m in range(1, L + 1):
        n = L + 1 - m
        p = x[pos : pos + n]
        q = x[pos + n : pos + 2 * n]
        pos += 2 * n
        col = (p - 1j * q) / math.sqrt(2.0)
        c[m:, L + m] = col
        c[m:, L - m] = np.conj(col)
    return c


def _packed_laplace_diag(grid: SphereGrid) -> np.ndarray:
    L = grid.l_max
    ell = [np.arange(0, L + 1, dtype=float)]
    for m in range(1, L + 1):
        lm = np.arange(m, L + 1, dtype=float)
        ell.extend([lm, lm])
    ell = np.concatenate(ell)
    return -GAUSS_CURVATURE * ell * (ell + 1.0)


# ----------------------------------------------------------------------
# residual and Newton
# ----------------------------------------------------------------------


def residual(u: ConformalFactor, phi: HoloClass, lam: float, grid: SphereGrid) -> ScalarField:
    """Pointwise defect lap(u) + 2|phi|^2_{H_u} - lambda on the grid."""
    return ScalarField(grid.laplacian(u.u).real + 2.0 * phi_norm_sq(phi, u, grid).values - lam)


class _Workspace:
    """Transform plumbing for one (grid, K) pair."""

    def __init__(self, grid: SphereGrid, k_vals: np.ndarray, phi: HoloClass | None = None, refine_factor: float = 1.5):
        self.grid = grid
        self.k_vals = k_vals
        self.diag = _packed_laplace_diag(grid)
        self.n = self.diag.size
        self.fine_grid = None
        if phi is not None:
            self.fine_grid = build_grid(int(refine_factor * grid.l_max))
            self.k_fine = phi_norm_sq(phi, ConformalFactor.zero(self.fine_grid), self.fine_grid).values

    def u_values(self, x: np.ndarray) -> np.ndarray:
        return self.grid.synthesize(_unpack(x, self.grid.l_max)).real

    def fine_residual_sup(self, x: np.ndarray, lam: float) -> float:
        """Sup residual with the solution re-evaluated on a refined grid."""
        if self.fine_grid is None:
            return float("nan")
        gf = self.fine_grid
        c = _unpack(x, self.grid.l_max)
        cf = np.zeros((gf.l_max + 1, 2 * gf.l_max + 1), dtype=complex)
        lo = gf.l_max - self.grid.l_max
        cf[: self.grid.l_max + 1, lo : lo + 2 * self.grid.l_max + 1] = c
        u_vals = gf.synthesize(cf).real
        lap = gf.synthesize(gf.laplace_eigenvalues[:, None] * cf).real
        return float(np.abs(lap + 2.0 * self.k_fine * np.exp(2.0 * u_vals) - lam).max())

    def residual_packed(self, x: np.ndarray, lam: float) -> np.ndarray:
        c = _unpack(x, self.grid.l_max)
        u_vals = self.grid.synthesize(c).real
        lap_vals = self.grid.synthesize(self.grid.laplace_eigenvalues[:, None] * c).real
        r_vals = lap_vals + 2.0 * self.k_vals * np.exp(2.0 * u_vals) - lam
        return _pack(self.grid.analyze(r_vals), self.grid.l_max)

    def jacobian_operator(self, x: np.ndarray):
        v_vals = 4.0 * self.k_vals * np.exp(2.0 * self.u_values(x))

        def matvec(y):
            c = _unpack(y, self.grid.l_max)
            vals = self.grid.synthesize(c).real
            out = self.grid.analyze(v_vals * vals)
            out += self.grid.laplace_eigenvalues[:, None] * c
            return _pack(out, self.grid.l_max)

        sigma = max(float(v_vals.mean()), 1e-8)
        m_diag = 1.0 / (sigma - self.diag)

        op = LinearOperator((self.n, self.n), matvec=matvec, dtype=float)
        pre = LinearOperator((self.n, self.n), matvec=lambda y: m_diag * y, dtype=float)
        return op, pre


def _newton(ws: _Workspace, x0: np.ndarray, lam: float, cfg: SolveConfig):
    """Damped Newton at fixed lambda; returns (x, iterations, |r|, ok)."""
    x = x0.copy()
    r = ws.residual_packed(x, lam)
    rnorm = np.linalg.norm(r)
    for it in range(1, cfg.max_newton + 1):
        if rnorm < cfg.newton_tol:
            return x, it - 1, rnorm, True
        op, pre = ws.jacobian_operator(x)
        delta, info = minres(op, -r, M=pre, rtol=cfg.minres_rtol, maxiter=cfg.minres_maxiter)
        if info != 0 and np.linalg.norm(op @ delta + r) > 0.1 * rnorm:
            return x, it, rnorm, False
        step = 1.0
        for _ in range(10):
            x_try = x + step * delta
            if np.abs(ws.u_values(x_try)).max() > cfg.blowup_sup:
                step *= 0.5
                continue
            r_try = ws.residual_packed(x_try, lam)
            n_try = np.linalg.norm(r_try)
            if n_try < rnorm or n_try < cfg.newton_tol:
                x, r, rnorm = x_try, r_try, n_try
                break
            step *= 0.5
        else:
            return x, it, rnorm, False
    ok = rnorm < cfg.newton_tol
    return x, cfg.max_newton, rnorm, ok


def _initial_guess(ws: _Workspace, lam: float, cfg: SolveConfig) -> np.ndarray:
    """Constant balance plus one Poisson correction, valid for small lambda."""
    grid = ws.grid
    mass = float(np.real(grid.integrate(2.0 * ws.k_vals)))
    c0 = 0.5 * math.log(lam / mass)
    rhs = lam - 2.0 * ws.k_vals * math.exp(2.0 * c0)
    v = grid.solve_poisson(rhs - np.real(grid.integrate(rhs)), mean_tol=np.inf).real
    coeffs = grid.analyze(v)
    coeffs[0, grid.l_max] = c0
    return _pack(coeffs, grid.l_max)


def solve_phi_system(
    phi: HoloClass,
    lam: float,
    cfg: SolveConfig,
    initial: ConformalFactor | None = None,
) -> SolveResult:
    """Continuation-in-lambda Newton solve of the curvature system.

    Starts from the small-coupling asymptotic initializer and ramps lambda to
    the target with adaptive steps; a stalled ramp (step below cfg.min_step)
    returns converged=False with the trace instead of raising, since that is
    the expected signature of leaving the solvable range.
    """
    if lam <= 0:
        raise InvalidLambda(f"lambda must be positive, got {lam}")
    grid = build_grid(cfg.l_max)
    k_vals = phi_norm_sq(phi, ConformalFactor.zero(grid), grid).values
    ws = _Workspace(grid, k_vals, phi, cfg.refine_factor)
    trace = []

    def accepted(x, lam_at):
        return ws.fine_residual_sup(x, lam_at) <= cfg.spurious_tol * max(1.0, lam_at)

    if initial is not None:
        x = _pack(grid.analyze(initial.total), grid.l_max).astype(float)
        x, iters, rnorm, ok = _newton(ws, x, lam, cfg)
        trace.append((lam, iters, rnorm))
        return _finish(ws, phi, x, lam, ok and accepted(x, lam), trace)

    lam_now = min(cfg.lambda_init, lam)
    x = _initial_guess(ws, lam_now, cfg)
    x, iters, rnorm, ok = _newton(ws, x, lam_now, cfg)
    trace.append((lam_now, iters, rnorm))
    if not (ok and accepted(x, lam_now)):
        return _finish(ws, phi, x, lam_now, False, trace)

    step = cfg.continuation_step
    while lam_now < lam:
        lam_try = min(lam_now + step, lam)
        x_try, iters, rnorm, ok = _newton(ws, x, lam_try, cfg)
        if ok and np.abs(ws.u_values(x_try)).max() <= cfg.blowup_sup and accepted(x_try, lam_try):
            x, lam_now = x_try, lam_try
            trace.append((lam_try, iters, rnorm))
            step = min(step * 1.5, cfg.continuation_step * 4)
        else:
            trace.append((lam_try, iters, float("nan")))
            step *= 0.5
            if step < cfg.min_step:
                return _finish(ws, phi, x, lam_now, False, trace)
    return _finish(ws, phi, x, lam_now, True, trace)


def _finish(ws: _Workspace, phi: HoloClass, x, lam, converged, trace) -> SolveResult:
    grid = ws.grid
    coeffs = _unpack(x, grid.l_max)
    offset = float(coeffs[0, grid.l_max].real)
    coeffs[0, grid.l_max] = 0.0
    u = ConformalFactor(grid.synthesize(coeffs).real, offset)
    res = residual(u, phi, lam, grid)
    return SolveResult(
        u=u,
        lam=float(lam),
        residual_sup=float(np.abs(res.values).max()),
        converged=bool(converged),
        continuation_trace=trace,
        residual_fine=ws.fine_residual_sup(x, lam),
    )


def forward_F(phi: HoloClass, lam: float, cfg: SolveConfig, grid: SphereGrid | None = None) -> DualCoords:
    """Coordinates of the extension class whose image under the coupling-lam
    dualization map is the given holomorphic class."""
    result = solve_phi_system(phi, lam, cfg)
    if not result.converged:
        raise NonConvergence(f"continuation stalled at lambda={result.lam:.6f}", result.continuation_trace)
    grid = build_grid(cfg.l_max) if grid is None else grid
    return b_coords(phi, result.u, grid)


# ----------------------------------------------------------------------
# radial reduction
# ----------------------------------------------------------------------


@dataclass
class RadialProfile:
    """Axis-symmetric curvature data K(theta) = amp * cos^{2a}(t/2) sin^{2b}(t/2)."""

    k: int
    a: int
    amp: float  # includes the 2*pi class normalization

    @classmethod
    def from_class(cls, phi: HoloClass, tol: float = 1e-12) -> "RadialProfile":
        a_idx = np.nonzero(np.abs(phi.a) > tol * np.abs(phi.a).max())[0]
        if len(a_idx) != 1:
            raise ValueError("radial reduction requires a monomial class (divisor on one axis)")
        a = int(a_idx[0])
        return cls(k=phi.spec.k, a=a, amp=2.0 * np.pi * float(np.abs(phi.a[a]) ** 2))

    def __call__(self, theta):
        b = self.k - 2 - self.a
        return self.amp * np.cos(theta / 2.0) ** (2 * self.a) * np.sin(theta / 2.0) ** (2 * b)

    def total_mass(self) -> float:
        # integral of 2K over the sphere
        from scipy.integrate import quad

        val, _ = quad(lambda t: 2.0 * self(t) * 0.5 * np.sin(t), 0.0, np.pi)
        return val


@dataclass
class RadialResult:
    converged: bool
    lam: float
    root_alpha: float | None
    residual_sup: float | None
    mismatch_alphas: np.ndarray
    mismatch_values: np.ndarray
    mismatch_min: float
    error_estimate: float
    u: ConformalFactor | None = None
    # whole sweep at noise level: every start is a root (dilation family at
    # the Gauss-Bonnet coupling); the balanced start is reported
    degenerate_family: bool = False


def _shoot(profile: RadialProfile, lam: float, alpha: float, rtol: float = 1e-11):
    """Integrate u'' + cot(t) u' = (lam - 2K e^{2u})/(4 pi) from the north cap.

    State is (u, p) with p = sin(t) u'; the boundary defect p(pi-) vanishes
    exactly on regular solutions.
    """
    eps = 1e-6

    def q(t, u):
        return (lam - 2.0 * profile(t) * math.exp(2.0 * u)) / (4.0 * math.pi)

    def rhs(t, y):
        u, p = y
        return [p / math.sin(t), math.sin(t) * q(t, u)]

    q0 = q(eps, alpha)
    y0 = [alpha + 0.25 * q0 * eps * eps, 0.5 * q0 * eps * eps]
    sol = solve_ivp(rhs, (eps, math.pi - eps), y0, method="LSODA", rtol=rtol, atol=1e-13, dense_output=True)
    if not sol.success:
        return math.nan, None
    return sol.y[1, -1], sol


def solve_radial(
    profile: RadialProfile | HoloClass,
    lam: float,
    cfg: SolveConfig,
    alpha_range: tuple = (-9.0, 3.0),
    n_sweep: int = 49,
) -> RadialResult:
    """Shooting sweep for the radially symmetric reduction.

    Scans the free initial value, records the boundary-defect curve, refines
    any sign change by bisection, and polishes a found root with the full
    spectral Newton restricted by symmetry (warm start).  Without a sign
    change the minimum defect and an integration-error estimate are reported.
    """
    if isinstance(profile, HoloClass):
        profile = RadialProfile.from_class(profile)
    if lam <= 0:
        raise InvalidLambda(f"lambda must be positive, got {lam}")

    # center the sweep near the constant-balance value
    center = 0.5 * math.log(lam / profile.total_mass())
    alphas = np.linspace(alpha_range[0] + center, alpha_range[1] + center, n_sweep)
    values = np.array([_shoot(profile, lam, float(a))[0] for a in alphas])
    good = np.isfinite(values)
    if good.sum() < n_sweep // 2:
        raise SweepInconclusive("shooting integrations failed across most of the sweep")

    # integration-error scale from refinement comparisons across the sweep
    err_est = 1e-13
    for probe in (alphas[0], alphas[n_sweep // 2], alphas[-1]):
        coarse, _ = _shoot(profile, lam, float(probe), rtol=1e-8)
        fine, _ = _shoot(profile, lam, float(probe), rtol=1e-11)
        if math.isfinite(coarse) and math.isfinite(fine):
            err_est = max(err_est, abs(coarse - fine))

    mism_min = float(np.abs(values[good]).min())
    sign_changes = [
        i
        for i in range(n_sweep - 1)
        if good[i] and good[i + 1] and values[i] * values[i + 1] < 0
    ]
    roots = [
        brentq(lambda a: _shoot(profile, lam, a)[0], float(alphas[i]), float(alphas[i + 1]), xtol=1e-12)
        for i in sign_changes
    ]
    # a touching (non-crossing) zero or a whole flat family leaves no sign
    # change; the sweep minimum is then also a candidate start, tried first
    if mism_min < 1e-4 * max(1.0, lam):
        roots.insert(0, float(alphas[good][np.argmin(np.abs(values[good]))]))
    if not roots:
        if mism_min < 10.0 * err_est:
            raise SweepInconclusive(
                f"no sign change but minimum defect {mism_min:.2e} is within noise {err_est:.2e}"
            )
        return RadialResult(
            converged=False,
            lam=lam,
            root_alpha=None,
            residual_sup=None,
            mismatch_alphas=alphas,
            mismatch_values=values,
            mismatch_min=mism_min,
            error_estimate=err_est,
        )

    # polish each candidate on the spectral grid, keep the best residual
    grid = build_grid(cfg.l_max)
    a_vec = np.zeros(profile.k - 1, dtype=complex)
    a_vec[profile.a] = math.sqrt(profile.amp / (2.0 * np.pi))
    phi = HoloClass(BundleSpec(0, profile.k), a_vec)
    best = None
    for root in roots:
        _, sol = _shoot(profile, lam, float(root))
        if sol is None:
            continue
        u_init = ConformalFactor.from_values(
            np.repeat(sol.sol(grid.colat)[0][:, None], grid.n_lon, axis=1), grid
        )
        polish = solve_phi_system(phi, lam, cfg, initial=u_init)
        if best is None or (polish.converged and polish.residual_sup < best[1].residual_sup):
            best = (float(root), polish)
        if polish.converged:
            break
    root, polish = best
    noise_fraction = float(np.mean(np.abs(values[good]) < 1e-6 * max(1.0, lam)))
    return RadialResult(
        converged=polish.converged,
        lam=lam,
        root_alpha=root,
        residual_sup=polish.residual_sup,
        mismatch_alphas=alphas,
        mismatch_values=values,
        mismatch_min=mism_min,
        error_estimate=err_est,
        u=polish.u,
        degenerate_family=noise_fraction > 0.75,
    )
