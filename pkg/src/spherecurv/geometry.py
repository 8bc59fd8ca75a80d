"""Spectral geometry of the unit-area round sphere.

Everything in this package lives on the sphere normalized so that the total
area is 1 and the Gaussian curvature is 4*pi (radius 1/(2*sqrt(pi))).  The
grid is Gauss-Legendre in colatitude times an equispaced longitude circle,
with a complex spherical-harmonic transform attached.  In this normalization

    laplacian(Y_lm) = -4*pi * l*(l+1) * Y_lm

and the quadrature weights sum to exactly 1.

Charts: ``z = cot(theta/2) * exp(i*phi)`` is the stereographic coordinate
that is infinite at the north pole N and zero at the south pole S;
``w = 1/z``.  Grid nodes never touch the poles, so both charts are finite on
every node.

Determinism: all transforms are dense numpy contractions and are
deterministic for a fixed BLAS; ``integrate(..., sequential=True)`` bypasses
BLAS reductions entirely (math.fsum) for golden tests.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import roots_legendre

from .errors import NonZeroMean, SpecMismatch

# Curvature of the unit-area sphere; single source of the Laplacian scale.
GAUSS_CURVATURE = 4.0 * np.pi
SPHERE_RADIUS = 1.0 / (2.0 * np.sqrt(np.pi))


def _normalized_legendre(l_max: int, mu: np.ndarray, derivative: bool = False):
    """Associated Legendre functions, orthonormal on [-1, 1].

    Returns ``p[m, l, :]`` with ``int P[m,l] P[m,l'] dmu = delta_{ll'}``
    (zero for l < m).  With ``derivative=True`` also returns d/dtheta of the
    same functions, using mu = cos(theta).

    The recurrence is the standard stable one seeded at the sectoral term,
    so no factorials are formed and degrees of a few hundred are safe.
    """
    mu = np.asarray(mu, dtype=float)
    s = np.sqrt(np.maximum(1.0 - mu * mu, 0.0))  # sin(theta) > 0 off the poles
    p = np.zeros((l_max + 1, l_max + 1) + mu.shape)
    p[0, 0] = np.sqrt(0.5)
    for m in range(1, l_max + 1):
        p[m, m] = -np.sqrt((2 * m + 1) / (2.0 * m)) * s * p[m - 1, m - 1]
    for m in range(l_max):
        p[m, m + 1] = np.sqrt(2 * m + 3.0) * mu * p[m, m]
    for m in range(l_max + 1):
        for l in range(m + 2, l_max + 1):
            a = np.sqrt((4.0 * l * l - 1.0) / (l * l - m * m))
            b = np.sqrt(((l - 1.0) ** 2 - m * m) / (4.0 * (l - 1.0) ** 2 - 1.0))
            p[m, l] = a * (mu * p[m, l - 1] - b * p[m, l - 2])
    if not derivative:
        return p
    # d/dmu by differentiating the same recurrences, then d/dtheta = -s d/dmu.
    # Sectoral seed: dP_mm/dmu = -m*mu/(1-mu^2) * P_mm.
    dp = np.zeros_like(p)
    with np.errstate(divide="ignore", invalid="ignore"):
        inv_s2 = 1.0 / (1.0 - mu * mu)
    for m in range(1, l_max + 1):
        dp[m, m] = -m * mu * inv_s2 * p[m, m]
    for m in range(l_max):
        dp[m, m + 1] = np.sqrt(2 * m + 3.0) * (p[m, m] + mu * dp[m, m])
    for m in range(l_max + 1):
        for l in range(m + 2, l_max + 1):
            a = np.sqrt((4.0 * l * l - 1.0) / (l * l - m * m))
            b = np.sqrt(((l - 1.0) ** 2 - m * m) / (4.0 * (l - 1.0) ** 2 - 1.0))
            dp[m, l] = a * (p[m, l - 1] + mu * dp[m, l - 1] - b * dp[m, l - 2])
    dp_dtheta = -s * dp
    return p, dp_dtheta


@dataclass
class ScalarField:
    """Samples of a scalar function at the grid nodes, shape (n_lat, n_lon).

    ``coeffs`` caches the spherical-harmonic coefficients (filled lazily by
    the grid transform helpers; never required).
    """

    values: np.ndarray
    coeffs: np.ndarray | None = None


def _vals(f) -> np.ndarray:
    return f.values if isinstance(f, ScalarField) else np.asarray(f)


@dataclass(frozen=True)
class ChartPoint:
    """A point of the sphere in both stereographic charts, z*w = 1."""

    z: complex
    w: complex

    @classmethod
    def from_z(cls, z: complex) -> "ChartPoint":
        z = complex(z)
        if z == 0:
            return cls(0j, complex(np.inf))
        if np.isinf(abs(z)):
            return cls(complex(np.inf), 0j)
        return cls(z, 1.0 / z)

    @classmethod
    def from_w(cls, w: complex) -> "ChartPoint":
        w = complex(w)
        if w == 0:
            return cls(complex(np.inf), 0j)
        if np.isinf(abs(w)):
            return cls(0j, complex(np.inf))
        return cls(1.0 / w, w)

    @classmethod
    def from_angles(cls, theta: float, phi: float) -> "ChartPoint":
        half = 0.5 * theta
        if half == 0.0:
            return cls(complex(np.inf), 0j)
        z = (math.cos(half) / math.sin(half)) * complex(math.cos(phi), math.sin(phi))
        return cls.from_z(z)

    @property
    def theta(self) -> float:
        if np.isinf(abs(self.w)):
            return math.pi
        return 2.0 * math.atan(abs(self.w))

    @property
    def phi(self) -> float:
        if np.isinf(abs(self.z)) or self.z == 0:
            return 0.0
        return math.atan2(self.z.imag, self.z.real) % (2.0 * math.pi)


class SphereGrid:
    """Gauss-Legendre x equispaced-longitude grid with spectral transforms.

    Parameters
    ----------
    l_max : int
        Spectral truncation degree, at least 4.

    Attributes
    ----------
    colat, lon : 1-D node coordinate arrays (poles excluded).
    weights : (n_lat, n_lon) quadrature weights, summing to 1.
    z, w : (n_lat, n_lon) complex chart coordinates of the nodes.
    """

    def __init__(self, l_max: int):
        if l_max < 4:
            raise ValueError(f"l_max must be >= 4, got {l_max}")
        self.l_max = int(l_max)
        self.n_lat = self.l_max + 1
        # Multiple of 4 keeps the longitude circle invariant under the
        # quarter-turn isometries used in the symmetry experiments.
        self.n_lon = 4 * ((2 * self.l_max + 2 + 3) // 4)

        mu, glw = roots_legendre(self.n_lat)
        order = np.argsort(-mu)  # north to south
        self.mu = mu[order]
        self.glw = glw[order]
        self.colat = np.arccos(self.mu)
        self.lon = 2.0 * np.pi * np.arange(self.n_lon) / self.n_lon
        self.weights = np.outer(self.glw / 2.0, np.full(self.n_lon, 1.0 / self.n_lon))

        theta = self.colat[:, None]
        phase = np.exp(1j * self.lon)[None, :]
        self.z = (np.cos(theta / 2) / np.sin(theta / 2)) * phase
        self.w = (np.sin(theta / 2) / np.cos(theta / 2)) * np.conj(phase)

        plm, dplm = _normalized_legendre(self.l_max, self.mu, derivative=True)
        # Tables indexed by the signed order m = -l_max..l_max (column m+l_max).
        abs_m = np.abs(np.arange(-self.l_max, self.l_max + 1))
        self._plm_full = plm[abs_m]          # (2L+1, L+1, n_lat)
        self._dplm_full = dplm[abs_m]
        self._fft_cols = np.arange(-self.l_max, self.l_max + 1) % self.n_lon
        ell = np.arange(self.l_max + 1, dtype=float)
        self.laplace_eigenvalues = -GAUSS_CURVATURE * ell * (ell + 1.0)

    # ------------------------------------------------------------------
    # transforms
    # ------------------------------------------------------------------

    def analyze(self, values) -> np.ndarray:
        """Forward transform to coefficients c[l, m+l_max], m in [-l_max, l_max]."""
        v = np.asarray(_vals(values), dtype=complex)
        if v.shape != (self.n_lat, self.n_lon):
            raise SpecMismatch(f"field shape {v.shape} does not match grid {(self.n_lat, self.n_lon)}")
        fm = np.fft.fft(v, axis=1) / self.n_lon
        wfm = (self.glw / 2.0)[:, None] * fm[:, self._fft_cols]
        return np.sqrt(2.0) * np.einsum("mlj,jm->lm", self._plm_full, wfm)

    def synthesize(self, coeffs) -> np.ndarray:
        """Inverse transform from c[l, m+l_max] to node values."""
        c = np.asarray(coeffs, dtype=complex)
        g = np.sqrt(2.0) * np.einsum("mlj,lm->jm", self._plm_full, c)
        spread = np.zeros((self.n_lat, self.n_lon), dtype=complex)
        np.add.at(spread, (slice(None), self._fft_cols), g)
        return np.fft.ifft(spread, axis=1) * self.n_lon

    def synthesize_dtheta(self, coeffs) -> np.ndarray:
        """Colatitude derivative of the band-limited field with given coefficients."""
        c = np.asarray(coeffs, dtype=complex)
        g = np.sqrt(2.0) * np.einsum("mlj,lm->jm", self._dplm_full, c)
        spread = np.zeros((self.n_lat, self.n_lon), dtype=complex)
        np.add.at(spread, (slice(None), self._fft_cols), g)
        return np.fft.ifft(spread, axis=1) * self.n_lon

    def evaluate(self, coeffs, theta, phi) -> np.ndarray:
        """Evaluate the band-limited field at arbitrary points (off-grid synthesis)."""
        c = np.asarray(coeffs, dtype=complex)
        theta = np.atleast_1d(np.asarray(theta, dtype=float))
        phi = np.atleast_1d(np.asarray(phi, dtype=float))
        plm = _normalized_legendre(self.l_max, np.cos(theta))
        out = np.zeros(theta.shape, dtype=complex)
        for m in range(-self.l_max, self.l_max + 1):
            col = c[:, m + self.l_max]
            if not np.any(col):
                continue
            radial = np.tensordot(col, plm[abs(m)], axes=(0, 0))
            out += np.sqrt(2.0) * radial * np.exp(1j * m * phi)
        return out

    # ------------------------------------------------------------------
    # quadrature and calculus
    # ------------------------------------------------------------------

    def integrate(self, f, sequential: bool = False):
        """Integral against the normalized measure (total mass 1).

        ``sequential=True`` reduces with math.fsum in a fixed order, which is
        bitwise reproducible regardless of BLAS threading.
        """
        v = _vals(f)
        if v.shape != (self.n_lat, self.n_lon):
            raise SpecMismatch(f"field shape {v.shape} does not match grid {(self.n_lat, self.n_lon)}")
        if sequential:
            prod = (self.weights * v).ravel()
            if np.iscomplexobj(prod):
                return complex(math.fsum(prod.real), math.fsum(prod.imag))
            return math.fsum(prod)
        return (self.weights * v).sum()

    def laplacian(self, f) -> np.ndarray:
        """Spectral Laplace-Beltrami operator; valid for band-limited fields."""
        c = self.analyze(f)
        return self.synthesize(self.laplace_eigenvalues[:, None] * c)

    def solve_poisson(self, rhs, mean_tol: float = 1e-8) -> np.ndarray:
        """Unique mean-zero u with laplacian(u) = rhs; rhs must have zero mean."""
        c = self.analyze(rhs)
        mean = self.integrate(rhs)
        if abs(mean) > mean_tol:
            raise NonZeroMean(abs(mean), mean_tol)
        c = c.copy()
        c[0, :] = 0.0
        c[1:, :] /= self.laplace_eigenvalues[1:, None]
        return self.synthesize(c)

    # ------------------------------------------------------------------
    # chart derivatives
    # ------------------------------------------------------------------

    def d_dphi(self, f) -> np.ndarray:
        v = np.asarray(_vals(f), dtype=complex)
        m = np.fft.fftfreq(self.n_lon, 1.0 / self.n_lon)
        return np.fft.ifft(1j * m[None, :] * np.fft.fft(v, axis=1), axis=1)

    def d_dz(self, f) -> np.ndarray:
        """Chart derivative  d/dz  of a (smooth) field sampled on the nodes.

        Uses dz = R'(theta) e^{i phi} dtheta + i z dphi with R = cot(theta/2):
        d/dz = [ -(sin(theta)/2) d/dtheta - (i/2) d/dphi ] / z.
        """
        c = self.analyze(f)
        f_theta = self.synthesize_dtheta(c)
        f_phi = self.d_dphi(f)
        sin_t = np.sin(self.colat)[:, None]
        return (-(sin_t / 2.0) * f_theta - 0.5j * f_phi) / self.z

    def d_dzbar(self, f) -> np.ndarray:
        """Chart derivative d/d(conj z); conjugate-of-derivative-of-conjugate."""
        return np.conj(self.d_dz(np.conj(np.asarray(_vals(f), dtype=complex))))


# ----------------------------------------------------------------------
# module-level operations (thin functional wrappers)
# ----------------------------------------------------------------------


@lru_cache(maxsize=8)
def build_grid(l_max: int) -> SphereGrid:
    """Grid for spectral degree l_max (>= 4); cached since construction is pure."""
    return SphereGrid(l_max)


def integrate(f, grid: SphereGrid, sequential: bool = False):
    return grid.integrate(f, sequential=sequential)


def laplacian(f, grid: SphereGrid) -> ScalarField:
    return ScalarField(grid.laplacian(f))


def solve_poisson(rhs, grid: SphereGrid, mean_tol: float = 1e-8) -> ScalarField:
    return ScalarField(grid.solve_poisson(rhs, mean_tol=mean_tol))


def laplacian_local(fn, theta, phi, h: float = 1e-3) -> np.ndarray:
    """High-order finite-difference Laplacian of a callable field.

    ``fn(theta, phi)`` must be evaluable at arbitrary points near the
    targets.  This is the evaluation route for fields with isolated chart
    singularities (log potentials), where the global spectral operator's
    band-limited precondition fails; it is also the independent oracle used
    against the spectral path in tests.  Fourth-order central differences in
    both coordinates:

        lap f = 4*pi * [ f_tt + cot(t) f_t + f_pp / sin(t)^2 ].
    """
    theta = np.asarray(theta, dtype=float)
    phi = np.asarray(phi, dtype=float)

    def d1(axis_theta):
        if axis_theta:
            samples = [fn(theta + k * h, phi) for k in (-2, -1, 1, 2)]
        else:
            samples = [fn(theta, phi + k * h) for k in (-2, -1, 1, 2)]
        fm2, fm1, fp1, fp2 = samples
        return (fm2 - 8 * fm1 + 8 * fp1 - fp2) / (12 * h)

    def d2(axis_theta):
        if axis_theta:
            samples = [fn(theta + k * h, phi) for k in (-2, -1, 0, 1, 2)]
        else:
            samples = [fn(theta, phi + k * h) for k in (-2, -1, 0, 1, 2)]
        fm2, fm1, f0, fp1, fp2 = samples
        return (-fm2 + 16 * fm1 - 30 * f0 + 16 * fp1 - fp2) / (12 * h * h)

    f_t = d1(True)
    f_tt = d2(True)
    f_pp = d2(False)
    return GAUSS_CURVATURE * (f_tt + f_t / np.tan(theta) + f_pp / np.sin(theta) ** 2)
