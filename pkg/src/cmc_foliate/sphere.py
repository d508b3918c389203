"""Scalar fields on the unit 2-sphere.

Fields are stored both as real, fully normalized spherical-harmonic
coefficients (degrees 0..lmax) and as values on a Gauss-Legendre x
equispaced-longitude quadrature grid.  The grid has no points at the
poles, the quadrature integrates products of harmonics up to total
degree 2*lmax+1 exactly, and the associated-Legendre tables carry first
and second theta-derivatives so that band-limited fields can be
differentiated exactly (to roundoff) on the grid and at arbitrary
points.

Coefficient layout: flat array of length (lmax+1)**2 ordered by degree,
with block offsets l**2 and, inside degree l, the order m=0 entry first
and then (cos, sin) pairs for m = 1..l.  The degree-1 basis is aligned
with the Cartesian coordinate functions: x^i restricted to the sphere
equals COORD_SCALE times the basis function at flat index (2, 3, 1) for
i = (1, 2, 3).  COORD_SCALE = sqrt(4*pi/3).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
import math

import numpy as np

from .errors import ShapeError

# x^i = COORD_SCALE * Y_1i with the degree-1 flat indices DEGREE1_IDX
COORD_SCALE = math.sqrt(4.0 * math.pi / 3.0)
# flat coefficient indices carrying (x^1, x^2, x^3) content
DEGREE1_IDX = (2, 3, 1)


def flat_index(l, m, part=0):
    """Flat coefficient index of degree l, order m; part=0 cos, 1 sin."""
    if m == 0:
        return l * l
    return l * l + 2 * m - 1 + part


def coeff_degrees(lmax):
    """Array mapping each flat coefficient index to its degree."""
    deg = np.empty((lmax + 1) ** 2, dtype=int)
    for l in range(lmax + 1):
        deg[l * l:(l + 1) * (l + 1)] = l
    return deg


def _legendre_tables(ltab, x):
    """Normalized associated Legendre tables with theta-derivatives.

    Returns three lists indexed by order m; entry m is an array of shape
    (ltab + 1 - m, len(x)) whose row i holds N_m * p_{m+i}^m(x) where
    p_l^m is orthonormal on [-1, 1] and N_0 = 1/sqrt(2*pi),
    N_m = 1/sqrt(pi).  The companion lists hold d/dtheta and
    d^2/dtheta^2 of the same quantities (x = cos theta).
    """
    c = np.asarray(x, dtype=float)
    s = np.sqrt(np.maximum(0.0, 1.0 - c * c))
    P, DP, D2P = [], [], []
    pmm = np.full_like(c, 1.0 / math.sqrt(2.0))
    dpmm = np.zeros_like(c)
    d2pmm = np.zeros_like(c)
    for m in range(ltab + 1):
        if m > 0:
            f = math.sqrt((2.0 * m + 1.0) / (2.0 * m))
            pmm, dpmm, d2pmm = (
                f * s * pmm,
                f * (c * pmm + s * dpmm),
                f * (-s * pmm + 2.0 * c * dpmm + s * d2pmm),
            )
        rows_p, rows_dp, rows_d2p = [pmm], [dpmm], [d2pmm]
        if ltab >= m + 1:
            f = math.sqrt(2.0 * m + 3.0)
            p1 = f * c * pmm
            dp1 = f * (-s * pmm + c * dpmm)
            d2p1 = f * (-c * pmm - 2.0 * s * dpmm + c * d2pmm)
            rows_p.append(p1)
            rows_dp.append(dp1)
            rows_d2p.append(d2p1)
            p2, dp2, d2p2 = pmm, dpmm, d2pmm
            for l in range(m + 2, ltab + 1):
                a = math.sqrt((4.0 * l * l - 1.0) / (l * l - m * m))
                b = math.sqrt(((l - 1.0) ** 2 - m * m) / (4.0 * (l - 1.0) ** 2 - 1.0))
                p0 = a * (c * p1 - b * p2)
                dp0 = a * (-s * p1 + c * dp1 - b * dp2)
                d2p0 = a * (-c * p1 - 2.0 * s * dp1 + c * d2p1 - b * d2p2)
                rows_p.append(p0)
                rows_dp.append(dp0)
                rows_d2p.append(d2p0)
                p2, dp2, d2p2 = p1, dp1, d2p1
                p1, dp1, d2p1 = p0, dp0, d2p0
        norm = 1.0 / math.sqrt(2.0 * math.pi) if m == 0 else 1.0 / math.sqrt(math.pi)
        P.append(np.array(rows_p) * norm)
        DP.append(np.array(rows_dp) * norm)
        D2P.append(np.array(rows_d2p) * norm)
    return P, DP, D2P


class TransformPlan:
    """Precomputed grid, quadrature and Legendre tables for one resolution.

    The tables extend one degree past lmax (when the grid allows) so
    that products of a band-limited field with the degree-1 coordinate
    functions can still be analyzed exactly.
    """

    def __init__(self, lmax, nlat=None, nlon=None):
        if lmax < 0:
            raise ShapeError("lmax must be nonnegative")
        self.lmax = int(lmax)
        self.nlat = int(nlat) if nlat is not None else self.lmax + 2
        self.nlon = int(nlon) if nlon is not None else 2 * self.lmax + 4
        self.ltab = min(self.nlat - 1, (self.nlon - 1) // 2)
        if self.ltab < self.lmax:
            raise ShapeError(
                f"grid {self.nlat}x{self.nlon} cannot resolve lmax={self.lmax}"
            )
        xs, ws = np.polynomial.legendre.leggauss(self.nlat)
        # theta ascending (north to south): x = cos(theta) descending
        self.x = xs[::-1].copy()
        self.weights = ws[::-1].copy()
        self.theta = np.arccos(self.x)
        self.lam = 2.0 * math.pi * np.arange(self.nlon) / self.nlon
        self.P, self.DP, self.D2P = _legendre_tables(self.ltab, self.x)
        # gather indices from the flat layout, per order m
        self.cos_idx = []
        self.sin_idx = []
        for m in range(self.ltab + 1):
            ls = np.arange(m, self.ltab + 1)
            if m == 0:
                self.cos_idx.append(ls * ls)
                self.sin_idx.append(None)
            else:
                self.cos_idx.append(ls * ls + 2 * m - 1)
                self.sin_idx.append(ls * ls + 2 * m)
        self.degrees = coeff_degrees(self.ltab)
        for arr in (self.x, self.weights, self.theta, self.lam):
            arr.flags.writeable = False

    # -- basic geometry -------------------------------------------------

    def ncoef(self, lmax=None):
        lmax = self.lmax if lmax is None else lmax
        return (lmax + 1) ** 2

    @property
    def grid_shape(self):
        return (self.nlat, self.nlon)

    def unit_vectors(self):
        """Grid nodes as unit vectors, shape (nlat, nlon, 3)."""
        st = np.sin(self.theta)[:, None]
        ct = np.cos(self.theta)[:, None]
        cl = np.cos(self.lam)[None, :]
        sl = np.sin(self.lam)[None, :]
        return np.stack([st * cl, st * sl, ct * np.ones_like(cl)], axis=-1)

    def integrate(self, values):
        """Quadrature integral of grid values over the round sphere."""
        values = np.asarray(values)
        if values.shape != self.grid_shape:
            raise ShapeError(f"expected grid shape {self.grid_shape}")
        return (2.0 * math.pi / self.nlon) * float(self.weights @ values.sum(axis=1))

    # -- transforms ------------------------------------------------------

    def analyze(self, values, lmax=None):
        """Grid values -> spherical-harmonic coefficients (degrees <= lmax)."""
        lmax = self.lmax if lmax is None else int(lmax)
        if lmax > self.ltab:
            raise ShapeError(f"analysis degree {lmax} exceeds table limit {self.ltab}")
        values = np.asarray(values, dtype=float)
        if values.shape != self.grid_shape:
            raise ShapeError(f"expected grid shape {self.grid_shape}")
        spec = np.fft.rfft(values, axis=1)
        coeffs = np.zeros((lmax + 1) ** 2)
        wA = self.weights * spec[:, 0].real / self.nlon
        rows = lmax + 1
        coeffs[self.cos_idx[0][:rows]] = 2.0 * math.pi * (self.P[0][:rows] @ wA)
        for m in range(1, lmax + 1):
            rows = lmax + 1 - m
            wA = self.weights * (2.0 * spec[:, m].real / self.nlon)
            wB = self.weights * (-2.0 * spec[:, m].imag / self.nlon)
            coeffs[self.cos_idx[m][:rows]] = math.pi * (self.P[m][:rows] @ wA)
            coeffs[self.sin_idx[m][:rows]] = math.pi * (self.P[m][:rows] @ wB)
        return coeffs

    def _lmax_of(self, coeffs):
        n = len(coeffs)
        lmax = int(round(math.sqrt(n))) - 1
        if (lmax + 1) ** 2 != n or lmax > self.ltab:
            raise ShapeError(f"coefficient vector of length {n} does not fit plan")
        return lmax

    def _profiles(self, coeffs, table):
        """Per-order latitude profiles (C_m, S_m) against a Legendre table."""
        lmax = self._lmax_of(coeffs)
        C = np.zeros((lmax + 1, self.nlat))
        S = np.zeros((lmax + 1, self.nlat))
        for m in range(lmax + 1):
            rows = lmax + 1 - m
            C[m] = coeffs[self.cos_idx[m][:rows]] @ table[m][:rows]
            if m > 0:
                S[m] = coeffs[self.sin_idx[m][:rows]] @ table[m][:rows]
        return C, S

    def _assemble(self, C, S):
        """Values on the grid from per-order latitude profiles."""
        nfreq = self.nlon // 2 + 1
        spec = np.zeros((self.nlat, nfreq), dtype=complex)
        mmax = C.shape[0] - 1
        spec[:, 0] = C[0] * self.nlon
        for m in range(1, mmax + 1):
            spec[:, m] = (C[m] - 1j * S[m]) * (self.nlon / 2.0)
        return np.fft.irfft(spec, n=self.nlon, axis=1)

    def synthesize(self, coeffs):
        """Coefficients -> values on the quadrature grid."""
        C, S = self._profiles(coeffs, self.P)
        return self._assemble(C, S)

    def synthesize_derivatives(self, coeffs):
        """Values and all grid derivatives through second order.

        Returns (f, f_t, f_l, f_tt, f_tl, f_ll) where t is theta and l
        is longitude.  Exact (to roundoff) for band-limited fields.
        """
        C, S = self._profiles(coeffs, self.P)
        Ct, St = self._profiles(coeffs, self.DP)
        Ctt, Stt = self._profiles(coeffs, self.D2P)
        m = np.arange(C.shape[0])[:, None]
        f = self._assemble(C, S)
        f_t = self._assemble(Ct, St)
        f_l = self._assemble(m * S, -m * C)
        f_tt = self._assemble(Ctt, Stt)
        f_tl = self._assemble(m * St, -m * Ct)
        f_ll = self._assemble(-m * m * C, -m * m * S)
        return f, f_t, f_l, f_tt, f_tl, f_ll

    def eval_at(self, coeffs, theta, lam, derivatives=False):
        """Evaluate a coefficient vector at arbitrary points.

        theta, lam are broadcast-compatible arrays.  With
        derivatives=True returns (f, f_theta, f_lambda).
        """
        lmax = self._lmax_of(coeffs)
        theta = np.asarray(theta, dtype=float)
        lam = np.asarray(lam, dtype=float)
        shape = np.broadcast_shapes(theta.shape, lam.shape)
        th = np.broadcast_to(theta, shape).ravel()
        ll = np.broadcast_to(lam, shape).ravel()
        P, DP, _ = _legendre_tables(lmax, np.cos(th))
        f = np.zeros(th.shape)
        ft = np.zeros(th.shape)
        fl = np.zeros(th.shape)
        for m in range(lmax + 1):
            rows = lmax + 1 - m
            cm = coeffs[self.cos_idx[m][:rows]]
            C = cm @ P[m]
            Ct = cm @ DP[m]
            if m == 0:
                f += C
                ft += Ct
                continue
            sm = coeffs[self.sin_idx[m][:rows]]
            S = sm @ P[m]
            St = sm @ DP[m]
            cl, sl = np.cos(m * ll), np.sin(m * ll)
            f += C * cl + S * sl
            ft += Ct * cl + St * sl
            fl += m * (S * cl - C * sl)
        if derivatives:
            return f.reshape(shape), ft.reshape(shape), fl.reshape(shape)
        return f.reshape(shape)


@lru_cache(maxsize=32)
def get_plan(lmax, nlat=None, nlon=None):
    """Shared, read-only transform plan for one resolution."""
    return TransformPlan(lmax, nlat, nlon)


@dataclass(frozen=True)
class SpectralField:
    """A scalar function on the sphere: coefficients plus grid values."""

    plan: TransformPlan = field(repr=False)
    coeffs: np.ndarray = field(repr=False)
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        for arr in (self.coeffs, self.values):
            arr.flags.writeable = False

    @classmethod
    def from_values(cls, plan, values, lmax=None):
        values = np.array(values, dtype=float)
        return cls(plan, plan.analyze(values, lmax=lmax), values)

    @classmethod
    def from_coeffs(cls, plan, coeffs):
        coeffs = np.array(coeffs, dtype=float)
        return cls(plan, coeffs, plan.synthesize(coeffs))

    @classmethod
    def constant(cls, plan, value):
        coeffs = np.zeros(plan.ncoef())
        coeffs[0] = value * math.sqrt(4.0 * math.pi)
        return cls(plan, coeffs, np.full(plan.grid_shape, float(value)))

    @classmethod
    def coordinate(cls, plan, axis):
        """The coordinate function x^axis restricted to the sphere."""
        coeffs = np.zeros(plan.ncoef())
        coeffs[DEGREE1_IDX[axis]] = COORD_SCALE
        return cls(plan, coeffs, plan.unit_vectors()[..., axis].copy())

    @property
    def lmax(self):
        return int(round(math.sqrt(len(self.coeffs)))) - 1

    def sup(self):
        return float(np.max(np.abs(self.values)))

    def integral(self):
        return self.plan.integrate(self.values)

    def l2_norm(self):
        return float(np.linalg.norm(self.coeffs))

    def __add__(self, other):
        self._check(other)
        return SpectralField(self.plan, self.coeffs + other.coeffs,
                             self.values + other.values)

    def __sub__(self, other):
        self._check(other)
        return SpectralField(self.plan, self.coeffs - other.coeffs,
                             self.values - other.values)

    def __mul__(self, scalar):
        scalar = float(scalar)
        return SpectralField(self.plan, scalar * self.coeffs, scalar * self.values)

    __rmul__ = __mul__

    def __neg__(self):
        return self * -1.0

    def shift(self, constant):
        """Add a constant (degree-0 surgery, values adjusted in step)."""
        coeffs = self.coeffs.copy()
        coeffs[0] += constant * math.sqrt(4.0 * math.pi)
        return SpectralField(self.plan, coeffs, self.values + constant)

    def _check(self, other):
        if self.plan is not other.plan or len(self.coeffs) != len(other.coeffs):
            raise ShapeError("fields live on different plans")


def dealiased_product(f, g):
    """Pointwise product of two fields, evaluated on a 3/2-padded grid.

    The factors are synthesized on a finer grid so the band-limited part
    of the product (degrees <= lmax) is computed alias-free; the result
    is truncated back to the common band limit.
    """
    f._check(g)
    lmax = f.lmax
    lpad = (3 * lmax + 1) // 2 + 1
    pad = get_plan(lpad)
    fv = pad.synthesize(_extend(f.coeffs, lpad))
    gv = pad.synthesize(_extend(g.coeffs, lpad))
    coeffs_pad = pad.analyze(fv * gv)
    coeffs = coeffs_pad[:(lmax + 1) ** 2].copy()
    return SpectralField(f.plan, coeffs, f.plan.synthesize(coeffs))


def _extend(coeffs, lmax_new):
    out = np.zeros((lmax_new + 1) ** 2)
    out[:len(coeffs)] = coeffs
    return out
