"""Asymptotically flat metrics on the chart outside the unit ball.

The metric is g_ij(x) = (1 + sigma / |x|^(n-1)) delta_ij + h_ij(x) with a
mass parameter sigma and a decaying perturbation h.  Two built-in h
families are provided besides the unperturbed case:

* ``translated_center``: the same conformally flat profile recentred at a
  chart point c', so h is a difference of two decaying profiles.
* ``rank_one_bump``: h_ij = eps * p_i p_j * (1 + |x|^2)^(-n/2) for a unit
  direction p.

All evaluation is analytic (closed-form first and second derivatives)
and vectorized over trailing point batches.  Specs are immutable; every
operation is pure.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import DomainError


@dataclass(frozen=True)
class TranslatedCenter:
    """Conformal profile recentred at c' = offset * reference_radius."""

    offset: tuple
    reference_radius: float = 1.0

    def __post_init__(self):
        c = np.asarray(self.offset, dtype=float)
        if c.shape != (3,):
            raise DomainError("translated_center offset must be a 3-vector")
        if np.linalg.norm(c) >= 1.0:
            raise DomainError("translated_center offset must satisfy |c| < 1")
        object.__setattr__(self, "offset", tuple(c))

    @property
    def center(self):
        return np.asarray(self.offset) * self.reference_radius


@dataclass(frozen=True)
class RankOneBump:
    """h_ij = eps * p_i p_j * (1 + |x|^2)^(-n/2)."""

    direction: tuple
    eps: float

    def __post_init__(self):
        p = np.asarray(self.direction, dtype=float)
        if p.shape != (3,):
            raise DomainError("rank_one_bump direction must be a 3-vector")
        norm = np.linalg.norm(p)
        if norm == 0.0:
            raise DomainError("rank_one_bump direction must be nonzero")
        object.__setattr__(self, "direction", tuple(p / norm))


@dataclass(frozen=True)
class MetricSpec:
    """An asymptotically flat end in its chart normalization.

    n is the sphere dimension (runtime supports n = 2 only, but the
    closed-form expressions keep it symbolic), sigma the mass, and r_min
    the inner validity radius of the chart.  For negative mass r_min is
    raised so the conformal factor stays above 1/2 on the whole chart.
    """

    n: int = 2
    sigma: float = 1.0
    perturbation: Optional[object] = None
    r_min: float = 1.0

    def __post_init__(self):
        if self.n != 2:
            raise DomainError("runtime supports sphere dimension n = 2 only")
        if self.r_min < 1.0:
            raise DomainError("r_min must be at least 1 (chart normalization)")
        if self.perturbation is not None and not isinstance(
            self.perturbation, (TranslatedCenter, RankOneBump)
        ):
            raise DomainError("unknown perturbation family")
        if self.sigma < 0.0:
            # conformal factor 1 + sigma * r^(1-n) > 1/2 requires
            # r > (-2 sigma)^(1/(n-1))
            floor = (-2.0 * self.sigma) ** (1.0 / (self.n - 1))
            if self.r_min <= floor:
                object.__setattr__(self, "r_min", floor * (1.0 + 1e-9))

    @property
    def dim(self):
        return self.n + 1


def _check_points(spec, x):
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != spec.dim:
        raise DomainError(f"points must have {spec.dim} components")
    r = np.linalg.norm(x, axis=-1)
    if np.any(r < spec.r_min * (1.0 - 1e-12)):
        raise DomainError(
            f"point inside chart validity radius r_min={spec.r_min:.6g}"
        )
    return x, r


def _conformal_parts(spec, x):
    """Conformal factor psi, its gradient and Hessian, at points x.

    psi(x) = 1 + sigma |x - c|^(1-n) where c is the recentring of the
    translated_center family (zero otherwise); the remaining h pieces
    are handled separately.
    """
    n, sigma = spec.n, spec.sigma
    if isinstance(spec.perturbation, TranslatedCenter):
        z = x - spec.perturbation.center
    else:
        z = x
    rho = np.linalg.norm(z, axis=-1)
    u = rho ** (1.0 - n)                       # |z|^(1-n)
    du = (1.0 - n) * rho ** (-n - 1.0)         # coefficient of z_i
    # hess: d_i d_j |z|^(1-n) = du * delta_ij + ddu * z_i z_j
    ddu = (1.0 - n) * (-n - 1.0) * rho ** (-n - 3.0)
    psi = 1.0 + sigma * u
    grad = sigma * du[..., None] * z
    eye = np.eye(spec.dim)
    hess = sigma * (du[..., None, None] * eye
                    + ddu[..., None, None] * z[..., :, None] * z[..., None, :])
    return psi, grad, hess


def _bump_parts(spec, x):
    """h_ij, d_k h_ij and d_l d_k h_ij of the rank-one bump at points x."""
    pert = spec.perturbation
    n = spec.n
    p = np.asarray(pert.direction)
    pp = np.outer(p, p)
    q = np.sum(x * x, axis=-1)
    s = (1.0 + q) ** (-n / 2.0)
    ds = (-n / 2.0) * (1.0 + q) ** (-n / 2.0 - 1.0)
    dds = (-n / 2.0) * (-n / 2.0 - 1.0) * (1.0 + q) ** (-n / 2.0 - 2.0)
    h = pert.eps * s[..., None, None] * pp
    # d_k h_ij = eps p_i p_j * ds * 2 x_k
    dh = pert.eps * (2.0 * ds[..., None] * x)[..., :, None, None] * pp
    # d_l d_k = eps p_i p_j (4 x_k x_l dds + 2 delta_kl ds)
    eye = np.eye(spec.dim)
    quad = (4.0 * dds[..., None, None] * x[..., :, None] * x[..., None, :]
            + 2.0 * ds[..., None, None] * eye)
    d2h = pert.eps * quad[..., :, :, None, None] * pp
    return h, dh, d2h


def perturbation_at(spec, x, order=0):
    """The h tensor of the spec at points x, with derivatives up to order.

    Returns (h,), (h, dh) or (h, dh, d2h); dh is indexed dh[..., k, i, j]
    = d_k h_ij and d2h[..., l, k, i, j] = d_l d_k h_ij.
    """
    x = np.asarray(x, dtype=float)
    dim = spec.dim
    batch = x.shape[:-1]
    if isinstance(spec.perturbation, RankOneBump):
        h, dh, d2h = _bump_parts(spec, x)
    elif isinstance(spec.perturbation, TranslatedCenter):
        # difference of the recentred and centered conformal profiles
        out = []
        for center in (spec.perturbation.center, np.zeros(dim)):
            z = x - center
            rho = np.linalg.norm(z, axis=-1)
            n = spec.n
            u = rho ** (1.0 - n)
            du = (1.0 - n) * rho ** (-n - 1.0)
            ddu = (1.0 - n) * (-n - 1.0) * rho ** (-n - 3.0)
            eye = np.eye(dim)
            grad = du[..., None] * z
            hess = (du[..., None, None] * eye
                    + ddu[..., None, None] * z[..., :, None] * z[..., None, :])
            out.append((u, grad, hess))
        eye = np.eye(dim)
        h = spec.sigma * (out[0][0] - out[1][0])[..., None, None] * eye
        dh = spec.sigma * (out[0][1] - out[1][1])[..., :, None, None] * eye
        d2h = spec.sigma * (out[0][2] - out[1][2])[..., :, :, None, None] * eye
    else:
        h = np.zeros(batch + (dim, dim))
        dh = np.zeros(batch + (dim, dim, dim))
        d2h = np.zeros(batch + (dim, dim, dim, dim))
    if order == 0:
        return (h,)
    if order == 1:
        return h, dh
    return h, dh, d2h


def metric_at(spec, x):
    """The metric tensor g_ij(x); batched over leading axes of x."""
    x, _ = _check_points(spec, x)
    if isinstance(spec.perturbation, TranslatedCenter):
        # exactly the conformal profile about the shifted center
        psi, _, _ = _conformal_parts(spec, x)
        return psi[..., None, None] * np.eye(spec.dim)
    psi, _, _ = _conformal_parts(spec, x)
    g = psi[..., None, None] * np.eye(spec.dim)
    if isinstance(spec.perturbation, RankOneBump):
        g = g + _bump_parts(spec, x)[0]
    return g


def metric_derivative_at(spec, x):
    """Closed-form dg[..., k, i, j] = d_k g_ij(x)."""
    x, _ = _check_points(spec, x)
    _, grad, _ = _conformal_parts(spec, x)
    eye = np.eye(spec.dim)
    dg = grad[..., :, None, None] * eye
    if isinstance(spec.perturbation, RankOneBump):
        dg = dg + _bump_parts(spec, x)[1]
    return dg


def christoffel_at(spec, x):
    """Christoffel symbols Gamma[..., k, i, j] of the Levi-Civita connection."""
    x, _ = _check_points(spec, x)
    g = metric_at(spec, x)
    dg = metric_derivative_at(spec, x)
    ginv = np.linalg.inv(g)
    # Gamma^k_ij = 1/2 g^{kl} (d_i g_jl + d_j g_il - d_l g_ij);
    # dg is indexed dg[..., k, i, j] = d_k g_ij
    term = (np.einsum("...ijl->...ijl", dg)            # d_i g_jl
            + np.einsum("...jil->...ijl", dg)          # d_j g_il
            - np.einsum("...lij->...ijl", dg))         # d_l g_ij
    return 0.5 * np.einsum("...kl,...ijl->...kij", ginv, term)


def validate_decay(spec, radii, directions=None):
    """Decay report for the h family of a spec.

    For derivative orders m = 0, 1, 2 reports, at each radius, the sup
    over sample directions of |d^m h| * r^(n+m).  The spec is flagged
    invalid if any order's profile grows along the radii.
    """
    radii = np.asarray(radii, dtype=float)
    if np.any(np.diff(radii) <= 0):
        raise DomainError("radii must be increasing")
    if np.any(radii < spec.r_min):
        raise DomainError("radii must lie in the chart")
    if directions is None:
        directions = _sample_directions()
        axis = None
        if isinstance(spec.perturbation, TranslatedCenter):
            axis = np.asarray(spec.perturbation.center)
        elif isinstance(spec.perturbation, RankOneBump):
            axis = np.asarray(spec.perturbation.direction)
        if axis is not None and np.linalg.norm(axis) > 0:
            axis = axis / np.linalg.norm(axis)
            directions = np.vstack([directions, axis, -axis])
    sups = {0: [], 1: [], 2: []}
    for r in radii:
        pts = r * directions
        h, dh, d2h = perturbation_at(spec, pts, order=2)
        sups[0].append(float(np.max(np.abs(h))) * r ** spec.n)
        sups[1].append(float(np.max(np.abs(dh))) * r ** (spec.n + 1))
        sups[2].append(float(np.max(np.abs(d2h))) * r ** (spec.n + 2))
    # decaying families saturate their weighted bound from below, so a
    # strict non-increase test would misfire; growth beyond 10% of the
    # first sample marks decay slower than r^(-n-m)
    ok = all(
        vals[-1] <= 1.1 * max(vals[0], 1e-300) and max(vals) <= 1.1 * max(vals[0], vals[-1])
        for vals in sups.values()
    )
    return {
        "radii": [float(r) for r in radii],
        "weighted_sup": {m: vals for m, vals in sups.items()},
        "valid": ok,
    }


def _sample_directions(count=32):
    """Deterministic, well-spread unit directions (Fibonacci lattice)."""
    i = np.arange(count)
    z = 1.0 - (2.0 * i + 1.0) / count
    phi = i * np.pi * (3.0 - np.sqrt(5.0))
    s = np.sqrt(1.0 - z * z)
    return np.stack([s * np.cos(phi), s * np.sin(phi), z], axis=-1)
