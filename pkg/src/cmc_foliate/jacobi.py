"""Flat-limit linearized operator on the sphere and its kernel algebra.

The linearization of the rescaled mean curvature at the round unit
sphere is L = Laplace_S + n, acting on degree-l harmonics as
multiplication by n - l(l + n - 1).  Its kernel is the degree-1 space
(infinitesimal translations).  The kernel pairing uses the unnormalized
L2 inner product against the coordinate functions, so that projecting
tau . x returns omega_{n+1} * tau with omega_{n+1} = vol(B_1) the unit
ball volume; this is the convention under which the center-equation
coefficient carries the omega factor literally.
"""

from __future__ import annotations

from dataclasses import dataclass
import math

import numpy as np

from .errors import KernelResidueError
from .sphere import SpectralField, COORD_SCALE, DEGREE1_IDX, coeff_degrees

# tolerance below which degree-1 content counts as absent
KERNEL_TOL = 1e-8


def unit_ball_volume(dim):
    """Volume of the unit ball in R^dim."""
    return math.pi ** (dim / 2.0) / math.gamma(dim / 2.0 + 1.0)


def eigenvalue(l, n=2):
    """Eigenvalue of L on degree-l harmonics: n - l(l + n - 1)."""
    return n - l * (l + n - 1)


def apply_L(field, n=2):
    """Apply L = Laplace + n coefficientwise."""
    deg = coeff_degrees(field.lmax)
    coeffs = field.coeffs * (n - deg * (deg + n - 1))
    return SpectralField.from_coeffs(field.plan, coeffs)


@dataclass(frozen=True)
class KernelProjection:
    """Kernel pairing vector and the exactly kernel-free remainder."""

    vector: np.ndarray
    remainder: SpectralField


def kernel_vector(field):
    """Unnormalized pairing integral(field * x^i) as a 3-vector."""
    c = field.coeffs
    return COORD_SCALE * np.array([c[DEGREE1_IDX[0]], c[DEGREE1_IDX[1]],
                                   c[DEGREE1_IDX[2]]])


def kernel_field(plan, vector):
    """The degree-1 field sum_i v_i x^i."""
    coeffs = np.zeros(plan.ncoef())
    for i in range(3):
        coeffs[DEGREE1_IDX[i]] = vector[i] * COORD_SCALE
    return SpectralField.from_coeffs(plan, coeffs)


def project_kernel(field):
    """Split a field into its kernel pairing and kernel-free remainder.

    remainder = field - (n+1)/vol(S^n) * sum_i vector_i x^i, which is
    exact degree-1 coefficient surgery; re-projection of the remainder
    gives a zero vector identically.
    """
    vector = kernel_vector(field)
    coeffs = field.coeffs.copy()
    for idx in DEGREE1_IDX:
        coeffs[idx] = 0.0
    return KernelProjection(vector=vector,
                            remainder=SpectralField.from_coeffs(field.plan, coeffs))


def solve_complement(field, n=2):
    """Invert L on the kernel complement (degree-0 included).

    The input must be kernel-free: degree-1 coefficients above
    KERNEL_TOL relative to the coefficient norm raise
    KernelResidueError, signalling the caller to project first.
    """
    c = field.coeffs
    scale = max(float(np.linalg.norm(c)), 1e-300)
    deg1 = max(abs(c[i]) for i in DEGREE1_IDX) if field.lmax >= 1 else 0.0
    if deg1 > KERNEL_TOL * scale:
        raise KernelResidueError(
            f"input has kernel content {deg1:.3e} (relative {deg1 / scale:.3e})"
        )
    deg = coeff_degrees(field.lmax)
    eig = (n - deg * (deg + n - 1)).astype(float)
    out = np.zeros_like(c)
    mask = deg != 1
    out[mask] = c[mask] / eig[mask]
    return SpectralField.from_coeffs(field.plan, out)
