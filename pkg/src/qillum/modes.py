"""Target-return spatial modes over a one-dimensional hard-aperture pupil.

One on-axis point target returns the flat mode ``xi1``; two in-phase targets
at angles +/-theta return ``xi2``, a cosine fringe normalized to unit energy
over the pupil.  Gram-Schmidt on the pair gives the orthonormal basis
``{phi1 = xi1, phi2}`` and the coefficients ``xi2 = a*phi1 + b*phi2``.

All ``sinc`` evaluations use the unnormalized convention ``sin(z)/z``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import mpmath
import numpy as np
from scipy.integrate import simpson

# below this b the two-mode covariance is numerically rank deficient
DEGENERATE_B = 1e-9


class DegenerateGeometryError(ValueError):
    """Raised when theta is too small for the two-mode return model."""


@dataclass(frozen=True)
class SceneGeometry:
    """Signal wavelength, pupil width and target half-separation (SI units)."""

    lambda_s: float
    d: float
    theta: float

    def __post_init__(self):
        for name in ("lambda_s", "d", "theta"):
            value = getattr(self, name)
            if not math.isfinite(value):
                raise ValueError(f"{name} must be finite, got {value!r}")
        if self.lambda_s <= 0 or self.d <= 0:
            raise ValueError("lambda_s and d must be positive")
        if self.theta < 0:
            raise ValueError("theta must be non-negative")

    @classmethod
    def from_rayleigh(cls, fraction: float, lambda_s: float = 1.0, d: float = 1.0):
        """Geometry with ``theta = fraction * lambda_s / d``."""
        return cls(lambda_s=lambda_s, d=d, theta=fraction * lambda_s / d)

    @property
    def k_s(self) -> float:
        return 2.0 * math.pi / self.lambda_s

    @property
    def phase(self) -> float:
        """Dimensionless fringe argument ``k_s * theta * d``."""
        return self.k_s * self.theta * self.d

    @property
    def rayleigh_fraction(self) -> float:
        return self.theta * self.d / self.lambda_s

    def with_theta(self, theta: float) -> "SceneGeometry":
        return SceneGeometry(self.lambda_s, self.d, theta)


@dataclass(frozen=True)
class OverlapCoefficients:
    """Components of ``xi2`` along ``phi1`` (``a``) and ``phi2`` (``b``).

    ``a`` is negative once ``k_s*theta*d`` exceeds ``2*pi``; ``b >= 0`` always.
    Values are floats, or mpmath numbers when requested at extended precision.
    """

    a: float
    b: float
    norm_const: float

    @property
    def degenerate(self) -> bool:
        return self.b < DEGENERATE_B

    def require_two_mode(self):
        if self.degenerate:
            raise DegenerateGeometryError(
                f"b = {float(self.b):.3e} < {DEGENERATE_B:g}; use the single-mode model"
            )
        return self


def sinc(z):
    """``sin(z)/z`` with the removable singularity at 0 filled in.

    Accepts scalars or arrays.
    """
    z = np.asarray(z, dtype=float)
    small = np.abs(z) < 1e-4
    zz = np.where(small, 1.0, z)
    out = np.sin(zz) / zz
    z2 = z * z
    # 5-term Taylor series; cancellation-free near zero
    series = 1 - z2 / 6 * (1 - z2 / 20 * (1 - z2 / 42 * (1 - z2 / 72)))
    out = np.where(small, series, out)
    return out.item() if out.ndim == 0 else out


def normalization_constant(geom: SceneGeometry) -> float:
    """Amplitude making ``A*cos(k_s*theta*x)`` unit-energy over the pupil."""
    return math.sqrt((2.0 / geom.d) / (1.0 + sinc(geom.phase)))


def _mp_sinc(z):
    return mpmath.mpf(1) if z == 0 else mpmath.sin(z) / z


def overlap_coefficients(geom: SceneGeometry, dps: int | None = None) -> OverlapCoefficients:
    """Closed-form Gram-Schmidt coefficients of ``xi2`` in the ``{phi1, phi2}`` basis.

    ``b**2 = 1 - 2 sinc(z/2)**2 / (1 + sinc(z))`` cancels catastrophically for
    small ``z``, so both coefficients are evaluated with mpmath at no fewer than
    30 digits.  With ``dps`` set the returned values stay mpmath numbers at that
    precision; otherwise they are rounded to float.
    """
    work = max(30, dps or 0)
    with mpmath.workdps(work):
        z = mpmath.mpf(geom.k_s) * geom.theta * geom.d
        denom = 1 + _mp_sinc(z)
        half = _mp_sinc(z / 2)
        a = mpmath.sqrt(2 / denom) * half
        b2 = (denom - 2 * half**2) / denom
        b = mpmath.sqrt(max(b2, mpmath.mpf(0)))
        norm = mpmath.sqrt((2 / mpmath.mpf(geom.d)) / denom)
        if dps is None:
            return OverlapCoefficients(float(a), float(b), float(norm))
    with mpmath.workdps(dps):
        return OverlapCoefficients(+a, +b, +norm)


def mode_value(which: str, x, geom: SceneGeometry):
    """Evaluate ``xi1``, ``xi2`` or the unit-normalized ``phi2`` at ``x`` (m)."""
    x = np.asarray(x, dtype=float)
    inside = np.abs(x) <= geom.d / 2
    xi1 = np.where(inside, 1.0 / math.sqrt(geom.d), 0.0)
    if which == "xi1":
        out = xi1
    elif which in ("xi2", "phi2"):
        amp = normalization_constant(geom)
        xi2 = np.where(inside, amp * np.cos(geom.k_s * geom.theta * x), 0.0)
        if which == "xi2":
            out = xi2
        else:
            coeffs = overlap_coefficients(geom).require_two_mode()
            out = (xi2 - coeffs.a * xi1) / coeffs.b
    else:
        raise ValueError(f"unknown mode {which!r}; expected xi1, xi2 or phi2")
    return out.item() if out.ndim == 0 else out


def quadrature_overlaps(geom: SceneGeometry, n_points: int = 10_000) -> OverlapCoefficients:
    """Numerical-integration counterpart of :func:`overlap_coefficients`.

    Builds the unnormalized fringe ``cos(k_s*theta*x)`` on the pupil, normalizes
    it by composite Simpson quadrature, then projects it onto the flat mode.
    No closed-form ``sinc`` expression is used.
    """
    if n_points < 1000:
        raise ValueError("n_points must be at least 1000")
    n_panels = n_points + (n_points % 2)
    x = np.linspace(-geom.d / 2, geom.d / 2, n_panels + 1)
    flat = np.full_like(x, 1.0 / math.sqrt(geom.d))
    fringe = np.cos(geom.k_s * geom.theta * x)
    norm_const = 1.0 / math.sqrt(simpson(fringe * fringe, x=x))
    xi2 = norm_const * fringe
    a = simpson(flat * xi2, x=x)
    residual = xi2 - a * flat
    b = math.sqrt(max(simpson(residual * residual, x=x), 0.0))
    return OverlapCoefficients(float(a), b, float(norm_const))
