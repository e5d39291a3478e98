"""Gaussian-beam far-field optics for a truncated-aperture transmitter.

Everything here is a pure function of its inputs.  Angles always travel with
an explicit convention (:class:`Convention`) because the two common ways to
quote a beam divergence -- full width at half maximum intensity, and the full
angle at 1/e^2 intensity -- differ by a factor of ``sqrt(ln 2 / 2) ~ 0.589``
for a Gaussian profile, and mixing them up silently wrecks a link budget.

Units are SI throughout: meters, radians, watts.
"""

from __future__ import annotations

import enum
import functools
import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq
from scipy.special import j0

__all__ = [
    "Convention",
    "DivergenceAngle",
    "GaussianBeam",
    "AperturedBeam",
    "QuadratureError",
    "FWHM_PER_FULL_1E2",
    "convert_divergence",
    "untruncated_divergence",
    "farfield_intensity",
    "truncated_fwhm",
    "transmit_gain",
    "transmit_gain_db",
    "footprint",
]

# FWHM of a Gaussian far-field profile over its full 1/e^2 angle.
FWHM_PER_FULL_1E2 = math.sqrt(math.log(2.0) / 2.0)

# Wavelength band accepted for C-band transmitter configs.
C_BAND_MIN_M = 1.50e-6
C_BAND_MAX_M = 1.60e-6


class Convention(enum.Enum):
    """How a divergence angle is quoted."""

    FWHM = "fwhm"
    FULL_1E2 = "full_1e2"


class QuadratureError(RuntimeError):
    """Far-field quadrature or root bracketing failed its self-check."""


@dataclass(frozen=True)
class DivergenceAngle:
    """A full divergence angle in radians tagged with its convention."""

    value: float
    convention: Convention

    def __post_init__(self) -> None:
        if not (math.isfinite(self.value) and self.value > 0.0):
            raise ValueError(f"divergence angle must be finite and > 0, got {self.value}")
        if not isinstance(self.convention, Convention):
            raise ValueError(f"unknown divergence convention: {self.convention!r}")

    def to(self, target: Convention) -> "DivergenceAngle":
        return convert_divergence(self, target)

    @property
    def fwhm(self) -> float:
        """Value expressed as FWHM, radians."""
        return self.to(Convention.FWHM).value

    @property
    def full_1e2(self) -> float:
        """Value expressed as full 1/e^2 angle, radians."""
        return self.to(Convention.FULL_1E2).value


@dataclass(frozen=True)
class GaussianBeam:
    """Collimated Gaussian beam described by its 1/e^2 intensity diameter.

    Parameters
    ----------
    waist_diameter_1e2 : float
        Diameter where intensity falls to 1/e^2 of the axial value, meters.
    wavelength : float
        Vacuum wavelength, meters.  Restricted to the C band, the only band
        the transmitter is specified for.
    """

    waist_diameter_1e2: float
    wavelength: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.waist_diameter_1e2) and self.waist_diameter_1e2 > 0.0):
            raise ValueError(f"waist diameter must be finite and > 0, got {self.waist_diameter_1e2}")
        if not (C_BAND_MIN_M <= self.wavelength <= C_BAND_MAX_M):
            raise ValueError(
                f"wavelength {self.wavelength} m outside C band "
                f"[{C_BAND_MIN_M}, {C_BAND_MAX_M}] m"
            )

    @property
    def waist_radius_1e2(self) -> float:
        return 0.5 * self.waist_diameter_1e2


@dataclass(frozen=True)
class AperturedBeam:
    """Gaussian beam truncated by a circular clear aperture.

    The truncation ratio is aperture radius over 1/e^2 field radius; 1.12
    maximizes on-axis far-field gain for an unobscured aperture.
    """

    beam: GaussianBeam
    aperture_diameter: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.aperture_diameter) and self.aperture_diameter > 0.0):
            raise ValueError(f"aperture diameter must be finite and > 0, got {self.aperture_diameter}")

    @property
    def truncation_ratio(self) -> float:
        return self.aperture_diameter / self.beam.waist_diameter_1e2


def convert_divergence(angle: DivergenceAngle, target: Convention) -> DivergenceAngle:
    """Convert between FWHM and full-1/e^2 divergence conventions.

    For a Gaussian far field ``FWHM = FULL_1E2 * sqrt(ln 2 / 2)``; the two
    directions are exact inverses of each other.
    """
    if angle.convention is target:
        return angle
    if target is Convention.FWHM:
        return DivergenceAngle(angle.value * FWHM_PER_FULL_1E2, Convention.FWHM)
    return DivergenceAngle(angle.value / FWHM_PER_FULL_1E2, Convention.FULL_1E2)


def untruncated_divergence(beam: GaussianBeam) -> DivergenceAngle:
    """Far-field full 1/e^2 divergence of the untruncated Gaussian, 4*lambda/(pi*D)."""
    theta = 4.0 * beam.wavelength / (math.pi * beam.waist_diameter_1e2)
    return DivergenceAngle(theta, Convention.FULL_1E2)


@functools.lru_cache(maxsize=16)
def _leggauss(n_nodes: int) -> tuple[np.ndarray, np.ndarray]:
    # Node generation is O(n^2); cache it, the rule is reused constantly.
    x, w = np.polynomial.legendre.leggauss(n_nodes)
    return x, w


def _farfield_amplitude(apertured: AperturedBeam, angles: np.ndarray, n_nodes: int) -> np.ndarray:
    """Radial Fraunhofer integral of the truncated Gaussian field.

    ``U(theta) = int_0^a exp(-(r/w)^2) J0(k r theta) r dr`` evaluated with
    Gauss-Legendre quadrature on [0, a]; the integrand is smooth, so the rule
    converges spectrally.
    """
    a = 0.5 * apertured.aperture_diameter
    w = apertured.beam.waist_radius_1e2
    k = 2.0 * math.pi / apertured.beam.wavelength
    x, wt = _leggauss(n_nodes)
    r = 0.5 * a * (x + 1.0)
    wr = 0.5 * a * wt
    base = np.exp(-((r / w) ** 2)) * r * wr
    kernel = j0(k * np.outer(np.asarray(angles, dtype=float), r))
    return kernel @ base


def farfield_intensity(
    apertured: AperturedBeam,
    angles,
    n_nodes: int = 256,
    check_tol: float = 1e-9,
) -> np.ndarray:
    """Normalized far-field intensity of the truncated Gaussian beam.

    Parameters
    ----------
    apertured : AperturedBeam
        Beam and clear aperture.
    angles : array_like
        Off-axis angles in radians, non-negative and sorted ascending.
    n_nodes : int
        Radial quadrature resolution.  Convergence is self-checked by
        recomputing with ``2 * n_nodes`` nodes.
    check_tol : float
        Maximum allowed intensity difference between the two grids.

    Returns
    -------
    ndarray
        Intensity normalized to 1 at theta = 0.

    Raises
    ------
    QuadratureError
        If grid doubling moves any returned value by more than ``check_tol``.
    """
    th = np.asarray(angles, dtype=float)
    if th.ndim != 1 or th.size == 0:
        raise ValueError("angles must be a non-empty 1-D sequence")
    if np.any(th < 0.0):
        raise ValueError("angles must be non-negative")
    if np.any(np.diff(th) < 0.0):
        raise ValueError("angles must be sorted ascending")

    def profile(n: int) -> np.ndarray:
        u0 = _farfield_amplitude(apertured, np.array([0.0]), n)[0]
        u = _farfield_amplitude(apertured, th, n)
        return (u / u0) ** 2

    coarse = profile(n_nodes)
    fine = profile(2 * n_nodes)
    worst = float(np.max(np.abs(fine - coarse)))
    if worst > check_tol:
        raise QuadratureError(
            f"far-field quadrature not converged at n_nodes={n_nodes}: "
            f"grid doubling moved intensity by {worst:.3e}"
        )
    return fine


def truncated_fwhm(apertured: AperturedBeam, n_nodes: int = 256) -> DivergenceAngle:
    """Half-intensity full width of the truncated-Gaussian far field.

    Root-finds the angle where the normalized intensity crosses 0.5 and
    doubles it.  Deterministic for a fixed quadrature resolution.
    """
    def half_excess(theta: float) -> float:
        return float(farfield_intensity(apertured, [theta], n_nodes)[0]) - 0.5

    # Bracket the half-intensity crossing starting from the untruncated
    # half-angle, which always lies inside the main lobe.
    lo = 0.0
    hi = 0.5 * untruncated_divergence(apertured.beam).value
    for _ in range(80):
        if half_excess(hi) < 0.0:
            break
        lo = hi
        hi *= 1.4
    else:
        raise QuadratureError("failed to bracket the half-intensity angle")
    half_angle = brentq(half_excess, lo, hi, xtol=1e-14, rtol=1e-13)
    return DivergenceAngle(2.0 * half_angle, Convention.FWHM)


def transmit_gain(theta: DivergenceAngle) -> float:
    """On-axis transmit antenna gain ``16 / theta^2``.

    ``theta`` must already be expressed as the full 1/e^2 angle; convert
    first.  The identity ``gain * theta^2 == 16`` holds exactly.
    """
    if theta.convention is not Convention.FULL_1E2:
        raise ValueError("transmit_gain expects a FULL_1E2 angle; convert first")
    return 16.0 / theta.value**2


def transmit_gain_db(theta: DivergenceAngle) -> float:
    """Transmit gain in dB."""
    return 10.0 * math.log10(transmit_gain(theta))


def footprint(theta_fwhm: DivergenceAngle, distance: float) -> float:
    """Beam footprint diameter ``theta * distance`` at the receiver, meters.

    Small-angle geometry only (theta < 0.1 rad).
    """
    if theta_fwhm.convention is not Convention.FWHM:
        raise ValueError("footprint expects an FWHM angle; convert first")
    if theta_fwhm.value >= 0.1:
        raise ValueError("footprint is a small-angle formula; theta must be < 0.1 rad")
    if distance <= 0.0:
        raise ValueError("distance must be > 0")
    return theta_fwhm.value * distance
