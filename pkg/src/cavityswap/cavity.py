"""Frequency-domain response of a two-sided single-emitter cavity.

The cavity supports two polarization eigenmodes (h, v), each resonantly
coupled to its own emitter transition.  Depending on the emitter's ground
state the incoming field either sees the dressed cavity (Coupled branch,
reflects near resonance) or an empty resonant cavity (Decoupled branch,
transmits).  Everything here is a pure function of the rate parameters and
the detuning.

All rates share one angular-frequency unit; preset loaders normalize to
multiples of kappa_h, but any consistent unit works since the response is
homogeneous in the rates.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np


class AtomBranch(Enum):
    """Ground-state branch of the intracavity emitter."""

    COUPLED = "coupled"      # emitter in |0>: interacts with the cavity modes
    DECOUPLED = "decoupled"  # emitter in |1>: cavity looks empty


@dataclass(frozen=True)
class CavityParams:
    """Physical rates per polarization mode, one consistent angular-frequency unit.

    g: emitter-cavity coupling rate; kappa: per-mirror cavity decay rate
    (symmetric mirrors); gamma: spontaneous emission rate of the excited level.
    """

    g_h: float
    g_v: float
    kappa_h: float
    kappa_v: float
    gamma_h: float
    gamma_v: float

    def __post_init__(self):
        for name in ("g_h", "g_v", "kappa_h", "kappa_v", "gamma_h", "gamma_v"):
            value = getattr(self, name)
            if not math.isfinite(value):
                raise ValueError(f"{name} must be finite, got {value!r}")
        if self.g_h < 0 or self.g_v < 0:
            raise ValueError("coupling rates must be >= 0")
        if self.kappa_h <= 0 or self.kappa_v <= 0:
            raise ValueError("cavity decay rates must be > 0")
        if self.gamma_h < 0 or self.gamma_v < 0:
            raise ValueError("spontaneous emission rates must be >= 0")

    @classmethod
    def symmetric(cls, g: float, kappa: float, gamma: float) -> "CavityParams":
        """Identical rates for both polarizations."""
        return cls(g, g, kappa, kappa, gamma, gamma)

    def rates(self, pol: str) -> tuple[float, float, float]:
        """(g, kappa, gamma) for polarization 'h' or 'v'."""
        if pol == "h":
            return self.g_h, self.kappa_h, self.gamma_h
        if pol == "v":
            return self.g_v, self.kappa_v, self.gamma_v
        raise ValueError(f"polarization must be 'h' or 'v', got {pol!r}")


@dataclass(frozen=True)
class SpectralResponse:
    """Reflection, transmission and noise coefficients at one detuning."""

    r: complex
    t: complex
    m: complex

    def flux_residual(self) -> float:
        """|r|^2 + |t|^2 + |m|^2 - 1; analytically zero for valid inputs."""
        return abs(self.r) ** 2 + abs(self.t) ** 2 + abs(self.m) ** 2 - 1.0


def response_arrays(
    params: CavityParams, pol: str, branch: AtomBranch, omega: np.ndarray
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Vectorized (R, T, m) over an array of detunings.

    The Coupled branch uses the form with numerator and denominator multiplied
    through by (i*omega - gamma/2), so the removable singularity at
    omega = 0, gamma = 0 needs no special casing.  With g = 0 the emitter term
    vanishes identically and the bare-cavity expressions apply.
    """
    g, kappa, gamma = params.rates(pol)
    omega = np.asarray(omega, dtype=float)
    if not np.all(np.isfinite(omega)):
        raise ValueError("omega must be finite")

    if branch is AtomBranch.DECOUPLED or g == 0.0:
        denom = kappa - 1j * omega
        r = 1j * omega / denom
        t = kappa / denom
        m = np.zeros_like(r)
        return r, t, m

    d = 1j * omega - gamma / 2.0
    denom = (kappa - 1j * omega) * d - g * g
    r = (1j * omega * d + g * g) / denom
    t = kappa * d / denom
    m = np.full_like(r, 1j * math.sqrt(kappa * gamma) * g) / denom
    return r, t, m


def response(
    params: CavityParams, pol: str, branch: AtomBranch, omega: float
) -> SpectralResponse:
    """Cavity response coefficients at a single detuning.

    For the Coupled branch with gamma = 0 the point omega = 0 evaluates to the
    analytic limit (-1, 0, 0): the dressed cavity reflects perfectly.
    """
    if not math.isfinite(omega):
        raise ValueError(f"omega must be finite, got {omega!r}")
    r, t, m = response_arrays(params, pol, branch, np.array([omega]))
    return SpectralResponse(complex(r[0]), complex(t[0]), complex(m[0]))
