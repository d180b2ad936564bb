"""Pulse-averaged gate quantities for finite-bandwidth Gaussian photons.

A photon pulse of bandwidth delta_omega samples the cavity response over a
range of detunings, so the gate acts slightly differently on each spectral
component.  Averaging the response against the pulse's spectral density gives
per-branch survival probabilities and mode-overlap amplitudes, which combine
into the two figures of merit: the loss probability and the fidelity of the
entangled output.

Quadrature: the spectral density is Gaussian, so Gauss-Hermite quadrature is
the natural (spectrally convergent) default; an adaptive Simpson rule over a
finite window is kept as a structurally independent cross-check.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np

from . import cavity
from .cavity import AtomBranch, CavityParams

GAUSS_HERMITE = "gauss-hermite"
ADAPTIVE_SIMPSON = "adaptive-simpson"


class QuadratureError(ArithmeticError):
    """Adaptive integration failed to reach its error target.

    Carries the worst unresolved local error estimate in ``residual``.
    """

    def __init__(self, residual: float):
        super().__init__(
            f"quadrature did not converge; residual estimate {residual:.3e}"
        )
        self.residual = residual


@dataclass(frozen=True)
class PulseSpec:
    """Gaussian pulse, characterized solely by its bandwidth.

    ``bandwidth`` is delta_omega in the same angular-frequency unit as the
    cavity rates.  The spectral density is the L2-normalized Gaussian
    |f(w)|^2 = sqrt(2/(pi dw^2)) exp(-2 w^2/dw^2), which integrates to one.
    """

    bandwidth: float

    def __post_init__(self):
        if not (math.isfinite(self.bandwidth) and self.bandwidth > 0):
            raise ValueError(f"bandwidth must be positive and finite, got {self.bandwidth!r}")


@dataclass(frozen=True)
class QuadratureConfig:
    """Integration rule selection: node count for Gauss-Hermite, absolute
    error target for adaptive Simpson."""

    method: str = GAUSS_HERMITE
    nodes: int = 64
    tolerance: float = 1e-12

    def __post_init__(self):
        if self.method not in (GAUSS_HERMITE, ADAPTIVE_SIMPSON):
            raise ValueError(f"unknown quadrature method {self.method!r}")
        if self.nodes < 8:
            raise ValueError("gauss-hermite needs at least 8 nodes")
        if not (0.0 < self.tolerance <= 1e-4):
            raise ValueError("tolerance must lie in (0, 1e-4]")


DEFAULT_QUAD = QuadratureConfig()


def spectral_density(omega, bandwidth: float):
    """|f(omega)|^2 of the unit-power Gaussian pulse."""
    omega = np.asarray(omega, dtype=float)
    norm = math.sqrt(2.0 / (math.pi * bandwidth * bandwidth))
    return norm * np.exp(-2.0 * omega * omega / (bandwidth * bandwidth))


@lru_cache(maxsize=16)
def _hermgauss(n: int):
    return np.polynomial.hermite.hermgauss(n)


def gauss_hermite_mean(
    func: Callable[[np.ndarray], np.ndarray], bandwidth: float, nodes: int = 64
) -> complex:
    """Mean of func under the Gaussian spectral density.

    Substituting w = dw * x / sqrt(2) turns the density into the Hermite
    weight exp(-x^2), so the mean is sum_i w_i func(dw x_i / sqrt(2)) / sqrt(pi) —
    exact for polynomial func, spectrally convergent for analytic func.
    """
    x, w = _hermgauss(nodes)
    values = func(bandwidth * x / math.sqrt(2.0))
    return complex(np.sum(w * values) / math.sqrt(math.pi))


def adaptive_simpson_mean(
    func: Callable[[np.ndarray], np.ndarray],
    bandwidth: float,
    tol: float = 1e-12,
    window: float = 6.0,
) -> complex:
    """Same mean via adaptive Simpson on [-window*dw, window*dw].

    The density mass outside six bandwidths is below 1e-31, negligible
    against every tolerance used here.  Raises QuadratureError if any
    subinterval hits the recursion floor with its error estimate unresolved.
    """
    norm = math.sqrt(2.0 / (math.pi * bandwidth * bandwidth))

    def weighted(w: float) -> complex:
        value = func(np.array([w]))
        return norm * math.exp(-2.0 * w * w / (bandwidth * bandwidth)) * complex(value[0])

    def simpson(fa, fm, fb, h):
        return (h / 6.0) * (fa + 4.0 * fm + fb)

    unresolved = 0.0

    def recurse(a, m, b, fa, fm, fb, whole, tol, depth):
        nonlocal unresolved
        lm = 0.5 * (a + m)
        rm = 0.5 * (m + b)
        flm = weighted(lm)
        frm = weighted(rm)
        left = simpson(fa, flm, fm, m - a)
        right = simpson(fm, frm, fb, b - m)
        err = abs(left + right - whole)
        if err <= 15.0 * tol or depth <= 0:
            if err > 15.0 * tol:
                unresolved = max(unresolved, err / 15.0)
            return left + right + (left + right - whole) / 15.0
        return recurse(a, lm, m, fa, flm, fm, left, tol / 2.0, depth - 1) + recurse(
            m, rm, b, fm, frm, fb, right, tol / 2.0, depth - 1
        )

    a = -window * bandwidth
    b = window * bandwidth
    fa = weighted(a)
    fm = weighted(0.0)
    fb = weighted(b)
    total = recurse(a, 0.0, b, fa, fm, fb, simpson(fa, fm, fb, b - a), tol, 48)
    if unresolved > 0.0:
        raise QuadratureError(unresolved)
    return total


def _weighted_mean(func, pulse: PulseSpec, quad: QuadratureConfig) -> complex:
    if quad.method == GAUSS_HERMITE:
        return gauss_hermite_mean(func, pulse.bandwidth, quad.nodes)
    return adaptive_simpson_mean(func, pulse.bandwidth, quad.tolerance)


@dataclass(frozen=True)
class OverlapSet:
    """Per-polarization pulse averages behind the gate metrics.

    reflect_prob_*: probability a Coupled-branch photon comes back out of the
    input port (survives reflection).  transmit_prob_*: probability a
    Decoupled-branch photon makes it through.  The *_overlap_* entries are the
    normalized projections of the corresponding output pulse onto the nominal
    pulse shape; modulus below one signals pulse distortion.
    """

    reflect_prob_h: float
    reflect_prob_v: float
    transmit_prob_h: float
    transmit_prob_v: float
    reflect_overlap_h: complex
    reflect_overlap_v: complex
    transmit_overlap_h: complex
    transmit_overlap_v: complex

    def __post_init__(self):
        slack = 1.0 + 1e-12
        for name in ("reflect_prob_h", "reflect_prob_v", "transmit_prob_h", "transmit_prob_v"):
            value = getattr(self, name)
            if not (0.0 <= value <= slack):
                raise ValueError(f"{name} = {value!r} outside [0, 1]")
        for name in (
            "reflect_overlap_h",
            "reflect_overlap_v",
            "transmit_overlap_h",
            "transmit_overlap_v",
        ):
            if abs(getattr(self, name)) > slack:
                raise ValueError(f"|{name}| exceeds 1")


@dataclass(frozen=True)
class GateMetrics:
    """The two figures of merit of the heralded gate."""

    loss_probability: float
    fidelity: float

    def __post_init__(self):
        if not (0.0 <= self.loss_probability <= 1.0 and 0.0 <= self.fidelity <= 1.0):
            raise ValueError("loss probability and fidelity must lie in [0, 1]")


def _branch_overlap(params, pol, branch, pulse, quad):
    """(survival probability, normalized mode overlap) for one pol/branch.

    Coupled photons are judged against the reflected port, Decoupled photons
    against the transmitted port.
    """

    def amplitude(omega):
        r, t, _ = cavity.response_arrays(params, pol, branch, omega)
        return r if branch is AtomBranch.COUPLED else t

    power = _weighted_mean(lambda w: np.abs(amplitude(w)) ** 2, pulse, quad).real
    mean_amp = _weighted_mean(amplitude, pulse, quad)
    overlap = mean_amp / math.sqrt(power) if power > 0.0 else 0.0j
    return power, overlap


def overlaps(
    params: CavityParams, pulse: PulseSpec, quad: QuadratureConfig = DEFAULT_QUAD
) -> OverlapSet:
    """All eight pulse-averaged quantities for the given operating point."""
    values = {}
    for pol in ("h", "v"):
        r0, xi0 = _branch_overlap(params, pol, AtomBranch.COUPLED, pulse, quad)
        t1, xi1 = _branch_overlap(params, pol, AtomBranch.DECOUPLED, pulse, quad)
        values[f"reflect_prob_{pol}"] = r0
        values[f"reflect_overlap_{pol}"] = xi0
        values[f"transmit_prob_{pol}"] = t1
        values[f"transmit_overlap_{pol}"] = xi1
    return OverlapSet(**values)


def metrics(ov: OverlapSet) -> GateMetrics:
    """Loss probability and fidelity from the pulse averages.

    Loss: one minus the average of the two branch survival products.
    Fidelity: squared magnitude of the equally weighted coherent sum of the
    per-branch overlap products, as for the ideal entangled output.
    """
    p = 1.0 - (ov.transmit_prob_h * ov.transmit_prob_v + ov.reflect_prob_h * ov.reflect_prob_v) / 2.0
    f = (
        abs(
            ov.reflect_overlap_h * ov.reflect_overlap_v
            + ov.transmit_overlap_h * ov.transmit_overlap_v
        )
        ** 2
        / 4.0
    )
    # clamp 1e-16-level roundoff at ideal operating points
    p = min(max(p, 0.0), 1.0)
    f = min(max(f, 0.0), 1.0)
    return GateMetrics(loss_probability=p, fidelity=f)


def gate_metrics(
    params: CavityParams, pulse: PulseSpec, quad: QuadratureConfig = DEFAULT_QUAD
) -> GateMetrics:
    return metrics(overlaps(params, pulse, quad))


def metrics_residual(
    params: CavityParams, pulse: PulseSpec, quad: QuadratureConfig = DEFAULT_QUAD
) -> float:
    """Max change in (loss, fidelity) when the rule's resolution is increased.

    Doubled node count for Gauss-Hermite, tolerance/100 for adaptive Simpson;
    serves as the reported quadrature residual.
    """
    if quad.method == GAUSS_HERMITE:
        finer = replace(quad, nodes=2 * quad.nodes)
    else:
        finer = replace(quad, tolerance=quad.tolerance / 100.0)
    coarse = gate_metrics(params, pulse, quad)
    fine = gate_metrics(params, pulse, finer)
    return max(
        abs(coarse.loss_probability - fine.loss_probability),
        abs(coarse.fidelity - fine.fidelity),
    )


@dataclass(frozen=True)
class SweepRow:
    """One operating point of a parameter sweep.  A non-empty ``error`` marks
    a failed evaluation (metrics are NaN there), kept so grid rows are never
    silently dropped."""

    g_over_kappa: float
    bandwidth_over_kappa: float
    loss_probability: float
    fidelity: float
    error: str = ""


def sweep(
    coupling_values: Sequence[float],
    bandwidth_values: Sequence[float],
    gamma_over_kappa: float = 1.0,
    quad: QuadratureConfig = DEFAULT_QUAD,
    workers: int | None = None,
) -> list[SweepRow]:
    """Metrics over the (g/kappa) x (bandwidth/kappa) grid.

    Rows come back sorted lexicographically by (g/kappa, bandwidth/kappa)
    regardless of input order or worker scheduling.  gamma defaults to kappa,
    the convention used throughout the symmetric sweeps.
    """
    if len(coupling_values) == 0 or len(bandwidth_values) == 0:
        raise ValueError("sweep grids must be non-empty")
    grid = [
        (float(g), float(dw))
        for g in sorted(coupling_values)
        for dw in sorted(bandwidth_values)
    ]
    for g, dw in grid:
        if not (math.isfinite(g) and math.isfinite(dw)):
            raise ValueError("sweep grid values must be finite")

    def evaluate(point):
        g, dw = point
        try:
            params = CavityParams.symmetric(g, 1.0, gamma_over_kappa)
            result = gate_metrics(params, PulseSpec(dw), quad)
            return SweepRow(g, dw, result.loss_probability, result.fidelity)
        except (ValueError, ArithmeticError) as exc:
            return SweepRow(g, dw, math.nan, math.nan, error=str(exc))

    if workers is not None and workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(evaluate, grid))
    return [evaluate(point) for point in grid]
