"""Closed-form reference results for the two limiting environment models.

Nothing here touches the eigen-decomposition engine; these functions are
the independent side of every engine-versus-oracle comparison.

Two coupled identical cavities (coupling ``g``; the common frequency only
contributes a global phase):

* free survival ``cos^2(g t)``;
* survival after an entanglement event at ``t``,
  ``cos^2 g(t+tau) + sin(2gt) sin(2g tau) / 2``, and its decay rate
  ``g cos(2gt) sin(2g tau)``;
* ``N`` unobserved events every ``dt``: ``(1 + cos^N(2 g dt)) / 2``;
* ``N`` observed-and-filtered events: ``cos^(2N)(g dt)``.

Flat continuum (golden-rule rate ``gamma``, line centre ``omega_center``):
Lorentzian eigenstate weights, amplitude ``exp(-gamma t / 2)``, rate
``gamma exp(-gamma t)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import InvalidParameterError, NumericalError


@dataclass(frozen=True)
class CaseIParams:
    g: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.g) and self.g > 0.0):
            raise InvalidParameterError(f"g must be finite and > 0, got {self.g!r}")


@dataclass(frozen=True)
class CaseIIParams:
    gamma: float
    omega_center: float = 0.0

    def __post_init__(self) -> None:
        if not (math.isfinite(self.gamma) and self.gamma > 0.0):
            raise InvalidParameterError(f"gamma must be finite and > 0, got {self.gamma!r}")

    @classmethod
    def from_flat_band(cls, g: float, spacing: float, omega_center: float = 0.0) -> "CaseIIParams":
        """Golden rule ``gamma = 2 pi g^2 dn/dOmega`` with ``dn/dOmega = 1 / spacing``."""
        return cls(2.0 * math.pi * g * g / spacing, omega_center)


def case1_probability(p: CaseIParams, t):
    return np.cos(p.g * np.asarray(t, dtype=float)) ** 2


def case1_entangled(p: CaseIParams, t, tau):
    t = np.asarray(t, dtype=float)
    tau = np.asarray(tau, dtype=float)
    g = p.g
    return np.cos(g * (t + tau)) ** 2 + 0.5 * np.sin(2 * g * t) * np.sin(2 * g * tau)


def case1_entangled_rate(p: CaseIParams, t, tau):
    """``-d/dtau`` of :func:`case1_entangled`; quoted for ``tau > 0``, continuous at 0."""
    t = np.asarray(t, dtype=float)
    tau = np.asarray(tau, dtype=float)
    g = p.g
    return g * np.cos(2 * g * t) * np.sin(2 * g * tau)


def zeno_incoherent_closed(p: CaseIParams, N: int, dt: float) -> float:
    return 0.5 * (1.0 + math.cos(2.0 * p.g * dt) ** N)


def zeno_filtered_closed(p: CaseIParams, N: int, dt: float) -> float:
    return math.cos(p.g * dt) ** (2 * N)


def breit_wigner_density(p: CaseIIParams, omega):
    """Normalised Lorentzian with full width ``gamma``, per unit frequency."""
    x = np.asarray(omega, dtype=float) - p.omega_center
    return (p.gamma / (2.0 * math.pi)) / (x * x + 0.25 * p.gamma * p.gamma)


def exponential_amplitude(p: CaseIIParams, t, with_phase: bool = False):
    t = np.asarray(t, dtype=float)
    a = np.exp(-0.5 * p.gamma * t)
    if with_phase:
        return a * np.exp(-1j * p.omega_center * t)
    return a.astype(complex)


def exponential_probability(p: CaseIIParams, t):
    return np.exp(-p.gamma * np.asarray(t, dtype=float))


def exponential_rate(p: CaseIIParams, t):
    return p.gamma * np.exp(-p.gamma * np.asarray(t, dtype=float))


@dataclass(frozen=True)
class GammaFit:
    gamma: float
    residual: float
    intercept: float
    n_points: int


def fit_gamma(series, window: tuple[float, float], recurrence_time: Optional[float] = None) -> GammaFit:
    """Least-squares slope of ``-log|A(t)|^2`` on ``window``.

    ``series`` needs ``grid`` and ``values`` arrays (an ``AmplitudeSeries``).
    ``residual`` is the RMS deviation of ``-log|A|^2`` from the fitted line;
    it is large for non-exponential input, which is reported, not raised.
    """
    lo, hi = float(window[0]), float(window[1])
    grid = np.asarray(series.grid, dtype=float)
    values = np.asarray(series.values)
    if not hi > lo:
        raise InvalidParameterError(f"empty fit window {window!r}")
    if grid.size == 0 or lo < grid[0] or hi > grid[-1]:
        raise InvalidParameterError(f"fit window {window!r} is outside the series grid")
    if recurrence_time is not None and hi > recurrence_time:
        raise InvalidParameterError(f"fit window ends after the recurrence time {recurrence_time:.6g}")
    mask = (grid >= lo) & (grid <= hi)
    if mask.sum() < 3:
        raise InvalidParameterError("fit window holds fewer than three samples")
    t = grid[mask]
    mod = np.abs(values[mask])
    if np.any(mod <= 1e-6):
        raise InvalidParameterError("|A| drops below 1e-6 inside the fit window")
    y = -2.0 * np.log(mod)
    if np.ptp(y) == 0.0:
        raise NumericalError("degenerate series: |A| is constant over the fit window")
    design = np.column_stack([t, np.ones_like(t)])
    (slope, intercept), *_ = np.linalg.lstsq(design, y, rcond=None)
    resid = y - (slope * t + intercept)
    return GammaFit(float(slope), float(np.sqrt(np.mean(resid * resid))), float(intercept), int(t.size))
