"""Survival amplitude, orthogonal amplitude, probabilities and decay rates.

Everything is evaluated from the spectral sum
``A(t) = sum_n |a_n|**2 exp(-i Omega_n t)`` and its term-wise derivative, so
results are exactly unitary and available at arbitrary times.  Time
arguments may be scalars or arrays (broadcast together).

Notation for the two-time quantities: the free evolution runs for ``t``,
an instantaneous event may happen, then evolution continues for ``tau``.
``B_t(tau) = A(t + tau) - A(t) A(tau)`` is the overlap at ``t + tau`` of the
part of the state that had already left the initial state at ``t``.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field

import numpy as np

from .sector import EigenSystem, mean_energy

_CHUNK = 256


def _spectral_sum(e: EigenSystem, t, power: int) -> np.ndarray:
    """``sum_n |a_n|**2 (-i Omega_n)**power exp(-i Omega_n t)`` for array ``t``."""
    t = np.asarray(t, dtype=float)
    flat = t.reshape(-1)
    w = e.weights.astype(complex)
    if power:
        w = w * (-1j * e.frequencies) ** power
    out = np.empty(flat.shape, dtype=complex)
    for s in range(0, flat.size, _CHUNK):
        block = flat[s : s + _CHUNK]
        out[s : s + _CHUNK] = np.exp(-1j * np.outer(block, e.frequencies)) @ w
    return out.reshape(t.shape)


def _scalar(x: np.ndarray):
    return x.item() if x.ndim == 0 else x


def survival_amplitude(e: EigenSystem, t):
    """``A(t) = <1 0_k| exp(-iHt) |1 0_k>``."""
    return _scalar(_spectral_sum(e, t, 0))


def amplitude_derivative(e: EigenSystem, t):
    """``dA/dt = -i sum_n |a_n|**2 Omega_n exp(-i Omega_n t)``."""
    return _scalar(_spectral_sum(e, t, 1))


def orthogonal_amplitude(e: EigenSystem, t, tau):
    """``B_t(tau) = A(t + tau) - A(t) A(tau)``."""
    t, tau = np.broadcast_arrays(np.asarray(t, float), np.asarray(tau, float))
    return _scalar(_spectral_sum(e, t + tau, 0) - _spectral_sum(e, t, 0) * _spectral_sum(e, tau, 0))


def survival_probability(e: EigenSystem, t):
    a = _spectral_sum(e, t, 0)
    return _scalar((a * a.conj()).real)


def recompose_probability(e: EigenSystem, t, tau):
    """``|A(t)|^2 |A(tau)|^2 + |B_t(tau)|^2 + 2 Re[A(t) A(tau) B_t(tau)^*]``.

    Algebraically identical to ``survival_probability(e, t + tau)``.
    """
    t, tau = np.broadcast_arrays(np.asarray(t, float), np.asarray(tau, float))
    at = _spectral_sum(e, t, 0)
    aa = _spectral_sum(e, tau, 0)
    b = _spectral_sum(e, t + tau, 0) - at * aa
    value = np.abs(at) ** 2 * np.abs(aa) ** 2 + np.abs(b) ** 2 + 2.0 * (at * aa * b.conj()).real
    return _scalar(value)


def orthogonal_amplitude_slope(e: EigenSystem, t):
    """``dB_t/dtau`` at ``tau = 0``: ``A'(t) + i <H> A(t)``."""
    h = mean_energy(e)
    return _scalar(_spectral_sum(e, t, 1) + 1j * h * _spectral_sum(e, t, 0))


def decay_rate(e: EigenSystem, t):
    """``-dP/dt = -2 Re[A(t) (dB_t/dtau|_0)^*]``.

    Only the interference between the undecayed and decayed components
    contributes; the rate vanishes at ``t = 0`` for every finite model.
    """
    at = _spectral_sum(e, t, 0)
    slope = _spectral_sum(e, t, 1) + 1j * mean_energy(e) * at
    return _scalar(-2.0 * (at * slope.conj()).real)


def entangled_probability(e: EigenSystem, t, tau):
    """Survival probability at ``t + tau`` after an entanglement event at ``t``.

    ``P(t) P(tau) + |B_t(tau)|^2``: the recomposition without its cross term.
    """
    t, tau = np.broadcast_arrays(np.asarray(t, float), np.asarray(tau, float))
    at = _spectral_sum(e, t, 0)
    aa = _spectral_sum(e, tau, 0)
    b = _spectral_sum(e, t + tau, 0) - at * aa
    return _scalar(np.abs(at) ** 2 * np.abs(aa) ** 2 + np.abs(b) ** 2)


def entangled_decay_rate(e: EigenSystem, t, tau):
    """``-d/dtau`` of :func:`entangled_probability`, analytic in the eigen-data."""
    t, tau = np.broadcast_arrays(np.asarray(t, float), np.asarray(tau, float))
    at = _spectral_sum(e, t, 0)
    aa = _spectral_sum(e, tau, 0)
    daa = _spectral_sum(e, tau, 1)
    b = _spectral_sum(e, t + tau, 0) - at * aa
    db = _spectral_sum(e, t + tau, 1) - at * daa
    dp_tau = 2.0 * (aa.conj() * daa).real
    value = -(np.abs(at) ** 2 * dp_tau + 2.0 * (b.conj() * db).real)
    return _scalar(value)


def short_time_expansion(e: EigenSystem, t):
    """First-order approximation ``1 - i t <H>`` of ``A(t)``; no higher terms."""
    t = np.asarray(t, dtype=float)
    return _scalar(1.0 - 1j * t * mean_energy(e))


@dataclass(frozen=True)
class AmplitudeSeries:
    grid: np.ndarray
    values: np.ndarray
    source: EigenSystem = field(repr=False, compare=False)

    def probabilities(self) -> np.ndarray:
        return np.abs(self.values) ** 2


def amplitude_series(e: EigenSystem, grid) -> AmplitudeSeries:
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1:
        raise ValueError("time grid must be one-dimensional")
    if grid.size > 1 and np.any(np.diff(grid) <= 0.0):
        raise ValueError("time grid must be strictly ascending")
    values = _spectral_sum(e, grid, 0)
    grid = grid.copy()
    grid.setflags(write=False)
    values.setflags(write=False)
    return AmplitudeSeries(grid, values, e)


def series_csv(e: EigenSystem, grid) -> str:
    """``t,reA,imA,P,rate`` table with 17 significant digits."""
    grid = np.asarray(grid, dtype=float)
    a = _spectral_sum(e, grid, 0)
    rate = np.asarray(decay_rate(e, grid))
    buf = io.StringIO()
    buf.write("t,reA,imA,P,rate\n")
    for ti, ai, ri in zip(grid, a, rate.reshape(-1)):
        buf.write(f"{ti:.17g},{ai.real:.17g},{ai.imag:.17g},{ai.real * ai.real + ai.imag * ai.imag:.17g},{ri:.17g}\n")
    return buf.getvalue()
