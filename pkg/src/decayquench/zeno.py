"""Entanglement events as maps on the sector density matrix, and their iteration.

An impulsive von Neumann-type coupling to a fresh two-level ancilla that
records "undecayed" versus "decayed" is, with the ancilla traced out, the
pinching map ``rho -> P rho P + Q rho Q`` with ``P = |1 0_k><1 0_k|`` and
``Q = 1 - P`` (:func:`dephase`).  Reading the ancilla and keeping only the
undecayed outcome gives ``rho -> P rho P`` (:func:`filter`), whose trace is
the probability of the retained history.

The public single-step functions act on site-basis matrices.
:func:`run_schedule` works in the energy eigenbasis instead, where free
evolution is an element-wise phase and both maps are rank-two updates, so a
schedule of ``N`` events costs ``O(N (K+1)^2)`` after one setup.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field
from typing import Literal, NamedTuple, Optional, Sequence

import numpy as np

from .errors import InvalidParameterError
from .sector import EigenSystem

Mode = Literal["incoherent", "filtered"]
MODES = ("incoherent", "filtered")


@dataclass(frozen=True)
class SectorDensityMatrix:
    """Density matrix on the single-excitation sector, site basis ``|1 0_k>, |0 1_k>...``.

    After :func:`filter` the trace is the retained branch weight rather than 1.
    """

    entries: np.ndarray

    def __post_init__(self) -> None:
        m = np.array(self.entries, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise InvalidParameterError(f"density matrix must be square, got shape {m.shape}")
        m.setflags(write=False)
        object.__setattr__(self, "entries", m)

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    @property
    def trace(self) -> float:
        return float(np.trace(self.entries).real)

    @property
    def purity(self) -> float:
        m = self.entries
        return float(np.vdot(m, m).real)

    @property
    def survival(self) -> float:
        """Population of the initial state ``|1 0_k>``."""
        return float(self.entries[0, 0].real)

    def check(self, tol: float = 1e-12, weight: float = 1.0) -> None:
        """Raise if not Hermitian, not of trace ``weight`` or not positive semidefinite."""
        m = self.entries
        if np.max(np.abs(m - m.conj().T)) > tol:
            raise InvalidParameterError("density matrix is not Hermitian")
        if abs(np.trace(m).real - weight) > tol:
            raise InvalidParameterError(f"trace {np.trace(m).real!r} differs from {weight!r}")
        if np.linalg.eigvalsh(m).min() < -1e-10:
            raise InvalidParameterError("density matrix has a negative eigenvalue")


@dataclass(frozen=True)
class ZenoSchedule:
    n_events: int
    delta_t: float
    mode: Mode = "incoherent"

    def __post_init__(self) -> None:
        if isinstance(self.n_events, bool) or int(self.n_events) != self.n_events or self.n_events < 1:
            raise InvalidParameterError(f"n_events must be an integer >= 1, got {self.n_events!r}")
        if not (np.isfinite(self.delta_t) and self.delta_t > 0.0):
            raise InvalidParameterError(f"delta_t must be finite and > 0, got {self.delta_t!r}")
        if self.mode not in MODES:
            raise InvalidParameterError(f"mode must be one of {MODES}, got {self.mode!r}")
        object.__setattr__(self, "n_events", int(self.n_events))
        object.__setattr__(self, "delta_t", float(self.delta_t))


@dataclass(frozen=True)
class ZenoRunResult:
    """Survival after ``k = 0..N`` events.

    In incoherent mode ``survival[k]`` is the population of ``|1 0_k>``; in
    filtered mode it is the cumulative retained weight, and ``weights[k-1]``
    is the fraction kept at event ``k``.
    """

    survival: np.ndarray
    schedule: ZenoSchedule
    weights: Optional[np.ndarray] = field(default=None)

    @property
    def mode(self) -> str:
        return self.schedule.mode

    @property
    def times(self) -> np.ndarray:
        return self.schedule.delta_t * np.arange(self.survival.size)

    @property
    def final(self) -> float:
        return float(self.survival[-1])

    def to_csv(self) -> str:
        """``k,t,survival,mode`` rows for ``k = 0..N``."""
        buf = io.StringIO()
        buf.write("k,t,survival,mode\n")
        for k, (t, s) in enumerate(zip(self.times, self.survival)):
            buf.write(f"{k},{t:.17g},{s:.17g},{self.mode}\n")
        return buf.getvalue()


def _check_dim(rho: SectorDensityMatrix, e: EigenSystem) -> None:
    if rho.dim != e.dimension:
        raise InvalidParameterError(f"density matrix dimension {rho.dim} does not match sector dimension {e.dimension}")


def initial_state(e: EigenSystem) -> SectorDensityMatrix:
    m = np.zeros((e.dimension, e.dimension), dtype=complex)
    m[0, 0] = 1.0
    return SectorDensityMatrix(m)


def propagator(e: EigenSystem, tau: float) -> np.ndarray:
    """``exp(-i H tau) = V diag(exp(-i Omega tau)) V^T``."""
    v = e.vectors
    return (v * np.exp(-1j * e.frequencies * tau)) @ v.T


def evolve(rho: SectorDensityMatrix, e: EigenSystem, tau: float) -> SectorDensityMatrix:
    """Free evolution ``U rho U^dagger`` for a time ``tau``."""
    _check_dim(rho, e)
    u = propagator(e, tau)
    m = u @ rho.entries @ u.conj().T
    return SectorDensityMatrix(0.5 * (m + m.conj().T))


def dephase(rho: SectorDensityMatrix) -> SectorDensityMatrix:
    """Pinching ``P rho P + Q rho Q``: drop coherences between ``|1 0_k>`` and the rest."""
    m = np.array(rho.entries)
    m[0, 1:] = 0.0
    m[1:, 0] = 0.0
    return SectorDensityMatrix(m)


def filter(rho: SectorDensityMatrix) -> tuple[SectorDensityMatrix, float]:  # noqa: A001
    """Keep the undecayed branch: returns ``(P rho P, tr(P rho P))``, unnormalised."""
    m = np.zeros_like(rho.entries)
    m[0, 0] = rho.entries[0, 0].real
    return SectorDensityMatrix(m), float(m[0, 0].real)


def survival_rate(rho: SectorDensityMatrix, e: EigenSystem) -> float:
    """``-d/dtau <1 0_k| rho(tau) |1 0_k>`` at the current instant."""
    _check_dim(rho, e)
    g = np.asarray(e.hamiltonian.arrow)
    return float(-2.0 * np.dot(g, rho.entries[1:, 0]).imag)


class _EigenFrame:
    """Density matrix held in the energy eigenbasis of one :class:`EigenSystem`."""

    def __init__(self, e: EigenSystem):
        self.a = np.asarray(e.overlaps, dtype=float)
        self.omega = np.asarray(e.frequencies, dtype=float)
        self.rho = np.outer(self.a, self.a).astype(complex)

    def phases(self, tau: float) -> np.ndarray:
        u = np.exp(-1j * self.omega * tau)
        return np.outer(u, u.conj())

    def apply(self, phases: np.ndarray) -> None:
        self.rho *= phases

    def survival(self) -> float:
        return float(np.dot(self.a, self.rho @ self.a).real)

    def dephase(self) -> None:
        a = self.a
        x = self.rho @ a
        s = float(np.dot(a, x).real)
        # rho - P rho - rho P + 2 P rho P, with P = a a^T
        self.rho -= np.outer(a, x.conj())
        self.rho -= np.outer(x, a)
        self.rho += 2.0 * s * np.outer(a, a)

    def filter(self) -> float:
        s = self.survival()
        self.rho = s * np.outer(self.a, self.a).astype(complex)
        return s

    def rate(self) -> float:
        # -d/dtau a^T rho a with d rho_mn/dtau = -i (Omega_m - Omega_n) rho_mn
        aw = self.a * self.omega
        return float((1j * (np.dot(aw, self.rho @ self.a) - np.dot(self.a, self.rho @ aw))).real)


def run_schedule(e: EigenSystem, s: ZenoSchedule) -> ZenoRunResult:
    """Alternate free evolution for ``delta_t`` with an entanglement event, ``N`` times.

    Every event uses a fresh ancilla: incoherent mode applies :func:`dephase`,
    filtered mode applies :func:`filter` and accumulates the kept weight.
    """
    frame = _EigenFrame(e)
    step = frame.phases(s.delta_t)
    survival = np.empty(s.n_events + 1)
    survival[0] = 1.0
    weights = np.empty(s.n_events) if s.mode == "filtered" else None
    cumulative = 1.0
    for k in range(1, s.n_events + 1):
        frame.apply(step)
        if s.mode == "incoherent":
            frame.dephase()
            survival[k] = frame.survival()
        else:
            kept = frame.filter()
            weights[k - 1] = kept / cumulative if cumulative > 0.0 else 0.0
            cumulative = kept
            survival[k] = kept
    survival = np.clip(survival, 0.0, 1.0)
    survival.setflags(write=False)
    if weights is not None:
        weights.setflags(write=False)
    return ZenoRunResult(survival, s, weights)


def post_event_decay_rate(e: EigenSystem, t: float, tau) -> np.ndarray:
    """Decay rate of the ``|1 0_k>`` population ``tau`` after one dephasing event at ``t``.

    Density-matrix route, independent of the amplitude algebra in
    :mod:`decayquench.dynamics`.  ``tau`` may be an array.
    """
    frame = _EigenFrame(e)
    frame.apply(frame.phases(t))
    frame.dephase()
    base = frame.rho.copy()
    taus = np.atleast_1d(np.asarray(tau, dtype=float))
    out = np.empty(taus.shape)
    for i, ti in enumerate(taus):
        frame.rho = base * frame.phases(ti)
        out[i] = frame.rate()
    return out if np.ndim(tau) else out[0]


class ZenoScanRow(NamedTuple):
    n_events: int
    delta_t: float
    incoherent: float
    filtered: float


def zeno_limit_scan(
    e: EigenSystem,
    n_values: Sequence[int],
    total_t: Optional[float] = None,
    delta_t: Optional[float] = None,
) -> list[ZenoScanRow]:
    """Tabulate ``(N, P^(N), Q^(N))`` under one of the two limit protocols.

    Give ``total_t`` to spread a fixed overall time over ``N`` events
    (``delta_t = total_t / N``), or ``delta_t`` to keep the repetition
    interval fixed while ``N`` grows.
    """
    if (total_t is None) == (delta_t is None):
        raise InvalidParameterError("give exactly one of total_t or delta_t")
    ns = [int(n) for n in n_values]
    if not ns or any(n < 1 for n in ns) or any(b <= a for a, b in zip(ns, ns[1:])):
        raise InvalidParameterError("n_values must be strictly ascending integers >= 1")
    rows: list[ZenoScanRow] = []
    if delta_t is not None:
        inc = run_schedule(e, ZenoSchedule(ns[-1], delta_t, "incoherent")).survival
        fil = run_schedule(e, ZenoSchedule(ns[-1], delta_t, "filtered")).survival
        for n in ns:
            rows.append(ZenoScanRow(n, float(delta_t), float(inc[n]), float(fil[n])))
        return rows
    if not (np.isfinite(total_t) and total_t > 0.0):
        raise InvalidParameterError(f"total_t must be finite and > 0, got {total_t!r}")
    for n in ns:
        dt = total_t / n
        p = run_schedule(e, ZenoSchedule(n, dt, "incoherent")).final
        q = run_schedule(e, ZenoSchedule(n, dt, "filtered")).final
        rows.append(ZenoScanRow(n, dt, p, q))
    return rows
