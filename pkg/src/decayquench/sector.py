"""Single-excitation sector Hamiltonian and its eigen-decomposition.

In the basis ``{|1 0_k>, |0 1_1>, ..., |0 1_K>}`` the Hamiltonian restricted
to one excitation is a real symmetric arrowhead matrix::

    [[omega0, g_1, g_2, ...],
     [g_1,    w_1, 0,   ...],
     [g_2,    0,   w_2, ...],
     ...]

Two eigensolvers are available.  ``method="dense"`` (default) calls LAPACK's
symmetric driver through :func:`numpy.linalg.eigh`.  ``method="secular"``
solves the arrowhead secular equation by bisection on each interlacing
interval, after deflating uncoupled and degenerate environment modes.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field

import numpy as np

from .errors import NumericalError
from .spectral import SpectralModel

_SIGN_TOL = 1e-14


@dataclass(frozen=True)
class SectorHamiltonian:
    diagonal: np.ndarray  # [omega0, w_1, ..., w_K]
    arrow: np.ndarray  # [g_1, ..., g_K]

    @property
    def dimension(self) -> int:
        return self.diagonal.shape[0]

    @property
    def omega0(self) -> float:
        return float(self.diagonal[0])

    def matrix(self) -> np.ndarray:
        n = self.dimension
        h = np.zeros((n, n))
        h[np.arange(n), np.arange(n)] = self.diagonal
        h[0, 1:] = self.arrow
        h[1:, 0] = self.arrow
        return h


@dataclass(frozen=True)
class EigenSystem:
    """Eigenfrequencies (ascending), overlaps ``a_n = <Omega_n|1 0_k>`` and eigenvectors.

    ``vectors[:, n]`` is eigenvector ``n`` in the site basis, so
    ``overlaps == vectors[0]``.
    """

    frequencies: np.ndarray
    overlaps: np.ndarray
    vectors: np.ndarray
    hamiltonian: SectorHamiltonian = field(repr=False, compare=False)

    @property
    def dimension(self) -> int:
        return self.frequencies.shape[0]

    @property
    def weights(self) -> np.ndarray:
        """``|a_n|**2``."""
        return self.overlaps * self.overlaps

    @property
    def lowest_frequency(self) -> float:
        return float(self.frequencies[0])


def assemble_hamiltonian(model: SpectralModel) -> SectorHamiltonian:
    diag = np.array([model.omega0, *model.frequencies], dtype=float)
    arrow = np.array(model.couplings, dtype=float)
    diag.setflags(write=False)
    arrow.setflags(write=False)
    return SectorHamiltonian(diag, arrow)


def diagonalize(h: SectorHamiltonian, method: str = "dense") -> EigenSystem:
    """Eigen-decompose the sector Hamiltonian.

    Eigenvector signs are fixed so that ``a_n >= 0`` whenever
    ``|a_n| > 1e-14``, otherwise the first non-negligible component is
    positive.  Inside a degenerate eigenspace the basis is rebuilt by
    Gram-Schmidt on the projected site vectors taken in input order, which
    puts all of the overlap with ``|1 0_k>`` on the first vector of the block.
    """
    if method == "dense":
        omega, vecs = _dense(h)
    elif method == "secular":
        omega, vecs = _secular(h)
    else:
        raise ValueError(f"unknown method {method!r}; expected 'dense' or 'secular'")
    vecs = _canonicalize(omega, vecs)
    omega.setflags(write=False)
    vecs.setflags(write=False)
    overlaps = vecs[0].copy()
    overlaps.setflags(write=False)
    return EigenSystem(omega, overlaps, vecs, h)


def mean_energy(e: EigenSystem) -> float:
    """``<1 0_k|H|1 0_k> = sum_n |a_n|**2 Omega_n``; equals ``omega0`` of the model."""
    return float(np.dot(e.weights, e.frequencies))


def energy_variance(e: EigenSystem) -> float:
    """``<H**2> - <H>**2`` in the initial state, from the eigen-data."""
    mu = mean_energy(e)
    return float(np.dot(e.weights, (e.frequencies - mu) ** 2))


def overlap_density(e: EigenSystem) -> tuple[np.ndarray, np.ndarray]:
    """Empirical line shape ``(Omega_n, |a_n|**2 / local spacing)``.

    Each weight is spread over the cell between the midpoints to its
    neighbouring eigenfrequencies, i.e. divided by
    ``(Omega_{n+1} - Omega_{n-1}) / 2``; end points use the one-sided gap.
    """
    om = np.asarray(e.frequencies)
    if om.size < 2:
        raise ValueError("overlap_density needs at least two eigenfrequencies")
    cell = np.empty_like(om)
    cell[1:-1] = 0.5 * (om[2:] - om[:-2])
    cell[0] = om[1] - om[0]
    cell[-1] = om[-1] - om[-2]
    return om.copy(), e.weights / cell


def spectrum_csv(e: EigenSystem) -> str:
    """``omega,weight`` table of ``(Omega_n, |a_n|**2)``."""
    buf = io.StringIO()
    buf.write("omega,weight\n")
    for om, w in zip(e.frequencies, e.weights):
        buf.write(f"{om:.17g},{w:.17g}\n")
    return buf.getvalue()


def _diagnostics(h: SectorHamiltonian) -> str:
    d, z = h.diagonal, h.arrow
    return (
        f"dimension={h.dimension}, finite={bool(np.isfinite(d).all() and np.isfinite(z).all())}, "
        f"diag range=[{np.min(d):.6g}, {np.max(d):.6g}], max coupling={np.max(np.abs(z)):.6g}"
    )


def _dense(h: SectorHamiltonian) -> tuple[np.ndarray, np.ndarray]:
    try:
        omega, vecs = np.linalg.eigh(h.matrix())
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"symmetric eigensolver did not converge ({_diagnostics(h)})") from exc
    return omega, np.array(vecs)


def _secular(h: SectorHamiltonian) -> tuple[np.ndarray, np.ndarray]:
    """Arrowhead eigen-decomposition via the secular equation.

    Uncoupled modes are eigenpairs of their own.  Environment modes sharing a
    frequency are rotated so that a single combination carries the coupling
    ``sqrt(sum g**2)``; the orthogonal combinations are uncoupled.
    """
    n = h.dimension
    d_all = np.asarray(h.diagonal[1:], dtype=float)
    z_all = np.asarray(h.arrow, dtype=float)
    if not (np.isfinite(d_all).all() and np.isfinite(z_all).all() and np.isfinite(h.omega0)):
        raise NumericalError(f"non-finite Hamiltonian entries ({_diagnostics(h)})")

    pairs: list[tuple[float, np.ndarray]] = []
    # coupled, distinct-frequency reduced problem: (frequency, site vector of the combination, coupling)
    red_d: list[float] = []
    red_z: list[float] = []
    red_sites: list[np.ndarray] = []  # site indices of each coupled combination
    red_coef: list[np.ndarray] = []  # and its coefficients there

    order = np.argsort(d_all, kind="stable")
    i = 0
    while i < order.size:
        j = i
        while j + 1 < order.size and d_all[order[j + 1]] == d_all[order[i]]:
            j += 1
        group = order[i : j + 1]
        w = float(d_all[group[0]])
        zg = z_all[group]
        norm = float(np.sqrt(np.sum(zg * zg)))
        if norm == 0.0:
            for k in group:
                v = np.zeros(n)
                v[k + 1] = 1.0
                pairs.append((w, v))
        else:
            red_d.append(w)
            red_z.append(norm)
            red_sites.append(group + 1)
            red_coef.append(zg / norm)
            # uncoupled combinations orthogonal to the coupled one inside the group
            basis = [zg / norm]
            for k in range(group.size):
                cand = np.zeros(group.size)
                cand[k] = 1.0
                for b in basis:
                    cand -= np.dot(b, cand) * b
                nrm = np.linalg.norm(cand)
                if nrm > 1e-8 and len(basis) < group.size:
                    cand /= nrm
                    basis.append(cand)
                    v = np.zeros(n)
                    v[group + 1] = cand
                    pairs.append((w, v))
        i = j + 1

    dr = np.array(red_d)
    zr = np.array(red_z)
    roots = _secular_roots(h.omega0, dr, zr)
    # eigenvector in reduced coordinates: (1, z_k / (lambda - d_k)), normalised
    comp = zr[None, :] / (roots[:, None] - dr[None, :])
    scale = 1.0 / np.sqrt(1.0 + np.sum(comp * comp, axis=1))
    coupled = np.zeros((n, roots.size))
    coupled[0] = scale
    sites = np.concatenate(red_sites)
    owner = np.concatenate([np.full(len(c), r) for r, c in enumerate(red_coef)])
    coef = np.concatenate(red_coef)
    coupled[sites] = coef[:, None] * (comp * scale[:, None]).T[owner]

    if pairs:
        omega = np.concatenate([roots, [p[0] for p in pairs]])
        vecs = np.column_stack([coupled, np.column_stack([p[1] for p in pairs])])
    else:
        omega, vecs = roots, coupled
    order = np.argsort(omega, kind="stable")
    return omega[order], vecs[:, order]


def _secular_roots(omega0: float, d: np.ndarray, z: np.ndarray, max_iter: int = 2000) -> np.ndarray:
    """All roots of ``lambda - omega0 - sum z_k**2 / (lambda - d_k)``.

    ``d`` strictly ascending, ``z > 0``.  One root lies in each gap
    ``(d_k, d_{k+1})``, one below ``d_0`` and one above ``d_{-1}``.  Roots are
    written as ``origin + mu`` with ``origin`` the left pole of the bracket
    (``d_0`` for the lowest root) so pole distances are formed without
    cancellation.
    """
    z2 = z * z
    reach = float(np.sum(np.abs(z))) + 1.0  # Gershgorin radius plus margin
    K = d.size
    origins = np.concatenate(([d[0]], d))
    lo = np.zeros(K + 1)
    hi = np.zeros(K + 1)
    lo[0] = min(omega0, d[0]) - reach - d[0]
    hi[1:K] = np.diff(d)
    hi[K] = max(omega0, d[-1]) + reach - d[-1]
    offs = d[None, :] - origins[:, None]

    with np.errstate(divide="ignore", invalid="ignore"):
        for _ in range(max_iter):
            mid = 0.5 * (lo + hi)
            stuck = (mid <= lo) | (mid >= hi)
            if np.all(stuck):
                break
            fm = origins + mid - omega0 - np.sum(z2[None, :] / (mid[:, None] - offs), axis=1)
            neg = fm < 0.0
            lo = np.where(neg & ~stuck, mid, lo)
            hi = np.where(~neg & ~stuck, mid, hi)
        else:
            raise NumericalError("secular bisection did not converge")
    roots = origins + 0.5 * (lo + hi)
    if not np.all(np.isfinite(roots)):
        raise NumericalError("secular bisection produced non-finite roots")
    return roots


def _canonicalize(omega: np.ndarray, vecs: np.ndarray) -> np.ndarray:
    vecs = np.array(vecs, dtype=float)
    scale = max(1.0, float(np.max(np.abs(omega))))
    tol = 1e-12 * scale
    n = omega.size
    start = 0
    while start < n:
        stop = start + 1
        while stop < n and omega[stop] - omega[stop - 1] <= tol:
            stop += 1
        if stop - start > 1:
            vecs[:, start:stop] = _block_basis(vecs[:, start:stop])
        start = stop
    for k in range(n):
        v = vecs[:, k]
        if abs(v[0]) > _SIGN_TOL:
            if v[0] < 0.0:
                vecs[:, k] = -v
        else:
            nz = np.flatnonzero(np.abs(v) > _SIGN_TOL)
            if nz.size and v[nz[0]] < 0.0:
                vecs[:, k] = -v
    return vecs


def _block_basis(block: np.ndarray) -> np.ndarray:
    """Deterministic orthonormal basis of span(block): Gram-Schmidt on projected site vectors."""
    m = block.shape[1]
    out: list[np.ndarray] = []
    for j in range(block.shape[0]):
        cand = block @ block[j]  # projection of e_j onto the block
        for b in out:
            cand = cand - np.dot(b, cand) * b
        for b in out:  # second pass for orthogonality
            cand = cand - np.dot(b, cand) * b
        nrm = np.linalg.norm(cand)
        if nrm > 1e-8:
            out.append(cand / nrm)
            if len(out) == m:
                break
    if len(out) < m:
        raise NumericalError("could not build a basis for a degenerate eigenspace")
    return np.column_stack(out)
