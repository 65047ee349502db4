"""Lifetime records kept by a counter that increments on every survived check.

The counter state after the run is summarised by the apparatus density
matrix. Its diagonal is the lifetime distribution and its off-diagonals are
interference between failure trajectories.

Discrete records come from the iterated maps ``Lambda_E(X) = E Lambda(X) E``
and ``Lambda~(X) = Lambda(X) E`` through

    G[k, n] = Tr Lambda~^n (Lambda_E^k(rho0))
    rho[k, k]   = G[k, 0] - G[k+1, 0]
    rho[k, k+n] = G[k, n] - G[k, n+1] - G[k+1, n-1] + G[k+1, n]

where record k means "survived k checks, failed check k+1".
"""
from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Callable, Sequence

import numpy as np

from . import _kernels
from .dynamics import LindbladModel, Superoperator, generator, left_right
from .events import Projector, complement
from .histories import ReliabilityCurve, TrajectoryFamily, _check_unitaries
from .numkernel import dagger, herm_eig, kron, ket_projector, matexp, partial_trace, vec

EIG_FLOOR = 1e-14
RATE_FLOOR = 1e-14


@dataclass(frozen=True, eq=False)
class ApparatusMatrix:
    """Counter density matrix restricted to failure records.

    ``times[i]`` is the lifetime attached to record i (the time of the check
    that registered the failure, or the grid point of a continuous record).
    ``at_risk_times[i]`` is when the system was last known to survive, which is
    where the matching reliability value is read for hazard rates.
    """

    entries: np.ndarray
    times: np.ndarray
    at_risk_times: np.ndarray
    normalized: bool = False
    meta: dict = None

    def __post_init__(self):
        m = np.asarray(self.entries, dtype=np.complex128)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError(f"apparatus matrix must be square, got {m.shape}")
        if not np.all(np.isfinite(m)):
            raise ValueError("apparatus matrix has non-finite entries")
        times = np.asarray(self.times, dtype=float)
        risk = np.asarray(self.at_risk_times, dtype=float)
        if times.shape != (m.shape[0],) or risk.shape != times.shape:
            raise ValueError("time grids do not match the matrix size")
        object.__setattr__(self, "entries", m)
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "at_risk_times", risk)
        object.__setattr__(self, "meta", dict(self.meta or {}))

    @property
    def size(self) -> int:
        return self.entries.shape[0]

    @property
    def trace(self) -> float:
        return float(np.trace(self.entries).real)

    @property
    def diagonal(self) -> np.ndarray:
        return np.diag(self.entries).real.copy()

    def hermiticity_error(self) -> float:
        return float(np.linalg.norm(self.entries - dagger(self.entries)))

    def min_eigenvalue(self) -> float:
        return float(herm_eig(self.entries).eigenvalues[0])

    def violations(self, tol: float = 1e-10) -> list[str]:
        """Human-readable list of broken invariants (empty when all hold)."""
        out = []
        herm = self.hermiticity_error()
        if herm > tol:
            out.append(f"not Hermitian (||M - M^dagger|| = {herm:.3e})")
        else:
            lo = self.min_eigenvalue()
            if lo < -tol:
                out.append(f"not positive semidefinite (min eigenvalue {lo:.3e})")
        if self.trace > 1.0 + tol:
            out.append(f"trace {self.trace:.12g} exceeds 1")
        return out

    def normalize(self) -> "ApparatusMatrix":
        tr = self.trace
        if not tr > 0:
            raise ValueError("apparatus matrix has zero trace (no failures recorded)")
        return replace(self, entries=self.entries / tr, normalized=True)

    def diagonalized(self) -> "ApparatusMatrix":
        """Same lifetime distribution with all interference removed."""
        return replace(self, entries=np.diag(np.diag(self.entries)))


# --- measurement dilation ------------------------------------------------------

def counter_shift(k: int, counter_dim: int) -> np.ndarray:
    """Permutation swapping counter states k-1 and k."""
    if not 1 <= k < counter_dim:
        raise ValueError(f"need 1 <= k < counter_dim, got k={k}, counter_dim={counter_dim}")
    f = np.eye(counter_dim, dtype=np.complex128)
    f[[k - 1, k]] = f[[k, k - 1]]
    return f


def measurement_operator(k: int, survival: Projector, counter_dim: int) -> np.ndarray:
    """``O_k = E (x) F_k + E_perp (x) I`` on system (x) counter."""
    e = survival.matrix
    return kron(e, counter_shift(k, counter_dim)) + kron(np.eye(e.shape[0]) - e, np.eye(counter_dim))


def _counter_projector(state: int, counter_dim: int) -> np.ndarray:
    p = np.zeros((counter_dim, counter_dim), dtype=np.complex128)
    p[state, state] = 1.0
    return p


def _check_events(survival, f: int) -> list[Projector]:
    events = list(survival) if isinstance(survival, (list, tuple)) else [survival] * f
    if len(events) != f:
        raise ValueError(f"need {f} survival events, got {len(events)}")
    return events


def _record_state(recorded: Projector, survival: Projector, j: int) -> int:
    if np.allclose(recorded.matrix, survival.matrix, atol=1e-12):
        return j
    if np.allclose(recorded.matrix, complement(survival).matrix, atol=1e-12):
        return j - 1
    raise ValueError(f"check {j}: recorded projector is neither the survival event nor its complement")


def dilated_chain_kets(family: TrajectoryFamily, unitaries, survival) -> np.ndarray:
    """Chain kets of the family with the counter coupled in.

    Every check j applies ``O_j`` built from the survival event of that check.
    A member that survives check j is then projected on ``E (x) |j><j|``, one
    that fails there on ``E_perp (x) |j-1><j-1|``; after its last recorded
    check it only evolves.
    """
    f = len(family.times)
    dim = family.trajectories[0].initial.size
    us = _check_unitaries(unitaries, dim, f)
    events = _check_events(survival, f)
    cdim = f + 1
    ops = [measurement_operator(j, events[j - 1], cdim) @ kron(us[j - 1], np.eye(cdim)) for j in range(1, f + 1)]
    out = []
    for tr in family.trajectories:
        ket = np.kron(tr.initial, np.eye(cdim)[0])
        for j in range(1, f + 1):
            ket = ops[j - 1] @ ket
            if j <= len(tr):
                recorded = tr.checkpoints[j - 1][1]
                state = _record_state(recorded, events[j - 1], j)
                ket = kron(recorded.matrix, _counter_projector(state, cdim)) @ ket
        out.append(ket)
    return np.array(out)


def dilated_weights(family: TrajectoryFamily, unitaries, survival) -> np.ndarray:
    kets = dilated_chain_kets(family, unitaries, survival)
    return np.einsum("ij,ij->i", kets.conj(), kets).real


def dilated_consistency(family: TrajectoryFamily, unitaries, survival) -> np.ndarray:
    kets = dilated_chain_kets(family, unitaries, survival)
    return (kets.conj() @ kets.T).real


def apparatus_matrix_unitary(initial, unitaries, survival: Projector) -> np.ndarray:
    """Full counter state ``Tr_sys |Phi><Phi|`` for a closed system.

    The counter has states 0..f; the last one holds the all-survived branch.
    """
    psi = np.asarray(initial, dtype=np.complex128).reshape(-1)
    f = len(unitaries)
    us = _check_unitaries(unitaries, psi.size, f)
    cdim = f + 1
    ket = np.kron(psi, np.eye(cdim)[0])
    for j in range(1, f + 1):
        ket = measurement_operator(j, survival, cdim) @ (kron(us[j - 1], np.eye(cdim)) @ ket)
    return partial_trace(np.outer(ket, ket.conj()), [psi.size, cdim], keep=[1])


# --- discrete records in the Markov approximation --------------------------------

def g_table_vectors(step: Superoperator, survival: Projector, initial, f: int):
    """Vectors ``r_k = vec(Lambda_E^k rho0)`` (k = 0..f) and ``u_n`` (n = 0..f+1).

    ``G[k, n]`` is the bilinear product ``u_n . r_k``.
    """
    if step.dim != survival.dim:
        raise ValueError(f"step acts on dim {step.dim}, projector has dim {survival.dim}")
    rho0 = ket_projector(initial)
    if rho0.shape[0] != survival.dim:
        raise ValueError("initial state dimension does not match the projector")
    e = survival.matrix
    d = e.shape[0]
    lam_e = left_right(e, e) @ step.matrix
    lam_tilde = left_right(np.eye(d), e) @ step.matrix
    r = _kernels.iterate_map(lam_e, vec(rho0), f)
    u = _kernels.iterate_map(lam_tilde.T, vec(np.eye(d)), f + 1)
    return r, u


def apparatus_matrix_discrete(step: Superoperator, survival: Projector, initial, f: int, dt: float) -> ApparatusMatrix:
    """Failure-record block (records 0..f-1) after ``f`` checks spaced ``dt``."""
    if f < 1:
        raise ValueError("need at least one check")
    r, u = g_table_vectors(step, survival, initial, f)
    a = u[:-1] - u[1:]
    t1 = _kernels.toeplitz_bilinear(a, r)
    upper = np.triu(t1[:f, :f] - t1[1:, :f], k=1)
    g0 = r @ u[0]
    diag = g0[:-1] - g0[1:]
    m = upper + dagger(upper) + np.diag(diag)
    times = dt * np.arange(1, f + 1)
    return ApparatusMatrix(m, times, times - dt, meta={"kind": "discrete", "dt": dt, "checks": f})


# --- continuous records ----------------------------------------------------------

@dataclass(frozen=True)
class DBlocks:
    d1: np.ndarray
    d2: np.ndarray
    d3: np.ndarray
    d4: np.ndarray
    phi: float = 0.0
    variant: str = "ode_consistent"

    def generator_le(self) -> np.ndarray:
        """4x4 matrix of ``X -> L(X) E`` in the (a, b, coherence) basis."""
        ph = np.exp(1j * self.phi)
        return np.block([[self.d1, ph * self.d2], [np.conj(ph) * self.d3, self.d4]]).astype(np.complex128)

    def generator_ele(self) -> np.ndarray:
        """4x4 matrix of ``X -> E L(X) E``."""
        out = np.zeros((4, 4), dtype=np.complex128)
        out[:2, :2] = self.d1
        return out


VARIANTS = ("ode_consistent", "printed")


def d_blocks(alpha: float, n_thermal: float, variant: str = "ode_consistent", phi: float = 0.0) -> DBlocks:
    """Generator blocks for the three-qubit code state.

    ``printed`` keeps the typeset second row of D1; ``ode_consistent`` uses the
    coefficient matrix of the (a, b) population equations, which reproduces
    the closed-form logical reliability.
    """
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"alpha must lie in [0, 1], got {alpha}")
    if not 0.0 <= n_thermal <= 0.5:
        raise ValueError(f"n_thermal must lie in [0, 0.5], got {n_thermal}")
    if variant not in VARIANTS:
        raise ValueError(f"variant must be one of {VARIANTS}, got {variant!r}")
    n = n_thermal
    a2 = alpha * alpha
    b2 = 1.0 - a2
    ab = alpha * np.sqrt(b2)
    ab2 = ab * ab
    if variant == "printed":
        d1 = np.array([
            [-3 * (1 - n) * a2 - 3 * n * b2, 3 * n * a2**2 + 3 * (1 - n) * b2**2],
            [(n - 1) * a2**2 + n * b2**2, -(1 + n) * b2 - a2 * (-2 + n + 2 * b2)],
        ])
    else:
        from .flipcode import CodeParams, q_coeffs

        q1, q2, q3, q4 = q_coeffs(CodeParams(alpha, n_thermal))
        d1 = np.array([[q1, q2], [q3, q4]])
    d2 = ab * np.array([[1.5 - 3 * n, 3 * b2 - 3 * n], [n - a2, 0.5 + n - 2 * b2]])
    d3 = ab * np.array([[1.5 - 3 * n, 3 * b2 - 3 * n], [n - a2, 2.5 - 3 * n - 2 * b2]])
    d4 = np.array([[-1.5, 3 * ab2], [ab2, -1.5 - 2 * ab2]])
    return DBlocks(d1, d2, d3, d4, phi, variant)


_TRACE_ROW = np.array([1, 3, 0, 0], dtype=np.complex128)
_START = np.array([1, 0, 0, 0], dtype=np.complex128)

FORMS = ("as_printed", "g_limit")


def _ele_exp(blocks: DBlocks, t: float) -> np.ndarray:
    out = np.eye(4, dtype=np.complex128)
    out[:2, :2] = matexp(blocks.d1, t)
    return out


def rho_continuous(t: float, tau: float, blocks: DBlocks, form: str = "as_printed") -> complex:
    """Off-diagonal record density between lifetimes t and t + tau.

    ``as_printed``: (1 3 0 0) D_LE exp(D_LE tau) D_ELE exp(D_ELE t) (1 0 0 0)^T.
    ``g_limit``: the continuum limit of the discrete four-term G relation,
    which replaces the middle D_ELE by (D_ELE - D_LE). Only the second form
    vanishes for a classical (alpha = 1) code state, as the discrete records do.
    """
    if form not in FORMS:
        raise ValueError(f"form must be one of {FORMS}, got {form!r}")
    dle = blocks.generator_le()
    dele = blocks.generator_ele()
    middle = dele if form == "as_printed" else dele - dle
    vec_t = middle @ (_ele_exp(blocks, t) @ _START)
    return complex(_TRACE_ROW @ (dle @ (matexp(dle, tau) @ vec_t)))


def blocks_reliability(t, blocks: DBlocks) -> np.ndarray:
    """``(1 3 0 0) exp(D_ELE t) (1 0 0 0)^T`` on an array of times."""
    ts = np.atleast_1d(np.asarray(t, dtype=float))
    return np.array([(_TRACE_ROW @ _ele_exp(blocks, x) @ _START).real for x in ts])


def _uniform_grid(t_max: float, grid: int):
    if t_max <= 0 or grid < 2:
        raise ValueError("need t_max > 0 and at least 2 grid points")
    ts = np.linspace(0.0, t_max, grid)
    h = ts[1] - ts[0]
    w = np.full(grid, h)
    w[0] = w[-1] = h / 2
    edges = np.concatenate([[0.0], 0.5 * (ts[1:] + ts[:-1]), [t_max]])
    return ts, h, w, edges


def _assemble_continuous(rows: np.ndarray, cols: np.ndarray, reliability: Callable, ts, w, edges, meta) -> ApparatusMatrix:
    """Combine the smooth kernel ``rows[j - i] . cols[i]`` with the diagonal masses.

    The diagonal carries the probability of failing inside each trapezoid
    cell, ``R(left edge) - R(right edge)``; off-diagonal cells get the kernel
    times the product of cell widths.
    """
    kernel = _kernels.toeplitz_bilinear(rows, cols)
    upper = np.triu(kernel, k=1) * np.outer(w, w)
    r_edges = reliability(edges)
    diag = r_edges[:-1] - r_edges[1:]
    m = upper + dagger(upper) + np.diag(diag)
    return ApparatusMatrix(m, ts, ts, meta=meta)


def apparatus_matrix_blocks(blocks: DBlocks, t_max: float = 10.0, grid: int = 200, form: str = "g_limit") -> ApparatusMatrix:
    """Continuous records of the code state sampled on a uniform grid."""
    if form not in FORMS:
        raise ValueError(f"form must be one of {FORMS}, got {form!r}")
    ts, h, w, edges = _uniform_grid(t_max, grid)
    dle = blocks.generator_le()
    dele = blocks.generator_ele()
    middle = dele if form == "as_printed" else dele - dle
    step = matexp(dle, h)
    # rows[n] = (1 3 0 0) D_LE exp(D_LE n h); cols[i] = middle exp(D_ELE t_i) e_1
    rows = _kernels.iterate_map(step.T, dle.T @ _TRACE_ROW, grid - 1)
    ele_step = _ele_exp(blocks, h)
    cols = (middle @ _kernels.iterate_map(ele_step, _START, grid - 1).T).T
    meta = {"kind": "continuous", "source": "blocks", "form": form, "variant": blocks.variant,
            "t_max": t_max, "grid": grid}
    return _assemble_continuous(rows, cols, lambda x: blocks_reliability(x, blocks), ts, w, edges, meta)


def apparatus_matrix_continuous(
    model: LindbladModel, survival: Projector, initial, t_max: float = 10.0, grid: int = 200
) -> ApparatusMatrix:
    """Continuous records for an arbitrary model, from the full generator.

    Uses ``G(s, tau) = Tr exp(L~ tau) exp(L_E s) rho0`` with ``L_E = E L(.) E``
    and ``L~ = L(.) E``; the smooth kernel is ``d_s d_tau G - d_tau^2 G``.
    """
    ts, h, w, edges = _uniform_grid(t_max, grid)
    e = survival.matrix
    d = e.shape[0]
    gen = generator(model).matrix
    l_e = left_right(e, e) @ gen
    l_t = left_right(np.eye(d), e) @ gen
    tr = vec(np.eye(d))
    rho0 = vec(ket_projector(initial))
    step_t = matexp(l_t, h)
    step_e = matexp(l_e, h)
    rows = _kernels.iterate_map(step_t.T, l_t.T @ tr, grid - 1)
    states = _kernels.iterate_map(step_e, rho0, grid - 1)
    cols = states @ (l_e - l_t).T

    def reliability(x):
        return np.array([(tr @ (matexp(l_e, s) @ rho0)).real for s in np.atleast_1d(x)])

    meta = {"kind": "continuous", "source": "model", "form": "g_limit", "t_max": t_max, "grid": grid}
    return _assemble_continuous(rows, cols, reliability, ts, w, edges, meta)


# --- statistics --------------------------------------------------------------------

def lifetime_mean(m: ApparatusMatrix) -> float:
    """``Tr[rho T] / Tr[rho]`` with the lifetime operator diagonal on ``m.times``."""
    tr = m.trace
    if not tr > 0:
        raise ValueError("apparatus matrix has zero trace (no failures recorded)")
    return float(np.dot(m.diagonal, m.times) / tr)


def failure_rate(m: ApparatusMatrix, curve: ReliabilityCurve) -> np.ndarray:
    """Discrete hazard ``rho[k, k] / R(k)``; NaN where the reliability vanishes."""
    grid = np.asarray(curve.times, dtype=float)
    hi = np.clip(np.searchsorted(grid, m.at_risk_times), 1, len(grid) - 1)
    lo = hi - 1
    idx = np.where(np.abs(grid[lo] - m.at_risk_times) <= np.abs(grid[hi] - m.at_risk_times), lo, hi)
    if len(grid) == 1:
        idx = np.zeros_like(idx)
    ok = np.abs(grid[idx] - m.at_risk_times) <= 1e-9 * max(1.0, float(grid[-1]))
    if not np.all(ok):
        raise ValueError("reliability curve grid does not cover the apparatus record times")
    r = np.asarray(curve.values)[idx]
    out = np.full(m.size, np.nan)
    live = r >= RATE_FLOOR
    out[live] = m.diagonal[live] / r[live]
    return out


def _entropy(p: np.ndarray) -> float:
    p = p[p > EIG_FLOOR]
    return float(-np.sum(p * np.log(p)))


def entropy_gap(m: ApparatusMatrix) -> tuple[float, float, float]:
    """Shannon entropy of the lifetime distribution, von Neumann entropy, and their gap."""
    n = m if m.normalized else m.normalize()
    s_s = _entropy(n.diagonal)
    s_v = _entropy(herm_eig(n.entries).eigenvalues)
    return s_s, s_v, s_s - s_v


def with_phase(blocks: DBlocks, phi: float) -> DBlocks:
    return replace(blocks, phi=float(phi))
