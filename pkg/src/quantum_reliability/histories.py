"""Trajectories, chain kets, weights and Markov reliability curves."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import _kernels
from .dynamics import LindbladModel, Superoperator, euler_step_map, left_right, propagator
from .events import Projector, complement
from .numkernel import dagger, ket_projector, unvec, vec

UNITARY_TOL = 1e-10
CONSISTENCY_TOL = 1e-10


@dataclass(frozen=True)
class Trajectory:
    """Initial ket followed by time-ordered survival/failure projectors."""

    initial: np.ndarray
    checkpoints: tuple = ()
    label: str = ""

    def __post_init__(self):
        psi = np.asarray(self.initial, dtype=np.complex128).reshape(-1)
        if abs(np.linalg.norm(psi) - 1.0) > 1e-10:
            raise ValueError("initial ket must have unit norm")
        cps = tuple((float(t), p) for t, p in self.checkpoints)
        times = [t for t, _ in cps]
        if any(t < 0 for t in times) or any(b <= a for a, b in zip(times, times[1:])):
            raise ValueError("checkpoint times must be non-negative and strictly increasing")
        for _, p in cps:
            if p.dim != psi.size:
                raise ValueError(f"projector dim {p.dim} does not match state dim {psi.size}")
        object.__setattr__(self, "initial", psi)
        object.__setattr__(self, "checkpoints", cps)

    @property
    def times(self) -> list[float]:
        return [t for t, _ in self.checkpoints]

    def __len__(self):
        return len(self.checkpoints)


@dataclass(frozen=True)
class TrajectoryFamily:
    """Trajectories sharing an initial state and a checkpoint grid.

    Members may stop early (a failure trajectory ends at its first failure);
    their recorded checkpoints must be a prefix of ``times``.
    """

    trajectories: tuple
    times: tuple

    def __post_init__(self):
        trajs = tuple(self.trajectories)
        times = tuple(float(t) for t in self.times)
        if not trajs:
            raise ValueError("empty family")
        psi0 = trajs[0].initial
        for tr in trajs:
            if not np.allclose(tr.initial, psi0, atol=1e-12):
                raise ValueError("family members must share the initial state")
            if tuple(tr.times) != times[: len(tr)]:
                raise ValueError(f"trajectory {tr.label!r} is not aligned with the family grid")
        object.__setattr__(self, "trajectories", trajs)
        object.__setattr__(self, "times", times)

    @property
    def labels(self) -> list[str]:
        return [t.label for t in self.trajectories]


def lifetime_family(initial, times: Sequence[float], survival) -> TrajectoryFamily:
    """The family {F_1, ..., F_f, R_f} of first failures plus final survival.

    ``survival`` is a single projector used at every checkpoint or a list with
    one projector per checkpoint.
    """
    times = list(times)
    events = list(survival) if isinstance(survival, (list, tuple)) else [survival] * len(times)
    if len(events) != len(times):
        raise ValueError("need one survival projector per checkpoint")
    members = []
    for k in range(1, len(times) + 1):
        cps = [(times[i], events[i]) for i in range(k - 1)]
        cps.append((times[k - 1], complement(events[k - 1])))
        members.append(Trajectory(initial, tuple(cps), f"F{k}"))
    members.append(Trajectory(initial, tuple(zip(times, events)), f"R{len(times)}"))
    return TrajectoryFamily(tuple(members), tuple(times))


def _check_unitaries(unitaries, dim: int, count: int) -> list[np.ndarray]:
    us = [np.asarray(u, dtype=np.complex128) for u in unitaries]
    if len(us) < count:
        raise ValueError(f"need {count} interval unitaries, got {len(us)}")
    for u in us:
        if u.shape != (dim, dim):
            raise ValueError(f"unitary shape {u.shape} does not match state dim {dim}")
        if np.linalg.norm(dagger(u) @ u - np.eye(dim)) > UNITARY_TOL:
            raise ValueError("interval evolution is not unitary")
    return us


def chain_ket(traj: Trajectory, unitaries) -> np.ndarray:
    """``E_f U_f ... E_1 U_1 |psi>`` (un-normalised)."""
    us = _check_unitaries(unitaries, traj.initial.size, len(traj))
    ket = traj.initial.copy()
    for u, (_, p) in zip(us, traj.checkpoints):
        ket = p.matrix @ (u @ ket)
    return ket


def weight(traj: Trajectory, unitaries) -> float:
    k = chain_ket(traj, unitaries)
    return float(np.vdot(k, k).real)


def extended_chain_kets(family: TrajectoryFamily, unitaries) -> np.ndarray:
    """Chain kets of every member, carried to the last checkpoint by free evolution.

    Returns an array of shape (len(family), dim).
    """
    f = len(family.times)
    dim = family.trajectories[0].initial.size
    us = _check_unitaries(unitaries, dim, f)
    out = []
    for tr in family.trajectories:
        ket = chain_ket(tr, us[: len(tr)])
        for u in us[len(tr):f]:
            ket = u @ ket
        out.append(ket)
    return np.array(out)


@dataclass(frozen=True)
class ConsistencyReport:
    matrix: np.ndarray
    consistent: bool
    labels: list
    max_offdiag: float

    def worst_pair(self) -> tuple[int, int]:
        off = self.matrix - np.diag(np.diag(self.matrix))
        i, j = np.unravel_index(np.argmax(np.abs(off)), off.shape)
        return int(min(i, j)), int(max(i, j))


def consistency_matrix(family: TrajectoryFamily, unitaries, tol: float = CONSISTENCY_TOL) -> ConsistencyReport:
    """Real parts of chain-ket overlaps; consistent when every off-diagonal is within ``tol``."""
    kets = extended_chain_kets(family, unitaries)
    gram = (kets.conj() @ kets.T).real
    gram = 0.5 * (gram + gram.T)
    off = gram - np.diag(np.diag(gram))
    worst = float(np.max(np.abs(off))) if off.size > 1 else 0.0
    if worst > 0:
        i, j = np.unravel_index(np.argmax(np.abs(off)), off.shape)
        worst_signed = float(off[i, j])
    else:
        worst_signed = 0.0
    return ConsistencyReport(gram, worst <= tol, family.labels, worst_signed)


# --- Markov approximation -----------------------------------------------------

def survival_map(step: Superoperator, survival: Projector) -> np.ndarray:
    """Matrix of ``rho -> E Lambda(rho) E``."""
    if step.dim != survival.dim:
        raise ValueError(f"step acts on dim {step.dim}, projector has dim {survival.dim}")
    e = survival.matrix
    return left_right(e, e) @ step.matrix


def survival_sequence(step: Superoperator, survival: Projector, initial, n: int) -> np.ndarray:
    """``R(k) = Tr[(P_E o Lambda)^k |psi><psi|]`` for k = 0..n."""
    s = survival_map(step, survival)
    rho0 = ket_projector(initial)
    if rho0.shape[0] != survival.dim:
        raise ValueError("initial state dimension does not match the projector")
    states = _kernels.iterate_map(s, vec(rho0), n)
    return (states @ vec(np.eye(survival.dim))).real


def survival_weight_markov(step: Superoperator, survival: Projector, initial, n: int) -> float:
    if n < 0:
        raise ValueError("n must be non-negative")
    return float(survival_sequence(step, survival, initial, n)[-1])


@dataclass(frozen=True)
class ReliabilityCurve:
    """Reliability on a uniform grid plus a step-halving error estimate.

    ``err_est`` is ``R(dt) - R(dt/2)`` at each grid point; since the iterated
    projection converges at first order, ``extrapolated`` removes the leading
    error term.
    """

    times: np.ndarray
    values: np.ndarray
    err_est: np.ndarray
    meta: dict = field(default_factory=dict)

    @property
    def extrapolated(self) -> np.ndarray:
        return self.values - 2.0 * self.err_est


def _step_map(model: LindbladModel, dt: float, method: str) -> Superoperator:
    if method == "exact":
        return propagator(model, dt)
    if method == "euler":
        return euler_step_map(model, dt)
    raise ValueError(f"unknown method {method!r} (expected 'exact' or 'euler')")


def _grid_steps(t_max: float, dt: float) -> int:
    if t_max <= 0 or dt <= 0:
        raise ValueError("t_max and dt must be positive")
    n = int(round(t_max / dt))
    if n < 1 or abs(n * dt - t_max) > 1e-9 * max(1.0, t_max):
        raise ValueError(f"t_max={t_max} is not a whole number of steps dt={dt}")
    return n


def reliability_curve(
    model: LindbladModel,
    survival: Projector,
    initial,
    t_max: float,
    dt: float = 1e-3,
    method: str = "exact",
    meta: dict | None = None,
) -> ReliabilityCurve:
    n = _grid_steps(t_max, dt)
    coarse = survival_sequence(_step_map(model, dt, method), survival, initial, n)
    fine = survival_sequence(_step_map(model, dt / 2, method), survival, initial, 2 * n)[::2]
    info = {"dt": dt, "method": method}
    info.update(meta or {})
    return ReliabilityCurve(np.arange(n + 1) * dt, coarse, coarse - fine, info)


def failure_weights(
    model: LindbladModel, survival: Projector, initial, t_max: float, dt: float = 1e-3, method: str = "exact"
) -> np.ndarray:
    """``w_k = R(k-1) - R(k)`` for checkpoints k = 1..n."""
    n = _grid_steps(t_max, dt)
    r = survival_sequence(_step_map(model, dt, method), survival, initial, n)
    return r[:-1] - r[1:]


def failure_weights_explicit(
    model: LindbladModel, survival: Projector, initial, t_max: float, dt: float = 1e-3, method: str = "exact"
) -> np.ndarray:
    """Failure weights with the failure projector inserted at checkpoint k.

    ``w_k = Tr[E_perp Lambda(A_{k-1}) E_perp]`` where ``A_j`` is the state after
    j survived checkpoints.
    """
    n = _grid_steps(t_max, dt)
    step = _step_map(model, dt, method)
    e = survival.matrix
    e_perp = complement(survival).matrix
    a = survival_map(step, survival)
    fail = left_right(e_perp, e_perp) @ step.matrix
    states = _kernels.iterate_map(a, vec(ket_projector(initial)), n - 1)
    tr = vec(np.eye(e.shape[0]))
    return ((states @ fail.T) @ tr).real


def markov_state(step: Superoperator, survival: Projector, initial, n: int) -> np.ndarray:
    """Un-normalised state after n survived checkpoints."""
    s = survival_map(step, survival)
    states = _kernels.iterate_map(s, vec(ket_projector(initial)), n)
    return unvec(states[-1], survival.dim)
