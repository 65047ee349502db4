"""Lindblad generators and per-interval maps.

Time is measured in units of 1/gamma0 and rates in units of gamma0.
Basis order is |0> = (1, 0), |1> = (0, 1); sigma_minus = |0><1| and qubit 1
is the leftmost tensor factor.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .numkernel import as_matrix, dagger, kron, matexp, unvec, vec

SIGMA_MINUS = np.array([[0, 1], [0, 0]], dtype=np.complex128)
SIGMA_PLUS = SIGMA_MINUS.conj().T.copy()

MAX_DIM = 64


@dataclass(frozen=True)
class LindbladModel:
    dim: int
    jump_ops: tuple = ()
    hamiltonian: Optional[np.ndarray] = None

    def __post_init__(self):
        ops = []
        for op, rate in self.jump_ops:
            m = as_matrix(op)
            if m.shape != (self.dim, self.dim):
                raise ValueError(f"jump operator shape {m.shape} does not match dim {self.dim}")
            if rate < 0:
                raise ValueError(f"rates must be non-negative, got {rate}")
            ops.append((m, float(rate)))
        object.__setattr__(self, "jump_ops", tuple(ops))
        if self.hamiltonian is not None:
            h = as_matrix(self.hamiltonian)
            if h.shape != (self.dim, self.dim):
                raise ValueError(f"Hamiltonian shape {h.shape} does not match dim {self.dim}")
            object.__setattr__(self, "hamiltonian", h)


@dataclass(frozen=True, eq=False)
class Superoperator:
    """Matrix acting on column-stacked density matrices."""

    matrix: np.ndarray
    dim: int = field(default=0)

    def __post_init__(self):
        m = as_matrix(self.matrix)
        d = int(round(np.sqrt(m.shape[0])))
        if m.shape != (d * d, d * d):
            raise ValueError(f"superoperator must be d^2 x d^2, got {m.shape}")
        object.__setattr__(self, "matrix", m)
        object.__setattr__(self, "dim", d)

    def __call__(self, rho) -> np.ndarray:
        return unvec(self.matrix @ vec(rho), self.dim)

    def __matmul__(self, other: "Superoperator") -> "Superoperator":
        return Superoperator(self.matrix @ other.matrix)


def thermal_qubit(n_thermal: float) -> LindbladModel:
    """Two-level atom coupled to a bath with mean occupation ``n_thermal``."""
    if not 0.0 <= n_thermal <= 0.5:
        raise ValueError(f"n_thermal must lie in [0, 0.5], got {n_thermal}")
    jumps = [(SIGMA_MINUS, 1.0 - n_thermal)]
    if n_thermal > 0:
        jumps.append((SIGMA_PLUS, n_thermal))
    return LindbladModel(2, tuple(jumps))


def _site_operator(op: np.ndarray, site: int, dim: int, copies: int) -> np.ndarray:
    factors = [np.eye(dim)] * copies
    factors[site] = op
    return kron(*factors)


def independent_sum(model: LindbladModel, copies: int) -> LindbladModel:
    """``copies`` non-interacting replicas of ``model``, site 0 leftmost."""
    if copies < 1:
        raise ValueError("copies must be >= 1")
    total = model.dim ** copies
    if total > MAX_DIM:
        raise ValueError(f"joint dimension {total} exceeds {MAX_DIM}")
    if copies == 1:
        return model
    jumps = [
        (_site_operator(op, i, model.dim, copies), rate)
        for op, rate in model.jump_ops
        for i in range(copies)
    ]
    h = None
    if model.hamiltonian is not None:
        h = sum(_site_operator(model.hamiltonian, i, model.dim, copies) for i in range(copies))
    return LindbladModel(total, tuple(jumps), h)


def generator(model: LindbladModel) -> Superoperator:
    d = model.dim
    ident = np.eye(d)
    out = np.zeros((d * d, d * d), dtype=np.complex128)
    for j, rate in model.jump_ops:
        jj = dagger(j) @ j
        out += rate * (np.kron(j.conj(), j) - 0.5 * np.kron(ident, jj) - 0.5 * np.kron(jj.T, ident))
    if model.hamiltonian is not None:
        h = model.hamiltonian
        out += -1j * (np.kron(ident, h) - np.kron(h.T, ident))
    return Superoperator(out)


def euler_step_map(model: LindbladModel, dt: float) -> Superoperator:
    """First-order map ``rho -> rho + dt * L(rho)``."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    gen = generator(model).matrix
    return Superoperator(np.eye(gen.shape[0]) + dt * gen)


def propagator(model: LindbladModel, dt: float) -> Superoperator:
    """Exact interval map ``exp(L dt)``."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    return Superoperator(matexp(generator(model).matrix, dt))


def unitary_channel(u) -> Superoperator:
    """Superoperator of ``rho -> U rho U^dagger``."""
    u = as_matrix(u)
    return Superoperator(np.kron(u.conj(), u))


def left_right(left, right) -> np.ndarray:
    """Matrix of ``X -> left X right`` in the column-stacking convention."""
    return np.kron(np.asarray(right).T, np.asarray(left))
