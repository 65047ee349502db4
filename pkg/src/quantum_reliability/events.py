"""Reliability events as projectors and compilation of structure functions."""
from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from typing import Mapping, Sequence

import numpy as np

from .numkernel import HERMITIAN_TOL, as_matrix, commutator, dagger, kron
from .structure import And, Atom, AtLeast, Expr, Not, Or, Parallel, Series, atoms

COMMUTATOR_TOL = 1e-10
MAX_ATLEAST_ITEMS = 16

PAULI_X = np.array([[0, 1], [1, 0]], dtype=np.complex128)


class ProjectorError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class Projector:
    """Hermitian idempotent operator marking a survival subspace."""

    matrix: np.ndarray

    def __post_init__(self):
        m = as_matrix(self.matrix)
        if m.shape[0] != m.shape[1]:
            raise ProjectorError(f"projector must be square, got {m.shape}")
        herm = np.linalg.norm(m - dagger(m))
        idem = np.linalg.norm(m @ m - m)
        if herm > HERMITIAN_TOL or idem > HERMITIAN_TOL:
            raise ProjectorError(
                f"not a projector: ||P-P^dagger||={herm:.2e}, ||P^2-P||={idem:.2e}"
            )
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def rank(self) -> int:
        return int(round(np.trace(self.matrix).real))

    @classmethod
    def onto(cls, *kets) -> "Projector":
        """Projector onto the span of the given (not necessarily orthonormal) kets."""
        basis = np.column_stack([np.asarray(k, dtype=np.complex128).reshape(-1) for k in kets])
        q, r = np.linalg.qr(basis)
        keep = np.abs(np.diag(r)) > 1e-12
        q = q[:, keep]
        return cls(q @ dagger(q))

    @classmethod
    def identity(cls, dim: int) -> "Projector":
        return cls(np.eye(dim, dtype=np.complex128))

    @classmethod
    def zero(cls, dim: int) -> "Projector":
        return cls(np.zeros((dim, dim), dtype=np.complex128))

    def __matmul__(self, other):
        other = other.matrix if isinstance(other, Projector) else other
        return self.matrix @ other

    def __repr__(self):
        return f"Projector(dim={self.dim}, rank={self.rank})"


@dataclass(frozen=True)
class ComponentSpace:
    names: tuple
    dims: tuple

    def __post_init__(self):
        names = tuple(self.names)
        dims = tuple(int(d) for d in self.dims)
        if len(names) != len(dims):
            raise ValueError("names and dims differ in length")
        if len(set(names)) != len(names):
            raise ValueError(f"component names are not unique: {names}")
        if any(d < 2 for d in dims):
            raise ValueError(f"component dimensions must be >= 2, got {dims}")
        object.__setattr__(self, "names", names)
        object.__setattr__(self, "dims", dims)

    @classmethod
    def qubits(cls, *names: str) -> "ComponentSpace":
        return cls(tuple(names), (2,) * len(names))

    @property
    def dim(self) -> int:
        return int(np.prod(self.dims))

    def index(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise KeyError(f"unknown component {name!r}") from None


def complement(p: Projector) -> Projector:
    return Projector(np.eye(p.dim) - p.matrix)


def embed(p: Projector, space: ComponentSpace, at: str) -> Projector:
    """Lift a single-component projector to the full product space."""
    i = space.index(at)
    if p.dim != space.dims[i]:
        raise ValueError(f"projector dim {p.dim} does not match component {at!r} (dim {space.dims[i]})")
    factors = [np.eye(d) for d in space.dims]
    factors[i] = p.matrix
    return Projector(kron(*factors))


def _check_commute(a: np.ndarray, b: np.ndarray) -> None:
    c = np.linalg.norm(commutator(a, b))
    if c > COMMUTATOR_TOL:
        raise ProjectorError(f"operands do not commute (||[A,B]|| = {c:.2e})")


def _exactly(members: Sequence[np.ndarray], survivors: set, ident: np.ndarray) -> np.ndarray:
    out = ident
    for j, e in enumerate(members):
        out = out @ (e if j in survivors else ident - e)
    return out


def compile_structure(
    expr: Expr, bindings: Mapping[str, Projector], space: ComponentSpace
) -> Projector:
    """Evaluate a structure function on bound component projectors.

    Each atom is embedded into ``space``; the Boolean connectives then act as
    ``not e = I - E``, ``a and b = AB``, ``a or b = A + B - AB``. ``parallel``
    is the product of its members, ``series`` is ``I - prod(I - E_i)`` and
    ``atleast k`` sums exact-survivor products over subsets of size >= k.
    """
    missing = [n for n in atoms(expr) if n not in bindings]
    if missing:
        raise KeyError(f"unbound component(s): {', '.join(missing)}")
    ident = np.eye(space.dim, dtype=np.complex128)
    cache: dict[str, np.ndarray] = {}

    def atom(name):
        if name not in cache:
            cache[name] = embed(bindings[name], space, name).matrix
        return cache[name]

    def go(e) -> np.ndarray:
        if isinstance(e, Atom):
            return atom(e.name)
        if isinstance(e, Not):
            return ident - go(e.expr)
        if isinstance(e, (And, Or)):
            a, b = go(e.left), go(e.right)
            _check_commute(a, b)
            return a @ b if isinstance(e, And) else a + b - a @ b
        members = [go(item) for item in e.items]
        for i, j in combinations(range(len(members)), 2):
            _check_commute(members[i], members[j])
        if isinstance(e, Parallel):
            out = ident
            for m in members:
                out = out @ m
            return out
        if isinstance(e, Series):
            out = ident
            for m in members:
                out = out @ (ident - m)
            return ident - out
        if len(members) > MAX_ATLEAST_ITEMS:
            raise ValueError(f"atleast over {len(members)} items exceeds the limit of {MAX_ATLEAST_ITEMS}")
        out = np.zeros_like(ident)
        for size in range(e.k, len(members) + 1):
            for subset in combinations(range(len(members)), size):
                out = out + _exactly(members, set(subset), ident)
        return out

    return Projector(go(expr))


def code_state(alpha: float, n_qubits: int = 3) -> np.ndarray:
    """``alpha |1...1> + sqrt(1 - alpha^2) |0...0>``."""
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"alpha must lie in [0, 1], got {alpha}")
    dim = 2 ** n_qubits
    psi = np.zeros(dim, dtype=np.complex128)
    psi[-1] = alpha
    psi[0] = np.sqrt(max(0.0, 1.0 - alpha * alpha))
    return psi


def flip_code_projector(alpha: float) -> Projector:
    """Code-space survival projector: the code state plus its 3 single flips."""
    psi = code_state(alpha)
    kets = [psi]
    for i in range(3):
        factors = [np.eye(2)] * 3
        factors[i] = PAULI_X
        kets.append(kron(*factors) @ psi)
    return Projector(sum(np.outer(k, k.conj()) for k in kets))
