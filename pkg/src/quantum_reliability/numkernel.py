"""Dense complex linear algebra used throughout the package.

Matrices are plain ``numpy`` arrays of dtype ``complex128``; kets are column
vectors stored as 1-D arrays. Superoperators use the column-stacking
convention ``vec(A X B) = (B^T kron A) vec(X)``.
"""
from __future__ import annotations

from functools import reduce
from pathlib import Path
from typing import NamedTuple, Sequence

import numpy as np
import scipy.linalg

HERMITIAN_TOL = 1e-10


class HermitianEig(NamedTuple):
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray


def as_matrix(m) -> np.ndarray:
    """Coerce to a finite 2-D complex array."""
    arr = np.asarray(m, dtype=np.complex128)
    if arr.ndim == 1:
        arr = arr.reshape(-1, 1)
    if arr.ndim != 2:
        raise ValueError(f"expected a matrix, got array of shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("matrix has non-finite entries")
    return arr


def dagger(m) -> np.ndarray:
    return np.conj(np.asarray(m)).T


def kron(*factors) -> np.ndarray:
    """Kronecker product of one or more matrices, left factor outermost."""
    if not factors:
        raise ValueError("kron needs at least one factor")
    return reduce(np.kron, (np.asarray(f, dtype=np.complex128) for f in factors))


def matexp(m, scale: float = 1.0) -> np.ndarray:
    """``exp(scale * m)`` by scaling and squaring with a Pade kernel."""
    arr = np.asarray(m, dtype=np.complex128)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise ValueError(f"matexp needs a square matrix, got shape {arr.shape}")
    return scipy.linalg.expm(scale * arr)


def vec(m) -> np.ndarray:
    """Column-stacking vectorisation."""
    return np.asarray(m, dtype=np.complex128).reshape(-1, order="F")


def unvec(v, dim: int) -> np.ndarray:
    return np.asarray(v, dtype=np.complex128).reshape(dim, dim, order="F")


def partial_trace(m, dims: Sequence[int], keep) -> np.ndarray:
    """Trace out every subsystem not listed in ``keep``.

    ``dims`` gives the subsystem dimensions, leftmost tensor factor first.
    The kept subsystems stay in their original order.
    """
    arr = np.asarray(m, dtype=np.complex128)
    dims = [int(d) for d in dims]
    total = int(np.prod(dims))
    if arr.ndim != 2 or arr.shape != (total, total):
        raise ValueError(f"matrix shape {arr.shape} does not match subsystem dims {dims}")
    keep = sorted(set(int(k) for k in keep))
    if any(k < 0 or k >= len(dims) for k in keep):
        raise ValueError(f"keep indices {keep} out of range for {len(dims)} subsystems")
    n = len(dims)
    t = arr.reshape(dims + dims)
    # trace the highest axes first so the remaining axis numbers stay valid
    for ax in sorted(set(range(n)) - set(keep), reverse=True):
        t = np.trace(t, axis1=ax, axis2=ax + t.ndim // 2)
    kdim = int(np.prod([dims[k] for k in keep])) if keep else 1
    return t.reshape(kdim, kdim)


def hermiticity_error(m) -> float:
    arr = np.asarray(m)
    return float(np.linalg.norm(arr - dagger(arr)))


def herm_eig(m, tol: float = HERMITIAN_TOL) -> HermitianEig:
    """Eigendecomposition of a Hermitian matrix, eigenvalues ascending."""
    arr = np.asarray(m, dtype=np.complex128)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise ValueError(f"herm_eig needs a square matrix, got shape {arr.shape}")
    err = hermiticity_error(arr)
    if err > tol:
        raise ValueError(f"matrix is not Hermitian (||M - M^dagger||_F = {err:.3e})")
    w, v = np.linalg.eigh(0.5 * (arr + dagger(arr)))
    return HermitianEig(w, v)


def commutator(a, b) -> np.ndarray:
    return a @ b - b @ a


def basis_ket(index: int, dim: int) -> np.ndarray:
    k = np.zeros(dim, dtype=np.complex128)
    k[index] = 1.0
    return k


def ket_projector(ket) -> np.ndarray:
    k = np.asarray(ket, dtype=np.complex128).reshape(-1)
    return np.outer(k, k.conj())


# Matrix text format: "rows cols" on the first line, then one line per row of
# whitespace-separated "re,im" tokens.

def format_matrix(m) -> str:
    arr = as_matrix(m)
    lines = [f"{arr.shape[0]} {arr.shape[1]}"]
    for row in arr:
        lines.append(" ".join(f"{float(z.real)!r},{float(z.imag)!r}" for z in row))
    return "\n".join(lines) + "\n"


def parse_matrix(text: str) -> np.ndarray:
    lines = [ln for ln in (raw.strip() for raw in text.splitlines()) if ln]
    if not lines:
        raise ValueError("empty matrix text")
    head = lines[0].split()
    if len(head) != 2:
        raise ValueError(f"line 1: expected 'rows cols', got {lines[0]!r}")
    try:
        rows, cols = int(head[0]), int(head[1])
    except ValueError:
        raise ValueError(f"line 1: expected integer dimensions, got {lines[0]!r}") from None
    if rows <= 0 or cols <= 0:
        raise ValueError("line 1: dimensions must be positive")
    if len(lines) - 1 != rows:
        raise ValueError(f"expected {rows} rows, found {len(lines) - 1}")
    out = np.empty((rows, cols), dtype=np.complex128)
    for i, ln in enumerate(lines[1:]):
        tokens = ln.split()
        if len(tokens) != cols:
            raise ValueError(f"line {i + 2}: expected {cols} entries, found {len(tokens)}")
        for j, tok in enumerate(tokens):
            parts = tok.split(",")
            if len(parts) != 2:
                raise ValueError(f"line {i + 2}: entry {tok!r} is not of the form re,im")
            try:
                out[i, j] = complex(float(parts[0]), float(parts[1]))
            except ValueError:
                raise ValueError(f"line {i + 2}: entry {tok!r} is not numeric") from None
    return as_matrix(out)


def read_matrix(path) -> np.ndarray:
    return parse_matrix(Path(path).read_text(encoding="utf-8"))


def write_matrix(path, m) -> None:
    Path(path).write_text(format_matrix(m), encoding="utf-8")
