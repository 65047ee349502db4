"""NumPy implementation of the hot kernels.

Reference behaviour for the compiled module; also used whenever the
extension is unavailable.
"""
import numpy as np


def iterate_map(s, v0, n):
    """Return the stack ``[v0, S v0, S^2 v0, ..., S^n v0]`` of shape (n+1, m)."""
    s = np.ascontiguousarray(s, dtype=np.complex128)
    v = np.array(v0, dtype=np.complex128).reshape(-1)
    if s.shape != (v.size, v.size):
        raise ValueError(f"map shape {s.shape} does not act on vectors of size {v.size}")
    if n < 0:
        raise ValueError("n must be non-negative")
    out = np.empty((n + 1, v.size), dtype=np.complex128)
    out[0] = v
    for k in range(n):
        v = s @ v
        out[k + 1] = v
    return out


def toeplitz_bilinear(a, b):
    """Upper-triangular matrix ``T[i, i+n] = sum_j a[n, j] * b[i, j]``.

    Both inputs have shape (K, m); the result is (K, K) with zeros below the
    diagonal. The product is bilinear (no conjugation).
    """
    a = np.ascontiguousarray(a, dtype=np.complex128)
    b = np.ascontiguousarray(b, dtype=np.complex128)
    if a.shape != b.shape or a.ndim != 2:
        raise ValueError(f"shape mismatch {a.shape} vs {b.shape}")
    k = a.shape[0]
    out = np.zeros((k, k), dtype=np.complex128)
    rows = np.arange(k)
    for n in range(k):
        idx = rows[: k - n]
        out[idx, idx + n] = b[: k - n] @ a[n]
    return out
