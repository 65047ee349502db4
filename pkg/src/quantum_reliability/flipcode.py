"""Storage of one logical bit in the three-qubit bit-flip code.

The physical qubit holds ``alpha |1> + beta |0>`` and the logical state is
``alpha |111> + beta |000>`` with ``beta = sqrt(1 - alpha^2)``. Both decay
under the thermal qubit master equation; reliabilities are returned in units
where gamma0 = 1 unless a ``gamma0`` is given.
"""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import NamedTuple, Optional, Sequence

import numpy as np
from scipy.optimize import brentq

from .dynamics import SIGMA_MINUS, SIGMA_PLUS, LindbladModel, independent_sum, thermal_qubit
from .events import Projector, code_state, flip_code_projector
from .numkernel import matexp


@dataclass(frozen=True)
class CodeParams:
    alpha: float
    n_thermal: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError(f"alpha must lie in [0, 1], got {self.alpha}")
        if not 0.0 <= self.n_thermal <= 0.5:
            raise ValueError(f"n_thermal must lie in [0, 0.5], got {self.n_thermal}")

    @property
    def beta(self) -> float:
        return math.sqrt(max(0.0, 1.0 - self.alpha**2))

    def physical_state(self) -> np.ndarray:
        return np.array([self.beta, self.alpha], dtype=np.complex128)


class ClosedForm(NamedTuple):
    m: float
    q: tuple
    m123: tuple


def _expect(op: np.ndarray, psi: np.ndarray) -> complex:
    return complex(np.vdot(psi, op @ psi))


def _moments(params: CodeParams):
    psi = params.physical_state()
    pm = _expect(SIGMA_PLUS @ SIGMA_MINUS, psi).real
    mp = _expect(SIGMA_MINUS @ SIGMA_PLUS, psi).real
    return pm, mp, _expect(SIGMA_PLUS, psi), _expect(SIGMA_MINUS, psi)


def coeff_m(params: CodeParams) -> float:
    """Decay rate of the physical qubit: thermal-weighted covariances of sigma+/-."""
    pm, mp, sp, sm = _moments(params)
    cov_pm = pm - sp * sm
    cov_mp = mp - sm * sp
    n = params.n_thermal
    return float(((1 - n) * cov_pm + n * cov_mp).real)


def r_physical(t, params: CodeParams, gamma0: float = 1.0):
    return np.exp(-coeff_m(params) * gamma0 * np.asarray(t, dtype=float))


def q_coeffs(params: CodeParams) -> tuple[float, float, float, float]:
    """Coefficients of ``a' = q1 a + q2 b``, ``b' = q3 a + q4 b``."""
    pm, mp, sp, sm = _moments(params)
    n = params.n_thermal
    q1 = -3 * (1 - n) * pm - 3 * n * mp
    q2 = 3 * (1 - n) * mp**2 + 3 * n * pm**2
    q3 = (1 - n) * pm**2 + n * mp**2
    q4 = (1 - n) * (2 * sm**2 - 2 * pm - mp) + n * (2 * sp**2 - 2 * mp - pm)
    return float(q1), float(q2), float(q3), float(np.real(q4))


def m_coeffs(q) -> tuple[float, float, float]:
    """``(M1, M2, M3)``; M3 is ``inf``/``nan`` when M2 vanishes (use the limit form)."""
    q1, q2, q3, q4 = q
    m1 = 0.5 * (q1 + q4)
    m2 = 0.5 * math.sqrt(max(0.0, 4 * q2 * q3 + (q1 - q4) ** 2))
    num = q1 + 6 * q3 - q4
    if m2 > 0:
        m3 = num / (2 * m2)
    else:
        m3 = math.nan if num == 0 else math.copysign(math.inf, num)
    return m1, m2, m3


def closed_form(params: CodeParams) -> ClosedForm:
    q = q_coeffs(params)
    return ClosedForm(coeff_m(params), q, m_coeffs(q))


def _sinhc(x: np.ndarray) -> np.ndarray:
    small = np.abs(x) < 1e-4
    safe = np.where(small, 1.0, x)
    return np.where(small, 1.0 + x * x / 6.0, np.sinh(safe) / safe)


def r_logical_closed_raw(t, params: CodeParams, gamma0: float = 1.0) -> np.ndarray:
    """``e^{M1 s} (cosh(M2 s) + M3 sinh(M2 s))`` with ``s = gamma0 t``.

    ``M3 sinh(M2 s)`` is evaluated as ``c s sinhc(M2 s)`` with
    ``c = (q1 + 6 q3 - q4) / 2``, which stays finite as M2 -> 0.
    """
    q1, q2, q3, q4 = q_coeffs(params)
    m1, m2, _ = m_coeffs((q1, q2, q3, q4))
    c = 0.5 * (q1 + 6 * q3 - q4)
    s = gamma0 * np.asarray(t, dtype=float)
    return np.exp(m1 * s) * (np.cosh(m2 * s) + c * s * _sinhc(m2 * s))


def r_logical_closed(t, params: CodeParams, gamma0: float = 1.0) -> np.ndarray:
    return np.clip(r_logical_closed_raw(t, params, gamma0), 0.0, 1.0)


def ode_matrix(params: CodeParams) -> np.ndarray:
    q1, q2, q3, q4 = q_coeffs(params)
    return np.array([[q1, q2], [q3, q4]])


def r_logical_ode(t_grid: Sequence[float], params: CodeParams, gamma0: float = 1.0) -> np.ndarray:
    """``a(t) + 3 b(t)`` from the exact exponential of the 2x2 population equations."""
    ts = np.asarray(t_grid, dtype=float)
    if ts.size and (ts[0] < 0 or np.any(np.diff(ts) < 0)):
        raise ValueError("time grid must be ascending and non-negative")
    a = ode_matrix(params)
    out = np.empty(ts.size)
    for i, t in enumerate(ts):
        ab = matexp(a, gamma0 * t)[:, 0].real
        out[i] = ab[0] + 3 * ab[1]
    return out


def classical_curve(r_p):
    """Two-out-of-three survival probability for independent components."""
    r = np.asarray(r_p, dtype=float)
    if np.any((r < 0) | (r > 1)):
        raise ValueError("r_p must lie in [0, 1]")
    return r**3 + 3 * r**2 * (1 - r)


# --- explicit models -----------------------------------------------------------

def physical_setup(params: CodeParams) -> tuple[LindbladModel, Projector, np.ndarray]:
    psi = params.physical_state()
    return thermal_qubit(params.n_thermal), Projector.onto(psi), psi


def logical_setup(params: CodeParams) -> tuple[LindbladModel, Projector, np.ndarray]:
    model = independent_sum(thermal_qubit(params.n_thermal), 3)
    return model, flip_code_projector(params.alpha), code_state(params.alpha)


# --- fault-tolerance classification -------------------------------------------------

class Classification(NamedTuple):
    fault_tolerant: bool
    r_c: Optional[float]

    @property
    def label(self) -> str:
        return "FT" if self.fault_tolerant else "NFT"


BAND = 1e-12


def ft_classify(params: CodeParams, t_max: float = 20.0, samples: int = 2000) -> Classification:
    """Compare R_L against R_P along the curve ``t -> (R_P(t), R_L(t))``.

    Fault tolerant when R_L >= R_P on a neighbourhood of R_P = 1; ``r_c`` is
    the largest R_P < 1 where the curves cross again (0 if they never do).
    Samples are log-spaced in t so both ends of the curve are resolved.
    """
    m = coeff_m(params)
    if m <= 0:
        # R_P is identically 1: the condition only asks about R_P > r_c, so it
        # holds vacuously if the logical bit never drops below it either
        stays = np.all(r_logical_closed_raw(np.geomspace(1e-6, t_max, samples), params) >= 1 - BAND)
        return Classification(bool(stays), 0.0 if stays else None)
    ts = np.geomspace(1e-6 * t_max, t_max, samples)

    def gap(t):
        return float(r_logical_closed_raw(t, params) - r_physical(t, params))

    d = r_logical_closed_raw(ts, params) - r_physical(ts, params)
    decided = np.flatnonzero(np.abs(d) > BAND)
    if decided.size == 0 or d[decided[0]] < 0:
        return Classification(False, None)
    below = np.flatnonzero(d[decided[0]:] < -BAND)
    if below.size == 0:
        return Classification(True, 0.0)
    j = decided[0] + below[0]
    lo = ts[j - 1]
    while gap(lo) < 0:
        j -= 1
        lo = ts[j - 1]
    t_cross = brentq(gap, lo, ts[j], xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=200)
    return Classification(True, float(r_physical(t_cross, params)))


def _classify_point(args):
    alpha, n, t_max, samples = args
    c = ft_classify(CodeParams(alpha, n), t_max, samples)
    return (alpha, n, c.label, c.r_c)


def _map(fn, jobs, workers: int):
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(fn, jobs))
    return [fn(j) for j in jobs]


def phase_diagram(alpha_grid, n_grid, t_max: float = 20.0, samples: int = 2000, workers: int = 1) -> list[tuple]:
    """Rows ``(alpha, n_thermal, "FT"|"NFT", r_c or None)`` sorted by (alpha, N)."""
    jobs = [(float(a), float(n), t_max, samples) for a in alpha_grid for n in n_grid]
    return sorted(_map(_classify_point, jobs, workers), key=lambda r: (r[0], r[1]))


def ft_boundary_slope(params: CodeParams) -> float:
    """``d(R_L - R_P)/dt`` at t = 0, i.e. ``M - 3 alpha^2 beta^2``."""
    q1, _, q3, _ = q_coeffs(params)
    return coeff_m(params) + q1 + 3 * q3


# --- entropy of lifetime records --------------------------------------------------

def _entropy_point(args):
    from .apparatus import apparatus_matrix_blocks, d_blocks, entropy_gap

    alpha, n, t_max, grid, variant, form = args
    m = apparatus_matrix_blocks(d_blocks(alpha, n, variant), t_max, grid, form)
    if not m.trace > 1e-14:
        return (alpha, n, math.nan, math.nan, math.nan)
    return (alpha, n) + entropy_gap(m)


def entropy_scan(
    alpha_grid,
    n_grid,
    t_max: float = 10.0,
    grid: int = 200,
    variant: str = "ode_consistent",
    form: str = "g_limit",
    workers: int = 1,
) -> list[tuple]:
    """Rows ``(alpha, N, S_shannon, S_von_neumann, gap)``; NaN where nothing fails."""
    jobs = [(float(a), float(n), t_max, grid, variant, form) for a in alpha_grid for n in n_grid]
    return sorted(_map(_entropy_point, jobs, workers), key=lambda r: (r[0], r[1]))
