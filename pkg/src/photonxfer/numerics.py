"""Dense complex linear algebra and fixed-step integration primitives.

Matrices are plain ``numpy.ndarray`` objects of dtype ``complex128``. All
comparisons take an explicit tolerance.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Callable

import numpy as np
import scipy.linalg as sla

from .errors import DimensionError, DivergenceError, NumericalError, PreconditionError, RangeError

STRUCTURAL_TOL = 1e-9
ORACLE_TOL = 1e-6
DEGENERACY_TOL = 1e-8


def as_matrix(values, name: str = "matrix") -> np.ndarray:
    """Coerce ``values`` to a finite 2-D complex array."""
    arr = np.array(values, dtype=np.complex128)
    if arr.ndim == 1 and arr.size == 0:
        arr = arr.reshape(0, 0)
    if arr.ndim != 2:
        raise DimensionError(f"{name} must be 2-D, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise PreconditionError(f"{name} has non-finite entries")
    return arr


def as_vector(values, name: str = "vector") -> np.ndarray:
    arr = np.array(values, dtype=np.complex128)
    if arr.ndim != 1:
        raise DimensionError(f"{name} must be 1-D, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise PreconditionError(f"{name} has non-finite entries")
    return arr


def _require_square(m: np.ndarray, name: str) -> None:
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DimensionError(f"{name} must be square, got shape {m.shape}")


def close(a, b, tol: float) -> bool:
    """Frobenius-norm equality test with an explicit absolute tolerance."""
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape:
        return False
    return bool(np.linalg.norm(a - b) <= tol)


def hermitian_defect(m: np.ndarray) -> float:
    return float(np.linalg.norm(m - m.conj().T))


def unitary_defect(m: np.ndarray) -> float:
    return float(np.linalg.norm(m.conj().T @ m - np.eye(m.shape[0])))


def phase_fix(v: np.ndarray) -> np.ndarray:
    """Rotate ``v`` so that its first largest-magnitude entry is real and nonnegative."""
    if v.size == 0:
        return v
    mags = np.abs(v)
    peak = mags.max()
    if peak == 0.0:
        return v
    k = int(np.argmax(mags >= peak * (1.0 - 1e-12)))
    return v * (np.conj(v[k]) / abs(v[k]))


@dataclass(frozen=True)
class EigenDecomposition:
    """Eigenpairs of a square matrix; ``vectors[:, i]`` pairs with ``values[i]``."""

    values: np.ndarray
    vectors: np.ndarray
    # one flag per eigenvalue: True when its group could not be given an independent basis
    defective: np.ndarray

    def __len__(self) -> int:
        return len(self.values)

    def pairs(self):
        return [(self.values[i], self.vectors[:, i]) for i in range(len(self.values))]


def _sort_key(values: np.ndarray) -> np.ndarray:
    # quantize so that round-off does not flip the order of ties
    re = np.round(values.real, 10)
    im = np.round(values.imag, 10)
    return np.lexsort((im, -re))


def eig(m, tol: float = 1e-10) -> EigenDecomposition:
    """Full eigendecomposition with deterministic ordering.

    Eigenvalues are ordered by real part descending, then imaginary part
    ascending. Eigenvalues closer than ``DEGENERACY_TOL`` are grouped; a group
    whose eigenvectors span its full dimension is replaced by an orthonormal
    basis of that span and its eigenvalues by their mean.
    """
    m = as_matrix(m, "M")
    _require_square(m, "M")
    n = m.shape[0]
    if n == 0:
        return EigenDecomposition(np.zeros(0, complex), np.zeros((0, 0), complex), np.zeros(0, bool))
    fro = float(np.linalg.norm(m))
    try:
        values, vectors = sla.eig(m)
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise NumericalError(
            f"eigenvalue iteration failed to converge for matrix with ‖M‖_F={fro:.6e} "
            f"(LAPACK QR limit of 30·n={30 * n} sweeps per eigenvalue): {exc}"
        ) from exc

    order = _sort_key(values)
    values = values[order].astype(np.complex128)
    vectors = vectors[:, order].astype(np.complex128)
    defective = np.zeros(n, dtype=bool)

    i = 0
    while i < n:
        j = i + 1
        while j < n and abs(values[j] - values[i]) <= DEGENERACY_TOL:
            j += 1
        if j - i > 1:
            block = vectors[:, i:j]
            sv = np.linalg.svd(block, compute_uv=False)
            if sv[-1] > 1e-6 * sv[0]:
                q, _ = np.linalg.qr(block)
                vectors[:, i:j] = q
                values[i:j] = values[i:j].mean()
            else:
                defective[i:j] = True
        i = j

    for k in range(n):
        v = vectors[:, k]
        vectors[:, k] = phase_fix(v / np.linalg.norm(v))

    scale = max(fro, np.finfo(float).tiny)
    for k in range(n):
        if defective[k]:
            continue
        res = np.linalg.norm(m @ vectors[:, k] - values[k] * vectors[:, k])
        if res > tol * scale:
            raise NumericalError(
                f"eigenpair {k} residual {res:.3e} exceeds {tol:.1e}·‖M‖_F (‖M‖_F={fro:.6e})"
            )
    return EigenDecomposition(values, vectors, defective)


def spectral_abscissa(m) -> float:
    """Largest real part among the eigenvalues of ``m``."""
    m = as_matrix(m, "M")
    _require_square(m, "M")
    if m.shape[0] == 0:
        return -np.inf
    return float(np.max(sla.eigvals(m).real))


def expm_action(m, t: float, v) -> np.ndarray:
    """Return ``exp(M t) v`` (scaling and squaring with Padé approximant)."""
    m = as_matrix(m, "M")
    _require_square(m, "M")
    v = as_vector(v, "v")
    if v.shape[0] != m.shape[0]:
        raise DimensionError(f"vector length {v.shape[0]} does not match matrix size {m.shape[0]}")
    if t == 0.0 or m.shape[0] == 0:
        return v.copy()
    mt = m * t
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        out = sla.expm(mt) @ v
    if not np.all(np.isfinite(out)):
        raise RangeError(
            f"exp(M t) overflows for ‖M t‖_F={np.linalg.norm(mt):.3e}; truncate the time window"
        )
    return out


def solve_lyapunov(a, q, tol: float = 1e-10, herm_tol: float = STRUCTURAL_TOL) -> np.ndarray:
    """Solve ``A X + X A† + Q = 0`` for Hurwitz ``A`` and Hermitian ``Q``."""
    a = as_matrix(a, "A")
    q = as_matrix(q, "Q")
    _require_square(a, "A")
    _require_square(q, "Q")
    if a.shape != q.shape:
        raise DimensionError(f"A {a.shape} and Q {q.shape} differ in shape")
    if a.shape[0] == 0:
        return np.zeros((0, 0), complex)
    qn = float(np.linalg.norm(q))
    if hermitian_defect(q) > herm_tol * max(qn, 1.0):
        raise PreconditionError(f"Q is not Hermitian (defect {hermitian_defect(q):.3e})")
    abscissa = spectral_abscissa(a)
    if abscissa >= 0.0:
        raise PreconditionError(f"A is not Hurwitz: max Re λ = {abscissa:.6e}")
    x = sla.solve_continuous_lyapunov(a, -q)
    x = 0.5 * (x + x.conj().T)
    res = float(np.linalg.norm(a @ x + x @ a.conj().T + q))
    if res > tol * max(qn, np.finfo(float).tiny):
        raise NumericalError(f"Lyapunov residual {res:.3e} exceeds {tol:.1e}·‖Q‖_F")
    return x


def integrate_ode(
    f: Callable[[float, np.ndarray], np.ndarray],
    y0,
    t0: float,
    t1: float,
    dt: float,
) -> tuple[np.ndarray, np.ndarray]:
    """Classical fixed-step RK4 from ``t0`` to ``t1``.

    Returns ``(times, states)`` with ``states[k]`` the solution at
    ``times[k]``. The last step is shortened to land exactly on ``t1``.
    """
    if not t0 < t1:
        raise PreconditionError(f"need t0 < t1, got t0={t0}, t1={t1}")
    if not dt > 0:
        raise PreconditionError(f"dt must be positive, got {dt}")
    y = np.array(y0, dtype=np.complex128)
    nfull = int(np.floor((t1 - t0) / dt + 1e-9))
    times = t0 + dt * np.arange(nfull + 1)
    if t1 - times[-1] > 1e-12 * max(1.0, abs(t1)):
        times = np.append(times, t1)
    else:
        times[-1] = t1
    states = np.empty((len(times),) + y.shape, dtype=np.complex128)
    states[0] = y
    with np.errstate(over="ignore", invalid="ignore"):
        return times, _rk4_loop(f, y, times, states)


def _rk4_loop(f, y, times, states):
    for k in range(len(times) - 1):
        t = times[k]
        h = times[k + 1] - t
        k1 = f(t, y)
        k2 = f(t + h / 2, y + h / 2 * k1)
        k3 = f(t + h / 2, y + h / 2 * k2)
        k4 = f(t + h, y + h * k3)
        y = y + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        if not np.all(np.isfinite(y)):
            raise DivergenceError(times[k + 1])
        states[k + 1] = y
    return states


def rk4_linear_step_matrices(a: np.ndarray, h: float):
    """Matrices ``(P, Q0, Qm, Q1)`` of one RK4 step for ``y' = A y + g(t)``.

    One step reads ``y+ = P y + Q0 g(t) + Qm g(t + h/2) + Q1 g(t + h)``, which
    is algebraically identical to the classical four-stage update.
    """
    n = a.shape[0]
    eye = np.eye(n, dtype=np.complex128)
    m1 = h * a
    m2 = m1 @ m1
    m3 = m2 @ m1
    m4 = m3 @ m1
    p = eye + m1 + m2 / 2 + m3 / 6 + m4 / 24
    q0 = h / 6 * (eye + m1 + m2 / 2 + m3 / 4)
    qm = h / 6 * (4 * eye + 2 * m1 + m2 / 2)
    q1 = h / 6 * eye
    return p, q0, qm, q1


def integrate_linear_rk4(a, g_nodes: np.ndarray, g_mid: np.ndarray, times: np.ndarray, y0=None) -> np.ndarray:
    """RK4 for ``y' = A y + g(t)`` on a uniform grid with pre-sampled forcing.

    ``g_nodes[k]`` is ``g(times[k])`` and ``g_mid[k]`` is ``g`` at the midpoint
    of step ``k``. Returns the states on ``times``.
    """
    a = as_matrix(a, "A")
    n = a.shape[0]
    steps = len(times) - 1
    if steps < 1:
        raise PreconditionError("need at least two grid points")
    h = float(times[1] - times[0])
    if not np.allclose(np.diff(times), h, rtol=1e-9, atol=1e-12 * max(1.0, abs(times[0]))):
        raise PreconditionError("grid must be uniform")
    p, q0, qm, q1 = rk4_linear_step_matrices(a, h)
    w = g_nodes[:-1] @ q0.T + g_mid @ qm.T + g_nodes[1:] @ q1.T
    states = np.empty((steps + 1, n), dtype=np.complex128)
    y = np.zeros(n, complex) if y0 is None else np.array(y0, dtype=np.complex128)
    states[0] = y
    for k in range(steps):
        y = p @ y + w[k]
        states[k + 1] = y
    if not np.all(np.isfinite(states)):
        bad = int(np.argmax(~np.all(np.isfinite(states), axis=1)))
        raise DivergenceError(float(times[bad]))
    return states
