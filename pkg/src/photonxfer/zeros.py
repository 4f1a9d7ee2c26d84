"""Transfer function, transmission and blocking zeros, and the V matrix.

Zeros are enumerated from the eigenpairs of ``-A†``: for an eigenpair
``(z, v)`` the direction ``u = S†Cv`` satisfies ``G(z) u = 0``. The rank
drop of ``G`` is only used as a residual check.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from .errors import NumericalError, PoleProximityError
from .model import PassiveSystem, drift_matrix, require_valid
from .numerics import STRUCTURAL_TOL, eig, phase_fix

BLOCKING_TOL = 1e-8
RESIDUAL_TOL = 1e-8


@dataclass(frozen=True, eq=False)
class ZeroRecord:
    z: complex
    u: np.ndarray  # unit norm, dominant entry real >= 0
    v: np.ndarray  # unit eigenvector of -A†
    u_raw: np.ndarray  # S†Cv exactly as computed from v
    residual: float  # ‖G(z) u‖₂
    is_blocking: bool
    degenerate: bool = False  # z shared with another record

    def to_dict(self) -> dict:
        return {
            "z": self.z,
            "u": self.u,
            "v": self.v,
            "u_raw": self.u_raw,
            "residual": self.residual,
            "is_blocking": self.is_blocking,
            "degenerate": self.degenerate,
        }


def _pole_tol(a: np.ndarray) -> float:
    return 1e-9 * max(1.0, float(np.linalg.norm(a)))


def _check_pole(a: np.ndarray, s: complex, pole_tol: float | None) -> None:
    if a.shape[0] == 0:
        return
    tol = _pole_tol(a) if pole_tol is None else pole_tol
    poles = sla.eigvals(a)
    k = int(np.argmin(np.abs(poles - s)))
    dist = float(abs(poles[k] - s))
    if dist <= tol:
        raise PoleProximityError(s, complex(poles[k]), dist)


def transfer_at(sys: PassiveSystem, s: complex, pole_tol: float | None = None) -> np.ndarray:
    """``G(s) = [I - C (sI - A)^{-1} C†] S`` via a linear solve."""
    a = drift_matrix(sys)
    s = complex(s)
    _check_pole(a, s, pole_tol)
    c = sys.coupling
    if sys.n == 0:
        return sys.scattering.copy()
    resolvent_ct = np.linalg.solve(s * np.eye(sys.n) - a, c.conj().T)
    return (np.eye(sys.m) - c @ resolvent_ct) @ sys.scattering


def v_matrix(sys: PassiveSystem, z: complex, pole_tol: float | None = None) -> np.ndarray:
    """``V = (zI - A)^{-1} C† S`` (n×m)."""
    a = drift_matrix(sys)
    z = complex(z)
    _check_pole(a, z, pole_tol)
    return np.linalg.solve(z * np.eye(sys.n) - a, sys.coupling.conj().T @ sys.scattering)


def transmission_zeros(
    sys: PassiveSystem,
    blocking_tol: float = BLOCKING_TOL,
    residual_tol: float = RESIDUAL_TOL,
    tol: float = STRUCTURAL_TOL,
) -> list[ZeroRecord]:
    """One record per eigenpair of ``-A†``, counted with multiplicity."""
    require_valid(sys, tol)
    a = drift_matrix(sys)
    s_norm = float(np.linalg.norm(sys.scattering))
    dec = eig(-a.conj().T)
    records = []
    zs = dec.values
    for k, (z, v) in enumerate(dec.pairs()):
        u_raw = sys.scattering.conj().T @ (sys.coupling @ v)
        u = phase_fix(u_raw / np.linalg.norm(u_raw))
        g = transfer_at(sys, z)
        residual = float(np.linalg.norm(g @ u))
        degenerate = bool(np.sum(np.abs(zs - z) <= 1e-8) > 1)
        rec = ZeroRecord(
            z=complex(z),
            u=u,
            v=v.copy(),
            u_raw=u_raw,
            residual=residual,
            is_blocking=bool(np.linalg.norm(g) <= blocking_tol * s_norm),
            degenerate=degenerate,
        )
        if residual > residual_tol * s_norm:
            err = NumericalError(
                f"zero z={complex(z)!r}: ‖G(z)u‖ = {residual:.3e} exceeds {residual_tol:.1e}·‖S‖_F"
            )
            err.record = rec
            raise err
        records.append(rec)
    return records


def blocking_zeros(sys: PassiveSystem, blocking_tol: float = BLOCKING_TOL, tol: float = STRUCTURAL_TOL) -> list[ZeroRecord]:
    return [r for r in transmission_zeros(sys, blocking_tol=blocking_tol, tol=tol) if r.is_blocking]
