"""Passive linear quantum system realizations (Ω, C, S).

Convention: ``coupling`` is stored m×n, i.e. row ``j`` couples input channel
``j`` to the system modes. The drift matrix is ``A = -iΩ - C†C/2``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from .errors import DimensionError, NumericalError, PreconditionError
from .numerics import STRUCTURAL_TOL, as_matrix, eig, hermitian_defect, unitary_defect

HURWITZ_MARGIN = 1e-12


@dataclass(frozen=True, eq=False)
class PassiveSystem:
    """Immutable triple (Ω, C, S); shapes are checked on construction."""

    omega: np.ndarray
    coupling: np.ndarray
    scattering: np.ndarray

    def __post_init__(self):
        omega = as_matrix(self.omega, "omega")
        coupling = np.array(self.coupling, dtype=np.complex128)
        scattering = as_matrix(self.scattering, "scattering")
        n = omega.shape[0]
        if omega.shape != (n, n):
            raise DimensionError(f"omega must be square, got {omega.shape}")
        m = scattering.shape[0]
        if scattering.shape != (m, m):
            raise DimensionError(f"scattering must be square, got {scattering.shape}")
        if coupling.size == 0:
            coupling = coupling.reshape(m, n)
        if coupling.shape != (m, n):
            raise DimensionError(f"coupling must be {m}x{n} (m x n), got {coupling.shape}")
        if not np.all(np.isfinite(coupling)):
            raise PreconditionError("coupling has non-finite entries")
        for arr in (omega, coupling, scattering):
            arr.setflags(write=False)
        object.__setattr__(self, "omega", omega)
        object.__setattr__(self, "coupling", coupling)
        object.__setattr__(self, "scattering", scattering)

    @property
    def n(self) -> int:
        return self.omega.shape[0]

    @property
    def m(self) -> int:
        return self.scattering.shape[0]

    @property
    def drift(self) -> np.ndarray:
        return drift_matrix(self)

    @classmethod
    def from_drift(cls, a, coupling, scattering, tol: float = STRUCTURAL_TOL) -> "PassiveSystem":
        """Build from a drift matrix by inverting ``A = -iΩ - C†C/2``.

        The recovered Ω = i(A + C†C/2) must be Hermitian, otherwise ``A`` is
        not the drift of any passive system with this coupling.
        """
        a = as_matrix(a, "A")
        c = np.array(coupling, dtype=np.complex128)
        if c.ndim != 2 or c.shape[1] != a.shape[0]:
            raise DimensionError(f"coupling shape {c.shape} incompatible with A {a.shape}")
        omega = 1j * (a + c.conj().T @ c / 2)
        defect = hermitian_defect(omega)
        if defect > tol * max(1.0, float(np.linalg.norm(omega))):
            raise PreconditionError(
                f"A is not a passive drift for this coupling: i(A + C†C/2) has Hermiticity defect {defect:.3e}"
            )
        omega = 0.5 * (omega + omega.conj().T)
        return cls(omega, c, scattering)

    def __eq__(self, other):
        if not isinstance(other, PassiveSystem):
            return NotImplemented
        return (
            self.omega.shape == other.omega.shape
            and self.scattering.shape == other.scattering.shape
            and np.array_equal(self.omega, other.omega)
            and np.array_equal(self.coupling, other.coupling)
            and np.array_equal(self.scattering, other.scattering)
        )

    __hash__ = None


@dataclass
class ValidationReport:
    hermiticity_defect: float
    unitarity_defect: float
    hurwitz_margin_found: float
    passed: bool
    messages: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "hermiticity_defect": self.hermiticity_defect,
            "unitarity_defect": self.unitarity_defect,
            "hurwitz_margin_found": self.hurwitz_margin_found,
            "passed": self.passed,
            "messages": list(self.messages),
        }


def drift_matrix(sys: PassiveSystem) -> np.ndarray:
    c = sys.coupling
    return -1j * sys.omega - c.conj().T @ c / 2


def validate(sys: PassiveSystem, tol: float = STRUCTURAL_TOL, hurwitz_margin: float = HURWITZ_MARGIN) -> ValidationReport:
    """Check Ω = Ω†, S†S = I and that the drift is Hurwitz.

    Defects are absolute Frobenius norms; the Hurwitz margin reported is
    ``-max Re λ(A)``.
    """
    messages: list[str] = []
    herm = hermitian_defect(sys.omega)
    unit = unitary_defect(sys.scattering)
    if herm > tol:
        messages.append(f"omega is not Hermitian: ‖Ω−Ω†‖_F = {herm:.3e} > {tol:.1e}")
    if unit > tol:
        messages.append(f"scattering is not unitary: ‖S†S−I‖_F = {unit:.3e} > {tol:.1e}")
    if sys.n == 0:
        margin = float("inf")
    else:
        a = drift_matrix(sys)
        lam = sla.eigvals(a)
        margin = float(-np.max(lam.real))
        if margin <= hurwitz_margin:
            messages.append(
                f"drift is not Hurwitz: max Re λ(A) = {-margin:.3e} (need < -{hurwitz_margin:.1e}); "
                "a mode decoupled from every channel cannot absorb"
            )
        if _is_defective(a):
            messages.append("drift matrix appears defective (repeated eigenvalue without a full eigenbasis)")
    passed = herm <= tol and unit <= tol and margin > hurwitz_margin
    return ValidationReport(herm, unit, margin, passed, messages)


def _is_defective(a: np.ndarray) -> bool:
    try:
        return bool(eig(a, tol=1e-6).defective.any())
    except NumericalError:
        return True


def require_valid(sys: PassiveSystem, tol: float = STRUCTURAL_TOL) -> ValidationReport:
    report = validate(sys, tol)
    if not report.passed:
        raise PreconditionError("invalid passive system: " + "; ".join(report.messages))
    return report


def direct_sum(sys1: PassiveSystem, sys2: PassiveSystem) -> PassiveSystem:
    """Block-diagonal composition of two systems (modes and channels stacked)."""
    return PassiveSystem(
        sla.block_diag(sys1.omega, sys2.omega).astype(np.complex128)
        if sys1.n + sys2.n
        else np.zeros((0, 0), complex),
        _block_diag_rect(sys1.coupling, sys2.coupling),
        sla.block_diag(sys1.scattering, sys2.scattering).astype(np.complex128)
        if sys1.m + sys2.m
        else np.zeros((0, 0), complex),
    )


def _block_diag_rect(c1: np.ndarray, c2: np.ndarray) -> np.ndarray:
    out = np.zeros((c1.shape[0] + c2.shape[0], c1.shape[1] + c2.shape[1]), dtype=np.complex128)
    out[: c1.shape[0], : c1.shape[1]] = c1
    out[c1.shape[0] :, c1.shape[1] :] = c2
    return out


def prepend_scattering(sys: PassiveSystem, s_static, tol: float = STRUCTURAL_TOL) -> PassiveSystem:
    """Put a static unitary in front of the inputs: ``S <- S @ s_static``."""
    s_static = as_matrix(s_static, "s_static")
    if s_static.shape != (sys.m, sys.m):
        raise DimensionError(f"s_static must be {sys.m}x{sys.m}, got {s_static.shape}")
    defect = unitary_defect(s_static)
    if defect > tol:
        raise PreconditionError(f"s_static is not unitary: ‖S†S−I‖_F = {defect:.3e}")
    return PassiveSystem(sys.omega, sys.coupling, sys.scattering @ s_static)


def beam_splitter(alpha: float, beta: float, tol: float = STRUCTURAL_TOL) -> np.ndarray:
    """Real symmetric splitter ``[[α, β], [β, -α]]`` (transmissivity α, reflectivity β)."""
    alpha = float(alpha)
    beta = float(beta)
    if abs(alpha * alpha + beta * beta - 1.0) > tol:
        raise PreconditionError(f"beam splitter needs α²+β²=1, got {alpha * alpha + beta * beta!r}")
    return np.array([[alpha, beta], [beta, -alpha]], dtype=np.complex128)


def single_mode(coupling, omega: float = 0.0) -> PassiveSystem:
    """One mode at detuning ``omega`` coupled to ``len(coupling)`` channels, S = I."""
    c = np.atleast_1d(np.asarray(coupling, dtype=np.complex128)).reshape(-1, 1)
    return PassiveSystem(np.array([[omega]], dtype=np.complex128), c, np.eye(c.shape[0], dtype=np.complex128))


def random_system(
    rng: np.random.Generator,
    n: int,
    m: int,
    scale: float = 1.0,
    min_margin: float = 0.05,
    max_stiffness: float = 40.0,
    max_tries: int = 1000,
) -> PassiveSystem:
    """Draw a random valid system, rejection-sampled for a Hurwitz margin.

    Entries of Ω and C are uniform on the square [-scale, scale]² of the
    complex plane, S is a Haar-random unitary. Draws whose drift has margin
    below ``min_margin`` or a ratio max|λ| / margin above ``max_stiffness``
    are rejected.
    """
    from scipy.stats import unitary_group

    for _ in range(max_tries):
        h = rng.uniform(-scale, scale, (n, n)) + 1j * rng.uniform(-scale, scale, (n, n))
        omega = (h + h.conj().T) / 2
        c = rng.uniform(-scale, scale, (m, n)) + 1j * rng.uniform(-scale, scale, (m, n))
        s = unitary_group.rvs(m, random_state=rng) if m > 1 else np.exp(2j * np.pi * rng.uniform()) * np.eye(1)
        sys = PassiveSystem(omega, c, np.asarray(s, dtype=np.complex128).reshape(m, m))
        lam = np.linalg.eigvals(drift_matrix(sys))
        margin = -lam.real.max()
        if margin >= min_margin and np.abs(lam).max() / margin <= max_stiffness:
            return sys
    raise PreconditionError(f"no valid {n}x{m} system found in {max_tries} draws")
