"""Input pulse synthesis for perfect single-photon absorption.

Every plan is a vector-valued function on ``t <= 0`` (one complex amplitude
per input channel). Plans built here are finite sums of exponentials
``Σ_k a_k exp(r_k t)``, which gives exact norms and cheap sampling; a plan
may instead carry an explicit evaluator when no such expansion is reliable.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np

from .errors import DimensionError, PreconditionError
from .model import PassiveSystem, drift_matrix, require_valid
from .numerics import STRUCTURAL_TOL, as_vector, eig, expm_action, solve_lyapunov
from .zeros import BLOCKING_TOL, ZeroRecord, transmission_zeros, v_matrix

TRUNC_EPS = 1e-10
BASIS_ALIGN_TOL = 1e-8

CONSTRUCTIONS = ("xi-row-combination", "zero-mode", "separable-blocking", "separable-basis", "custom")


def truncation_start(rates: Sequence[complex], eps: float = TRUNC_EPS) -> float:
    """Start time ``T0 = ln(eps) / min Re(rate)`` of the sampling window.

    Each rising exponential has relative amplitude at most ``eps`` at ``T0``,
    so the mass cut off is below ``eps**2``.
    """
    re = [complex(r).real for r in rates if complex(r).real > 0]
    if not re:
        raise PreconditionError("no rising exponential to truncate (all rates have Re <= 0)")
    if not 0 < eps < 1:
        raise PreconditionError(f"truncation eps must lie in (0, 1), got {eps}")
    return float(np.log(eps) / min(re))


def _window_gram(rates: np.ndarray, t0: float) -> np.ndarray:
    # G[j, k] = ∫_{t0}^0 exp((conj(r_j) + r_k) t) dt
    s = rates.conj()[:, None] + rates[None, :]
    out = np.empty_like(s)
    small = np.abs(s) < 1e-300
    out[small] = -t0
    ss = s[~small]
    out[~small] = -np.expm1(ss * t0) / ss
    return out


@dataclass(frozen=True, eq=False)
class PulsePlan:
    """A pulse on ``t <= 0`` and the system amplitudes it should leave behind.

    ``raw_target`` is on the same scale as the pulse itself; scaling the
    pulse scales it too. ``predicted_target`` is its unit-norm version.
    """

    channels: int
    construction: str
    rates: np.ndarray
    amplitudes: np.ndarray  # (len(rates), channels)
    window_start: float
    raw_target: np.ndarray
    zeros: tuple = ()
    coefficients: tuple = ()
    channel: int | None = None
    notes: tuple = ()
    evaluator: Callable[[np.ndarray], np.ndarray] | None = field(default=None, repr=False)
    evaluator_norm: float | None = None

    def __post_init__(self):
        if self.construction not in CONSTRUCTIONS:
            raise PreconditionError(f"unknown construction tag {self.construction!r}")
        rates = np.atleast_1d(np.asarray(self.rates, dtype=np.complex128))
        amps = np.asarray(self.amplitudes, dtype=np.complex128).reshape(len(rates), self.channels)
        object.__setattr__(self, "rates", rates)
        object.__setattr__(self, "amplitudes", amps)
        object.__setattr__(self, "raw_target", np.asarray(self.raw_target, dtype=np.complex128))

    @property
    def predicted_target(self) -> np.ndarray:
        nrm = np.linalg.norm(self.raw_target)
        return self.raw_target / nrm if nrm > 0 else self.raw_target.copy()

    @property
    def l2_norm(self) -> float:
        """√∫‖shape‖² over the sampling window ``[window_start, 0]``."""
        if self.evaluator is not None:
            return float(self.evaluator_norm)
        if len(self.rates) == 0:
            return 0.0
        gram = _window_gram(self.rates, self.window_start)
        inner = self.amplitudes.conj() @ self.amplitudes.T  # (j, k) -> a_j^H a_k
        return float(np.sqrt(max(np.real(np.sum(inner * gram)), 0.0)))

    def shape(self, t):
        """Channel amplitudes at ``t`` (scalar or array); zero for ``t > 0``."""
        scalar = np.ndim(t) == 0
        times = np.atleast_1d(np.asarray(t, dtype=float))
        if self.evaluator is not None:
            out = np.asarray(self.evaluator(times), dtype=np.complex128).reshape(len(times), self.channels)
        else:
            out = np.exp(np.outer(np.minimum(times, 0.0), self.rates)) @ self.amplitudes
        out[times > 0] = 0.0
        return out[0] if scalar else out

    def scaled(self, factor: complex) -> "PulsePlan":
        return replace(
            self,
            amplitudes=self.amplitudes * factor,
            raw_target=self.raw_target * factor,
            evaluator=None if self.evaluator is None else _scaled_evaluator(self.evaluator, factor),
            evaluator_norm=None if self.evaluator_norm is None else self.evaluator_norm * abs(factor),
        )

    def normalized(self) -> "PulsePlan":
        nrm = self.l2_norm
        if not nrm > 0:
            raise PreconditionError("cannot normalize a pulse with zero norm")
        return self.scaled(1.0 / nrm)

    def sample(self, num: int = 2001) -> tuple[np.ndarray, np.ndarray]:
        times = np.linspace(self.window_start, 0.0, num)
        return times, self.shape(times)


def _scaled_evaluator(fn, factor):
    return lambda times: fn(times) * factor


def null_plan(channels: int, window_start: float, n: int) -> PulsePlan:
    """The vacuum input: no photon on any channel."""
    return PulsePlan(
        channels=channels,
        construction="custom",
        rates=np.zeros(0, complex),
        amplitudes=np.zeros((0, channels), complex),
        window_start=window_start,
        raw_target=np.zeros(n, complex),
        notes=("vacuum input",),
    )


def xi_at(sys: PassiveSystem, t: float) -> np.ndarray:
    """The n×m pulse matrix ``Ξ(t) = -exp(-A♯ t) Cᵀ S♯`` for ``t <= 0``, zero after."""
    if t > 0:
        return np.zeros((sys.n, sys.m), dtype=np.complex128)
    a_conj = drift_matrix(sys).conj()
    rhs = sys.coupling.T @ sys.scattering.conj()
    return -np.column_stack([expm_action(-a_conj, t, rhs[:, j]) for j in range(sys.m)]).reshape(sys.n, sys.m)


def gram_certificate(sys: PassiveSystem) -> np.ndarray:
    """Solution ``X`` of ``A X + X A† + C†C = 0``; equals ``I`` for passive systems.

    ``conj(X)`` is ``∫ Ξ Ξ† dt`` over ``t <= 0``.
    """
    c = sys.coupling
    return solve_lyapunov(drift_matrix(sys), c.conj().T @ c)


def xi_row_combination(sys: PassiveSystem, x, times) -> np.ndarray:
    """Samples of ``Ξ(t)ᵀ x`` (channel ``j`` gets ``Σ_i x_i ξ_{i,j}``), no normalization check."""
    x = as_vector(x, "x")
    times = np.atleast_1d(np.asarray(times, dtype=float))
    out = np.zeros((len(times), sys.m), dtype=np.complex128)
    a_dag = drift_matrix(sys).conj().T
    proj = -sys.scattering.conj().T @ sys.coupling
    for i, t in enumerate(times):
        if t <= 0:
            out[i] = proj @ expm_action(-a_dag, t, x)
    return out


def pulse_for_target(
    sys: PassiveSystem, x, tol: float = STRUCTURAL_TOL, trunc_eps: float = TRUNC_EPS
) -> PulsePlan:
    """Pulse whose absorbed state has mode amplitudes ``x`` (‖x‖ = 1).

    Channel ``j`` carries ``Σ_i x_i ξ_{i,j}(t)``. Internally the pulse is
    expanded on the eigenbasis of ``-A†``, which turns it into a sum of rising
    exponentials at the transmission zeros.
    """
    require_valid(sys, tol)
    x = as_vector(x, "x")
    if x.shape[0] != sys.n:
        raise DimensionError(f"x has {x.shape[0]} entries, system has {sys.n} modes")
    if abs(np.linalg.norm(x) - 1.0) > tol:
        raise PreconditionError(f"target coefficients must have unit norm, got ‖x‖ = {np.linalg.norm(x)!r}")
    a = drift_matrix(sys)
    dec = eig(-a.conj().T)
    zs = dec.values
    t0 = truncation_start(zs, trunc_eps)
    proj = -sys.scattering.conj().T @ sys.coupling
    notes = []
    w = dec.vectors
    if not dec.defective.any() and np.linalg.cond(w) < 1e8:
        coeff = np.linalg.solve(w, x)
        amps = (proj @ (w * coeff[None, :])).T
        return PulsePlan(
            channels=sys.m,
            construction="xi-row-combination",
            rates=zs,
            amplitudes=amps,
            window_start=t0,
            raw_target=x.copy(),
            zeros=tuple(complex(z) for z in zs),
            coefficients=tuple(complex(c) for c in x),
            notes=tuple(notes),
        )
    notes.append("eigenbasis of -A† ill-conditioned; pulse evaluated by matrix exponential")
    x_conj_gram = gram_certificate(sys).conj()
    norm = float(np.sqrt(np.real(x.conj() @ x_conj_gram @ x)))
    return PulsePlan(
        channels=sys.m,
        construction="xi-row-combination",
        rates=np.zeros(0, complex),
        amplitudes=np.zeros((0, sys.m), complex),
        window_start=t0,
        raw_target=x.copy(),
        zeros=tuple(complex(z) for z in zs),
        coefficients=tuple(complex(c) for c in x),
        notes=tuple(notes),
        evaluator=lambda times: xi_row_combination(sys, x, times),
        evaluator_norm=norm,
    )


def zero_mode_pulse(
    zeros: Sequence[ZeroRecord], x, use_raw_u: bool = True, trunc_eps: float = TRUNC_EPS
) -> PulsePlan:
    """Superposition ``-Σ_k x_k u_k exp(z_k t)`` of rising exponentials at the zeros.

    With ``use_raw_u`` the directions are ``u_k = S†C v_k`` as computed;
    otherwise ``x`` is taken relative to the unit-norm directions and
    rescaled so that the pulse is the same. The state left in the system is
    ``Σ_k x_k v_k`` either way.
    """
    zeros = list(zeros)
    if not zeros:
        raise PreconditionError("need at least one zero")
    x = np.atleast_1d(as_vector(x, "x"))
    if x.shape[0] != len(zeros):
        raise DimensionError(f"{x.shape[0]} coefficients for {len(zeros)} zeros")
    if not np.any(x != 0):
        raise PreconditionError("all coefficients are zero")
    m = zeros[0].u.shape[0]
    if any(r.u.shape[0] != m for r in zeros):
        raise DimensionError("zero records disagree on channel count")
    if use_raw_u:
        weights = x
    else:
        # u_raw = c u  =>  x (relative to u) corresponds to x / c relative to u_raw
        scale = np.array([np.vdot(r.u, r.u_raw) for r in zeros])
        weights = x / scale
    rates = np.array([r.z for r in zeros], dtype=np.complex128)
    amps = np.array([-w * r.u_raw for w, r in zip(weights, zeros)])
    target = sum(w * r.v for w, r in zip(weights, zeros))
    return PulsePlan(
        channels=m,
        construction="zero-mode",
        rates=rates,
        amplitudes=amps,
        window_start=truncation_start(rates, trunc_eps),
        raw_target=target,
        zeros=tuple(complex(z) for z in rates),
        coefficients=tuple(complex(c) for c in x),
    )


def normalized_rising_exponential(z: complex) -> Callable:
    """``ζ(t) = -√(z+z*) exp(z t)`` on ``t <= 0``; unit L² norm."""
    z = complex(z)
    if z.real <= 0:
        raise PreconditionError(f"Re z must be positive for a normalizable rising exponential, got {z!r}")
    amp = -np.sqrt(2 * z.real)

    def zeta(t):
        t = np.asarray(t, dtype=float)
        return np.where(t <= 0, amp * np.exp(z * np.minimum(t, 0.0)), 0.0 + 0.0j)

    return zeta


def _single_channel_plan(z, channel, m, raw_target, construction, trunc_eps, note):
    amp = np.zeros((1, m), complex)
    amp[0, channel] = -np.sqrt(2 * z.real)
    return PulsePlan(
        channels=m,
        construction=construction,
        rates=np.array([z]),
        amplitudes=amp,
        window_start=truncation_start([z], trunc_eps),
        raw_target=raw_target,
        zeros=(complex(z),),
        coefficients=(1.0 + 0j,),
        channel=channel,
        notes=(note,),
    )


def separable_transfer_plan(
    sys: PassiveSystem,
    channel: int | None = None,
    blocking_tol: float = BLOCKING_TOL,
    basis_align_tol: float = BASIS_ALIGN_TOL,
    trunc_eps: float = TRUNC_EPS,
    tol: float = STRUCTURAL_TOL,
) -> tuple[PulsePlan | None, str]:
    """Look for a single-channel input that the system absorbs completely.

    Tries a blocking zero first (any channel works, default 0), then a zero
    whose direction is a standard basis vector. Returns ``(plan, reason)``;
    ``plan`` is ``None`` when only an entangled multi-channel input works.
    """
    records = transmission_zeros(sys, blocking_tol=blocking_tol, tol=tol)
    blocking = [r for r in records if r.is_blocking]
    if blocking:
        rec = blocking[0]
        k = 0 if channel is None else int(channel)
        if not 0 <= k < sys.m:
            raise DimensionError(f"channel {k} out of range for {sys.m} channels")
        vm = v_matrix(sys, rec.z)
        target = np.sqrt(2 * rec.z.real) * vm[:, k]
        plan = _single_channel_plan(
            rec.z, k, sys.m, target, "separable-blocking", trunc_eps, f"blocking zero z={rec.z!r}"
        )
        return plan, f"blocking zero at z={rec.z!r}: G(z)=0, so a rising exponential on channel {k} alone is absorbed"

    for rec in records:
        for k in range(sys.m):
            if channel is not None and k != channel:
                continue
            uk = rec.u[k]
            if abs(uk) == 0:
                continue
            aligned = rec.u * (np.conj(uk) / abs(uk))
            e = np.zeros(sys.m, complex)
            e[k] = 1.0
            if np.linalg.norm(aligned - e) <= basis_align_tol:
                target = np.sqrt(2 * rec.z.real) * rec.v / rec.u_raw[k]
                plan = _single_channel_plan(
                    rec.z, k, sys.m, target, "separable-basis", trunc_eps,
                    f"zero direction aligned with channel {k}",
                )
                return plan, (
                    f"zero z={rec.z!r} has direction u = e_{k} within {basis_align_tol:.1e}; "
                    f"a rising exponential on channel {k} alone is absorbed"
                )

    lines = ["no blocking zero and no zero direction along a single channel; an entangled input is required:"]
    for rec in records:
        lines.append(f"  z={rec.z!r}: u_raw={np.array2string(rec.u_raw, precision=6)}")
    return None, "\n".join(lines)
