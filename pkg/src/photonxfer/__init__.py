"""Transfer-function zeros and pulse shaping for perfect single-photon
absorption in passive linear quantum systems."""

from .errors import (
    DimensionError,
    DivergenceError,
    NumericalError,
    PhotonXferError,
    PoleProximityError,
    PreconditionError,
    RangeError,
    StabilityError,
)
from .model import (
    PassiveSystem,
    ValidationReport,
    beam_splitter,
    direct_sum,
    drift_matrix,
    prepend_scattering,
    validate,
)
from .pulses import (
    PulsePlan,
    normalized_rising_exponential,
    pulse_for_target,
    separable_transfer_plan,
    xi_at,
    zero_mode_pulse,
)
from .scenarios import ScenarioSpec, build, run_regression
from .simulate import ExcitationTrajectory, Thresholds, TransferReport, assess, propagate
from .zeros import ZeroRecord, blocking_zeros, transfer_at, transmission_zeros, v_matrix

__version__ = "0.1.0"
