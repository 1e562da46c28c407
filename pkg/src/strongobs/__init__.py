"""Unknown-input (strong) observers for linear time-varying systems.

Pipeline: :func:`check_assumptions` -> :func:`build_auxiliary` ->
:func:`is_detectable_pair` (filtering Riccati equation) -> :func:`synthesize`
-> :func:`simulate`.  :mod:`strongobs.lorenz96` holds the Lorenz'96
benchmark and :mod:`strongobs.scenarios` the builtin fixtures.
"""

__version__ = "0.1.0"

from .exceptions import (ConfigError, ContractError, DomainError,
                         EvaluationError, GainUnavailableError,
                         IntegrationError, RankConditionError, SimulationError,
                         StrongObsError, SynthesisInconsistencyError,
                         SynthesisUnavailableError)
from .linalg import (pinv_full_column_rank, psd_check, singular_value_extrema,
                     symmetrize_project_psd)
from .observer import (ObserverRealization, SimulationResult, decay_fit,
                       simulate, synthesize, verify_relations)
from .riccati import RiccatiConfig, RiccatiSolution, integrate_dre, kalman_gain
from .signals import MatrixSignal, TimeGrid
from .system_model import (AuxiliarySystem, LtvSystem, build_auxiliary,
                           check_assumptions, is_detectable_pair,
                           pbh_detectable)

__all__ = [
    "MatrixSignal", "TimeGrid",
    "LtvSystem", "AuxiliarySystem", "check_assumptions", "build_auxiliary",
    "is_detectable_pair", "pbh_detectable",
    "RiccatiConfig", "RiccatiSolution", "integrate_dre", "kalman_gain",
    "ObserverRealization", "SimulationResult", "synthesize", "simulate",
    "verify_relations", "decay_fit",
    "pinv_full_column_rank", "psd_check", "singular_value_extrema",
    "symmetrize_project_psd",
    "StrongObsError", "ContractError", "DomainError", "EvaluationError",
    "RankConditionError", "IntegrationError", "GainUnavailableError",
    "SynthesisUnavailableError", "SynthesisInconsistencyError",
    "SimulationError", "ConfigError",
]
