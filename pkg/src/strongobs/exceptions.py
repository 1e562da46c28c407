"""Exception hierarchy for strongobs."""


class StrongObsError(Exception):
    """Base class for all errors raised by this package."""


class ContractError(StrongObsError, ValueError):
    """Inputs violate a documented precondition (shapes, symmetry, config)."""


class DomainError(StrongObsError, ValueError):
    """A signal was evaluated outside its time domain."""


class EvaluationError(StrongObsError, ArithmeticError):
    """A signal produced non-finite values."""

    def __init__(self, message, t=None):
        super().__init__(message)
        self.t = t


class RankConditionError(StrongObsError, ValueError):
    """Gamma^T Gamma fell below the configured gamma floor."""

    def __init__(self, message, min_eigenvalue=None, t=None):
        super().__init__(message)
        self.min_eigenvalue = min_eigenvalue
        self.t = t


class IntegrationError(StrongObsError, ArithmeticError):
    """Fixed-step integration produced non-finite values."""

    def __init__(self, message, t=None):
        super().__init__(message)
        self.t = t


class GainUnavailableError(StrongObsError):
    """Gain requested from a Riccati solution that is not bounded."""


class SynthesisUnavailableError(StrongObsError):
    """No strong observer can be assembled (Riccati solution not bounded)."""


class SynthesisInconsistencyError(StrongObsError):
    """Assembled observer violates a decoupling relation beyond tolerance."""

    def __init__(self, message, relation=None, residual=None, t=None):
        super().__init__(message)
        self.relation = relation
        self.residual = residual
        self.t = t


class SimulationError(StrongObsError, ArithmeticError):
    """Co-simulation diverged (non-finite plant state or estimation error)."""

    def __init__(self, message, t=None):
        super().__init__(message)
        self.t = t


class ConfigError(StrongObsError, ValueError):
    """Malformed system/benchmark configuration."""
