# pricing/errors.py
"""Exception hierarchy shared by the pricing library, the CLI and the API."""


class PricingError(Exception):
    """Base class for every failure raised by the pricing stack.

    ``code`` is the machine-readable identifier written into error records,
    ``status_code`` the HTTP status the API answers with.
    """

    code = "pricing_error"
    status_code = 422

    def __init__(self, message, log_message=None, status_code=None, **details):
        super().__init__(message)
        self.message = message
        self.log_message = log_message or message
        if status_code is not None:
            self.status_code = status_code
        self.details = details

    def to_record(self) -> dict:
        record = {"status": "error", "error": self.code, "message": self.message}
        if self.details:
            record["details"] = self.details
        return record


class ParameterError(PricingError):
    code = "invalid_parameters"
    status_code = 400


class ConfigError(PricingError):
    code = "invalid_config"
    status_code = 400


class RiccatiExplosionError(PricingError):
    code = "riccati_explosion"

    def __init__(self, message, blow_up_time, **details):
        super().__init__(message, blow_up_time=blow_up_time, **details)
        self.blow_up_time = blow_up_time


class DomainError(PricingError):
    code = "state_outside_domain"


class DegeneracyError(PricingError):
    code = "degenerate_denominator"


class UnsupportedNuError(PricingError):
    code = "unsupported_nu"


class ConsistencyError(PricingError):
    code = "consistency_check_failed"


class SeriesConvergenceError(PricingError):
    code = "series_not_converged"


class DegenerateParameterError(PricingError):
    code = "degenerate_parameter"


class CapabilityError(PricingError):
    code = "engine_unavailable"


class DegenerateVarianceError(PricingError):
    code = "degenerate_variance"


class ArbitrageBoundsError(PricingError):
    code = "arbitrage_bounds"

    def __init__(self, message, side, **details):
        super().__init__(message, side=side, **details)
        self.side = side


class ConvergenceError(PricingError):
    code = "not_converged"


class TruncationError(PricingError):
    code = "truncation_sensitive"


class SchemeError(PricingError):
    code = "scheme_domain_exit"


class NodeLimitError(PricingError):
    code = "node_limit_exceeded"
