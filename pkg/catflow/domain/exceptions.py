from typing import Any, Dict, List, Optional


class CatflowError(Exception):
    kind = "catflow_error"

    def __init__(self, message: str, **details: Any):
        super().__init__(message)
        self.message = message
        self.details = details

    def to_dict(self) -> Dict[str, Any]:
        return {"error": self.kind, "message": self.message, **self.details}


class InvalidDimensionError(CatflowError, ValueError):
    kind = "invalid_dimension"


class InvalidArgumentError(CatflowError, ValueError):
    kind = "invalid_argument"


class InvalidParamsError(CatflowError, ValueError):
    kind = "invalid_params"


class TruncationTooSmallError(CatflowError):
    kind = "truncation_too_small"


class IntegrationDivergedError(CatflowError):
    kind = "integration_diverged"

    def __init__(self, step: int, time: float, dt: float):
        super().__init__(
            f"Non-finite state at step {step} (t={time:.6g}, dt={dt:.3g})",
            step=step, time=time, dt=dt,
        )


class TruncationBreachError(CatflowError):
    kind = "truncation_breach"

    def __init__(self, time: float, leakage: float, ceiling: float):
        super().__init__(
            f"Top-band leakage {leakage:.3e} exceeds {ceiling:.1e} at t={time:.6g}; "
            "increase na/nb",
            time=time, leakage=leakage, ceiling=ceiling,
        )


class OracleTooLargeError(CatflowError):
    kind = "oracle_too_large"


class NotConvergedError(CatflowError):
    kind = "not_converged"

    def __init__(self, final_mass: float, threshold: float):
        super().__init__(
            f"Final mass on H_L {final_mass:.6f} is below {threshold}",
            final_mass=final_mass, threshold=threshold,
        )


class StructureViolationError(CatflowError):
    kind = "structure_violation"


class GridMismatchError(CatflowError):
    kind = "grid_mismatch"


class ConfigValidationError(CatflowError):
    kind = "config_invalid"

    def __init__(self, errors: List[str], message: Optional[str] = None):
        super().__init__(message or f"{len(errors)} configuration error(s)", errors=errors)
        self.errors = errors
