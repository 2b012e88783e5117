from dataclasses import asdict, dataclass, field, is_dataclass
from typing import Any, Dict, List, Optional

import numpy as np

from domain.entities.fock import Operator
from domain.entities.model import ModelParams
from domain.exceptions import InvalidParamsError


def jsonable(value: Any) -> Any:
    """Convert report payloads (dataclasses, numpy values, complex) to plain JSON types."""
    if is_dataclass(value) and not isinstance(value, type):
        return {k: jsonable(v) for k, v in asdict(value).items()}
    if isinstance(value, Operator):
        return None
    if isinstance(value, dict):
        return {str(k): jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return jsonable(value.tolist())
    if isinstance(value, (np.bool_, bool)):
        return bool(value)
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (complex, np.complexfloating)):
        return {"re": float(value.real), "im": float(value.imag)}
    if isinstance(value, (np.floating,)):
        return float(value)
    return value


@dataclass
class CertificateReport:
    c1: float
    c2: float
    min_eig: float
    feasible: bool
    mu: float
    interior_margin: int
    candidates: List[Dict[str, float]] = field(default_factory=list)

    @property
    def bound(self) -> float:
        return self.c1 / self.c2 if self.c2 > 0 else float("inf")


@dataclass
class BlockReport:
    t: float
    kernel_block_defect: float
    off_diagonal_norm: float
    complement_min_eig: float
    spectrum_min: float
    spectrum_max: float
    absorption_min_eig: float
    interior_dims: List[int]

    @property
    def block_diagonal(self) -> bool:
        return self.kernel_block_defect <= 1e-7 and self.off_diagonal_norm <= 1e-7


@dataclass
class RecursionReport:
    t0: float
    delta: float
    epsilon: float
    masses: List[float]
    residuals: List[float]

    @property
    def holds(self) -> bool:
        return all(r >= -1e-9 for r in self.residuals)


@dataclass
class LimitEstimate:
    rho_inf: Operator
    final_mass: float
    distance: float
    off_manifold_mass: float
    cauchy_increments: List[float]
    trace_increments: List[float]


@dataclass(frozen=True)
class AdiabaticParams:
    kappa_tilde: float
    base: ModelParams

    def __post_init__(self):
        if abs(self.kappa_tilde * self.base.kappa - 4.0) > 1e-12:
            raise InvalidParamsError(
                f"kappa_tilde={self.kappa_tilde} is not 4/kappa for kappa={self.base.kappa}"
            )

    @classmethod
    def from_base(cls, base: ModelParams) -> "AdiabaticParams":
        return cls(kappa_tilde=4.0 / base.kappa, base=base)


@dataclass
class AdiabaticComparison:
    times: np.ndarray
    errors: np.ndarray
    buffer_excitation: np.ndarray

    @property
    def final_error(self) -> float:
        return float(self.errors[-1])


@dataclass
class SweepPoint:
    kappa: float
    t: float
    error: float
    buffer_excitation: float
    dt: float


@dataclass
class SweepResult:
    points: List[SweepPoint]
    slope: Optional[float]
    strictly_decreasing: bool
    monotone_within_slack: bool
    slope_threshold: float = -0.8

    @property
    def slope_below_threshold(self) -> bool:
        return self.slope is not None and self.slope <= self.slope_threshold


@dataclass
class SpanReport:
    """Interior rank of a generated span.

    class_ranks and predicted_class_ranks are filled for single-mode spans,
    one entry per residue class n mod k. The prediction min(vectors per class,
    class size) only counts the degree budget: with ELa a class reaches its
    full size once B + 1 >= class dimension, so an ELa deficit at alpha != 0
    means the budget is short, not that the span is confined.
    """
    target_dim: int
    achieved_rank: int
    residual_spectrum: List[float]
    degree_budget: int
    threshold: float
    stalled: bool = False
    variant: str = "joint"
    saturation: List[int] = field(default_factory=list)
    basis_size: int = 0
    reach_margin: int = 0
    class_ranks: List[int] = field(default_factory=list)
    predicted_class_ranks: List[int] = field(default_factory=list)

    @property
    def full_rank(self) -> bool:
        return self.achieved_rank == self.target_dim

    @property
    def matches_prediction(self) -> bool:
        return self.class_ranks == self.predicted_class_ranks


@dataclass
class TriangularReport:
    k: int
    interior_na: int
    coefficients: Dict[int, List[float]]
    residuals: Dict[int, float]
    leading: Dict[int, float]
