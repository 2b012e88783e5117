from dataclasses import dataclass, field
from typing import List

import numpy as np

from domain.exceptions import InvalidDimensionError


@dataclass(frozen=True, eq=False)
class EntireCoeffs:
    coeffs: np.ndarray
    truncation: int

    def __post_init__(self):
        array = np.array(self.coeffs, dtype=complex, copy=True)
        array.setflags(write=False)
        object.__setattr__(self, "coeffs", array)
        if array.shape != (self.truncation,):
            raise InvalidDimensionError(f"Expected {self.truncation} coefficients, got {array.shape}")

    def __add__(self, other: "EntireCoeffs") -> "EntireCoeffs":
        if other.truncation != self.truncation:
            raise InvalidDimensionError("Coefficient sequences have different truncations")
        return EntireCoeffs(self.coeffs + other.coeffs, self.truncation)


@dataclass
class Evaluation:
    value: complex
    kernel_value: complex
    tail_estimate: float
    reliable: bool


@dataclass
class WitnessReport:
    family: str
    ambient_dim: int
    span_dim: int
    expected_complement_dim: int
    complement_dim: int
    principal_angles: List[float]
    singular_values: List[float]
    threshold: float
    tail_mass: float
    zeros: List[complex] = field(default_factory=list)

    @property
    def max_angle(self) -> float:
        return max(self.principal_angles) if self.principal_angles else 0.0

    @property
    def passed(self) -> bool:
        return self.complement_dim == self.expected_complement_dim
