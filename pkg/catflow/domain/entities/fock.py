from dataclasses import dataclass
from enum import Enum

import numpy as np

from domain.exceptions import InvalidDimensionError


class Space(str, Enum):
    A = "A"
    B = "B"
    AB = "AB"


@dataclass(frozen=True)
class FockDims:
    na: int
    nb: int = 1

    def __post_init__(self):
        if self.na < 1 or self.nb < 1:
            raise InvalidDimensionError(f"Fock truncations must be >= 1, got ({self.na}, {self.nb})")

    @property
    def joint(self) -> int:
        return self.na * self.nb

    def size(self, space: Space) -> int:
        if space == Space.A:
            return self.na
        if space == Space.B:
            return self.nb
        return self.joint


def _frozen(values, dtype=complex) -> np.ndarray:
    array = np.array(values, dtype=dtype, copy=True)
    array.setflags(write=False)
    return array


@dataclass(frozen=True, eq=False)
class Ket:
    space: Space
    amplitudes: np.ndarray
    dims: FockDims
    tail_mass: float = 0.0
    truncation_warning: bool = False

    def __post_init__(self):
        object.__setattr__(self, "amplitudes", _frozen(self.amplitudes))
        if self.amplitudes.shape != (self.dims.size(self.space),):
            raise InvalidDimensionError(
                f"Ket on {self.space.value} needs {self.dims.size(self.space)} amplitudes, "
                f"got shape {self.amplitudes.shape}"
            )

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def normalize(self) -> "Ket":
        return Ket(self.space, self.amplitudes / self.norm(), self.dims, self.tail_mass, self.truncation_warning)

    def inner(self, other: "Ket") -> complex:
        return complex(np.vdot(self.amplitudes, other.amplitudes))

    def projector(self) -> "Operator":
        return Operator(self.space, np.outer(self.amplitudes, self.amplitudes.conj()), self.dims)


@dataclass(frozen=True, eq=False)
class Operator:
    space: Space
    entries: np.ndarray
    dims: FockDims

    def __post_init__(self):
        object.__setattr__(self, "entries", _frozen(self.entries))
        n = self.dims.size(self.space)
        if self.entries.shape != (n, n):
            raise InvalidDimensionError(
                f"Operator on {self.space.value} needs shape ({n}, {n}), got {self.entries.shape}"
            )

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    def adjoint(self) -> "Operator":
        return Operator(self.space, self.entries.conj().T, self.dims)

    def trace(self) -> complex:
        return complex(np.trace(self.entries))

    def expectation(self, rho: "Operator") -> complex:
        """Tr(rho X) without forming the product."""
        self._check_compatible(rho)
        return complex(np.sum(rho.entries * self.entries.T))

    def apply(self, ket: Ket) -> Ket:
        if ket.space != self.space or ket.dims.size(ket.space) != self.dim:
            raise InvalidDimensionError("Ket and operator live on different spaces")
        return Ket(self.space, self.entries @ ket.amplitudes, self.dims)

    def hermiticity_defect(self) -> float:
        return float(np.linalg.norm(self.entries - self.entries.conj().T))

    def _check_compatible(self, other: "Operator"):
        if other.space != self.space or other.entries.shape != self.entries.shape:
            raise InvalidDimensionError(
                f"Incompatible operators: {self.space.value}{self.entries.shape} vs "
                f"{other.space.value}{other.entries.shape}"
            )

    def __matmul__(self, other: "Operator") -> "Operator":
        self._check_compatible(other)
        return Operator(self.space, self.entries @ other.entries, self.dims)

    def __add__(self, other: "Operator") -> "Operator":
        self._check_compatible(other)
        return Operator(self.space, self.entries + other.entries, self.dims)

    def __sub__(self, other: "Operator") -> "Operator":
        self._check_compatible(other)
        return Operator(self.space, self.entries - other.entries, self.dims)

    def __mul__(self, scalar: complex) -> "Operator":
        return Operator(self.space, self.entries * scalar, self.dims)

    __rmul__ = __mul__

    def __neg__(self) -> "Operator":
        return Operator(self.space, -self.entries, self.dims)


# Density matrices are joint-space operators; the alias documents intent at call sites.
DensityMatrix = Operator
