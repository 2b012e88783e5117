from dataclasses import dataclass, field
from typing import List, Tuple

import numpy as np

from domain.entities.fock import FockDims, Ket, Operator
from domain.exceptions import InvalidParamsError


@dataclass(frozen=True)
class ModelParams:
    k: int
    alpha: float
    kappa: float
    dims: FockDims

    def __post_init__(self):
        errors = []
        if self.k < 1:
            errors.append("k must be >= 1")
        if not self.kappa > 0:
            errors.append("kappa must be > 0")
        if isinstance(self.alpha, complex):
            errors.append("alpha must be real; reduce complex values with reduce_alpha()")
        if self.k >= 1 and self.dims.na <= self.k:
            errors.append(f"na must exceed k (na={self.dims.na}, k={self.k})")
        if self.dims.nb < 2:
            errors.append(f"nb must be >= 2 (nb={self.dims.nb})")
        if errors:
            raise InvalidParamsError("; ".join(errors), errors=errors)

    def with_kappa(self, kappa: float) -> "ModelParams":
        return ModelParams(self.k, self.alpha, kappa, self.dims)

    def with_dims(self, dims: FockDims) -> "ModelParams":
        return ModelParams(self.k, self.alpha, self.kappa, dims)


@dataclass(frozen=True, eq=False)
class KernelBasis:
    vectors: List[Ket]
    omega: complex
    construction: str  # "fock" or "cat"
    tail_masses: List[float] = field(default_factory=list)

    def matrix(self) -> np.ndarray:
        """Columns are the kernel vectors on mode a."""
        return np.column_stack([v.amplitudes for v in self.vectors])


@dataclass(frozen=True, eq=False)
class CatModel:
    params: ModelParams
    L: Operator
    H: Operator
    G: Operator
    lindblad_ops: List[Tuple[float, Operator]]
    kernel: KernelBasis
    drive: bool = True

    @property
    def dims(self) -> FockDims:
        return self.params.dims

    @property
    def b(self) -> Operator:
        return self.lindblad_ops[0][1]
