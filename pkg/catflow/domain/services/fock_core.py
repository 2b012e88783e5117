"""Truncated Fock-space linear algebra.

Ladder operators are the exact matrices of the truncated basis, so
[a, a†] is the identity except on the top level. Identities that only hold
in infinite dimension are checked on interior blocks (see interior_indices).
"""
import logging
from typing import Optional, Sequence

import numpy as np
from scipy.linalg import expm, svdvals
from scipy.special import gammaln

from domain.entities.fock import FockDims, Ket, Operator, Space
from domain.exceptions import InvalidArgumentError, InvalidDimensionError

logger = logging.getLogger(__name__)


def _single_dims(n: int, space: Space) -> FockDims:
    if n < 1:
        raise InvalidDimensionError(f"Truncation must be >= 1, got {n}")
    return FockDims(na=n) if space == Space.A else FockDims(na=1, nb=n)


def annihilation(n: int, space: Space = Space.A) -> Operator:
    dims = _single_dims(n, space)
    entries = np.diag(np.sqrt(np.arange(1, n, dtype=float)), k=1).astype(complex)
    return Operator(space, entries, dims)


def creation(n: int, space: Space = Space.A) -> Operator:
    return annihilation(n, space).adjoint()


def number(n: int, space: Space = Space.A) -> Operator:
    dims = _single_dims(n, space)
    return Operator(space, np.diag(np.arange(n, dtype=complex)), dims)


def identity(n: int, space: Space = Space.A) -> Operator:
    return Operator(space, np.eye(n, dtype=complex), _single_dims(n, space))


def power(X: Operator, p: int) -> Operator:
    return Operator(X.space, np.linalg.matrix_power(X.entries, p), X.dims)


def tensor(A: Operator, B: Operator) -> Operator:
    if A.space != Space.A or B.space != Space.B:
        raise InvalidDimensionError(f"tensor expects (A, B) operators, got ({A.space.value}, {B.space.value})")
    dims = FockDims(na=A.dim, nb=B.dim)
    return Operator(Space.AB, np.kron(A.entries, B.entries), dims)


def embed_a(X: Operator, nb: int) -> Operator:
    return tensor(X, identity(nb, Space.B))


def embed_b(Y: Operator, na: int) -> Operator:
    return tensor(identity(na, Space.A), Y)


def basis_ket(n: int, level: int, space: Space = Space.A) -> Ket:
    dims = _single_dims(n, space)
    if not 0 <= level < n:
        raise InvalidDimensionError(f"Level {level} outside truncation {n}")
    amplitudes = np.zeros(n, dtype=complex)
    amplitudes[level] = 1.0
    return Ket(space, amplitudes, dims)


def tensor_ket(u: Ket, v: Ket) -> Ket:
    if u.space != Space.A or v.space != Space.B:
        raise InvalidDimensionError("tensor_ket expects an A ket and a B ket")
    dims = FockDims(na=len(u.amplitudes), nb=len(v.amplitudes))
    return Ket(Space.AB, np.kron(u.amplitudes, v.amplitudes), dims)


def vacuum_projector(nb: int) -> Operator:
    return basis_ket(nb, 0, Space.B).projector()


def coherent_amplitudes(z: complex, n: int) -> np.ndarray:
    """Unnormalized-by-truncation amplitudes e^{-|z|^2/2} z^m / sqrt(m!), m < n."""
    m = np.arange(n)
    log_mag = -0.5 * abs(z) ** 2 - 0.5 * gammaln(m + 1)
    if z == 0:
        amplitudes = np.zeros(n, dtype=complex)
        amplitudes[0] = 1.0
        return amplitudes
    log_mag = log_mag + m * np.log(abs(z))
    return np.exp(log_mag) * np.exp(1j * np.angle(z) * m)


def coherent_state(z: complex, n: int, tail_tolerance: Optional[float] = None) -> Ket:
    dims = _single_dims(n, Space.A)
    amplitudes = coherent_amplitudes(z, n)
    tail = max(0.0, 1.0 - float(np.sum(np.abs(amplitudes) ** 2)))
    warning = tail_tolerance is not None and tail > tail_tolerance
    if warning:
        logger.warning(f"Coherent state z={z} truncated at n={n} drops mass {tail:.3e}")
    amplitudes = amplitudes / np.linalg.norm(amplitudes)
    return Ket(Space.A, amplitudes, dims, tail_mass=tail, truncation_warning=warning)


def displacement(alpha: complex, n: int) -> Operator:
    """exp(alpha a† - conj(alpha) a) via scipy's scaling-and-squaring Padé expm."""
    a = annihilation(n).entries
    generator = alpha * a.conj().T - np.conj(alpha) * a
    return Operator(Space.A, expm(generator), _single_dims(n, Space.A))


def rotation(theta: float, n: int, space: Space = Space.A) -> Operator:
    return Operator(space, np.diag(np.exp(1j * theta * np.arange(n))), _single_dims(n, space))


def trace_norm(X: Operator) -> float:
    return float(np.sum(svdvals(X.entries)))


def hs_norm(X: Operator) -> float:
    return float(np.linalg.norm(X.entries))


def commutator(X: Operator, Y: Operator) -> Operator:
    return X @ Y - Y @ X


def iterated_commutator(X: Operator, Y: Operator, s: int) -> Operator:
    """[X, Y]^(s): s-fold right commutator with Y."""
    if s < 1:
        raise InvalidArgumentError(f"Iterated commutator order must be >= 1, got {s}")
    result = commutator(X, Y)
    for _ in range(s - 1):
        result = commutator(result, Y)
    return result


def interior_indices(dims: FockDims, a_limit: int, b_limit: Optional[int] = None, space: Space = Space.AB) -> np.ndarray:
    """Basis indices with a-level < a_limit (and b-level < b_limit on AB)."""
    if space == Space.A:
        return np.arange(min(a_limit, dims.na))
    b_limit = dims.nb if b_limit is None else b_limit
    if a_limit < 1 or b_limit < 1:
        raise InvalidDimensionError(f"Empty interior ({a_limit}, {b_limit}) for dims ({dims.na}, {dims.nb})")
    return np.array([i * dims.nb + j for i in range(min(a_limit, dims.na)) for j in range(min(b_limit, dims.nb))])


def compress(X: Operator, indices: Sequence[int]) -> np.ndarray:
    idx = np.asarray(indices)
    return X.entries[np.ix_(idx, idx)]


def top_band_projector(dims: FockDims, a_band: int, space: Space = Space.AB) -> Operator:
    """Projector on the top a_band levels of mode a, plus the top level of mode b on AB."""
    na_levels = np.arange(dims.na) >= dims.na - a_band
    if space == Space.A:
        return Operator(Space.A, np.diag(na_levels.astype(complex)), FockDims(na=dims.na))
    nb_levels = np.arange(dims.nb) == dims.nb - 1
    mask = np.logical_or.outer(na_levels, nb_levels).ravel()
    return Operator(Space.AB, np.diag(mask.astype(complex)), dims)
