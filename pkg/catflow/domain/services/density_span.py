"""Numerical rank of the Krylov-type spans behind the density hypothesis.

Spans are grown breadth-first in the full truncated space and only then
restricted to an interior block, whose components are uncorrupted by the
cutoff up to the recorded reach margin.
"""
import logging
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy.linalg import lstsq, svdvals

from domain.entities.fock import FockDims
from domain.entities.model import CatModel, ModelParams
from domain.entities.reports import SpanReport, TriangularReport
from domain.exceptions import InvalidArgumentError, StructureViolationError
from domain.services import fock_core as fc
from domain.services.cat_model import embedded_kernel, kernel_basis, lindblad_operator

logger = logging.getLogger(__name__)

DEFAULT_THRESHOLD = 1e-8
VARIANTS = ("ELa", "ELa_plus_ELsharp")


def _orthogonalize(w: np.ndarray, basis: List[np.ndarray]) -> np.ndarray:
    # modified Gram-Schmidt, two passes
    for _ in range(2):
        for q in basis:
            w = w - np.vdot(q, w) * q
    return w


def _add_if_new(w: np.ndarray, basis: List[np.ndarray], threshold: float) -> Optional[np.ndarray]:
    norm = np.linalg.norm(w)
    if norm == 0 or not np.isfinite(norm):
        return None
    w = _orthogonalize(w / norm, basis)
    residual = np.linalg.norm(w)
    if residual <= threshold:
        return None
    w = w / residual
    basis.append(w)
    return w


def _projected_rank(basis: List[np.ndarray], rows: np.ndarray, target_dim: int, threshold: float) -> Tuple[int, List[float]]:
    if not basis:
        return 0, [0.0] * target_dim
    M = np.column_stack(basis)[rows, :]
    s = svdvals(M)
    rank = int(np.sum(s > threshold * s.max())) if s.size and s.max() > 0 else 0
    spectrum = sorted(s.tolist(), reverse=True)[:target_dim]
    spectrum += [0.0] * (target_dim - len(spectrum))
    return min(rank, target_dim), spectrum


def generate_joint_span(model: CatModel, degree_budget: int, interior: FockDims,
                        threshold: float = DEFAULT_THRESHOLD) -> SpanReport:
    k, dims = model.params.k, model.dims
    if dims.na - interior.na < 2 * k or dims.nb - interior.nb < 2:
        raise InvalidArgumentError(
            f"Interior ({interior.na},{interior.nb}) needs margins >= ({2 * k}, 2) inside ({dims.na},{dims.nb})"
        )
    if degree_budget < 0:
        raise InvalidArgumentError("degree_budget must be >= 0")

    rows = fc.interior_indices(dims, interior.na, interior.nb)
    target = len(rows)
    ops = [model.G.adjoint().entries, model.b.adjoint().entries]

    basis: List[np.ndarray] = []
    frontier = [w for w in (_add_if_new(q, basis, threshold) for q in embedded_kernel(model).T) if w is not None]
    rank, spectrum = _projected_rank(basis, rows, target, threshold)
    saturation = [rank]

    for degree in range(1, degree_budget + 1):
        if rank == target or not frontier:
            break
        new_frontier = []
        for v in frontier:
            for op in ops:
                w = _add_if_new(op @ v, basis, threshold)
                if w is not None:
                    new_frontier.append(w)
        frontier = new_frontier
        rank, spectrum = _projected_rank(basis, rows, target, threshold)
        saturation.append(rank)
        logger.debug(f"degree {degree}: basis {len(basis)}, interior rank {rank}/{target}")

    stalled = rank < target and (not frontier or (len(saturation) >= 4 and len(set(saturation[-4:])) == 1))
    if rank < target:
        logger.warning(f"Joint span reached rank {rank}/{target} (budget {degree_budget}, stalled={stalled})")
    return SpanReport(
        target_dim=target,
        achieved_rank=rank,
        residual_spectrum=spectrum,
        degree_budget=degree_budget,
        threshold=threshold,
        stalled=stalled,
        variant="joint",
        saturation=saturation,
        basis_size=len(basis),
        reach_margin=2 * k,
    )


def _class_rows(interior_na: int, k: int) -> List[np.ndarray]:
    levels = np.arange(interior_na)
    return [levels[levels % k == c] for c in range(k)]


def span_single_mode(params: ModelParams, variant: str, degree_budget: int, interior_na: int,
                     threshold: float = DEFAULT_THRESHOLD) -> SpanReport:
    """Rank of span{L†^j v} (ELa) or additionally L†^j [L,L†]^(s) v, s < k, on levels < interior_na.

    Every generated vector stays in the residue class of its seed, so ranks
    are measured per class and compared with min(vectors per class, class size):
    B+1 vectors per class for ELa, k(B+1) with the sharp commutators. ELa thus
    fills a class once B+1 reaches its dimension.
    """
    if variant not in VARIANTS:
        raise InvalidArgumentError(f"Unknown variant {variant!r}; expected one of {VARIANTS}")
    k, na = params.k, params.dims.na
    if interior_na > na - 2 * k:
        raise InvalidArgumentError(f"interior_na={interior_na} must be <= na - 2k = {na - 2 * k}")

    L = lindblad_operator(k, params.alpha, na)
    Ld = L.adjoint().entries
    seeds = [v.amplitudes for v in kernel_basis(params).vectors]
    generators = [np.eye(na)]
    if variant == "ELa_plus_ELsharp":
        generators += [fc.iterated_commutator(L, L.adjoint(), s).entries for s in range(1, k)]

    basis: List[np.ndarray] = []
    for seed in seeds:
        for C in generators:
            w = C @ seed
            for _ in range(degree_budget + 1):
                _add_if_new(w, basis, threshold)
                w = Ld @ w

    rows = np.arange(interior_na)
    rank, spectrum = _projected_rank(basis, rows, interior_na, threshold)

    per_class = len(generators) * (degree_budget + 1)
    levels = np.arange(na)
    class_ranks, predicted = [], []
    for c, class_rows in enumerate(_class_rows(interior_na, k)):
        members = [q for q in basis if not np.any(q[levels % k != c])]
        class_rank, _ = _projected_rank(members, class_rows, len(class_rows), threshold)
        class_ranks.append(class_rank)
        predicted.append(min(per_class, len(class_rows)))

    return SpanReport(
        target_dim=interior_na,
        achieved_rank=rank,
        residual_spectrum=spectrum,
        degree_budget=degree_budget,
        threshold=threshold,
        stalled=False,
        variant=variant,
        basis_size=len(basis),
        reach_margin=k * (k - 1) if variant == "ELa_plus_ELsharp" else 0,
        class_ranks=class_ranks,
        predicted_class_ranks=predicted,
    )


def triangular_structure_check(params: ModelParams, interior_na: Optional[int] = None,
                               orders: Optional[Sequence[int]] = None, tolerance: float = 1e-8) -> TriangularReport:
    """Fit [L,L†]^(s) onto a†^{k(s-1)} a†^r a^r, r <= k-s, on columns < interior_na."""
    k, na = params.k, params.dims.na
    orders = list(range(1, k + 1)) if orders is None else list(orders)
    interior_na = na - k * max(orders) if interior_na is None else interior_na
    if interior_na < 1 or interior_na > na - k * max(orders):
        raise InvalidArgumentError(f"interior_na={interior_na} must lie in [1, {na - k * max(orders)}]")

    L = lindblad_operator(k, params.alpha, na)
    a = fc.annihilation(na)
    ad = a.adjoint()
    cols = np.arange(interior_na)

    coefficients, residuals, leading = {}, {}, {}
    for s in orders:
        target = fc.iterated_commutator(L, L.adjoint(), s).entries[:, cols]
        top = max(k - s, 0)
        shift = fc.power(ad, k * (s - 1))
        basis = [(shift @ fc.power(ad, r) @ fc.power(a, r)).entries[:, cols] for r in range(top + 1)]
        A = np.column_stack([B.ravel() for B in basis])
        c, *_ = lstsq(A, target.ravel())
        fit = (A @ c).reshape(target.shape)
        scale = max(np.linalg.norm(target), 1.0)
        residual = float(np.linalg.norm(target - fit) / scale)
        coefficients[s] = [float(x.real) for x in c]
        residuals[s] = residual
        leading[s] = float(c[-1].real)
        if residual > tolerance:
            raise StructureViolationError(
                f"[L,L†]^({s}) leaves relative residual {residual:.2e} outside the normal-ordered basis",
                s=s, residual=residual,
            )
        if abs(c[-1]) <= tolerance:
            raise StructureViolationError(f"Leading coefficient of [L,L†]^({s}) vanishes", s=s)
    return TriangularReport(k=k, interior_na=interior_na, coefficients=coefficients, residuals=residuals, leading=leading)
