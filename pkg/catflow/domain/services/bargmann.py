"""Bargmann-Fock representation: a ket u maps to f(z) = sum c_m z^m with c_m = u_m / sqrt(m!).

Under the map a acts as d/dz and a† as multiplication by z; the pairing
<f, g> = sum m! conj(c_m) d_m is the Fock inner product of the kets.
"""
import logging
from typing import List, Sequence, Tuple

import numpy as np
from scipy.linalg import qr, subspace_angles
from scipy.special import gammaln

from domain.entities.bargmann import EntireCoeffs, Evaluation, WitnessReport
from domain.entities.fock import FockDims, Ket, Space
from domain.entities.model import ModelParams
from domain.exceptions import InvalidArgumentError, InvalidDimensionError

logger = logging.getLogger(__name__)

MAX_TRUNCATION = 170


def _sqrt_factorials(n: int) -> np.ndarray:
    if n > MAX_TRUNCATION:
        raise InvalidDimensionError(f"Truncation {n} exceeds {MAX_TRUNCATION} (factorial overflow)")
    return np.exp(0.5 * gammaln(np.arange(n) + 1))


def to_bargmann(ket: Ket) -> EntireCoeffs:
    if ket.space != Space.A:
        raise InvalidArgumentError("to_bargmann expects a single-mode ket")
    n = len(ket.amplitudes)
    return EntireCoeffs(ket.amplitudes / _sqrt_factorials(n), n)


def from_bargmann(f: EntireCoeffs) -> Ket:
    return Ket(Space.A, f.coeffs * _sqrt_factorials(f.truncation), FockDims(na=f.truncation))


def f2_inner(f: EntireCoeffs, g: EntireCoeffs) -> complex:
    return from_bargmann(f).inner(from_bargmann(g))


def multiply_by_z(f: EntireCoeffs) -> EntireCoeffs:
    """z f, dropping the coefficient pushed past the truncation."""
    return EntireCoeffs(np.concatenate([[0.0], f.coeffs[:-1]]), f.truncation)


def derivative(f: EntireCoeffs, order: int = 1) -> EntireCoeffs:
    coeffs = np.array(f.coeffs)
    for _ in range(order):
        coeffs = np.concatenate([coeffs[1:] * np.arange(1, len(coeffs)), [0.0]])
    return EntireCoeffs(coeffs, f.truncation)


def exponential_coeffs(lam: complex, n: int) -> np.ndarray:
    coeffs = np.zeros(n, dtype=complex)
    coeffs[0] = 1.0
    for m in range(1, n):
        coeffs[m] = coeffs[m - 1] * lam / m
    return coeffs


def exponential_polynomial(prefactor: Sequence[complex], lam: complex, n: int) -> EntireCoeffs:
    """Q(z) e^{lam z}; prefactor lists Q's coefficients from the constant term up."""
    product = np.convolve(np.asarray(prefactor, dtype=complex), exponential_coeffs(lam, n))
    return EntireCoeffs(product[:n], n)


def _tail_estimate(f: EntireCoeffs, beta: complex, terms: int = 3) -> float:
    m = np.arange(f.truncation)
    magnitudes = np.abs(f.coeffs) * np.abs(beta) ** m
    return float(np.sum(magnitudes[-terms:]))


def _kernel_pairing(f: EntireCoeffs, beta: complex, order: int = 0) -> complex:
    """<z^j e^{conj(beta) z}, f> in F^2; equals f^{(j)}(beta)."""
    kernel = multiply_by_z_power(exponential_coeffs(np.conj(beta), f.truncation), order)
    return f2_inner(EntireCoeffs(kernel, f.truncation), f)


def multiply_by_z_power(coeffs: np.ndarray, power: int) -> np.ndarray:
    if power == 0:
        return coeffs
    return np.concatenate([np.zeros(power, dtype=complex), coeffs[:-power]])


def eval_entire(f: EntireCoeffs, beta: complex, tail_tolerance: float = 1e-10) -> Evaluation:
    value = complex(np.polynomial.polynomial.polyval(beta, f.coeffs))
    tail = _tail_estimate(f, beta)
    reliable = tail <= tail_tolerance
    if not reliable:
        logger.warning(f"Evaluation at beta={beta} unreliable: tail estimate {tail:.2e}")
    return Evaluation(value=value, kernel_value=_kernel_pairing(f, beta), tail_estimate=tail, reliable=reliable)


def eval_derivative(f: EntireCoeffs, beta: complex, order: int) -> Tuple[complex, complex]:
    """(direct, kernel) evaluations of the order-th derivative at beta."""
    if order < 0:
        raise InvalidArgumentError(f"Derivative order must be >= 0, got {order}")
    direct = complex(np.polynomial.polynomial.polyval(beta, derivative(f, order).coeffs))
    return direct, _kernel_pairing(f, beta, order)


def _normalized_kets(coeff_rows: List[np.ndarray]) -> np.ndarray:
    scale = _sqrt_factorials(len(coeff_rows[0]))
    kets = np.column_stack([c * scale for c in coeff_rows])
    return kets / np.linalg.norm(kets, axis=0)


def _witness_family(family: str, k: int, alpha: float, zero_order: int) -> Tuple[np.ndarray, List[Tuple[complex, int]]]:
    """Prefactor Q (constant term first) and its zeros with multiplicities."""
    if family == "exp":
        return np.array([1.0], dtype=complex), []
    if family != "cat":
        raise InvalidArgumentError(f"Unknown witness family {family!r}; expected 'exp' or 'cat'")
    q = np.zeros(zero_order + k + 1, dtype=complex)
    q[zero_order] = -alpha ** k
    q[zero_order + k] = 1.0
    zeros = [(alpha * np.exp(2j * np.pi * r / k), 1) for r in range(k)]
    if zero_order:
        zeros.append((0.0, zero_order))
    return q, zeros


def newman_shapiro_witness(params: ModelParams, interior_na: int, family: str = "cat",
                           zero_order: int = 0, threshold: float = 1e-8) -> WitnessReport:
    """Complement of span{z^j f} inside span{z^j e^{alpha z} : j < interior_na}, f = Q(z) e^{alpha z}.

    The complement has dimension deg Q and is spanned by the projections of
    z^i e^{conj(lam) z}, i < multiplicity, over the zeros lam of Q.
    """
    k, alpha, n = params.k, params.alpha, params.dims.na
    prefactor, zeros = _witness_family(family, k, alpha, zero_order)
    degree = len(prefactor) - 1
    if interior_na <= degree:
        raise InvalidArgumentError(f"interior_na={interior_na} must exceed deg Q = {degree}")
    if n < interior_na + 20:
        raise InvalidArgumentError(f"Truncation na={n} must be at least interior_na + 20 = {interior_na + 20}")

    exp_alpha = exponential_coeffs(alpha, n)
    ambient = _normalized_kets([multiply_by_z_power(exp_alpha, j) for j in range(interior_na)])
    f = exponential_polynomial(prefactor, alpha, n).coeffs
    span = _normalized_kets([multiply_by_z_power(f, j) for j in range(interior_na - degree)])

    Q_x, _ = qr(ambient, mode="economic")
    coords = Q_x.conj().T @ span
    U, s, _ = np.linalg.svd(coords)
    rank = int(np.sum(s > threshold * s.max()))
    complement = Q_x @ U[:, rank:]

    directions = []
    for lam, multiplicity in zeros:
        for i in range(multiplicity):
            directions.append(multiply_by_z_power(exponential_coeffs(np.conj(lam), n), i))
    angles: List[float] = []
    if directions and complement.shape[1]:
        predicted = _normalized_kets(directions)
        predicted = Q_x @ (Q_x.conj().T @ predicted)
        angles = subspace_angles(complement, predicted).tolist()

    last = ambient[:, -1]
    tail = float(np.sum(np.abs(last[-10:]) ** 2))
    report = WitnessReport(
        family=family,
        ambient_dim=interior_na,
        span_dim=rank,
        expected_complement_dim=degree,
        complement_dim=interior_na - rank,
        principal_angles=angles,
        singular_values=s.tolist(),
        threshold=threshold,
        tail_mass=tail,
        zeros=[complex(lam) for lam, _ in zeros],
    )
    if not report.passed:
        logger.warning(f"Witness complement dimension {report.complement_dim} != expected {degree}")
    return report
