import logging
from typing import Dict, List, Tuple

import numpy as np
from scipy.special import comb, factorial

from domain.entities.fock import FockDims, Ket, Operator, Space
from domain.entities.model import CatModel, KernelBasis, ModelParams
from domain.exceptions import InvalidParamsError, TruncationTooSmallError
from domain.services import fock_core as fc

logger = logging.getLogger(__name__)

# beyond this the truncation misses most of the cat and the Gram check is meaningless
MAX_COHERENT_TAIL = 0.5


def reduce_alpha(alpha: complex) -> Tuple[float, float]:
    """Split alpha = |alpha| e^{i theta}; the model is built with |alpha|."""
    return float(abs(alpha)), float(np.angle(alpha))


def lindblad_operator(k: int, alpha: complex, n: int) -> Operator:
    a = fc.annihilation(n)
    return fc.power(a, k) - fc.identity(n) * (alpha ** k)


def phase_rotation(dims: FockDims, k: int, theta: float) -> Operator:
    """V = exp(i theta (a†a + k b†b)); maps the |alpha| model to alpha = |alpha| e^{i theta}: H_alpha = V H V†."""
    return fc.tensor(fc.rotation(theta, dims.na), fc.rotation(k * theta, dims.nb, Space.B))


def _hamiltonian(L: Operator, dims: FockDims) -> Operator:
    b = fc.annihilation(dims.nb, Space.B)
    return fc.tensor(L, b.adjoint()) + fc.tensor(L.adjoint(), b)


def kernel_basis(params: ModelParams) -> KernelBasis:
    k, alpha, na = params.k, params.alpha, params.dims.na
    omega = complex(np.exp(2j * np.pi / k))

    if alpha == 0:
        vectors = [fc.basis_ket(na, r) for r in range(k)]
        return KernelBasis(vectors=vectors, omega=omega, construction="fock", tail_masses=[0.0] * k)

    coherents = [fc.coherent_state(alpha * omega ** j, na) for j in range(k)]
    if coherents[0].tail_mass > MAX_COHERENT_TAIL:
        raise TruncationTooSmallError(
            f"na={na} keeps only {1 - coherents[0].tail_mass:.3f} of |alpha> at alpha={alpha}",
            tail_mass=coherents[0].tail_mass,
        )
    levels = np.arange(na)
    vectors, tails = [], []
    for r in range(k):
        raw = sum(omega ** (r * j) * coherents[j].amplitudes for j in range(k))
        # psi^r lives on n = -r mod k; zero the rest so classes are exactly orthogonal
        raw = np.where(levels % k == (-r) % k, raw, 0.0)
        norm = np.linalg.norm(raw)
        if norm == 0:
            raise TruncationTooSmallError(f"Kernel vector r={r} vanishes at na={na}")
        vectors.append(Ket(Space.A, raw / norm, FockDims(na=na), tail_mass=coherents[0].tail_mass))
        tails.append(coherents[0].tail_mass)

    basis = KernelBasis(vectors=vectors, omega=omega, construction="cat", tail_masses=tails)
    gram = basis.matrix().conj().T @ basis.matrix()
    defect = float(np.abs(gram - np.eye(k)).max())
    if defect > 1e-8:
        raise TruncationTooSmallError(f"Kernel Gram defect {defect:.2e} at na={na}", defect=defect)
    return basis


def build_model(params: ModelParams, drive: bool = True) -> CatModel:
    dims = params.dims
    if dims.na <= params.k:
        raise InvalidParamsError(f"na={dims.na} must exceed k={params.k}")

    L = lindblad_operator(params.k, params.alpha, dims.na)
    b = fc.annihilation(dims.nb, Space.B)
    b_joint = fc.embed_b(b, dims.na)
    nb_joint = fc.embed_b(fc.number(dims.nb, Space.B), dims.na)

    if drive:
        H = _hamiltonian(L, dims)
    else:
        H = Operator(Space.AB, np.zeros((dims.joint, dims.joint)), dims)

    G = H * (-1j) - nb_joint * (params.kappa / 2)
    model = CatModel(
        params=params,
        L=L,
        H=H,
        G=G,
        lindblad_ops=[(params.kappa, b_joint)],
        kernel=kernel_basis(params),
        drive=drive,
    )
    logger.debug(f"Built model k={params.k} alpha={params.alpha} kappa={params.kappa} dims=({dims.na},{dims.nb})")
    return model


def lindbladian_apply(model: CatModel, rho: Operator) -> Operator:
    H = model.H
    result = (H @ rho - rho @ H) * (-1j)
    for rate, J in model.lindblad_ops:
        Jd = J.adjoint()
        JdJ = Jd @ J
        result = result + (J @ rho @ Jd - (JdJ @ rho) * 0.5 - (rho @ JdJ) * 0.5) * rate
    return result


def adjoint_lindbladian_apply(model: CatModel, X: Operator) -> Operator:
    H = model.H
    result = (H @ X - X @ H) * 1j
    for rate, J in model.lindblad_ops:
        Jd = J.adjoint()
        JdJ = Jd @ J
        result = result + (Jd @ X @ J - (JdJ @ X) * 0.5 - (X @ JdJ) * 0.5) * rate
    return result


def hs_pairing(X: Operator, Y: Operator) -> complex:
    """Hilbert-Schmidt pairing <<X, Y>> = Tr(X† Y)."""
    return complex(np.vdot(X.entries, Y.entries))


def embedded_kernel(model: CatModel) -> np.ndarray:
    """Columns |psi_L^r> (x) |0>, joint-space coordinates."""
    vac = np.zeros(model.dims.nb, dtype=complex)
    vac[0] = 1.0
    return np.column_stack([np.kron(v.amplitudes, vac) for v in model.kernel.vectors])


def projector_HL(model: CatModel) -> Operator:
    Q = embedded_kernel(model)
    return Operator(Space.AB, Q @ Q.conj().T, model.dims)


def kernel_residuals(model: CatModel) -> List[Dict[str, float]]:
    """||L psi^r|| against the bound 10 |alpha|^k sqrt(top-band mass)."""
    k, alpha, na = model.params.k, model.params.alpha, model.dims.na
    rows = []
    for r, v in enumerate(model.kernel.vectors):
        residual = np.linalg.norm(model.L.entries @ v.amplitudes)
        top_mass = float(np.sum(np.abs(v.amplitudes[na - k:]) ** 2))
        bound = 10 * abs(alpha) ** k * np.sqrt(top_mass) + 1e-12
        rows.append({"r": r, "residual": float(residual), "bound": float(bound), "ok": bool(residual <= bound)})
    return rows


def rotation_eigen_residuals(model: CatModel) -> List[float]:
    """||R_{2pi/k} psi^r - omega^{-r} psi^r|| per kernel vector."""
    k, na = model.params.k, model.dims.na
    R = fc.rotation(2 * np.pi / k, na).entries
    omega = model.kernel.omega
    return [
        float(np.linalg.norm(R @ v.amplitudes - omega ** (-r) * v.amplitudes))
        for r, v in enumerate(model.kernel.vectors)
    ]


def leibniz_expansion(k: int, n: int) -> Operator:
    """Sum_{r<k} C(k,r) k!/r! a†^r a^r, the normal-ordered form of [a^k, a†^k]."""
    a = fc.annihilation(n)
    ad = a.adjoint()
    total = Operator(Space.A, np.zeros((n, n)), FockDims(na=n))
    for r in range(k):
        coeff = comb(k, r, exact=True) * factorial(k, exact=True) / factorial(r, exact=True)
        total = total + (fc.power(ad, r) @ fc.power(a, r)) * coeff
    return total


def commutator_identity_residuals(model: CatModel, margin: int = None) -> Dict[str, float]:
    """Interior residuals of the ladder identities used by the density argument.

    Interior: a-level < na - margin (default 2k) and b-level < nb - 1.
    """
    params, dims = model.params, model.dims
    k = params.k
    margin = 2 * k if margin is None else margin
    joint_idx = fc.interior_indices(dims, dims.na - margin, dims.nb - 1)
    a_idx = fc.interior_indices(dims, dims.na - margin, space=Space.A)

    b = model.b
    bd = b.adjoint()
    Gd = model.G.adjoint()
    L_joint = fc.embed_a(model.L, dims.nb)
    Ld_joint = L_joint.adjoint()
    LLd = fc.commutator(model.L, model.L.adjoint())

    residuals = {}
    lhs = fc.commutator(Gd, bd) * (-1j) - bd * (1j * params.kappa / 2)
    residuals["g_dagger_b_dagger"] = float(np.linalg.norm(fc.compress(lhs - Ld_joint, joint_idx)))

    lhs = fc.commutator(Gd, Ld_joint) * (-1j)
    rhs = fc.embed_a(LLd, dims.nb) @ bd
    residuals["g_dagger_l_dagger"] = float(np.linalg.norm(fc.compress(lhs - rhs, joint_idx)))

    if params.alpha == 0:
        excitation = fc.embed_a(fc.number(dims.na), dims.nb) * (1.0 / k) + bd @ b
        residuals["alpha0_conservation"] = float(
            np.linalg.norm(fc.compress(fc.commutator(model.H, excitation), joint_idx))
        )

    a = fc.annihilation(dims.na)
    ak = fc.power(a, k)
    leibniz = fc.commutator(ak, ak.adjoint()) - leibniz_expansion(k, dims.na)
    residuals["leibniz"] = float(np.linalg.norm(fc.compress(leibniz, a_idx)))
    return residuals
