import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from domain.entities.fock import FockDims, Operator, Space
from domain.entities.model import ModelParams
from domain.exceptions import InvalidParamsError, TruncationTooSmallError
from domain.services import fock_core as fc
from domain.services.cat_model import (
    adjoint_lindbladian_apply,
    build_model,
    commutator_identity_residuals,
    embedded_kernel,
    hs_pairing,
    kernel_basis,
    kernel_residuals,
    lindbladian_apply,
    phase_rotation,
    projector_HL,
    reduce_alpha,
    rotation_eigen_residuals,
)


def params(k=2, alpha=0.7, kappa=2.0, na=20, nb=4):
    return ModelParams(k=k, alpha=alpha, kappa=kappa, dims=FockDims(na=na, nb=nb))


def random_density(n, rng):
    X = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    rho = X @ X.conj().T
    return rho / np.trace(rho)


@pytest.mark.parametrize("kwargs", [
    {"k": 0},
    {"kappa": 0.0},
    {"kappa": -1.0},
    {"na": 2, "k": 2},
    {"nb": 1},
])
def test_invalid_params_rejected(kwargs):
    with pytest.raises(InvalidParamsError):
        params(**kwargs)


def test_invalid_params_collects_every_error():
    with pytest.raises(InvalidParamsError) as exc:
        ModelParams(k=0, alpha=0.0, kappa=-1.0, dims=FockDims(na=4, nb=1))
    assert len(exc.value.details["errors"]) == 3


def test_complex_alpha_must_be_reduced():
    with pytest.raises(InvalidParamsError):
        params(alpha=0.5 + 0.5j)
    magnitude, theta = reduce_alpha(0.5j)
    assert magnitude == pytest.approx(0.5)
    assert theta == pytest.approx(np.pi / 2)


@pytest.mark.parametrize("k,alpha", [(1, 0.0), (2, 0.0), (1, 0.5), (2, 0.7), (3, 0.6)])
def test_kernel_basis_is_orthonormal_and_annihilated(k, alpha):
    model = build_model(params(k=k, alpha=alpha, na=30))
    Q = model.kernel.matrix()
    assert np.allclose(Q.conj().T @ Q, np.eye(k), atol=1e-10)
    for row in kernel_residuals(model):
        assert row["ok"], row


def test_alpha_zero_kernel_is_fock_levels():
    basis = kernel_basis(params(k=3, alpha=0.0, na=6))
    assert basis.construction == "fock"
    for r, v in enumerate(basis.vectors):
        assert np.allclose(v.amplitudes, fc.basis_ket(6, r).amplitudes)


@pytest.mark.parametrize("k,alpha", [(2, 0.7), (3, 0.6), (2, 0.0)])
def test_kernel_vectors_are_rotation_eigenvectors(k, alpha):
    model = build_model(params(k=k, alpha=alpha, na=30))
    assert max(rotation_eigen_residuals(model)) < 1e-10


def test_kernel_vectors_live_on_one_residue_class():
    k = 3
    basis = kernel_basis(params(k=k, alpha=0.6, na=30))
    levels = np.arange(30)
    for r, v in enumerate(basis.vectors):
        assert np.all(v.amplitudes[levels % k != (-r) % k] == 0)


def test_truncation_too_small_for_large_alpha():
    with pytest.raises(TruncationTooSmallError):
        kernel_basis(params(k=1, alpha=4.0, na=3))


def test_hamiltonian_is_hermitian_and_drive_can_be_disabled():
    model = build_model(params())
    assert model.H.hermiticity_defect() < 1e-12
    quiet = build_model(params(), drive=False)
    assert np.allclose(quiet.H.entries, 0)
    assert np.allclose(quiet.G.entries, -(quiet.params.kappa / 2) * (quiet.b.adjoint() @ quiet.b).entries)


def test_lindbladian_preserves_trace_and_hermiticity():
    model = build_model(params(k=2, alpha=0.5, na=6, nb=3))
    rho = fc.tensor_ket(fc.basis_ket(6, 2), fc.basis_ket(3, 1, Space.B)).projector()
    out = lindbladian_apply(model, rho)
    assert abs(out.trace()) < 1e-12
    assert out.hermiticity_defect() < 1e-12


def test_kernel_states_are_stationary():
    model = build_model(params(k=2, alpha=0.7, na=24, nb=3))
    P = projector_HL(model)
    assert fc.hs_norm(lindbladian_apply(model, P)) < 1e-6


@settings(max_examples=20, deadline=None)
@given(st.integers(min_value=0, max_value=2 ** 32 - 1))
def test_adjoint_lindbladian_duality(seed):
    rng = np.random.default_rng(seed)
    model = build_model(params(k=2, alpha=0.6, kappa=1.5, na=6, nb=3))
    n = model.dims.joint
    rho = Operator(Space.AB, random_density(n, rng), model.dims)
    X = Operator(Space.AB, rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n)), model.dims)
    lhs = hs_pairing(X, lindbladian_apply(model, rho))
    rhs = hs_pairing(adjoint_lindbladian_apply(model, X), rho)
    assert abs(lhs - rhs) < 1e-10 * max(1.0, abs(lhs))


def test_identity_is_fixed_by_adjoint_lindbladian():
    model = build_model(params(k=1, alpha=0.5, na=6, nb=3))
    identity = Operator(Space.AB, np.eye(model.dims.joint), model.dims)
    assert fc.hs_norm(adjoint_lindbladian_apply(model, identity)) < 1e-12


def test_projector_HL_has_rank_k():
    model = build_model(params(k=3, alpha=0.6, na=30, nb=3))
    P = projector_HL(model)
    assert P.trace().real == pytest.approx(3)
    assert np.allclose((P @ P).entries, P.entries)
    assert embedded_kernel(model).shape == (model.dims.joint, 3)


@pytest.mark.parametrize("k,alpha", [(1, 0.0), (1, 0.5), (2, 0.0), (2, 0.7), (3, 0.6)])
def test_commutator_identities_hold_on_interior(k, alpha):
    model = build_model(params(k=k, alpha=alpha, na=16, nb=4))
    residuals = commutator_identity_residuals(model)
    assert residuals["g_dagger_b_dagger"] < 1e-10
    assert residuals["g_dagger_l_dagger"] < 1e-10
    assert residuals["leibniz"] < 1e-10
    if alpha == 0:
        assert residuals["alpha0_conservation"] < 1e-10
    else:
        assert "alpha0_conservation" not in residuals


def test_phase_rotation_maps_real_model_to_complex_alpha():
    k, magnitude, theta = 2, 0.7, 0.4
    real = build_model(params(k=k, alpha=magnitude, na=8, nb=3))
    V = phase_rotation(real.dims, k, theta)
    rotated = V @ real.H @ V.adjoint()

    L = fc.power(fc.annihilation(8), k) - fc.identity(8) * (magnitude * np.exp(1j * theta)) ** k
    b = fc.annihilation(3, Space.B)
    expected = fc.tensor(L, b.adjoint()) + fc.tensor(L.adjoint(), b)
    assert np.allclose(rotated.entries, expected.entries)
