import numpy as np
import pytest
from hypothesis import given, strategies as st

from domain.entities.fock import FockDims, Ket, Operator, Space
from domain.exceptions import InvalidArgumentError, InvalidDimensionError
from domain.services import fock_core as fc


def test_ladder_commutator_is_identity_below_top_level():
    n = 8
    a = fc.annihilation(n)
    comm = fc.commutator(a, a.adjoint()).entries
    assert np.allclose(comm[: n - 1, : n - 1], np.eye(n - 1))
    assert comm[n - 1, n - 1] == pytest.approx(-(n - 1))


def test_number_operator_matches_ladder_product():
    a = fc.annihilation(6)
    assert np.allclose((a.adjoint() @ a).entries, fc.number(6).entries)


def test_zero_truncation_rejected():
    with pytest.raises(InvalidDimensionError):
        fc.annihilation(0)


def test_operator_shape_checked():
    with pytest.raises(InvalidDimensionError):
        Operator(Space.A, np.zeros((3, 3)), FockDims(na=4))


def test_tensor_and_embeddings_act_on_the_right_factor():
    na, nb = 4, 3
    ket = fc.tensor_ket(fc.basis_ket(na, 2), fc.basis_ket(nb, 1, Space.B))
    n_a = fc.embed_a(fc.number(na), nb)
    n_b = fc.embed_b(fc.number(nb, Space.B), na)
    rho = ket.projector()
    assert n_a.expectation(rho).real == pytest.approx(2.0)
    assert n_b.expectation(rho).real == pytest.approx(1.0)


def test_tensor_rejects_swapped_factors():
    with pytest.raises(InvalidDimensionError):
        fc.tensor(fc.identity(3, Space.B), fc.identity(3))


@given(st.floats(-2.0, 2.0), st.floats(-2.0, 2.0))
def test_coherent_state_is_normalized_eigenvector(x, y):
    z = complex(x, y)
    n = 60
    ket = fc.coherent_state(z, n)
    assert ket.norm() == pytest.approx(1.0)
    a = fc.annihilation(n)
    residual = a.apply(ket).amplitudes - z * ket.amplitudes
    # only the top amplitude is cut, so the residual is tiny at this truncation
    assert np.linalg.norm(residual[: n - 1]) < 1e-8


def test_coherent_state_reports_tail_mass_and_warning():
    ket = fc.coherent_state(3.0, 5, tail_tolerance=1e-6)
    assert ket.truncation_warning
    assert ket.tail_mass > 0.1
    assert not fc.coherent_state(0.5, 40, tail_tolerance=1e-6).truncation_warning


def test_coherent_state_at_origin_is_vacuum():
    ket = fc.coherent_state(0, 5)
    assert np.allclose(ket.amplitudes, [1, 0, 0, 0, 0])


def test_displacement_of_vacuum_matches_coherent_state():
    n = 50
    displaced = fc.displacement(0.8 - 0.3j, n).apply(fc.basis_ket(n, 0))
    coherent = fc.coherent_state(0.8 - 0.3j, n)
    assert abs(displaced.inner(coherent)) == pytest.approx(1.0, abs=1e-8)


def test_rotation_multiplies_coherent_amplitude_by_phase():
    n = 40
    theta = 0.7
    rotated = fc.rotation(theta, n).apply(fc.coherent_state(1.0, n))
    target = fc.coherent_state(np.exp(1j * theta), n)
    assert np.allclose(rotated.amplitudes, target.amplitudes)


def test_trace_norm_of_state_difference():
    rho = fc.basis_ket(3, 0).projector()
    sigma = fc.basis_ket(3, 1).projector()
    assert fc.trace_norm(rho - sigma) == pytest.approx(2.0)
    assert fc.hs_norm(rho - sigma) == pytest.approx(np.sqrt(2.0))


def test_iterated_commutator_orders():
    a = fc.annihilation(10)
    ad = a.adjoint()
    once = fc.iterated_commutator(a, ad, 1)
    assert np.allclose(once.entries[:9, :9], np.eye(9))
    # [[a, a†], a†] vanishes away from the top level
    twice = fc.iterated_commutator(a, ad, 2)
    assert np.allclose(twice.entries[:8, :8], 0)
    with pytest.raises(InvalidArgumentError):
        fc.iterated_commutator(a, ad, 0)


def test_interior_indices_and_compress():
    dims = FockDims(na=4, nb=3)
    idx = fc.interior_indices(dims, 2, 2)
    assert idx.tolist() == [0, 1, 3, 4]
    X = fc.embed_a(fc.number(4), 3)
    assert np.allclose(np.diag(fc.compress(X, idx)), [0, 0, 1, 1])


def test_top_band_projector_counts_levels():
    dims = FockDims(na=5, nb=3)
    P = fc.top_band_projector(dims, 2)
    # top two a-levels (2*3 states) plus top b-level on the remaining 3 a-levels
    assert P.trace().real == pytest.approx(9)


def test_ket_is_read_only():
    ket = Ket(Space.A, [1.0, 0.0], FockDims(na=2))
    with pytest.raises(ValueError):
        ket.amplitudes[0] = 2.0


def test_ladder_matrix_element():
    assert fc.annihilation(4).entries[2, 3] == pytest.approx(np.sqrt(3))


def test_coherent_overlap_by_series_summation():
    alpha, beta = 0.5, -0.5
    overlap = fc.coherent_state(alpha, 40).inner(fc.coherent_state(beta, 40))
    assert abs(overlap) == pytest.approx(np.exp(-abs(alpha - beta) ** 2 / 2), abs=1e-10)


def test_displacement_is_unitary_on_lower_levels():
    n = 40
    D = fc.displacement(0.5, n).entries
    defect = (D.conj().T @ D)[: n // 2, : n // 2] - np.eye(n // 2)
    assert np.abs(defect).max() < 1e-8


def test_rotation_by_pi_and_two_pi():
    n = 7
    assert np.allclose(np.diag(fc.rotation(np.pi, n).entries), [(-1) ** m for m in range(n)])
    assert np.allclose(fc.rotation(2 * np.pi, n).entries, np.eye(n))
    composed = fc.rotation(0.4, n) @ fc.rotation(1.1, n)
    assert np.allclose(composed.entries, fc.rotation(1.5, n).entries)


def test_trace_norm_of_hermitian_is_sum_of_absolute_eigenvalues():
    rng = np.random.default_rng(5)
    X = rng.standard_normal((8, 8)) + 1j * rng.standard_normal((8, 8))
    H = X + X.conj().T
    expected = np.sum(np.abs(np.linalg.eigvalsh(H)))
    assert fc.trace_norm(Operator(Space.A, H, FockDims(na=8))) == pytest.approx(expected, abs=1e-10)


@given(st.integers(min_value=0, max_value=2 ** 32 - 1), st.integers(min_value=1, max_value=9))
def test_norm_hierarchy(seed, n):
    rng = np.random.default_rng(seed)
    X = Operator(Space.A, rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n)), FockDims(na=n))
    assert fc.trace_norm(X) >= fc.hs_norm(X) - 1e-12
    assert fc.hs_norm(X) >= abs(X.trace()) / np.sqrt(n) - 1e-12


def test_tensor_mixed_product():
    rng = np.random.default_rng(9)

    def random_op(n, space):
        return Operator(space, rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n)),
                        FockDims(na=n) if space == Space.A else FockDims(na=1, nb=n))

    A, C = random_op(3, Space.A), random_op(3, Space.A)
    B, D = random_op(2, Space.B), random_op(2, Space.B)
    assert np.allclose((fc.tensor(A, B) @ fc.tensor(C, D)).entries, fc.tensor(A @ C, B @ D).entries)
