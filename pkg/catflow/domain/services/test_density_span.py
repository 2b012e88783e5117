import numpy as np
import pytest

from domain.entities.fock import FockDims
from domain.entities.model import ModelParams
from domain.exceptions import InvalidArgumentError
from domain.services.cat_model import build_model
from domain.services.density_span import generate_joint_span, span_single_mode, triangular_structure_check


def params(k, alpha, na, nb=5, kappa=1.0):
    return ModelParams(k=k, alpha=alpha, kappa=kappa, dims=FockDims(na=na, nb=nb))


JOINT_CASES = [
    (1, 0.0, 10, 5, (7, 3), 30),
    (1, 0.5, 10, 5, (7, 3), 30),
    (2, 0.0, 16, 6, (10, 3), 60),
    (2, 0.7, 16, 6, (10, 3), 60),
    (3, 0.6, 15, 5, (8, 3), 60),
]


@pytest.mark.parametrize("k,alpha,na,nb,interior,budget", JOINT_CASES)
def test_joint_span_reaches_full_interior_rank(k, alpha, na, nb, interior, budget):
    model = build_model(params(k, alpha, na, nb))
    report = generate_joint_span(model, budget, FockDims(na=interior[0], nb=interior[1]))
    assert report.target_dim == interior[0] * interior[1]
    assert report.full_rank, report.saturation
    assert not report.stalled
    assert report.reach_margin == 2 * k
    assert report.saturation == sorted(report.saturation)
    assert report.residual_spectrum[-1] > 1e-8 * report.residual_spectrum[0]


def test_zero_budget_only_sees_the_kernel():
    model = build_model(params(2, 0.7, 12))
    report = generate_joint_span(model, 0, FockDims(na=8, nb=3))
    assert report.achieved_rank == 2
    assert not report.full_rank
    assert report.saturation == [2]


def test_joint_span_needs_interior_margins():
    model = build_model(params(2, 0.7, 12))
    with pytest.raises(InvalidArgumentError):
        generate_joint_span(model, 10, FockDims(na=10, nb=3))
    with pytest.raises(InvalidArgumentError):
        generate_joint_span(model, 10, FockDims(na=8, nb=4))
    with pytest.raises(InvalidArgumentError):
        generate_joint_span(model, -1, FockDims(na=8, nb=3))


def test_single_mode_lindblad_powers_are_rank_deficient_per_class():
    report = span_single_mode(params(2, 0.7, 20), "ELa", 3, 10)
    assert report.class_ranks == [4, 4]
    assert report.predicted_class_ranks == [4, 4]
    assert report.matches_prediction
    assert report.achieved_rank == 8
    assert not report.full_rank
    assert report.reach_margin == 0


def test_sharp_commutators_restore_full_rank():
    report = span_single_mode(params(2, 0.7, 20), "ELa_plus_ELsharp", 3, 10)
    assert report.class_ranks == [5, 5]
    assert report.matches_prediction
    assert report.full_rank
    assert report.reach_margin == 2


def test_single_mode_argument_errors():
    with pytest.raises(InvalidArgumentError):
        span_single_mode(params(2, 0.7, 20), "ELb", 3, 10)
    with pytest.raises(InvalidArgumentError):
        span_single_mode(params(2, 0.7, 20), "ELa", 3, 17)


@pytest.mark.parametrize("alpha", [0.0, 0.7])
def test_commutator_is_triangular_for_k2(alpha):
    report = triangular_structure_check(params(2, alpha, 20))
    assert np.allclose(report.coefficients[1], [2.0, 4.0])
    assert np.allclose(report.coefficients[2], [8.0])
    assert max(report.residuals.values()) < 1e-8
    assert report.interior_na == 16


def test_commutator_is_triangular_for_k3():
    report = triangular_structure_check(params(3, 0.6, 24), orders=[1])
    assert np.allclose(report.coefficients[1], [6.0, 18.0, 9.0])
    assert report.leading[1] == pytest.approx(9.0)


def test_triangular_check_rejects_oversized_interior():
    with pytest.raises(InvalidArgumentError):
        triangular_structure_check(params(2, 0.7, 20), interior_na=18)


@pytest.mark.parametrize("k,alpha,na,nb,interior", [(1, 0.5, 10, 5, (7, 3)), (2, 0.7, 16, 6, (10, 3))])
@pytest.mark.parametrize("budget", [9, 12])
def test_joint_span_contains_single_mode_constructions(k, alpha, na, nb, interior, budget):
    joint = generate_joint_span(build_model(params(k, alpha, na, nb)), budget, FockDims(na=interior[0], nb=interior[1]))
    single = span_single_mode(params(k, alpha, na, nb), "ELa_plus_ELsharp", budget // 3, interior[0])
    assert joint.achieved_rank >= single.achieved_rank


@pytest.mark.parametrize("k", [1, 2, 3])
def test_lindblad_powers_alone_are_dense_at_alpha_zero(k):
    interior_na = 9
    report = span_single_mode(params(k, 0.0, 20), "ELa", interior_na, interior_na)
    assert report.full_rank
    assert report.achieved_rank == interior_na
    assert report.matches_prediction


def test_cat_class_fills_once_budget_covers_it():
    # each class of 10 levels holds 5, so B + 1 = 5 vectors per class is enough
    report = span_single_mode(params(2, 0.7, 20), "ELa", 4, 10)
    assert report.class_ranks == [5, 5]
    assert report.full_rank
