import numpy as np
from pytest import raises
from hypothesis import given, settings
from hypothesis.strategies import floats, integers

from ForwardJacobian.engine.jacobianForward import jacobian_forward
from ForwardJacobian.exceptions import DimensionError, NonFiniteError
from ForwardJacobian.explain.sensitivity import build_report, report_to_dict, report_to_frame, top_k
from ForwardJacobian.utils.matrixFiles import emit_matrix, parse_matrix


def test_diagonal_example():
    report = build_report([[1, 0], [0, 2]])
    np.testing.assert_allclose(report.feature_scores, [1, 2])
    np.testing.assert_allclose(report.output_scores, [1, 2])
    assert report.feature_ranking == (2, 1)
    assert report.output_ranking == (2, 1)
    assert top_k(report, "feature", 1) == [(2, 2.0)]


def test_zero_matrix_ties_by_index():
    report = build_report(np.zeros((3, 4)))
    assert report.feature_ranking == (1, 2, 3, 4)
    assert report.output_ranking == (1, 2, 3)
    assert not report.feature_scores.any()


def test_tie_break():
    assert build_report([[3.0, 0.0, 3.0]]).feature_ranking == (1, 3, 2)
    assert build_report([[1.0, -1.0], [1.0, 1.0]]).feature_ranking == (1, 2)
    assert build_report([[0.0, 4.0], [4.0, 0.0], [0.0, 1.0]]).output_ranking == (1, 2, 3)


def test_top_k_clamps_and_checks():
    report = build_report([[1, 0], [0, 2]])
    assert [i for i, _ in top_k(report, "output", 10)] == [2, 1]
    with raises(ValueError):
        top_k(report, "feature", 0)
    with raises(ValueError):
        top_k(report, "column", 1)


def test_bad_jacobians():
    with raises(DimensionError):
        build_report([1.0, 2.0])
    with raises(NonFiniteError):
        build_report([[1.0, np.inf]])


@settings(max_examples=100)
@given(seed=integers(min_value=0, max_value=2**32 - 1), scale=floats(min_value=1e-3, max_value=1e3))
def test_rankings_follow_permutations_and_ignore_scale(seed, scale):
    rng = np.random.default_rng(seed)
    J = rng.normal(size=(int(rng.integers(1, 6)), int(rng.integers(1, 9))))
    report = build_report(J)

    assert build_report(scale * J).feature_ranking == report.feature_ranking
    assert build_report(scale * J).output_ranking == report.output_ranking

    columns = rng.permutation(J.shape[1])
    rows = rng.permutation(J.shape[0])
    permuted = build_report(J[rows][:, columns])
    assert tuple(int(columns[i - 1]) + 1 for i in permuted.feature_ranking) == report.feature_ranking
    assert tuple(int(rows[i - 1]) + 1 for i in permuted.output_ranking) == report.output_ranking


def test_ranking_survives_a_csv_dump(seeded_model, seeded_instance):
    J = jacobian_forward(seeded_model, seeded_instance).full
    report = build_report(J, same_unit=True)
    reread, _ = parse_matrix(emit_matrix(J))
    norms = np.sqrt((reread ** 2).sum(axis=0))
    assert report.feature_ranking == tuple(int(i) + 1 for i in np.argsort(-norms, kind="stable"))
    assert [i for i, _ in top_k(report, "feature", 3)] == list(report.feature_ranking[:3])


def test_serialised_forms():
    report = build_report([[1, 0, 0], [0, 2, 0]], same_unit=True, singular_hits=[(2, 1)])
    as_dict = report_to_dict(report, k=2)
    assert as_dict["feature_ranking"] == [2, 1]
    assert as_dict["output_ranking"] == [2, 1]
    assert as_dict["singular_hits"] == [[2, 1]]
    assert as_dict["same_unit"] is True
    assert len(as_dict["feature_scores"]) == 3

    frame = report_to_frame(report)
    assert list(frame.columns) == ["axis", "rank", "index", "score"]
    assert list(frame["axis"]) == ["feature"] * 3 + ["output"] * 2
    assert list(frame["index"][:3]) == [2, 1, 3]
    assert len(report_to_frame(report, k=1)) == 2
