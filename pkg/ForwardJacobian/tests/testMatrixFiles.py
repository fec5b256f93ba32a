import numpy as np
from pytest import mark, raises
from hypothesis import given
from hypothesis.strategies import floats

from ForwardJacobian.engine.jacobianForward import jacobian_forward
from ForwardJacobian.exceptions import MatrixFormatError
from ForwardJacobian.model.randomModels import random_smooth_model
from ForwardJacobian.utils.matrixFiles import emit_matrix, format_number, parse_matrix, parse_vector, read_instance


def test_emit_example():
    assert emit_matrix([[1, 0.25]]) == "1,0.25"
    assert emit_matrix(np.eye(2)) == "1,0\n0,1"
    assert emit_matrix([0.5, -3.0]) == "0.5,-3"
    assert emit_matrix([[1, 2]], header=["a", "b"]) == "a,b\n1,2"


def test_parse_example():
    np.testing.assert_array_equal(parse_vector("0.1, -0.2 ,0.3"), [0.1, -0.2, 0.3])
    np.testing.assert_array_equal(parse_vector("1e-3,2"), [1e-3, 2.0])


@given(floats(allow_nan=False, allow_infinity=False))
def test_numbers_round_trip(value):
    assert float(format_number(value)) == value


@mark.parametrize("value text".split(), ((1.0, "1"), (0.25, "0.25"), (0.0, "0"), (-3.5, "-3.5"),
                                         (0.1, "0.1"), (123456.0, "123456")))
def test_short_forms(value, text):
    assert format_number(value) == text


@mark.parametrize("seed", range(10))
def test_jacobian_dumps_are_stable(seed):
    model = random_smooth_model(seed)
    x = np.random.default_rng(seed).uniform(-1, 1, model.feature_dim)
    text = emit_matrix(jacobian_forward(model, x).full)
    matrix, labels = parse_matrix(text)
    assert labels is None
    assert emit_matrix(matrix) == text


@mark.parametrize("text column".split(), (("1,abc,3", 2), ("1,,3", 2), ("nan", 1), ("1,2,inf", 3),
                                          ("1e999,0", 1), ("1_0,2", 1), ("2,\uff11", 2), ("0x1p3", 1)))
def test_bad_tokens_name_the_column(text, column):
    with raises(MatrixFormatError) as e:
        parse_vector(text)
    assert e.value.column == column


def test_parse_matrix_problems():
    with raises(MatrixFormatError):
        parse_vector("   ")
    with raises(MatrixFormatError) as e:
        parse_matrix("1,2\n3\n")
    assert e.value.row == 2
    matrix, labels = parse_matrix("a,b\n1,2\n\n3,4\n", header=True)
    assert labels == ["a", "b"]
    np.testing.assert_array_equal(matrix, [[1, 2], [3, 4]])
    with raises(MatrixFormatError):
        parse_matrix("a,b,c\n1,2\n", header=True)


def test_cannot_emit_non_finite():
    with raises(MatrixFormatError) as e:
        emit_matrix([[1.0, 2.0], [np.nan, 0.0]])
    assert (e.value.row, e.value.column) == (2, 1)


def test_read_instance(tmp_path):
    np.testing.assert_array_equal(read_instance("1,2"), [1.0, 2.0])
    path = tmp_path / "x.csv"
    path.write_text("\n0.5,-1\n", encoding="utf-8")
    np.testing.assert_array_equal(read_instance(f"@{path}"), [0.5, -1.0])
    path.write_text("1,2\n3,4\n", encoding="utf-8")
    with raises(MatrixFormatError):
        read_instance(f"@{path}")
    with raises(OSError):
        read_instance(f"@{tmp_path / 'missing.csv'}")


def test_quoted_fields_are_read_as_csv():
    np.testing.assert_array_equal(parse_vector('"1.5", 2'), [1.5, 2.0])
    matrix, labels = parse_matrix('"out,1",out2\n1,2\n', header=True)
    assert labels == ["out,1", "out2"]
    np.testing.assert_array_equal(matrix, [[1, 2]])


def test_instance_file_must_be_utf8(tmp_path):
    path = tmp_path / "x.csv"
    path.write_bytes(b"\xff\xfe1,1\n")
    with raises(MatrixFormatError):
        read_instance(f"@{path}")
