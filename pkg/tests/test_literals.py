import numpy as np
import pytest
from hypothesis import given

from cplab.dist import DiscreteDistribution, point_mass, rademacher
from cplab.errors import ParseError
from cplab.literals import (format_distribution, format_integer_pmf, format_model,
                            format_polyhedron, parse_distribution, parse_integer_pmf,
                            parse_model, parse_polyhedron, read_model)
from cplab.models import RareEventModel
from cplab.polyhedra import Polyhedron

from conftest import lattice_dists


def test_distribution_example():
    F = parse_distribution("# two atoms\ndim 2\n0 0 0.5\n1 -1 0.5  # trailing\n")
    assert F.as_dict() == {(0.0, 0.0): 0.5, (1.0, -1.0): 0.5}


@given(lattice_dists(dim=2))
def test_distribution_round_trip(F):
    text = format_distribution(F)
    G = parse_distribution(text)
    np.testing.assert_array_equal(G.points, F.points)
    np.testing.assert_array_equal(G.masses, F.masses)
    assert format_distribution(G) == text


def test_irrational_values_round_trip():
    F = DiscreteDistribution([[0.1, 1 / 3]], [1.0])
    assert parse_distribution(format_distribution(F)).points.tolist() == [[0.1, 1 / 3]]


@pytest.mark.parametrize("text, line", [
    ("", 1),
    ("dims 2\n", 1),
    ("dim x\n", 1),
    ("dim 1\n0 0.5\n1 0.5 7\n", 3),
    ("dim 1\n0 abc\n", 2),
    ("\n\ndim 1\n", 3),
    ("dim 1\n0 0.7\n1 0.7\n", 1),
])
def test_distribution_errors(text, line):
    with pytest.raises(ParseError) as exc:
        parse_distribution(text)
    assert exc.value.lineno == line
    assert f"line {line}" in str(exc.value)


def test_polyhedron_round_trip():
    P = Polyhedron(np.array([[0.6, 0.8], [1.0, 0.0]]), [0.25, np.inf])
    Q = parse_polyhedron(format_polyhedron(P))
    np.testing.assert_array_equal(Q.directions, P.directions)
    np.testing.assert_array_equal(Q.thresholds, P.thresholds)


def test_polyhedron_normalizes_raw_directions():
    P = parse_polyhedron("m 1\n3 4 10\n")
    np.testing.assert_allclose(P.directions, [[0.6, 0.8]])
    assert P.thresholds.tolist() == [2.0]


@pytest.mark.parametrize("text", ["m 2\n1 0 0\n", "k 1\n1 0\n", "m 2\n1 0 0\n1 0\n",
                                  "m 1\n0 0 1\n"])
def test_polyhedron_errors(text):
    with pytest.raises(ParseError):
        parse_polyhedron(text)


def test_integer_pmf():
    U = parse_integer_pmf("0 0.25\n2 0.75\n")
    assert U.masses.tolist() == [0.25, 0.0, 0.75]
    assert parse_integer_pmf(format_integer_pmf(U)).masses.tolist() == U.masses.tolist()
    with pytest.raises(ParseError):
        parse_integer_pmf("-1 1\n")
    with pytest.raises(ParseError):
        parse_integer_pmf("0 0.5\n")


def test_model_inline_repeated():
    m = parse_model("n 3\np 0.01\ndim 1\n1 1\nend\n")
    assert m.n == 3 and m.probs == (0.01,) * 3
    assert m.losses[2].as_dict() == {(1.0,): 1.0}


def test_model_round_trip():
    m = RareEventModel((0.1, 0.2), (rademacher(), point_mass(2)))
    back = parse_model(format_model(m))
    assert back.probs == m.probs
    assert [V.as_dict() for V in back.losses] == [V.as_dict() for V in m.losses]


def test_model_file_reference(tmp_path):
    (tmp_path / "v.dist").write_text(format_distribution(rademacher()))
    (tmp_path / "model.txt").write_text("n 2\np 0.5 @v.dist\n")
    m = read_model(tmp_path / "model.txt")
    assert m.n == 2 and m.losses[0].as_dict() == rademacher().as_dict()


@pytest.mark.parametrize("text", [
    "n 2\np 0.1\ndim 1\n1 1\n",
    "n 2\np 0.1\ndim 1\n1 1\nend\np 0.2\ndim 1\n1 1\nend\np 0.3\ndim 1\n1 1\nend\n",
    "n 1\np 2\ndim 1\n1 1\nend\n",
    "n 1\np 0.1 v.dist\n",
    "n 1\np 0.1 @does-not-exist.dist\n",
    "n 0\n",
])
def test_model_errors(text):
    with pytest.raises(ParseError):
        parse_model(text)
