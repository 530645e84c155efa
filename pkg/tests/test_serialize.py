import json

import numpy as np
import pytest

from equiconv.errors import ConfigInvalid
from equiconv.model import Coefficient, dirichlet2, periodic2
from equiconv.serialize import function_from_json, function_to_json, operator_from_json, operator_to_json

X = np.linspace(0, 1, 33)


@pytest.mark.parametrize("op", [dirichlet2(), periodic2(),
                                dirichlet2().with_coefficients({0: Coefficient.step([0, 0.3, 1], [1, 2j])}, "s")])
def test_operator_round_trip(op):
    d = operator_to_json(op)
    back = operator_from_json(json.loads(json.dumps(d)))
    assert back.bc == op.bc and back.label == op.label
    assert operator_to_json(back) == d


@pytest.mark.parametrize("spec", [
    {"kind": "polynomial", "payload": {"coeffs": [[0, 0], [1, 0], [-1, 0]]}},
    {"kind": "step", "payload": {"breaks": [0, 0.5, 1], "values": [[1, 0], [0, 1]]}},
    {"kind": "samples", "payload": {"values": [[v, 0] for v in np.sin(np.linspace(0, 3, 20))]}},
    {"kind": "expr-table", "payload": {"terms": [{"coeff": [2, 0], "factors": [["sin", [3, 0]]]}]}},
])
def test_function_round_trip(spec):
    f = function_from_json(spec)
    g = function_from_json(json.loads(json.dumps(function_to_json(f))))
    assert np.allclose(f(X), g(X))


def test_expr_table_values():
    f = function_from_json({"kind": "expr-table", "payload": {"terms": [
        {"factors": [["power", [1]], ["exp", [1]]]}, {"coeff": -1, "factors": [["abs", [0.5]]]}]}})
    assert np.allclose(f(X), X * np.exp(X) - np.abs(X - 0.5))
    assert f.breakpoints == (0.5,)


def test_raw_boundary():
    op = operator_from_json({"n": 2, "raw_boundary": [{"at0": [1, 0], "at1": [1, 0]},
                                                      {"at0": [1, 0], "at1": [-1, 0]}]})
    assert op.bc == dirichlet2().bc


@pytest.mark.parametrize("bad, field", [
    ({"n": 2}, "operator.boundary"),
    ({"preset": "nope"}, "operator.preset"),
    ({"n": 2, "boundary": [{"order": 0, "a": 1}]}, "operator.boundary[0]"),
])
def test_operator_errors(bad, field):
    with pytest.raises(ConfigInvalid, match=field.replace("[", r"\[").replace("]", r"\]")):
        operator_from_json(bad)


def test_function_errors():
    with pytest.raises(ConfigInvalid, match="function.kind"):
        function_from_json({"kind": "spline"})
    with pytest.raises(ConfigInvalid, match="unknown function"):
        function_from_json({"kind": "expr-table", "payload": {"terms": [{"factors": [["tan", []]]}]}})
