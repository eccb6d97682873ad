import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from utils.errors import (
    BadOrdering,
    EvalAtStableState,
    MissingJump,
    NonAlternatingStability,
    NonzeroAtUnstable,
    NotABreakpoint,
    SignViolation,
    ValidationError,
)
from utils.reaction import (
    classify_states,
    eval_array,
    evaluate,
    integral,
    load_reaction,
    next_unstable_below,
    one_sided_limits,
    parse,
    serialize,
    validate,
)

from conftest import data_path


def bistable(upper_poly, lower_poly, below=(2.0,), above=(-2.0,), middle="unstable"):
    return {
        "steady_states": [
            {"value": 1.0, "stability": "stable"},
            {"value": 0.5, "stability": middle},
            {"value": 0.0, "stability": "stable"},
        ],
        "segments": [
            {"from": 0.5, "to": 1.0, "poly": list(upper_poly)},
            {"from": 0.0, "to": 0.5, "poly": list(lower_poly)},
        ],
        "extension_below": list(below),
        "extension_above": list(above),
    }


def test_examples_validate(spec_a, spec_b, spec_c):
    assert spec_a.n_pairs == 1
    assert spec_b.n_pairs == 2
    assert spec_c.stable_values == (1.0, 0.5, 0.0)
    assert spec_c.unstable_values == (0.75, 0.25)


def test_example_a_bounds(spec_a):
    assert spec_a.sup_norm == pytest.approx(2.0)
    assert spec_a.lipschitz == pytest.approx(4.0)


def test_broken_reaction_reports_nonzero_at_unstable():
    with pytest.raises(ValidationError) as excinfo:
        load_reaction(data_path("broken.json"))

    error = excinfo.value
    assert error.code == "NonzeroAtUnstable"
    assert isinstance(error.violations[0], NonzeroAtUnstable)
    assert error.violations[0].theta == 0.5


def test_sign_change_inside_interval():
    # 16 (p - 1/2)(p - 3/4) changes sign at 3/4
    with pytest.raises(ValidationError) as excinfo:
        validate(parse(bistable([6.0, -20.0, 16.0], [-2.0, 4.0])))
    assert excinfo.value.code == "SignViolation"
    assert excinfo.value.violations[0].interval == (0.5, 1.0)


def test_missing_jump_collects_every_violation():
    with pytest.raises(ValidationError) as excinfo:
        validate(parse(bistable([-2.0, 4.0], [-2.0, 4.0], above=(2.0,))))

    violations = excinfo.value.violations
    assert isinstance(violations[0], MissingJump)
    assert any(isinstance(v, SignViolation) for v in violations)


def test_stability_must_alternate():
    with pytest.raises(ValidationError) as excinfo:
        validate(parse(bistable([-2.0, 4.0], [-2.0, 4.0], middle="stable")))
    assert isinstance(excinfo.value.violations[0], NonAlternatingStability)


@pytest.mark.parametrize(
    "document",
    [
        {"steady_states": [], "segments": []},
        {
            "steady_states": [{"value": 1.0, "stability": "stable"}, {"value": 0.0, "stability": "stable"}],
            "segments": [{"from": 0.0, "to": 1.0, "poly": [1.0]}],
            "extension_below": [1.0],
            "extension_above": [-1.0],
        },
        {
            **bistable([-2.0, 4.0], [-2.0, 4.0]),
            "steady_states": [
                {"value": 1.0, "stability": "stable"},
                {"value": 0.5, "stability": "sideways"},
                {"value": 0.0, "stability": "stable"},
            ],
        },
    ],
    ids=["missing-keys", "even-count", "unknown-stability"],
)
def test_malformed_documents(document):
    with pytest.raises(ValidationError) as excinfo:
        validate(parse(document))
    assert excinfo.value.code == "BadOrdering"


def test_invalid_json_file(tmp_path):
    path = tmp_path / "reaction.json"
    path.write_text("{not json")
    with pytest.raises(ValidationError) as excinfo:
        load_reaction(path)
    assert isinstance(excinfo.value.violations[0], BadOrdering)


def test_evaluate(spec_a):
    assert evaluate(spec_a, 0.75) == pytest.approx(1.0)
    assert evaluate(spec_a, 0.5) == 0.0
    assert evaluate(spec_a, 1.2) == -2.0
    assert evaluate(spec_a, -0.1) == 2.0

    with pytest.raises(EvalAtStableState):
        evaluate(spec_a, 1.0)
    with pytest.raises(EvalAtStableState):
        evaluate(spec_a, 0.0)


def test_one_sided_limits(spec_a, spec_b):
    assert one_sided_limits(spec_a, 1.0) == (2.0, -2.0)
    assert one_sided_limits(spec_a, 0.5) == (0.0, 0.0)
    assert one_sided_limits(spec_b, 0.5) == pytest.approx((4.0, -4.0))

    with pytest.raises(NotABreakpoint):
        one_sided_limits(spec_a, 0.3)


def test_classify_and_next_unstable(spec_b):
    assert classify_states(spec_b) == ([1.0, 0.5, 0.0], [0.75, 0.25])
    assert next_unstable_below(spec_b, 1.0) == 0.75
    assert next_unstable_below(spec_b, 0.5) == 0.25


def test_integral(spec_a, spec_c):
    assert integral(spec_a, 0.0, 1.0) == 0.0
    assert integral(spec_c, 0.5, 1.0) == pytest.approx(-0.125)
    assert integral(spec_c, 0.0, 0.5) == pytest.approx(0.125)
    assert integral(spec_c, 1.0, 0.5) == pytest.approx(0.125)


def test_eval_array_vanishes_at_steady_states(spec_b):
    values = eval_array(spec_b, np.array([0.0, 0.25, 0.5, 0.75, 1.0]))
    assert np.all(values == 0.0)


@given(p=st.floats(-0.5, 1.5).filter(lambda p: p not in (0.0, 0.25, 0.5, 0.75, 1.0)))
def test_eval_array_matches_evaluate(spec_c, p):
    assert eval_array(spec_c, np.array([p]))[0] == pytest.approx(evaluate(spec_c, p))


@given(k=st.integers(0, 3), t=st.floats(1e-6, 1.0 - 1e-6))
def test_sign_pattern(spec_c, k, t):
    upper, lower = spec_c.breakpoints[k], spec_c.breakpoints[k + 1]
    p = lower + t * (upper - lower)
    if not lower < p < upper:
        return
    value = evaluate(spec_c, p)
    if k % 2 == 0:
        assert value > 0.0
    else:
        assert value < 0.0


def test_serialize_reloads_to_the_same_document(spec_c):
    document = serialize(spec_c)
    assert serialize(load_reaction(json.loads(json.dumps(document)))) == document
