import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from branchpde.errors import (DimensionError, EvaluationError, ParseError,
                              UnknownIdentifierError)
from branchpde.expressions import (BinOp, Call, Const, Neg, VarT, VarX,
                                   eval_expression, parse_expression,
                                   to_source)
from branchpde.specfun import phi_bump, psi_getoor


class TestParse:
    def test_precedence(self):
        ast = parse_expression("1 + 2 * 3", 1)
        assert ast == BinOp("+", Const(1.0), BinOp("*", Const(2.0), Const(3.0)))

    def test_power_right_assoc(self):
        ast = parse_expression("2 ^ 3 ^ 2", 1)
        assert ast == BinOp("^", Const(2.0), BinOp("^", Const(3.0), Const(2.0)))
        assert eval_expression(ast, 0.0, np.zeros(1)) == 512.0

    def test_left_assoc_subtraction(self):
        ast = parse_expression("8 - 3 - 2", 1)
        assert eval_expression(ast, 0.0, np.zeros(1)) == 3.0

    def test_unary_minus(self):
        # unary minus binds tighter than ^: -x1 ^ 2 is (-x1) ^ 2
        ast = parse_expression("-x1 ^ 2", 1)
        assert eval_expression(ast, 0.0, np.array([3.0])) == 9.0
        assert eval_expression(parse_expression("-(x1 ^ 2)", 1), 0.0,
                               np.array([3.0])) == -9.0

    def test_variables(self):
        ast = parse_expression("t * x2", 3)
        assert ast == BinOp("*", VarT(), VarX(2))

    def test_calls(self):
        ast = parse_expression("exp(-t) * phi_bump(1, 1.5)", 2)
        assert isinstance(ast.right, Call)
        assert ast.right.args == (Const(1.0), Const(1.5))

    def test_negated_param(self):
        ast = parse_expression("indicator_box(-1, 1)", 2)
        assert ast.args == (Const(-1.0), Const(1.0))

    def test_scientific_notation(self):
        assert parse_expression("1.5e-3", 1) == Const(1.5e-3)
        assert parse_expression(".5", 1) == Const(0.5)

    def test_coordinate_out_of_range(self):
        with pytest.raises(DimensionError):
            parse_expression("x3", 2)
        parse_expression("x3", 3)  # boundary is allowed

    def test_unknown_identifier(self):
        with pytest.raises(UnknownIdentifierError) as err:
            parse_expression("1 + foo(2)", 1)
        assert err.value.offset == 4

    def test_parse_error_offset(self):
        with pytest.raises(ParseError) as err:
            parse_expression("1 + * 2", 1)
        assert err.value.offset == 4
        assert err.value.expected

    def test_unexpected_character(self):
        with pytest.raises(ParseError) as err:
            parse_expression("1 + $", 1)
        assert err.value.offset == 4

    def test_trailing_input(self):
        with pytest.raises(ParseError):
            parse_expression("1 2", 1)

    def test_unbalanced_paren(self):
        with pytest.raises(ParseError):
            parse_expression("(1 + 2", 1)

    def test_wrong_arity(self):
        with pytest.raises(ParseError):
            parse_expression("exp(1, 2)", 1)
        with pytest.raises(ParseError):
            parse_expression("phi_bump(1)", 1)

    def test_nonconstant_param(self):
        with pytest.raises(ParseError):
            parse_expression("phi_bump(t, 1.5)", 1)


class TestRoundTrip:
    CASES = [
        "1 + 2 * 3",
        "(1 + 2) * 3",
        "2 ^ 3 ^ 2",
        "(2 ^ 3) ^ 2",
        "-x1 ^ 2",
        "8 - (3 - 2)",
        "1 / (2 / 4)",
        "exp(-t) * psi_getoor(1, 1.5) - exp(-4 * t) * phi_bump(1, 1.5) ^ 4",
        "cos(x1) * cos(x2) * indicator_box(-1.5707963, 1.5707963)",
        "pospart(1 - norm2())",
    ]

    @pytest.mark.parametrize("src", CASES)
    def test_round_trip(self, src):
        ast = parse_expression(src, 2)
        assert parse_expression(to_source(ast), 2) == ast

    @given(st.recursive(
        st.one_of(
            st.floats(min_value=0.0, max_value=100.0, allow_nan=False),
            st.just("t"), st.just("x1"), st.just("x2"),
        ).map(lambda v: Const(float(v)) if isinstance(v, float)
              else (VarT() if v == "t" else VarX(int(v[1:])))),
        lambda kids: st.one_of(
            kids.map(Neg),
            st.tuples(st.sampled_from("+-*/^"), kids, kids)
              .map(lambda t: BinOp(*t)),
            st.tuples(st.sampled_from(["exp", "cos", "sin", "pospart"]), kids)
              .map(lambda t: Call(t[0], (t[1],))),
        ),
        max_leaves=25,
    ))
    @settings(max_examples=200, deadline=None)
    def test_random_ast_round_trip(self, ast):
        assert parse_expression(to_source(ast), 2) == ast


class TestEval:
    def test_scalar_and_batch(self):
        ast = parse_expression("x1 + 2 * x2", 2)
        assert eval_expression(ast, 0.0, np.array([1.0, 3.0])) == 7.0
        pts = np.array([[1.0, 3.0], [0.0, 0.5]])
        np.testing.assert_allclose(eval_expression(ast, 0.0, pts), [7.0, 1.0])

    def test_time_dependence(self):
        ast = parse_expression("exp(-t) * x1", 1)
        assert eval_expression(ast, 2.0, np.array([3.0])) == pytest.approx(
            3.0 * math.exp(-2.0))

    def test_special_functions(self):
        x = np.array([0.4, -0.3])
        assert eval_expression(parse_expression("phi_bump(1, 1.5)", 2), 0.0,
                               x) == pytest.approx(phi_bump(1, 1.5, x))
        assert eval_expression(parse_expression("psi_getoor(1, 1.5)", 2), 0.0,
                               x) == pytest.approx(psi_getoor(1, 1.5, 2, x))
        assert eval_expression(parse_expression("norm2()", 2), 0.0,
                               x) == pytest.approx(0.25)

    def test_indicator_box(self):
        ast = parse_expression("indicator_box(-1, 1)", 2)
        pts = np.array([[0.0, 0.0], [1.0, 1.0], [1.1, 0.0], [0.0, -2.0]])
        np.testing.assert_array_equal(eval_expression(ast, 0.0, pts),
                                      [1.0, 1.0, 0.0, 0.0])

    def test_pospart(self):
        ast = parse_expression("pospart(x1)", 1)
        np.testing.assert_array_equal(
            eval_expression(ast, 0.0, np.array([[-2.0], [3.0]])), [0.0, 3.0])

    def test_division_by_zero(self):
        ast = parse_expression("1 / x1", 1)
        with pytest.raises(EvaluationError):
            eval_expression(ast, 0.0, np.array([0.0]))

    def test_negative_base_fractional_power(self):
        ast = parse_expression("x1 ^ 0.5", 1)
        with pytest.raises(EvaluationError):
            eval_expression(ast, 0.0, np.array([-1.0]))
        # integer exponents of negative bases are fine
        assert eval_expression(parse_expression("x1 ^ 3", 1), 0.0,
                               np.array([-2.0])) == -8.0

    def test_overflow_is_an_error(self):
        ast = parse_expression("exp(x1)", 1)
        with pytest.raises(EvaluationError):
            eval_expression(ast, 0.0, np.array([1e6]))

    @given(st.floats(-3.0, 3.0), st.floats(-3.0, 3.0), st.floats(0.0, 2.0))
    @settings(max_examples=100, deadline=None)
    def test_total_on_smooth_expression(self, x1, x2, t):
        ast = parse_expression(
            "exp(-t) * cos(x1) + sin(x2) * pospart(1 - norm2())", 2)
        val = eval_expression(ast, t, np.array([x1, x2]))
        assert math.isfinite(val)
