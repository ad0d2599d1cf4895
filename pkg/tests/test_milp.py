import itertools
import math

import pytest

from src.milp.backends import PulpBackend, ReferenceBackend, SolverLimits, SolveStatus, solve
from src.milp.encoders import (
    BigMConfig, add_epigraph_max, add_indicator_eq, add_max_equality, add_min_consecutive,
    add_semicontinuous, expression_bounds,
)
from src.milp.model import LinExpr, MipModel, lin_sum
from src.utils.errors import EmptyTerms, InvalidBounds, InvalidWindow, SolverError, UnboundedExpr

LIMITS = SolverLimits(time_limit=30, mip_gap=0.0)


def runs_ok(pattern, n_c):
    """Every maximal run of ones lasts at least n_c"""
    run = 0
    for bit in list(pattern) + [0]:
        if bit:
            run += 1
        else:
            if 0 < run < n_c:
                return False
            run = 0
    return True


class TestExpressions:
    def test_arithmetic_merges_terms(self):
        m = MipModel()
        x = m.add_var("x")
        expr = 2 * x + 3 - x
        assert expr.terms == {x.index: 1.0}
        assert expr.constant == 3.0

    def test_comparison_normalizes_constant_to_rhs(self):
        m = MipModel()
        x = m.add_var("x")
        con = x + 2 <= 5
        assert con.sense == "<="
        assert con.terms == {x.index: 1.0}
        assert con.rhs == 3.0

    def test_lin_sum_mixes_items(self):
        m = MipModel()
        x, y = m.add_var("x"), m.add_var("y")
        total = lin_sum([x, 2 * y, 1.5, x])
        assert total.terms == {x.index: 2.0, y.index: 2.0}
        assert total.constant == 1.5

    def test_quadratic_is_rejected(self):
        m = MipModel()
        x = m.add_var("x")
        with pytest.raises(TypeError):
            (x + 1) * x

    def test_duplicate_and_inverted_variables(self):
        m = MipModel()
        m.add_var("x")
        with pytest.raises(ValueError):
            m.add_var("x")
        with pytest.raises(InvalidBounds):
            m.add_var("y", lb=2, ub=1)


class TestModel:
    def test_violations_report_bounds_and_rows(self):
        m = MipModel()
        x = m.add_var("x", 0, 1)
        m.add_constraint(x >= 0.5, name="half")
        found = dict(m.violations({"x": 2.0}))
        assert "ub:x" in found
        assert not m.violations({"x": 0.75})
        assert "half" in dict(m.violations({"x": 0.25}))

    def test_lp_text_lists_binaries(self):
        m = MipModel(name="toy")
        x = m.add_var("x", 0, 4)
        b = m.add_binary("b")
        m.add_constraint(x <= 4 * b, name="gate")
        m.maximize(x)
        text = m.to_lp()
        assert text.startswith("Maximize")
        assert " gate: 1 x - 4 b <= 0" in text
        assert "Binary\n b\n" in text

    def test_arrays_flip_sign_for_maximization(self):
        m = MipModel()
        x = m.add_var("x", 0, 1)
        m.maximize(3 * x + 1)
        arrays = m.to_arrays()
        assert arrays.c[x.index] == -3.0
        assert arrays.c0 == -1.0


class TestEncoders:
    def test_expression_bounds(self):
        m = MipModel()
        x = m.add_var("x", 0, 10)
        y = m.add_var("y", -2, 3)
        assert expression_bounds(m, x - 2 * y + 1) == (-5.0, 15.0)

    def test_semicontinuous_max(self):
        m = MipModel()
        x = m.add_var("x", 0, 10)
        b = m.add_binary("b")
        add_semicontinuous(m, x, b, 2.0, 5.0, "sc")
        m.maximize(x)
        assert solve(m, ReferenceBackend(), LIMITS).objective == pytest.approx(5.0)

    def test_semicontinuous_off_forces_zero(self):
        m = MipModel()
        x = m.add_var("x", 0, 10)
        b = m.add_binary("b", fixed=0)
        add_semicontinuous(m, x, b, 2.0, 5.0, "sc")
        m.maximize(x)
        assert solve(m, ReferenceBackend(), LIMITS).value(x) == pytest.approx(0.0)

    def test_semicontinuous_gap_is_excluded(self):
        m = MipModel()
        x = m.add_var("x", 0, 10)
        b = m.add_binary("b")
        add_semicontinuous(m, x, b, 2.0, 5.0, "sc")
        m.add_constraint(x <= 1.0)
        m.maximize(x)
        assert solve(m, ReferenceBackend(), LIMITS).objective == pytest.approx(0.0)

    def test_semicontinuous_rejects_bad_range(self):
        m = MipModel()
        x = m.add_var("x")
        b = m.add_binary("b")
        with pytest.raises(InvalidBounds):
            add_semicontinuous(m, x, b, 3.0, 2.0, "sc")

    def test_epigraph_of_constants(self):
        m = MipModel()
        y = m.add_var("y", -math.inf, math.inf)
        add_epigraph_max(m, [LinExpr(constant=3.0), LinExpr(constant=7.0)], y, "epi")
        m.minimize(y)
        assert solve(m, ReferenceBackend(), LIMITS).objective == pytest.approx(7.0)

    def test_epigraph_needs_terms(self):
        m = MipModel()
        with pytest.raises(EmptyTerms):
            add_epigraph_max(m, [], m.add_var("y"), "epi")

    def test_max_equality_resists_upward_pressure(self):
        m = MipModel()
        y = m.add_var("y", -math.inf, math.inf)
        add_max_equality(m, [LinExpr(constant=3.0), LinExpr(constant=7.0)], y, "mx")
        m.maximize(y)
        assert solve(m, ReferenceBackend(), LIMITS).objective == pytest.approx(7.0)

    def test_max_equality_tracks_variables(self):
        m = MipModel()
        a = m.add_var("a", 0, 4)
        b = m.add_var("b", 0, 6)
        y = m.add_var("y", -math.inf, math.inf)
        add_max_equality(m, [a, b], y, "mx")
        m.add_constraint(a == 3.0)
        m.add_constraint(b == 2.0)
        m.maximize(y)
        assert solve(m, ReferenceBackend(), LIMITS).value(y) == pytest.approx(3.0)

    def test_max_equality_needs_finite_bounds(self):
        m = MipModel()
        a = m.add_var("a")
        with pytest.raises(UnboundedExpr):
            add_max_equality(m, [a, LinExpr(constant=1.0)], m.add_var("y"), "mx")

    @pytest.mark.parametrize("fixed, expected", [(1, 4.0), (0, 10.0)])
    def test_indicator_equality(self, fixed, expected):
        m = MipModel()
        x = m.add_var("x", 0, 10)
        y = m.add_var("y", 0, 4)
        b = m.add_binary("b", fixed=fixed)
        add_indicator_eq(m, b, x - y, None, "ind")
        m.maximize(x)
        assert solve(m, ReferenceBackend(), LIMITS).objective == pytest.approx(expected)

    def test_indicator_vacuous_with_wide_config(self):
        m = MipModel()
        x = m.add_var("x", -50, 50)
        b = m.add_binary("b", fixed=0)
        add_indicator_eq(m, b, x, BigMConfig(-100, 100), "ind")
        m.maximize(x)
        assert solve(m, ReferenceBackend(), LIMITS).objective == pytest.approx(50.0)

    def test_indicator_rejects_tight_config(self):
        m = MipModel()
        x = m.add_var("x", -50, 50)
        b = m.add_binary("b")
        with pytest.raises(InvalidBounds):
            add_indicator_eq(m, b, x, BigMConfig(-10, 10), "ind")

    def test_big_m_pair_must_straddle_zero(self):
        with pytest.raises(InvalidBounds):
            BigMConfig(1.0, 2.0)

    @pytest.mark.parametrize("horizon, n_c", [(h, n) for h in range(1, 9) for n in range(1, 5) if n <= h])
    def test_min_consecutive_matches_run_length_filter(self, horizon, n_c):
        backend = ReferenceBackend()
        for pattern in itertools.product((0, 1), repeat=horizon):
            m = MipModel()
            bits = [m.add_binary(f"b_{t}", fixed=v) for t, v in enumerate(pattern)]
            add_min_consecutive(m, bits, n_c, "run")
            status = solve(m, backend, LIMITS).status
            assert (status == SolveStatus.OPTIMAL) == runs_ok(pattern, n_c), pattern

    def test_min_consecutive_window_checks(self):
        m = MipModel()
        bits = [m.add_binary(f"b_{t}") for t in range(3)]
        with pytest.raises(InvalidWindow):
            add_min_consecutive(m, bits, 4, "run")
        with pytest.raises(InvalidWindow):
            add_min_consecutive(m, bits, 0, "run")


def knapsack() -> MipModel:
    m = MipModel(name="knapsack")
    values, weights = (4, 3, 5), (3, 2, 4)
    items = [m.add_binary(f"x_{i}") for i in range(3)]
    m.add_constraint(lin_sum(w * x for w, x in zip(weights, items)) <= 6)
    m.maximize(lin_sum(v * x for v, x in zip(values, items)))
    return m


class TestBackends:
    def test_empty_model(self):
        solution = solve(MipModel(), ReferenceBackend(), LIMITS)
        assert solution.status == SolveStatus.OPTIMAL
        assert solution.objective == 0.0

    def test_knapsack_by_enumeration(self):
        m = knapsack()
        solution = solve(m, ReferenceBackend(), LIMITS)
        assert solution.objective == pytest.approx(8.0)
        assert [solution.value(f"x_{i}") for i in range(3)] == [0.0, 1.0, 1.0]
        assert solution.stats["violations"] == 0

    def test_infeasible(self):
        m = MipModel()
        x = m.add_var("x", 0, 5)
        m.add_constraint(x >= 2)
        m.add_constraint(x <= 1)
        m.minimize(x)
        assert solve(m, ReferenceBackend(), LIMITS).status == SolveStatus.INFEASIBLE

    def test_unbounded(self):
        m = MipModel()
        x = m.add_var("x")
        m.maximize(x)
        assert solve(m, ReferenceBackend(), LIMITS).status == SolveStatus.UNBOUNDED

    def test_reference_refuses_large_models(self):
        m = MipModel()
        for i in range(5):
            m.add_binary(f"b_{i}")
        with pytest.raises(SolverError):
            solve(m, ReferenceBackend(max_binaries=4), LIMITS)

    def test_pulp_matches_reference(self):
        pytest.importorskip("pulp")
        m = knapsack()
        assert solve(m, PulpBackend(), LIMITS).objective == pytest.approx(
            solve(knapsack(), ReferenceBackend(), LIMITS).objective, abs=1e-6)
