import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from strongobs.exceptions import ContractError, DomainError, EvaluationError
from strongobs.lorenz96 import Lorenz96Config, output_matrix
from strongobs.signals import (MatrixSignal, TimeGrid, boundedness_probe,
                               load_signal_csv, stack_norms, write_signal_csv)


def scalar_sin():
    return MatrixSignal.analytic(lambda t: [[math.sin(t)]], (1, 1),
                                 derivative=lambda t: [[math.cos(t)]])


class TestTimeGrid:
    def test_from_span(self):
        g = TimeGrid.from_span(0.0, 1.0, 0.25)
        assert g.count == 5
        assert g.t_end == pytest.approx(1.0)
        np.testing.assert_allclose(g.times, [0, 0.25, 0.5, 0.75, 1.0])

    def test_step_must_divide_span(self):
        with pytest.raises(ContractError):
            TimeGrid.from_span(0.0, 1.0, 0.3)

    @pytest.mark.parametrize("step,count", [(0.0, 5), (-1.0, 5), (0.1, 1)])
    def test_invalid(self, step, count):
        with pytest.raises(ContractError):
            TimeGrid(0.0, step, count)

    def test_refined_and_truncated(self):
        g = TimeGrid.from_span(0.0, 2.0, 0.5)
        assert g.refined().count == 9 and g.refined().step == 0.25
        assert g.truncated(3).t_end == pytest.approx(1.0)


class TestEval:
    def test_constant_identity(self):
        s = MatrixSignal.constant(np.eye(2))
        np.testing.assert_array_equal(s.eval(3.7), np.eye(2))

    def test_linear_midpoint(self):
        g = TimeGrid(0.0, 1.0, 2)
        s = MatrixSignal.sampled(g, np.array([0.0, 2.0]).reshape(2, 1, 1))
        assert s.eval(0.5)[0, 0] == 1.0

    def test_lorenz_output_matrix(self):
        C = MatrixSignal.constant(output_matrix(Lorenz96Config()))
        M = C.eval(12.3)
        assert M.shape == (5, 18)
        for r, i in enumerate((1, 5, 9, 12, 15)):
            np.testing.assert_array_equal(M[r], np.eye(18)[i - 1])

    def test_out_of_domain(self):
        g = TimeGrid(0.0, 0.1, 11)
        s = MatrixSignal.sampled(g, np.zeros((11, 1, 1)))
        with pytest.raises(DomainError):
            s.eval(1.5)
        with pytest.raises(DomainError):
            s.eval(-0.01)

    def test_non_finite(self):
        s = MatrixSignal.analytic(lambda t: [[np.log(t)]], (1, 1))
        with np.errstate(divide="ignore"), pytest.raises(EvaluationError):
            s.eval(0.0)

    def test_sample_matches_eval(self, rng):
        g = TimeGrid.from_span(0.0, 1.0, 0.1)
        vals = rng.normal(size=(g.count, 2, 3))
        for interp in ("linear", "cubic"):
            s = MatrixSignal.sampled(g, vals, interp=interp)
            ts = rng.uniform(0, 1, 7)
            batch = s.sample(ts)
            for t, m in zip(ts, batch):
                np.testing.assert_allclose(s.eval(t), m, rtol=1e-13, atol=1e-13)

    def test_cubic_reproduces_cubic(self):
        g = TimeGrid.from_span(0.0, 2.0, 0.1)
        f = lambda t: t ** 3 - 2 * t
        s = MatrixSignal.sampled(g, f(g.times).reshape(-1, 1, 1), interp="cubic")
        assert abs(s.eval(1.234)[0, 0] - f(1.234)) < 1e-3

    def test_sampled_values_read_only(self):
        g = TimeGrid(0.0, 1.0, 3)
        s = MatrixSignal.sampled(g, np.zeros((3, 1, 1)))
        with pytest.raises(ValueError):
            s.values[0, 0, 0] = 1.0

    def test_deterministic(self):
        s = scalar_sin()
        assert np.array_equal(s.eval(0.3), s.eval(0.3))
        assert np.array_equal(s.derivative(0.3), s.derivative(0.3))


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(-1e3, 1e3), min_size=2, max_size=30),
       st.floats(1e-3, 10.0))
def test_linear_interpolation_exact_at_samples(vals, step):
    g = TimeGrid(0.5, step, len(vals))
    s = MatrixSignal.sampled(g, np.array(vals).reshape(-1, 1, 1))
    for k, v in enumerate(vals):
        assert s.eval(g.times[k])[0, 0] == v


class TestDerivative:
    def test_constant_zero(self):
        s = MatrixSignal.constant([[1.0, 2.0], [3.0, 4.0]])
        np.testing.assert_array_equal(s.derivative(1.0), np.zeros((2, 2)))

    def test_analytic(self):
        assert scalar_sin().derivative(0.0)[0, 0] == 1.0

    def test_sampled_sin_central(self):
        g = TimeGrid.from_span(0.0, 2.0, 1e-3)
        s = MatrixSignal.sampled(g, np.sin(g.times).reshape(-1, 1, 1))
        assert abs(s.derivative(math.pi / 4)[0, 0] - 0.7071) < 1e-4

    def test_endpoint_one_sided(self):
        g = TimeGrid.from_span(0.0, 1.0, 1e-3)
        s = MatrixSignal.sampled(g, np.exp(g.times).reshape(-1, 1, 1))
        assert abs(s.derivative(0.0)[0, 0] - 1.0) < 1e-5
        assert abs(s.derivative(1.0)[0, 0] - math.e) < 1e-5

    @pytest.mark.parametrize("h", [1e-2, 5e-3, 1e-3])
    def test_quadratic_second_order(self, h):
        g = TimeGrid.from_span(0.0, 1.0, h)
        f = lambda t: 3 * t ** 2 - t + 2
        s = MatrixSignal.sampled(g, f(g.times).reshape(-1, 1, 1))
        for t in (0.3, 0.5, 0.71):
            exact = 6 * t - 1
            assert abs(s.derivative(t)[0, 0] - exact) <= 10 * h ** 2 * abs(exact)

    def test_analytic_without_derivative_uses_fd(self):
        s = MatrixSignal.analytic(lambda t: [[t ** 2]], (1, 1))
        assert abs(s.derivative(1.5)[0, 0] - 3.0) < 1e-8

    def test_sample_derivative_batch(self):
        g = TimeGrid.from_span(0.0, 1.0, 1e-2)
        s = MatrixSignal.sampled(g, np.sin(g.times).reshape(-1, 1, 1))
        d = s.sample_derivative(g.times)[:, 0, 0]
        assert np.max(np.abs(d - np.cos(g.times))) < 1e-4


class TestProbe:
    def test_identity(self):
        g = TimeGrid.from_span(0, 1, 0.1)
        assert boundedness_probe(MatrixSignal.constant(np.eye(3)), g) == pytest.approx(1.0)

    def test_two_sin(self):
        g = TimeGrid.from_span(0, 10, 1e-2)
        s = MatrixSignal.analytic(lambda t: [[2 * math.sin(t)]], (1, 1))
        assert abs(boundedness_probe(s, g) - 2.0) <= 1e-3

    def test_zero(self):
        g = TimeGrid.from_span(0, 1, 0.1)
        assert boundedness_probe(MatrixSignal.constant(np.zeros((2, 2))), g) == 0.0

    def test_non_finite_reports_time(self):
        g = TimeGrid.from_span(0, 1, 0.5)
        s = MatrixSignal.analytic(lambda t: [[np.inf if t > 0.7 else 0.0]], (1, 1))
        with pytest.raises(EvaluationError) as ei:
            boundedness_probe(s, g)
        assert ei.value.t == pytest.approx(1.0)

    def test_stack_norms_empty(self):
        np.testing.assert_array_equal(stack_norms(np.zeros((3, 2, 0))), np.zeros(3))


class TestCsv:
    def test_roundtrip(self, tmp_path, rng):
        g = TimeGrid.from_span(0.0, 1.0, 0.125)
        s = MatrixSignal.sampled(g, rng.normal(size=(g.count, 2, 3)))
        path = tmp_path / "sig.csv"
        write_signal_csv(path, s)
        back = load_signal_csv(path, 2, 3)
        np.testing.assert_array_equal(back.values, s.values)
        assert back.grid.same_as(g)

    def test_header_required(self, tmp_path):
        path = tmp_path / "x.csv"
        path.write_text("0,1\n1,2\n")
        with pytest.raises(ContractError, match="header"):
            load_signal_csv(path, 1, 1)

    def test_nonuniform_rejected(self, tmp_path):
        path = tmp_path / "x.csv"
        path.write_text("t,m\n0,1\n1,2\n3,4\n")
        with pytest.raises(ContractError, match="uniform"):
            load_signal_csv(path, 1, 1)

    def test_column_count(self, tmp_path):
        path = tmp_path / "x.csv"
        path.write_text("t,a,b\n0,1,2\n1,2,3\n")
        with pytest.raises(ContractError):
            load_signal_csv(path, 2, 2)


def test_sampled_midpoint_table_feeds_rk4_stages():
    from strongobs.integrate import stage_tables
    grid = TimeGrid.from_span(0.0, 1.0, 0.25)
    f = lambda t: np.sin(3 * np.asarray(t))[:, None, None]
    sig = MatrixSignal.sampled(grid, f(grid.times), midpoints=f(grid.midpoints))
    nodes, mids = stage_tables(sig, grid)
    np.testing.assert_array_equal(mids, f(grid.midpoints))
    # on another grid the table does not apply
    other = TimeGrid.from_span(0.0, 1.0, 0.5)
    _, mids2 = stage_tables(sig, other)
    np.testing.assert_allclose(mids2, sig.sample(other.midpoints))
