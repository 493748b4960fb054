import math

import numpy as np
import pytest

from fliess import Series, symexpr as se
from fliess.errors import SimulationError
from fliess.realization import (
    ControlSignal,
    Realization,
    fliess_eval,
    generating_series,
    growth_estimate,
    lie_derivative,
    rk4_simulate,
    uniform_grid,
)
from fliess.vehicle import CarParams, augmented_realization, car_realization


def double_integrator(z10=0.3, z20=-1.2):
    z2 = se.var(1)
    return Realization(
        fields=[[z2, se.ZERO], [se.ZERO, se.ONE]],
        outputs=[se.var(0)],
        z0=(z10, z20),
    )


def bilinear_pair():
    # dz1 = u1, dz2 = z1 u2, y = z2
    return Realization(
        fields=[[se.ZERO, se.ZERO], [se.ONE, se.ZERO], [se.ZERO, se.var(0)]],
        outputs=[se.var(1)],
        z0=(0.0, 0.0),
    )


class TestLieDerivative:
    def test_hand_case(self, rng):
        z1, z2 = se.var(0), se.var(1)
        h = z1**2 * z2
        g = [z2, -z1]
        ld = lie_derivative(g, h)
        for pt in rng.uniform(-1, 1, size=(6, 2)):
            want = 2 * pt[0] * pt[1] * pt[1] - pt[0] ** 3
            assert se.evaluate(ld, pt) == pytest.approx(want, rel=1e-12, abs=1e-12)

    def test_zero_field_component_skipped(self):
        h = se.sin(se.var(0))
        assert lie_derivative([se.ZERO, se.ZERO], h).is_const(0.0)


class TestGeneratingSeries:
    def test_double_integrator_is_exact_polynomial(self):
        c = generating_series(double_integrator(0.3, -1.2), 6)
        want = Series(2, 6, {(): 0.3, (0,): -1.2, (0, 1): 1.0})
        assert c[0] == want

    def test_word_letter_order(self):
        # iterated integral of u1 inside u2 must land on the word (2, 1)
        c = generating_series(bilinear_pair(), 4)[0]
        terms = c.terms_dict()
        assert terms == {(2, 1): 1.0}

    def test_alphabet_and_degree(self):
        c = generating_series(double_integrator(), 3)
        assert c.alphabet_size == 2
        assert c.max_degree == 3

    def test_car_low_order_closed_forms(self, rng):
        z30, z40 = 0.35, -0.4
        init = (1.5, -0.8, z30, z40)
        params = CarParams()
        c = generating_series(car_realization(init, params), 3)
        co = math.cos(z30 + z40)
        si = math.sin(z30 + z40)
        big_t = math.sin((1 - params.k) * z40) / (
            params.length * math.cos(params.k * z40)
        )
        t1 = c[0].terms_dict()
        t2 = c[1].terms_dict()
        assert t1[()] == pytest.approx(1.5)
        assert t1[(1,)] == pytest.approx(co, rel=1e-12)
        assert (2,) not in t1
        assert t1[(1, 1)] == pytest.approx(-si * big_t, rel=1e-12)
        assert t1[(1, 2)] == pytest.approx(-si, rel=1e-12)
        assert (2, 1) not in t1
        assert t2[(1,)] == pytest.approx(si, rel=1e-12)
        assert t2[(1, 1)] == pytest.approx(co * big_t, rel=1e-12)
        assert t2[(1, 2)] == pytest.approx(co, rel=1e-12)

    def test_extended_car_decoupling_words(self):
        z30, z40, z50 = 0.2, 0.5, 1.7
        init = (0.0, 0.0, z30, z40, z50)
        c = generating_series(augmented_realization(init), 3)
        co = math.cos(z30 + z40)
        si = math.sin(z30 + z40)
        params = CarParams()
        big_t = math.sin((1 - params.k) * z40) / math.cos(params.k * z40)
        t1 = c[0].terms_dict()
        t2 = c[1].terms_dict()
        assert t1[(0,)] == pytest.approx(z50 * co, rel=1e-12)
        assert t2[(0,)] == pytest.approx(z50 * si, rel=1e-12)
        assert (1,) not in t1 and (2,) not in t1
        assert t1[(0, 1)] == pytest.approx(-z50 * si, rel=1e-12)
        assert t1[(0, 2)] == pytest.approx(co, rel=1e-12)
        assert t2[(0, 1)] == pytest.approx(z50 * co, rel=1e-12)
        assert t2[(0, 2)] == pytest.approx(si, rel=1e-12)
        assert t1[(0, 0)] == pytest.approx(-(z50**2) * si * big_t, rel=1e-12)
        assert t2[(0, 0)] == pytest.approx(z50**2 * co * big_t, rel=1e-12)
        # words (1, 0) and (2, 0) start from states the inputs cannot move
        assert (1, 0) not in t1 and (2, 0) not in t1


class TestGrowthEstimate:
    def test_bound_holds_on_own_series(self):
        init = (0.4, -0.3, 0.2, 0.5, 1.7)
        c = generating_series(augmented_realization(init), 5)
        k_c, m_c = growth_estimate(c)
        for comp in c:
            for w, v in comp.terms_dict().items():
                bound = k_c * m_c ** len(w) * math.factorial(len(w))
                assert abs(v) <= bound * (1 + 1e-12)

    def test_scalar_input_accepted(self, rng):
        s = Series(2, 3, {(): 2.0, (0, 1): -5.0})
        k_c, m_c = growth_estimate(s)
        assert k_c == 2.0 and m_c >= 1.0


class TestControlSignal:
    def test_polynomial_eval(self):
        u = ControlSignal.from_monomial([[1.0, 0.0, 3.0], [0.5]], horizon=2.0)
        t = np.array([0.0, 0.5, 1.0])
        vals = u.eval(t)
        assert vals.shape == (2, 3)
        assert np.allclose(vals[0], 1.0 + 3.0 * t**2)
        assert np.allclose(vals[1], 0.5)

    def test_taylor_divides_factorials(self):
        u = ControlSignal.from_taylor([[0.0, 0.0, 4.0]], horizon=1.0)
        # series convention: u(t) = 4 t^2 / 2!
        assert u.eval(1.0)[0] == pytest.approx(2.0)

    def test_constant(self):
        u = ControlSignal.constant([1.5, 0.8], horizon=0.25)
        assert np.allclose(u.eval(0.2), [1.5, 0.8])
        assert u.n_inputs == 2

    def test_samples_interpolate(self):
        u = ControlSignal.from_samples([0.0, 1.0], [[0.0, 2.0]])
        assert u.eval(0.25)[0] == pytest.approx(0.5)
        assert u.horizon == 1.0

    def test_samples_shape_check(self):
        with pytest.raises(ValueError):
            ControlSignal.from_samples([0.0, 1.0], [[0.0, 1.0, 2.0]])


class TestFliessEval:
    def test_double_integrator_cubic(self):
        c = generating_series(double_integrator(0.0, 0.0), 4)[0]
        grid = uniform_grid(0.5, density=8000)
        u = ControlSignal.from_monomial([[0.0, 1.0]], horizon=0.5)  # u = t
        y = fliess_eval(c, u, grid)
        assert np.max(np.abs(y - grid**3 / 6.0)) < 1e-7

    def test_drift_only_word_is_time_power(self):
        s = Series.monomial((0, 0, 0), 1, 3)
        grid = uniform_grid(1.0, density=4000)
        y = fliess_eval(s, np.zeros((0, grid.size)), grid)
        assert np.max(np.abs(y - grid**3 / 6.0)) < 1e-7

    def test_vector_series_gives_columns(self):
        r = bilinear_pair()
        r = Realization(fields=r.fields, outputs=[se.var(0), se.var(1)], z0=r.z0)
        c = generating_series(r, 4)
        grid = uniform_grid(0.5, density=4000)
        u = ControlSignal.constant([1.0, 1.0], horizon=0.5)
        y = fliess_eval(c, u, grid)
        assert y.shape == (grid.size, 2)
        assert np.max(np.abs(y[:, 0] - grid)) < 1e-7
        assert np.max(np.abs(y[:, 1] - grid**2 / 2.0)) < 1e-7

    def test_shape_mismatch_raises(self):
        c = generating_series(bilinear_pair(), 2)
        grid = uniform_grid(0.5)
        with pytest.raises(ValueError):
            fliess_eval(c, np.ones((1, grid.size)), grid)


class TestSimulation:
    def test_rk4_fourth_order_convergence(self):
        # dz = -z^2 with z(0) = 1 has closed form 1/(1+t)
        r = Realization(
            fields=[[-se.power(se.var(0), 2)]], outputs=[se.var(0)], z0=(1.0,)
        )
        errs = []
        for steps in (20, 40):
            traj = rk4_simulate(r, None, 1.0, steps)
            errs.append(abs(traj.final_state()[0] - 0.5))
        ratio = errs[0] / errs[1]
        assert 12.0 < ratio < 20.0

    @pytest.mark.filterwarnings("ignore:overflow")
    def test_divergence_raises(self):
        r = Realization(
            fields=[[se.power(se.var(0), 2)]], outputs=[se.var(0)], z0=(3.0,)
        )
        with pytest.raises(SimulationError):
            rk4_simulate(r, None, 2.0, 20)

    def test_car_against_fliess_series(self):
        init = (0.0, 0.0, 0.0, 0.2)
        r = car_realization(init)
        u = ControlSignal.constant([1.0, 0.3], horizon=0.1)
        traj = rk4_simulate(r, u, 0.1, 200)
        c = generating_series(r, 6)
        grid = uniform_grid(0.1, density=2000)
        y = fliess_eval(c, u, grid)
        assert abs(y[-1, 0] - traj.outputs[-1, 0]) < 1e-8
        assert abs(y[-1, 1] - traj.outputs[-1, 1]) < 1e-8

    def test_csv_round_trip(self, tmp_path):
        r = double_integrator(0.0, 1.0)
        u = ControlSignal.constant([0.0], horizon=1.0)
        traj = rk4_simulate(r, u, 1.0, 10)
        path = tmp_path / "traj.csv"
        traj.to_csv(path)
        data = np.genfromtxt(path, delimiter=",", names=True)
        assert set(data.dtype.names) == {"t", "z1", "z2", "y1"}
        assert np.allclose(data["z1"], traj.states[:, 0])
        assert np.allclose(data["y1"], traj.outputs[:, 0])


class TestRealizationObject:
    def test_field_shape_validation(self):
        with pytest.raises(ValueError):
            Realization(fields=[[se.ZERO], [se.ONE, se.ZERO]], outputs=[se.var(0)], z0=(0.0,))

    def test_with_initial_state(self):
        r = double_integrator(0.0, 0.0)
        r2 = r.with_initial_state((5.0, 6.0))
        assert r2.z0 == (5.0, 6.0)
        assert r2.fields == r.fields

    def test_json_round_trip(self):
        r = augmented_realization((0.1, -0.2, 0.3, 0.4, 1.5))
        r2 = Realization.from_json_dict(r.to_json_dict())
        assert r2.z0 == r.z0
        c1 = generating_series(r, 4)
        c2 = generating_series(r2, 4)
        assert c1.max_abs_diff(c2) < 1e-12
