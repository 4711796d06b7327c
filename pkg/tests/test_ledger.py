import math

import numpy as np
import pytest

from gnsdecay.heat import evolve_box
from gnsdecay.ledger import (
    difference_field,
    trilinear_term,
    u_energy_residual,
    w_inequality_check,
)
from gnsdecay.solver import SolverConfig, make_initial_data, simulate
from gnsdecay.spectral import GridSpec, PhysicalParams, SpectralVectorField, l2_sq, lp_pow

TG_PARAMS = PhysicalParams(1.0, 3.0, 1.0)


def run(u0, dt, t_end=1.0, params=TG_PARAMS, **kw):
    cfg = SolverConfig(u0.grid, params, dt=dt, t_end=t_end, record_every=dt, **kw)
    return simulate(u0, cfg)


@pytest.fixture(scope="module")
def tg():
    return make_initial_data("taylor_green", GridSpec(16))


@pytest.fixture(scope="module")
def tg_runs(tg):
    return {dt: run(tg, dt) for dt in (0.02, 0.01)}


class TestDifferenceField:
    def test_zero_at_start(self, tg):
        assert np.all(difference_field(tg, tg, 0.8, 0.0).coeffs == 0)

    def test_vanishes_without_nonlinearity(self, tg):
        rec = run(tg, 0.05, params=PhysicalParams(0.9, 2.0, 1.0), advection=False, damping=False)
        bound = 1e-13 * math.sqrt(l2_sq(tg))
        assert max(math.sqrt(w) for w in rec.norm_series.w_l2_sq) <= bound

    def test_triangle_inequality(self, tg_runs):
        rec = tg_runs[0.01]
        u1 = rec.final
        w = difference_field(u1, rec.u0, 1.0, 1.0)
        v = evolve_box(rec.u0, 1.0, 1.0)
        nw, nu, nv = (math.sqrt(l2_sq(f)) for f in (w, u1, v))
        assert nw > 0
        assert nw <= nu + nv
        assert rec.norm_series.w_l2_sq[-1] == pytest.approx(nw**2, rel=1e-12)

    def test_grid_mismatch(self, tg):
        with pytest.raises(ValueError):
            difference_field(tg, SpectralVectorField.zeros(GridSpec(8)), 1.0, 0.1)


class TestEnergyResidual:
    def test_zero_trajectory(self):
        g = GridSpec(8)
        rec = run(SpectralVectorField.zeros(g), 0.1)
        assert np.all(u_energy_residual(rec, TG_PARAMS) == 0)

    def test_linear_single_mode(self):
        # E(t) = E0 exp(-2 t) for |k| = 1, alpha = 1; the residual is the
        # trapezoid error of that exponential, -E0 exp(-2t) (2 dt)^2 / 12 (1 + O(dt)).
        g = GridSpec(8)
        x = g.coordinates()
        zero = np.zeros(g.shape)
        u0 = SpectralVectorField.from_physical(g, np.stack([zero, np.sin(x[0]), zero]))
        params = PhysicalParams(1.0, 3.0, 0.0)
        res = {}
        for dt in (0.1, 0.05):
            rec = run(u0, dt, params=params, advection=False, damping=False)
            r = u_energy_residual(rec, params)
            t = rec.times[:-1]
            e0 = l2_sq(u0)
            exact = e0 * np.exp(-2 * t) * (
                (np.exp(-2 * dt) - 1) / dt + (1 + np.exp(-2 * dt))
            )
            np.testing.assert_allclose(r, exact, rtol=1e-9, atol=1e-12)
            res[dt] = np.max(np.abs(r))
        assert res[0.1] / res[0.05] == pytest.approx(4.0, rel=0.1)

    def test_second_order_on_taylor_green(self, tg_runs):
        r1 = np.max(np.abs(u_energy_residual(tg_runs[0.02], TG_PARAMS)))
        r2 = np.max(np.abs(u_energy_residual(tg_runs[0.01], TG_PARAMS)))
        assert r1 / r2 == pytest.approx(4.0, abs=0.8)


class TestWInequality:
    def test_linear_run_reduces_to_v_terms(self, tg):
        params = PhysicalParams(1.0, 3.0, 1.0)
        rec = run(tg, 0.05, params=params, advection=False, damping=False)
        report = w_inequality_check(rec, rec.u0, params, prefactor=1.0)
        assert report.ok
        # w terms vanish: LHS is the averaged ||u||^4_4 = ||v||^4_4
        assert max(abs(w) for w in rec.norm_series.w_l2_sq) < 1e-25
        v_pow = np.array([lp_pow(evolve_box(rec.u0, 1.0, t), 4.0) for t in rec.times])
        u_pow = np.array(rec.norm_series.l_beta_plus_1_pow)
        np.testing.assert_allclose(u_pow, v_pow, rtol=1e-12)
        assert np.all(report.w_inequality_margin >= 0)

    def test_zero_data(self):
        g = GridSpec(8)
        z = SpectralVectorField.zeros(g)
        rec = run(z, 0.1)
        report = w_inequality_check(rec, rec.u0, TG_PARAMS)
        assert np.all(report.w_inequality_margin == 0)
        assert report.ok
        assert report.min_prefactor == 0

    def test_taylor_green_no_violations(self, tg_runs):
        report = w_inequality_check(tg_runs[0.01], tg_runs[0.01].u0, TG_PARAMS, prefactor=4.0)
        assert report.ok
        assert report.min_prefactor <= 4.0
        assert len(report.times) == len(tg_runs[0.01].times) - 1

    def test_small_prefactor_reported(self, tg_runs):
        report = w_inequality_check(tg_runs[0.01], tg_runs[0.01].u0, TG_PARAMS, prefactor=4.0)
        needed = report.min_prefactor
        if needed > 0:
            tight = w_inequality_check(tg_runs[0.01], tg_runs[0.01].u0, TG_PARAMS, prefactor=0.5 * needed)
            assert not tight.ok

    def test_requires_difference_tracking(self, tg):
        cfg = SolverConfig(tg.grid, TG_PARAMS, dt=0.1, t_end=0.2, track_difference=False)
        rec = simulate(tg, cfg)
        with pytest.raises(ValueError, match="track_difference"):
            w_inequality_check(rec, rec.u0, TG_PARAMS)

    def test_rejects_nonpositive_prefactor(self, tg_runs):
        with pytest.raises(ValueError):
            w_inequality_check(tg_runs[0.02], tg_runs[0.02].u0, TG_PARAMS, prefactor=0.0)


class TestDiscreteMechanisms:
    @pytest.mark.parametrize("seed", [0, 1, 2])
    def test_trilinear_term_vanishes(self, seed):
        u = make_initial_data("low_freq_random", GridSpec(16), seed=seed)
        scale = l2_sq(u) ** 1.5
        assert abs(trilinear_term(u)) <= 1e-10 * scale

    def test_trilinear_term_vanishes_with_high_modes(self):
        g = GridSpec(16)
        rng = np.random.default_rng(5)
        from gnsdecay.spectral import leray_project

        u = leray_project(SpectralVectorField.from_physical(g, rng.standard_normal((3,) + g.shape)))
        assert abs(trilinear_term(u)) <= 1e-10 * l2_sq(u) ** 1.5
