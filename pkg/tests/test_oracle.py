"""Self-consistency of the brute-force reference solvers."""

import numpy as np
import pytest

from aircompsim.instances import random_fdm_instance, random_tdm_instance
from aircompsim.oracle import (finite_difference_check, grid_tdm_md,
                               grid_tdm_mse, multistart_primal_fdm)


class TestGridTdmMse:
    def test_single_user_analytic(self):
        # K=1 scalar problem with a known optimum (MMSE receive at full power).
        h, P, nu, var, noise = 1.3, 2.0, 1.0, 0.8, 0.25
        g = np.sqrt(P) * h / nu
        expect = var * noise / (var * g * g + noise)
        res = grid_tdm_mse(np.array([h + 0j]), np.array([P]), np.array([nu]),
                           var, noise)
        assert res.objective == pytest.approx(expect, rel=1e-4)

    def test_symmetric_instance_symmetric_argopt(self):
        res = grid_tdm_mse(np.array([1.0 + 0j, 1.0 + 0j]), np.ones(2),
                           np.ones(2), 1.0, 0.3)
        s = res.argopt["transmit_scaled"]
        assert s[0] == pytest.approx(s[1], rel=1e-6)

    def test_never_below_trivial_lower_bound(self):
        # Amplified noise alone already costs a^2 noise at the chosen receive
        # gain, so the objective is positive; and turning everything off gives
        # K var, an upper bound the optimum must improve on.
        rng = np.random.default_rng(80)
        inst = random_tdm_instance(3, rng)
        res = grid_tdm_mse(inst["gains"], inst["budgets"], inst["nu"],
                           inst["var"], inst["noise_var"])
        assert 0 < res.objective <= 3 * inst["var"] + 1e-12

    def test_refinement_shrinks_cell(self):
        inst = random_tdm_instance(2, np.random.default_rng(81))
        coarse = grid_tdm_mse(inst["gains"], inst["budgets"], inst["nu"],
                              inst["var"], inst["noise_var"], refinements=0)
        fine = grid_tdm_mse(inst["gains"], inst["budgets"], inst["nu"],
                            inst["var"], inst["noise_var"], refinements=3)
        assert fine.cell["receive"] < coarse.cell["receive"]
        assert fine.objective <= coarse.objective + 1e-12


class TestGridTdmMd:
    def test_equal_links_full_power(self):
        u = np.full(3, 0.8)
        res = grid_tdm_md(u, 1.0, 0.3)
        s = 3 * 0.8
        expect = s * s / (3 * 0.8 ** 2 + 0.3)
        assert res.objective == pytest.approx(expect, rel=1e-4)
        np.testing.assert_allclose(res.argopt["c"], 0.8, rtol=1e-3)

    def test_routes_agree(self):
        rng = np.random.default_rng(82)
        u = rng.uniform(0.1, 3.0, 3)
        res = grid_tdm_md(u, 1.2, 0.4)
        assert res.argopt["route_box"] == pytest.approx(
            res.argopt["route_budget"], rel=1e-3)

    def test_single_user_closed_form(self):
        u = np.array([1.7])
        res = grid_tdm_md(u, 2.0, 0.5)
        expect = 2.0 * u[0] ** 2 / (u[0] ** 2 + 0.5)
        assert res.objective == pytest.approx(expect, rel=1e-4)


class TestMultistartFdm:
    def test_starts_agree_on_small_instance(self):
        # The K=1, M=1 computation problem is unimodal: every converged start
        # should land on the same objective.
        rng = np.random.default_rng(83)
        inst = random_fdm_instance(1, 1, rng)
        res = multistart_primal_fdm(inst["channels"].gains, inst["budgets"],
                                    inst["nu_sq"], inst["var_per_dim"],
                                    inst["noise_var"], objective="mse",
                                    starts=8, rng=rng)
        per_start = np.asarray(res["per_start"])
        assert np.max(per_start) - np.min(per_start) < 1e-6 * (1 + np.min(per_start))

    def test_budget_respected(self):
        rng = np.random.default_rng(84)
        inst = random_fdm_instance(2, 3, rng)
        res = multistart_primal_fdm(inst["channels"].gains, inst["budgets"],
                                    inst["nu_sq"], inst["var_per_dim"],
                                    inst["noise_var"], objective="mse",
                                    starts=6, rng=rng)
        bmag = np.asarray(res["transmit_mag"])
        used = np.sum(bmag ** 2 * inst["nu_sq"], axis=-1)
        assert np.all(used <= inst["budgets"] * (1 + 1e-6))

    def test_md_objective_positive(self):
        rng = np.random.default_rng(85)
        inst = random_fdm_instance(2, 2, rng)
        res = multistart_primal_fdm(inst["channels"].gains, inst["budgets"],
                                    inst["nu_sq"], inst["var_per_dim"],
                                    inst["noise_var"],
                                    delta_min_sq=inst["delta_min_sq"],
                                    objective="md", starts=6, rng=rng)
        assert res["objective"] > 0


class TestFiniteDifference:
    def test_mse_gradients(self):
        rng = np.random.default_rng(86)
        inst = random_fdm_instance(2, 3, rng)
        err = finite_difference_check(inst["channels"].gains, inst["budgets"],
                                      inst["nu_sq"], inst["var_per_dim"],
                                      inst["noise_var"], objective="mse",
                                      rng=rng)
        assert err < 1e-5

    def test_md_gradients(self):
        rng = np.random.default_rng(87)
        inst = random_fdm_instance(2, 3, rng)
        err = finite_difference_check(inst["channels"].gains, inst["budgets"],
                                      inst["nu_sq"], inst["var_per_dim"],
                                      inst["noise_var"],
                                      delta_min_sq=inst["delta_min_sq"],
                                      objective="md", rng=rng)
        assert err < 1e-5
