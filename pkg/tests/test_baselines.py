"""Equal-split and truncated-inversion reference allocations."""

import numpy as np
import pytest

from aircompsim import aircomp
from aircompsim.baselines import channel_inversion, equal_allocation
from aircompsim.fdm import SolverOptions, comp_optimal_fdm
from aircompsim.instances import random_fdm_instance
from aircompsim.model import ChannelRealization


def rayleigh(K, M, rng):
    return ChannelRealization(
        gains=(rng.standard_normal((K, M)) + 1j * rng.standard_normal((K, M)))
        / np.sqrt(2))


class TestEqualAllocation:
    def test_budget_always_tight(self):
        rng = np.random.default_rng(50)
        ch = rayleigh(3, 5, rng)
        budgets = np.array([0.5, 1.0, 2.0])
        nu_sq = rng.uniform(0.5, 2.0, (3, 5))
        alloc = equal_allocation(ch, budgets, nu_sq, np.ones(5), 0.2)
        np.testing.assert_allclose(alloc.power_used(nu_sq), budgets, rtol=1e-12)

    def test_single_dim_full_power(self):
        ch = ChannelRealization(gains=np.array([[2.0 + 0j]]))
        alloc = equal_allocation(ch, np.array([1.5]), np.array([[1.0]]),
                                 np.array([1.0]), 0.1)
        assert abs(alloc.transmit[0, 0]) ** 2 == pytest.approx(1.5)

    def test_phase_conjugation(self):
        rng = np.random.default_rng(51)
        ch = rayleigh(2, 3, rng)
        alloc = equal_allocation(ch, np.ones(2), np.ones((2, 3)), np.ones(3), 0.1)
        prod = ch.gains * alloc.transmit
        np.testing.assert_allclose(prod.imag, 0.0, atol=1e-12)
        assert np.all(prod.real > 0)

    def test_deterministic(self):
        rng = np.random.default_rng(52)
        ch = rayleigh(2, 2, rng)
        a = equal_allocation(ch, np.ones(2), np.ones((2, 2)), np.ones(2), 0.1)
        b = equal_allocation(ch, np.ones(2), np.ones((2, 2)), np.ones(2), 0.1)
        np.testing.assert_array_equal(a.transmit, b.transmit)
        np.testing.assert_array_equal(a.receive, b.receive)


class TestChannelInversion:
    def test_strong_channels_under_budget(self):
        # Strong links hit the inversion branch below the cap, so the budget
        # goes unused.
        ch = ChannelRealization(gains=np.full((1, 4), 10.0 + 0j))
        nu_sq = np.ones((1, 4))
        alloc = channel_inversion(ch, np.array([1.0]), nu_sq, np.ones(4), 0.1)
        np.testing.assert_allclose(np.abs(alloc.transmit), 0.1)
        assert alloc.power_used(nu_sq)[0] < 1.0

    def test_weak_channels_match_equal_split(self):
        # When every channel is weak the cap binds everywhere and inversion
        # degenerates to the equal split.
        ch = ChannelRealization(gains=np.full((2, 3), 0.01 + 0j))
        nu_sq = np.ones((2, 3))
        inv = channel_inversion(ch, np.ones(2), nu_sq, np.ones(3), 0.1)
        eq = equal_allocation(ch, np.ones(2), nu_sq, np.ones(3), 0.1)
        np.testing.assert_allclose(inv.transmit, eq.transmit)

    def test_share_count_shrinks_cap(self):
        ch = ChannelRealization(gains=np.full((1, 2), 1e-3 + 0j))
        nu_sq = np.ones((1, 2))
        wide = channel_inversion(ch, np.ones(1), nu_sq, np.ones(2), 0.1)
        narrow = channel_inversion(ch, np.ones(1), nu_sq, np.ones(2), 0.1,
                                   share_count=8)
        np.testing.assert_allclose(np.abs(narrow.transmit) * 2,
                                   np.abs(wide.transmit))

    def test_always_feasible(self):
        rng = np.random.default_rng(54)
        for trial in range(5):
            inst = random_fdm_instance(3, 4, rng)
            alloc = channel_inversion(inst["channels"], inst["budgets"],
                                      inst["nu_sq"], inst["var_per_dim"],
                                      inst["noise_var"])
            assert alloc.is_power_feasible(inst["nu_sq"], inst["budgets"])


class TestDominance:
    def test_optimized_mse_never_worse(self):
        rng = np.random.default_rng(55)
        opts = SolverOptions(power_rtol=1e-9)
        for trial in range(3):
            inst = random_fdm_instance(3, 3, rng)
            sol = comp_optimal_fdm(inst["channels"], inst["budgets"],
                                   inst["nu_sq"], inst["var_per_dim"],
                                   inst["noise_var"], opts=opts)
            for baseline in (equal_allocation, channel_inversion):
                alloc = baseline(inst["channels"], inst["budgets"],
                                 inst["nu_sq"], inst["var_per_dim"],
                                 inst["noise_var"])
                mse = aircomp.mse_total(alloc, inst["channels"],
                                        inst["var_per_dim"], inst["noise_var"])
                assert sol.objective <= mse * (1 + 1e-6)
