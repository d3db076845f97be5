import importlib
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from dpevalues.distributions import TestingPair, bernoulli
from dpevalues.errors import NoRootInBracket, QuadratureNonConvergence
from dpevalues.optimal import optimal_evariable, rate
from dpevalues.tslr import (
    TslrStatistic,
    epsilon_star,
    power_coefficient,
    select_evariable,
    tslr,
    tslr_evariable,
    tslr_extended,
    tslr_values,
)
from oracles import tslr_coefficient_max

tslr_module = importlib.import_module("dpevalues.tslr")

EPS_STAR_ORACLE = 2.334106020096548
COEF_ORACLE = 0.22114974286728853


class TestConstants:
    def test_eps_star_reported_value(self):
        eps_star, coef = epsilon_star()
        assert abs(eps_star - 2.334) <= 1e-3
        assert abs(coef - 0.221) <= 1e-3

    def test_eps_star_against_independent_optimizer(self):
        eps_star, coef = epsilon_star()
        assert eps_star == pytest.approx(EPS_STAR_ORACLE, abs=1e-6)
        assert coef == pytest.approx(COEF_ORACLE, abs=1e-12)
        x, fx = tslr_coefficient_max()
        assert eps_star == pytest.approx(x, abs=1e-6)

    def test_coefficient_at_one_is_zero(self):
        assert power_coefficient(1.0) == 0.0


class TestValues:
    def test_unit_ratio(self):
        for eps in (0.3, 1.0, 4.0):
            assert tslr_values(1.0, eps) == pytest.approx(1.0, abs=1e-15)

    def test_saturation(self):
        eps = 1.3
        for lr in (1 + math.exp(eps), 1e6):
            assert tslr_values(lr, eps) == pytest.approx(math.exp(eps), rel=1e-14)

    @given(st.floats(1e-8, 1e8), st.floats(0.05, 8))
    def test_log_range(self, lr, eps):
        v = math.log(tslr_values(lr, eps))
        assert -eps - 1e-12 <= v <= eps + 1e-12

    @given(st.floats(1e-8, 1e8), st.floats(0.05, 8))
    def test_pointwise_domination(self, lr, eps):
        lhs = math.log(tslr_values(lr, eps))
        rhs = (1 - math.exp(-eps)) * math.log(min(math.exp(eps), lr))
        assert lhs >= rhs - 1e-12

    def test_extended_sweep(self):
        lr = np.logspace(-6, 6, 1000)
        stat = TslrStatistic.for_epsilon(0.5)
        logs = np.log(stat(lr))
        assert np.all(np.abs(logs) <= 0.5 + 1e-12)
        assert stat.exponent == pytest.approx(0.5 / epsilon_star()[0])

    def test_no_exponent_above_eps_star(self):
        assert TslrStatistic.for_epsilon(3.0).exponent == 1.0


class TestEVariable:
    def test_bernoulli_null_mean(self, bern_pair):
        assert tslr_evariable(bern_pair, 1.0, extended=False).null_mean() <= 1.0

    @pytest.mark.parametrize("p", [0.1, 0.3, 0.5, 0.9])
    @pytest.mark.parametrize("q", [0.2, 0.6, 0.8])
    @pytest.mark.parametrize("eps", [0.25, 1.0, 4.0])
    def test_extended_null_mean(self, p, q, eps):
        pair = TestingPair(bernoulli(p), bernoulli(q))
        assert tslr_evariable(pair, eps).null_mean() <= 1.0 + 1e-12

    def test_pointwise_helpers(self, bern_pair):
        assert tslr(bern_pair, 1.0, 1.0) == pytest.approx(tslr_values(7 / 3, 1.0))
        assert tslr_extended(bern_pair, 3.0, 0.0) == pytest.approx(tslr_values(3 / 7, 3.0))

    @pytest.mark.parametrize("eps", [3.0, 5.0])
    def test_power_bound_direct(self, bern_pair, eps):
        mu = tslr_evariable(bern_pair, eps, extended=False).alt_log_mean()
        assert mu >= (eps - 1) * (1 - math.exp(-eps)) / eps * rate(bern_pair, eps) - 1e-12

    @pytest.mark.parametrize("p,q", [(0.3, 0.7), (0.1, 0.5), (0.5, 0.55), (0.2, 0.95)])
    @pytest.mark.parametrize("eps", [0.25, 0.5, 1.0, 2.0])
    def test_power_bound_extended(self, p, q, eps):
        pair = TestingPair(bernoulli(p), bernoulli(q))
        es, _ = epsilon_star()
        mu = tslr_evariable(pair, eps).alt_log_mean()
        bound = (es - 1) * (1 - math.exp(-es)) / es * (eps / es) * rate(pair, es)
        assert mu >= bound - 1e-12


class TestSelection:
    def test_auto_prefers_optimal(self, bern_pair):
        ev, used = select_evariable(bern_pair, 1.0)
        assert used == "optimal"
        assert ev.mu == pytest.approx(optimal_evariable(bern_pair, 1.0).mu)

    def test_explicit_tslr_level(self, bern_pair):
        ev, used = select_evariable(bern_pair, 1.0, "tslr", tslr_epsilon=0.5)
        assert used == "tslr"
        assert math.log(ev.c_hi / ev.c_lo) == pytest.approx(1.0)

    @pytest.mark.parametrize("exc", [NoRootInBracket("no root"), QuadratureNonConvergence("slow", 1e-3)])
    def test_auto_falls_back(self, bern_pair, monkeypatch, caplog, exc):
        def fail(*args, **kwargs):
            raise exc

        monkeypatch.setattr(tslr_module, "optimal_evariable", fail)
        ev, used = select_evariable(bern_pair, 1.0)
        assert used == "tslr" and "using tsLR" in caplog.text
        assert ev.null_mean() <= 1 + 1e-12
        with pytest.raises(type(exc)):
            select_evariable(bern_pair, 1.0, "optimal")

    def test_unknown(self, bern_pair):
        with pytest.raises(ValueError):
            select_evariable(bern_pair, 1.0, "lr")
