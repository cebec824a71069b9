"""Multi-regression dynamic models: filtering, forecasting, revision."""

import math

import numpy as np
import pytest

from structelicit import mdm as mm
from structelicit.errors import (
    MissingParentObservationError,
    OrderingViolationError,
    SpecValidationError,
)
from structelicit.fixtures import heat_index_node, summer_meals_mdm
from structelicit.mdm import FilterState, MdmNodeSpec, MdmSpec, Rewire

from . import oracles


class TestValidate:
    def test_summer_meals_ok(self):
        assert mm.validate(summer_meals_mdm()) == []

    def test_parent_after_child(self):
        spec = MdmSpec([MdmNodeSpec("T", ("A",)), MdmNodeSpec("A")])
        assert any("precede" in v for v in mm.validate(spec))

    def test_negative_eigenvalue_w(self):
        spec = MdmSpec([MdmNodeSpec("A", W=np.array([[-1e-3]]))])
        assert any("W" in v for v in mm.validate(spec))

    def test_nonpositive_v(self):
        spec = MdmSpec([MdmNodeSpec("A", V=0.0)])
        assert any("V" in v for v in mm.validate(spec))


class TestDesignVector:
    def test_one_parent(self):
        spec = summer_meals_mdm()
        assert np.array_equal(mm.design_vector(spec, "T", {"A": 4.0}), [1.0, 4.0])

    def test_no_parents(self):
        spec = summer_meals_mdm()
        assert np.array_equal(mm.design_vector(spec, "A", {"T": 9.0}), [1.0])

    def test_missing_parent(self):
        spec = summer_meals_mdm()
        with pytest.raises(MissingParentObservationError):
            mm.design_vector(spec, "T", {})


class TestStepFilter:
    def test_hand_computed_scalar_update(self):
        # p=1, G=1, W=0, V=1, m0=0, C0=1, y1=1:
        # f1=0, Q1=2, m1=0.5, C1=0.5
        spec = MdmSpec([MdmNodeSpec("A", W=np.zeros((1, 1)), V=1.0)])
        state, forecast = mm.step_filter(spec, FilterState.initial(spec), {"A": 1.0})
        fc = forecast.series["A"]
        assert fc.f == pytest.approx(0.0)
        assert fc.Q == pytest.approx(2.0)
        assert state.means["A"][0] == pytest.approx(0.5)
        assert state.covariances["A"][0, 0] == pytest.approx(0.5)

    def test_degenerate_limit_converges(self):
        spec = MdmSpec([MdmNodeSpec("A", W=np.zeros((1, 1)), V=1e-12)])
        state = FilterState.initial(spec)
        for _ in range(5):
            state, _ = mm.step_filter(spec, state, {"A": 3.0})
        assert state.means["A"][0] == pytest.approx(3.0, abs=1e-9)
        assert state.covariances["A"][0, 0] < 1e-10

    def test_missing_observation_skips_update(self):
        spec = summer_meals_mdm()
        state = FilterState.initial(spec)
        stepped, forecast = mm.step_filter(spec, state, {"A": 1.0, "T": None, "M": 2.0})
        a_t, R_t = mm._propagate(spec.node("T"), state.means["T"], state.covariances["T"])
        assert np.allclose(stepped.means["T"], a_t)
        assert np.allclose(stepped.covariances["T"], R_t)
        # M's parent T is unobserved: forecast substitutes T's forecast mean
        assert forecast.series["M"].approximate
        # M's own update is also skipped (design vector incomplete)
        a_m, _ = mm._propagate(spec.node("M"), state.means["M"], state.covariances["M"])
        assert np.allclose(stepped.means["M"], a_m)

    def test_covariances_stay_psd(self):
        rng = np.random.default_rng(23)
        for _ in range(10):
            spec = oracles.random_mdm_spec(rng)
            data = {n.name: list(rng.normal(size=6)) for n in spec}
            traj = mm.run(spec, data)
            for state in traj.states:
                for C in state.covariances.values():
                    assert np.linalg.eigvalsh((C + C.T) / 2).min() >= -1e-10


class TestOneStepForecast:
    def test_factorized_total(self):
        rng = np.random.default_rng(31)
        spec = summer_meals_mdm()
        state = FilterState.initial(spec)
        for _ in range(4):
            y = {"A": float(rng.normal()), "T": float(rng.normal()), "M": float(rng.normal())}
            forecast = mm.one_step_forecast(spec, state, y)
            total = sum(s.log_density for s in forecast.series.values())
            assert forecast.total_log_density == pytest.approx(total, abs=1e-10)
            for s in forecast.series.values():
                expected = -0.5 * (math.log(2 * math.pi * s.Q) + (s.y - s.f) ** 2 / s.Q)
                assert s.log_density == pytest.approx(expected, abs=1e-12)
            state, _ = mm.step_filter(spec, state, y)

    def test_single_series_single_term(self):
        spec = MdmSpec([MdmNodeSpec("A")])
        forecast = mm.one_step_forecast(spec, FilterState.initial(spec), {"A": 0.7})
        assert len(forecast.series) == 1
        assert forecast.total_log_density == forecast.series["A"].log_density

    def test_declaration_order_of_independent_series(self):
        a = MdmNodeSpec("A", V=0.8, C0=np.eye(1) * 2.0)
        b = MdmNodeSpec("B", V=1.3, C0=np.eye(1) * 0.5)
        y = {"A": 1.1, "B": -0.4}
        f1 = mm.one_step_forecast(MdmSpec([a, b]), FilterState.initial(MdmSpec([a, b])), y)
        f2 = mm.one_step_forecast(MdmSpec([b, a]), FilterState.initial(MdmSpec([b, a])), y)
        assert f1.total_log_density == pytest.approx(f2.total_log_density, abs=1e-10)


class TestBatchEquivalence:
    def test_filter_matches_batch_conditioning(self):
        rng = np.random.default_rng(77)
        for _ in range(12):
            spec = oracles.random_mdm_spec(rng)
            T = int(rng.integers(1, 6))
            data = {n.name: list(rng.normal(size=T)) for n in spec}
            traj = mm.run(spec, data)
            batch = oracles.batch_series_results(spec, data)
            final = traj.states[-1]
            for node in spec:
                bm, bc, _ = batch[node.name]
                assert np.allclose(final.means[node.name], bm, atol=1e-8)
                assert np.allclose(final.covariances[node.name], bc, atol=1e-8)

    def test_factorized_log_predictive_matches_batch(self):
        rng = np.random.default_rng(78)
        for _ in range(12):
            spec = oracles.random_mdm_spec(rng)
            T = int(rng.integers(1, 6))
            data = {n.name: list(rng.normal(size=T)) for n in spec}
            traj = mm.run(spec, data)
            batch = oracles.batch_series_results(spec, data)
            total_filter = sum(fc.total_log_density for fc in traj.forecasts)
            total_batch = sum(v[2] for v in batch.values())
            assert total_filter == pytest.approx(total_batch, abs=1e-8)

    def test_posterior_blocks_independent(self):
        rng = np.random.default_rng(79)
        for _ in range(8):
            spec = oracles.random_mdm_spec(rng)
            if len(spec.names) < 2:
                continue
            data = {n.name: list(rng.normal(size=4)) for n in spec}
            cov, slices = oracles.multi_series_posterior_cov(spec, data)
            for a in spec.names:
                for b in spec.names:
                    if a != b:
                        assert np.abs(cov[slices[a], slices[b]]).max() < 1e-8


class TestAddSeries:
    def test_heat_index_revision(self):
        spec = summer_meals_mdm()
        revised = mm.add_series(
            spec, heat_index_node(), [Rewire("M", ("T", "H"))]
        )
        assert revised.node("M").dim == 3
        assert revised.node("M").parents == ("T", "H")
        assert mm.validate(revised) == []
        # untouched series keep identical specs
        for name in ("A", "T"):
            old, new = spec.node(name), revised.node(name)
            assert np.array_equal(old.G, new.G) and np.array_equal(old.W, new.W)
            assert np.array_equal(old.m0, new.m0) and np.array_equal(old.C0, new.C0)
            assert old.V == new.V and old.parents == new.parents

    def test_isolated_series_leaves_forecasts_unchanged(self):
        rng = np.random.default_rng(41)
        spec = summer_meals_mdm()
        data = {n: list(rng.normal(size=5)) for n in spec.names}
        base = mm.run(spec, data)
        extended = mm.add_series(spec, heat_index_node())
        data2 = dict(data, H=list(rng.normal(size=5)))
        ext = mm.run(extended, data2)
        for t in range(5):
            for name in spec.names:
                assert ext.forecasts[t].series[name].f == pytest.approx(
                    base.forecasts[t].series[name].f, abs=1e-12
                )
                assert ext.forecasts[t].series[name].Q == pytest.approx(
                    base.forecasts[t].series[name].Q, abs=1e-12
                )

    def test_clamped_new_parent_reproduces_forecasts(self):
        # new coefficient with zero prior mass and the new series clamped
        # to zero leaves the rewired child's forecasts untouched
        rng = np.random.default_rng(43)
        spec = summer_meals_mdm()
        data = {n: list(rng.normal(size=6)) for n in spec.names}
        base = mm.run(spec, data)
        revised = mm.add_series(
            spec,
            heat_index_node(),
            [Rewire("M", ("T", "H"), new_coef_mean=0.0, new_coef_var=0.0, new_coef_w=0.0)],
        )
        data2 = dict(data, H=[0.0] * 6)
        ext = mm.run(revised, data2)
        for t in range(6):
            assert ext.forecasts[t].series["M"].f == pytest.approx(
                base.forecasts[t].series["M"].f, abs=1e-9
            )
            assert ext.forecasts[t].series["M"].Q == pytest.approx(
                base.forecasts[t].series["M"].Q, abs=1e-9
            )

    def test_rewire_ordering_violation(self):
        spec = summer_meals_mdm()
        with pytest.raises(OrderingViolationError):
            mm.add_series(spec, heat_index_node(), [Rewire("A", ("M",))])

    def test_duplicate_series_rejected(self):
        with pytest.raises(OrderingViolationError):
            mm.add_series(summer_meals_mdm(), MdmNodeSpec("A"))


class TestRun:
    def test_residual_report_shape(self):
        rng = np.random.default_rng(53)
        spec = summer_meals_mdm()
        data = {n: list(rng.normal(size=9)) for n in spec.names}
        rows = mm.run(spec, data).residual_rows()
        assert len(rows) == 27
        assert {r["series"] for r in rows} == {"A", "T", "M"}

    def test_t1_forecast_is_prior_predictive(self):
        spec = MdmSpec([MdmNodeSpec("A", V=2.0, C0=np.eye(1) * 3.0, m0=np.array([1.0]))])
        traj = mm.run(spec, {"A": [0.0]})
        fc = traj.forecasts[0].series["A"]
        assert fc.f == pytest.approx(1.0)
        assert fc.Q == pytest.approx(3.0 + 2.0)

    def test_level_shift_produces_outlier_residual(self):
        rng = np.random.default_rng(59)
        spec = MdmSpec([MdmNodeSpec("A", W=np.eye(1) * 0.01, V=1.0)])
        data = list(rng.normal(scale=1.0, size=40))
        warm = mm.run(spec, {"A": data})
        q = warm.forecasts[25].series["A"].Q
        data[25] += 10 * math.sqrt(q)
        traj = mm.run(spec, {"A": data})
        assert abs(traj.forecasts[25].series["A"].std_residual) > 3

    def test_mismatched_lengths_rejected(self):
        spec = summer_meals_mdm()
        with pytest.raises(SpecValidationError):
            mm.run(spec, {"A": [1.0], "T": [1.0, 2.0], "M": [1.0]})

    def test_missing_series_rejected(self):
        spec = summer_meals_mdm()
        with pytest.raises(SpecValidationError):
            mm.run(spec, {"A": [1.0]})


class TestEstimateVariances:
    def test_sample_variance_applied(self):
        spec = MdmSpec([MdmNodeSpec("A", V=1.0)])
        data = {"A": [1.0, 2.0, 3.0, 4.0]}
        est = mm.estimate_variances(spec, data, k=4)
        assert est.node("A").V == pytest.approx(np.var([1, 2, 3, 4], ddof=1))

    def test_too_few_values_keeps_default(self):
        spec = MdmSpec([MdmNodeSpec("A", V=1.0)])
        est = mm.estimate_variances(spec, {"A": [5.0]})
        assert est.node("A").V == 1.0
