import re

import numpy as np
import pytest
import yaml

from benenti import catalog, verify
from benenti.errors import DegenerateMetricError
from benenti.geometry import MetricField
from benenti.projective import ProjectivePair


def strip_timing(text: str) -> str:
    return re.sub(r"timing:\n(  .*\n)+", "", text)


def quick_report(name, **overrides):
    entry = catalog.get_entry(name)
    cfg = verify.quick_config(**overrides)
    return verify.verify_pair(
        entry.pair, cfg, source="catalog",
        expected_equivalent=entry.expected_equivalent,
    )


class TestConfig:
    def test_defaults(self):
        cfg = verify.VerifyConfig()
        assert cfg.points == 20 and cfg.order == 4 and cfg.seed == 42
        assert cfg.checks == verify.CHECK_IDS

    def test_validation(self):
        with pytest.raises(ValueError):
            verify.VerifyConfig(points=0)
        with pytest.raises(ValueError):
            verify.VerifyConfig(order=2)
        with pytest.raises(ValueError):
            verify.VerifyConfig(jobs=0)
        with pytest.raises(ValueError):
            verify.VerifyConfig(checks=("basic", "frobnicate"))

    def test_threshold_defaults_and_override(self):
        cfg = verify.VerifyConfig()
        assert cfg.threshold("killing") == 1e-9
        assert cfg.threshold("commutator") == 1e-7
        loose = verify.VerifyConfig(tol=1e-3)
        assert loose.threshold("killing") == 1e-3
        assert loose.threshold("drift") == 1e-3

    def test_function_suite_has_seven_entries(self):
        suite = verify.function_suite(("x", "y"))
        assert len(suite) == 7
        assert len(set(suite)) == 7


class TestReports:
    def test_equivalent_pair_passes_all_checks(self):
        rep = quick_report("dini")
        assert rep.passed
        assert rep.failures == 0
        # 9 per-point checks x 5 points + 1 drift trajectory
        assert len(rep.records) == 46
        assert set(rep.max_residuals()) == set(verify.CHECK_IDS)

    def test_control_pair_fails_decisively(self):
        rep = quick_report("control_nonequiv")
        assert not rep.passed
        basic = [r for r in rep.records if r.check == "basic"]
        assert basic and all(r.residual > 1e-2 for r in basic)
        assert all(not r.passed for r in basic)

    def test_report_yaml_roundtrip(self):
        rep = quick_report("dini")
        doc = yaml.safe_load(rep.render())
        assert doc["schema_version"] == verify.SCHEMA_VERSION
        assert doc["pair"] == "dini"
        assert doc["expected_equivalent"] is True
        assert doc["summary"]["verdict"] == "pass"
        assert doc["summary"]["records"] == len(rep.records)
        assert len(doc["records"]) == len(rep.records)
        worst = doc["summary"]["max_residual"]
        assert set(worst) == set(verify.CHECK_IDS)

    def test_determinism_modulo_timing(self):
        a = quick_report("scaled").render()
        b = quick_report("scaled").render()
        assert strip_timing(a) == strip_timing(b)
        assert a != b or "elapsed" in a  # timing block present

    def test_seed_changes_sampled_points(self):
        a = quick_report("dini", seed=1)
        b = quick_report("dini", seed=2)
        assert a.records[0].point != b.records[0].point

    def test_parallel_matches_serial(self):
        ser = quick_report("dini", jobs=1)
        par = quick_report("dini", jobs=3)
        assert [r.to_mapping() for r in ser.records] == [
            r.to_mapping() for r in par.records
        ]

    def test_check_subset_sees_identical_points(self):
        full = quick_report("dini")
        only = quick_report("dini", checks=("killing",))
        full_killing = [r for r in full.records if r.check == "killing"]
        assert [r.to_mapping() for r in full_killing] == [
            r.to_mapping() for r in only.records
        ]

    def test_t_grid_override_recorded(self):
        rep = quick_report("dini", t_grid=(0.0, 5.0), checks=("killing", "poisson"))
        for rec in rep.records:
            params = dict(rec.params)
            assert params["t"] in (0.0, 5.0)
        doc = yaml.safe_load(rep.render())
        assert doc["configuration"]["t_grid"] == [0.0, 5.0]

    def test_drift_records_carry_trajectory_data(self):
        rep = quick_report("dini", checks=("drift",), drift_trajectories=2)
        assert len(rep.records) == 2
        for rec in rep.records:
            params = dict(rec.params)
            assert "momentum" in params and "steps" in params
            assert isinstance(params["exited"], bool)
            assert rec.residual <= 1e-8

    def test_tol_override_applies_to_records(self):
        rep = quick_report("control_nonequiv", tol=1e6)
        assert rep.passed  # absurd tolerance turns everything green

    def test_degenerate_sampling_exhausts_retries(self):
        g = MetricField(("x", "y"), [["1", "0"], ["0", "1"]])
        gbar = MetricField(("x", "y"), [["x - x", "0"], ["0", "1"]])
        pair = ProjectivePair(
            g, gbar, domain={"x": (0.0, 1.0), "y": (0.0, 1.0)}, name="broken"
        )
        with pytest.raises(DegenerateMetricError):
            verify.verify_pair(pair, verify.quick_config(checks=("basic",)))


class TestCatalogSweep:
    def test_all_equivalent_entries_pass_quick_suite(self):
        for name in catalog.equivalent_entries():
            rep = quick_report(name, points=3)
            assert rep.passed, f"{name}: {rep.max_residuals()}"

    def test_all_controls_fail_quick_suite(self):
        for name in catalog.control_entries():
            rep = quick_report(name, points=3)
            assert not rep.passed
