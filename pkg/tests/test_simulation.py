"""
Tests for the Monte Carlo engine, reference comparison and null distributions.

Checks against the published power tables are marked slow.
"""

import json
import math

import numpy as np
import pandas as pd
import pytest

from src.diagnostics import process_supremum
from src.error_handler import (
    DegenerateSize,
    HomogeneityError,
    InvalidExperiment,
    InvalidLevel,
    InvalidScenario,
    KeyMismatch,
    ReplicationError,
    TooFewPoints,
)
from src.likelihood import lrt_contaminated
from src.methods import create_test
from src.model import AlternativeScenario, CaseId, sample
from src.replication import child_seed, replication_seed, run_replications
from src.reference_loader import ReferenceTableLoader
from src.simulation import (
    REPORT_COLUMNS,
    ExperimentSpec,
    MethodSpec,
    compare_to_reference,
    default_methods,
    e_value_summary,
    limiting_power,
    mc_tolerance,
    null_distribution,
    run_experiment,
    trend_violations,
)
from src.universal import ThresholdRule


def small_spec(**kwargs) -> ExperimentSpec:
    fields = dict(
        case_id=CaseId.I,
        n=200,
        gamma_list=(0.0, 2.0),
        methods=tuple(default_methods()),
        reps=10,
        seed=3,
    )
    fields.update(kwargs)
    return ExperimentSpec(**fields)


def _lrt_supremum_gap(r: int) -> float:
    null = AlternativeScenario(CaseId.I, 0.0, 10_000)
    x = sample(null, replication_seed(29, r)).values
    return abs(lrt_contaminated(x).lambda_ - process_supremum(x).m_n ** 2)


class TestReplication:
    def test_streams_are_counter_based(self):
        a = np.random.default_rng(replication_seed(5, 3)).random(4)
        b = np.random.default_rng(replication_seed(5, 3)).random(4)
        c = np.random.default_rng(replication_seed(5, 4)).random(4)
        np.testing.assert_array_equal(a, b)
        assert not np.array_equal(a, c)

    def test_child_seeds_differ_by_stream(self):
        assert child_seed(1, 2, 1) == child_seed(1, 2, 1)
        assert child_seed(1, 2, 1) != child_seed(1, 2, 2)

    def test_results_keep_replication_order(self):
        assert run_replications(math.factorial, 6) == [1, 1, 2, 6, 24, 120]
        assert run_replications(math.factorial, 6, workers=2) == [1, 1, 2, 6, 24, 120]


class TestMethodSpec:
    def test_parse_lrt(self):
        assert MethodSpec.parse("lrt") == [MethodSpec("LRT", None, ThresholdRule.ASYMPTOTIC_LRT)]

    def test_parse_split_fraction_expands_to_both_rules(self):
        specs = MethodSpec.parse("slrt:0.5")
        assert [s.rule for s in specs] == [ThresholdRule.UNIVERSAL, ThresholdRule.ASYMPTOTIC_SLRT]
        assert all(s.m0 == 0.5 for s in specs)

    def test_parse_single_rule(self):
        assert MethodSpec.parse("SLRT:0.4:Universal") == [
            MethodSpec("SLRT", 0.4, ThresholdRule.UNIVERSAL)
        ]

    @pytest.mark.parametrize(
        "token", ["foo", "slrt", "lrt:0.5", "slrt:abc", "slrt:0.5:bogus", "slrt:0.5:asymptotic_lrt"]
    )
    def test_malformed_tokens(self, token):
        with pytest.raises(InvalidExperiment):
            MethodSpec.parse(token)

    def test_fraction_out_of_range(self):
        with pytest.raises(HomogeneityError):
            MethodSpec.parse("slrt:1.5")

    def test_default_methods(self):
        methods = default_methods()
        assert len(methods) == 7
        assert methods[0].method == "LRT"


class TestExperimentSpec:
    @pytest.mark.parametrize(
        "kwargs, error",
        [
            ({"reps": 0}, InvalidExperiment),
            ({"gamma_list": ()}, InvalidExperiment),
            ({"methods": ()}, InvalidExperiment),
            ({"seed": -1}, InvalidExperiment),
            ({"alpha": 1.0}, InvalidLevel),
        ],
    )
    def test_validation(self, kwargs, error):
        with pytest.raises(error):
            small_spec(**kwargs)

    def test_model_and_keys(self):
        spec = small_spec()
        assert spec.model == "contaminated"
        assert small_spec(case_id="iv").model == "two-mean"
        assert spec.statistic_keys() == [("LRT", None), ("SLRT", 0.4), ("SLRT", 0.5), ("SLRT", 0.6)]


class TestRunExperiment:
    def test_report_shape(self):
        spec = small_spec()
        report = run_experiment(spec, workers=1)
        rows = report.to_frame()
        assert list(rows.columns) == REPORT_COLUMNS
        assert len(rows) == 7 * 2
        assert report.statistics.shape == (10, 2, 4)
        assert rows["frequency"].between(0.0, 1.0).all()
        expected_se = np.sqrt(rows["frequency"] * (1.0 - rows["frequency"]) / 10)
        np.testing.assert_allclose(rows["se"], expected_se, atol=1e-12)

    def test_single_replication(self):
        report = run_experiment(small_spec(reps=1), workers=1)
        assert report.rows["frequency"].isin([0.0, 1.0]).all()
        assert (report.rows["se"] == 0.0).all()

    def test_paired_design(self):
        spec = small_spec(reps=3)
        report = run_experiment(spec, workers=1)
        for r in range(3):
            data = sample(spec.scenario.with_gamma(2.0), replication_seed(spec.seed, r))
            for method, m0 in spec.statistic_keys():
                test = create_test(method, "contaminated", m0=m0 if m0 is not None else 0.5)
                expected = test.statistic(data, seed=child_seed(spec.seed, r, 1))
                assert report.statistics_for(method, m0, 2.0)[r] == expected

    def test_size_domination(self):
        report = run_experiment(small_spec(reps=20), workers=1)
        rows = report.rows[(report.rows["gamma"] == 0.0) & (report.rows["method"] == "SLRT")]
        for _, group in rows.groupby("m0"):
            freq = dict(zip(group["rule"], group["frequency"]))
            assert freq["universal"] <= freq["asymptotic_slrt"]

    def test_independent_of_worker_count(self):
        spec = small_spec(n=100, reps=6, seed=11)
        serial = run_experiment(spec, workers=1)
        parallel = run_experiment(spec, workers=2)
        assert serial.to_csv() == parallel.to_csv()
        np.testing.assert_array_equal(serial.statistics, parallel.statistics)

    def test_two_mean_case(self):
        spec = small_spec(
            case_id=CaseId.IV, gamma_list=(0.0,), methods=tuple(MethodSpec.parse("lrt")),
            reps=3, em_restarts=2,
        )
        report = run_experiment(spec, workers=1)
        assert (report.statistics >= 0.0).all()

    def test_invalid_gamma_fails_before_running(self, mocker):
        spy = mocker.patch("src.simulation.run_replications")
        with pytest.raises(InvalidScenario):
            run_experiment(small_spec(n=1000, gamma_list=(0.0, 100.0)), workers=1)
        spy.assert_not_called()

    def test_lrt_needs_sixteen_points(self):
        with pytest.raises(DegenerateSize):
            run_experiment(small_spec(n=10, methods=tuple(MethodSpec.parse("lrt"))), workers=1)

    def test_failures_name_gamma_and_replication(self, mocker):
        mocker.patch("src.simulation.sample", side_effect=TooFewPoints("boom"))
        with pytest.raises(ReplicationError, match=r"gamma=0.0, r=0: TooFewPoints: boom"):
            run_experiment(small_spec(), workers=1)

    def test_outputs(self, tmp_path):
        report = run_experiment(small_spec(reps=2), workers=1)
        csv_path = tmp_path / "report.csv"
        text = report.to_csv(csv_path)
        assert csv_path.read_text(encoding="utf-8") == text
        assert "wall_time" not in text
        reparsed = pd.read_csv(csv_path, float_precision="round_trip")
        np.testing.assert_array_equal(reparsed["frequency"], report.rows["frequency"])

        summary = json.loads(report.to_json(tmp_path / "report.json"))
        assert summary["case"] == "i"
        assert len(summary["rows"]) == len(report.rows)
        assert len(summary["limits"]) == 7 * 2


class TestTolerance:
    def test_values(self):
        assert mc_tolerance(0.5, 1000) == pytest.approx(0.047434, abs=1e-6)
        assert mc_tolerance(0.05, 1000) == pytest.approx(3.0 * math.sqrt(0.05 * 0.95 / 1000), rel=1e-12)
        assert mc_tolerance(0.0, 1000) == 0.0
        assert mc_tolerance(1.0, 1000) == 0.0


class TestCompareToReference:
    CELLS = [
        {"method": "LRT", "m0": None, "rule": "asymptotic_lrt", "gamma": 0.0, "frequency": 0.055},
        {"method": "SLRT", "m0": 0.5, "rule": "universal", "gamma": 4.0, "frequency": 0.847},
    ]

    def test_identical_tables_pass(self, report_factory, reference_csv):
        report = report_factory(self.CELLS)
        verdicts = compare_to_reference(report, reference_csv)
        assert verdicts["passed"].all()
        assert list(verdicts.columns) == [
            "case", "method", "m0", "rule", "gamma", "observed", "reference", "tolerance", "passed"
        ]

    def test_within_combined_band(self, report_factory, reference_csv):
        cells = [dict(self.CELLS[1], frequency=0.862)]
        verdicts = compare_to_reference(report_factory(cells), reference_csv)
        assert bool(verdicts["passed"].iloc[0])
        assert verdicts["tolerance"].iloc[0] == pytest.approx(
            mc_tolerance(0.847, 1000) + mc_tolerance(0.862, 1000)
        )

    def test_far_outside_band(self, report_factory, reference_csv, caplog):
        cells = [dict(self.CELLS[0], frequency=0.30)]
        with caplog.at_level("WARNING", logger="src.simulation"):
            verdicts = compare_to_reference(report_factory(cells), reference_csv)
        assert not bool(verdicts["passed"].iloc[0])
        assert "outside" in caplog.text

    def test_missing_cells(self, report_factory, reference_csv):
        reference = ReferenceTableLoader.load(reference_csv)
        reference = reference[reference["method"] != "LRT"]
        with pytest.raises(KeyMismatch):
            compare_to_reference(report_factory(self.CELLS), reference)


class TestTrend:
    def test_monotone_rows_have_no_violation(self, report_factory):
        cells = [
            {"method": "LRT", "m0": None, "rule": "asymptotic_lrt", "gamma": g, "frequency": f}
            for g, f in [(0.0, 0.05), (1.0, 0.3), (2.0, 0.8)]
        ]
        assert trend_violations(report_factory(cells)).empty

    def test_drop_beyond_bands_is_reported(self, report_factory):
        cells = [
            {"method": "LRT", "m0": None, "rule": "asymptotic_lrt", "gamma": g, "frequency": f}
            for g, f in [(0.0, 0.05), (1.0, 0.6), (2.0, 0.2)]
        ]
        found = trend_violations(report_factory(cells))
        assert len(found) == 1
        assert found.iloc[0]["gamma_low"] == 1.0
        assert found.iloc[0]["gamma_high"] == 2.0


class TestLimitingPower:
    def test_lrt(self):
        assert limiting_power("i", "LRT", "asymptotic_lrt", 0.5, 0.05) == 0.05
        assert limiting_power("i", "LRT", "asymptotic_lrt", 1.0, 0.05) == pytest.approx(0.525)
        assert limiting_power("ii", "LRT", "asymptotic_lrt", -2.0, 0.05) == 1.0

    def test_slrt_boundary_is_inverse_root_of_estimation_share(self):
        root_two = math.sqrt(2.0)
        assert limiting_power("i", "SLRT", "universal", 1.0, 0.05, m0=0.5) == 0.0
        assert limiting_power("i", "SLRT", "universal", root_two, 0.05, m0=0.5) == 0.5
        assert limiting_power("i", "SLRT", "universal", 2.0, 0.05, m0=0.5) == 1.0
        assert limiting_power("i", "SLRT", "asymptotic_slrt", 1.0, 0.05, m0=0.5) == 0.05

    def test_contiguous(self):
        assert limiting_power("contig", "SLRT", "universal", 5.0, 0.05, m0=0.5) == 0.0
        assert limiting_power("contig", "SLRT", "asymptotic_slrt", 5.0, 0.05, m0=0.5) == 0.05
        assert limiting_power("contig", "LRT", "asymptotic_lrt", 5.0, 0.05) == 0.05

    def test_unsupported(self):
        with pytest.raises(InvalidExperiment):
            limiting_power("iv", "LRT", "asymptotic_lrt", 1.0, 0.05)
        with pytest.raises(InvalidExperiment):
            limiting_power("i", "SLRT", "universal", 1.0, 0.05)


class TestNullDistribution:
    def test_e_value_summary(self):
        summary = e_value_summary(np.zeros(10))
        assert summary == {"mean": 1.0, "se": 0.0, "reps": 10, "within_bound": True}

    def test_supremum(self):
        result = null_distribution("supremum", n=100, reps=5, seed=2, workers=1)
        assert list(result.frame.columns) == ["rep", "statistic", "standardized"]
        assert len(result.frame) == 5
        assert (result.frame["statistic"] >= 0.0).all()
        assert 0.0 <= result.summary["ks"] <= 1.0

    def test_split_summary(self, tmp_path):
        result = null_distribution("slrt", n=100, reps=5, seed=2, m0=0.5, workers=1)
        assert set(result.summary) >= {"ks", "e_value", "universal_rejection_rate"}
        path = tmp_path / "summary.json"
        result.to_json(path)
        assert json.loads(path.read_text(encoding="utf-8"))["kind"] == "slrt"

    def test_unsupported_combinations(self):
        with pytest.raises(InvalidExperiment):
            null_distribution("slrt", n=100, reps=2)
        with pytest.raises(InvalidExperiment):
            null_distribution("supremum", model="two-mean", n=100, reps=2)
        with pytest.raises(DegenerateSize):
            null_distribution("lrt", n=10, reps=2)


@pytest.mark.slow
class TestPublishedTables:
    def test_case_i_table(self, reference_csv):
        spec = ExperimentSpec(
            case_id=CaseId.I,
            n=1000,
            gamma_list=(0.0, 0.5, 1.0, 2.0, 4.0),
            methods=tuple(MethodSpec.parse("lrt") + MethodSpec.parse("slrt:0.5")),
            reps=1000,
            seed=7,
        )
        report = run_experiment(spec)
        verdicts = compare_to_reference(report, reference_csv)
        assert verdicts["passed"].all(), verdicts[~verdicts["passed"]].to_string()
        assert trend_violations(report).empty

    @pytest.mark.parametrize("case", ["ii", "iv", "v"])
    def test_other_tables(self, case, reference_csv):
        spec = ExperimentSpec(
            case_id=CaseId(case),
            n=1000,
            gamma_list=(0.0, 0.5, 1.0, 2.0, 4.0),
            methods=tuple(default_methods()),
            reps=1000,
            seed=11,
        )
        report = run_experiment(spec)
        verdicts = compare_to_reference(report, reference_csv)
        assert verdicts["passed"].all(), verdicts[~verdicts["passed"]].to_string()

    @pytest.mark.parametrize("m0", [0.4, 0.5, 0.6])
    def test_e_value_and_finite_sample_validity(self, m0):
        reps = 10_000
        result = null_distribution("slrt", n=1000, reps=reps, seed=17, m0=m0)
        assert result.summary["e_value"]["within_bound"]
        assert result.summary["universal_rejection_rate"] <= 0.05 + 3.0 * math.sqrt(0.05 * 0.95 / reps)

    @pytest.mark.long
    def test_lrt_close_to_squared_supremum(self):
        gaps = run_replications(_lrt_supremum_gap, 500, workers=4)
        assert float(np.median(gaps)) < 0.5

    @pytest.mark.long
    def test_case_iii_reduced(self):
        spec = ExperimentSpec(
            case_id=CaseId.III,
            n=10**7,
            gamma_list=(2.0,),
            methods=tuple(MethodSpec.parse("lrt") + MethodSpec.parse("slrt:0.5:universal")),
            reps=200,
            seed=13,
        )
        rows = run_experiment(spec).rows.set_index("method")["frequency"]
        assert rows["SLRT"] == pytest.approx(0.375, abs=0.10)
        assert rows["LRT"] == pytest.approx(0.835, abs=0.10)

    @pytest.mark.long
    def test_contiguous_alternative_matches_null(self):
        spec = ExperimentSpec(
            case_id=CaseId.CONTIG,
            n=10_000,
            gamma_list=(0.0, 1.0),
            methods=tuple(MethodSpec.parse("slrt:0.5")),
            reps=2000,
            seed=23,
        )
        rows = run_experiment(spec).rows
        universal = rows[rows["rule"] == "universal"].set_index("gamma")["frequency"]
        asymptotic = rows[rows["rule"] == "asymptotic_slrt"].set_index("gamma")["frequency"]
        assert universal[1.0] <= 0.01
        assert asymptotic[1.0] == pytest.approx(asymptotic[0.0], abs=0.02)
