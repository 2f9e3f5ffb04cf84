import json
import math
import random

import pytest
import scipy.stats

import _oracles
from smikit.analysis import (
    AccuracyRecord,
    bin_by_metric,
    bin_index,
    bin_summaries,
    build_report,
    derive_bin_smi,
    fit_linear,
    group_accuracies,
    load_accuracies,
    mse_per_task,
    paired_t_test,
    percentile_filter,
)
from smikit.errors import DataError
from smikit.matcher import EntityCounts
from smikit.metrics import ModelSpec, compute_metrics, smi


class TestBinning:
    def test_half_open_membership(self):
        bins = bin_by_metric({"a": 0.0, "b": 0.19, "c": 0.2, "d": 0.39999, "e": 0.4}, 0.2)
        spans = {(b.lower, b.upper): b.triple_ids for b in bins}
        assert spans[(0.0, 0.2)] == ("a", "b")
        assert spans[(0.2 * 1, 0.2 * 2)] == ("c", "d")
        assert any(lo <= 0.4 < hi for (lo, hi) in spans)

    def test_negative_values(self):
        bins = bin_by_metric({"a": -0.1, "b": -0.3}, 0.2)
        assert [b.count for b in bins] == [1, 1]
        assert bins[0].lower < bins[1].lower < 0.0

    def test_mean_metric(self):
        [b] = bin_by_metric({"a": 0.5, "b": 0.55}, 0.2)
        assert b.mean_metric == pytest.approx(0.525)

    def test_empty_bins_never_materialized(self):
        bins = bin_by_metric({"a": 0.0, "b": 10.0}, 0.2)
        assert len(bins) == 2

    def test_membership_invariant_brute_force(self):
        rng = random.Random(5)
        for _ in range(1000):
            x = rng.uniform(-40, 40)
            width = rng.choice([0.2, 0.1, 0.25, 0.5])
            k = bin_index(x, width)
            assert k == _oracles.brute_bin_index(x, width)
            assert k * width <= x < (k + 1) * width

    def test_boundary_multiples_of_width(self):
        # exact float boundaries must land in the bin they open
        for i in range(-50, 51):
            x = i * 0.2
            k = bin_index(x, 0.2)
            assert k * 0.2 <= x < (k + 1) * 0.2

    def test_zero_width_rejected(self):
        with pytest.raises(DataError, match="width"):
            bin_index(1.0, 0.0)

    def test_nothing_to_bin_rejected(self):
        with pytest.raises(DataError, match="nothing to bin"):
            bin_by_metric({}, 0.2)

    def test_summaries(self):
        bins = bin_by_metric({"a": 0.05, "b": 0.15, "c": 0.25}, 0.2)
        acc = {"a": 0.4, "b": 0.6, "c": 0.9}
        summaries = bin_summaries(bins, acc)
        assert summaries[0] == (pytest.approx(0.1), pytest.approx(0.5))
        assert summaries[1] == (pytest.approx(0.25), pytest.approx(0.9))

    def test_summaries_missing_accuracy(self):
        bins = bin_by_metric({"a": 0.05}, 0.2)
        with pytest.raises(DataError, match="no accuracy"):
            bin_summaries(bins, {})


class TestDeriveBinSmi:
    def test_endpoints_map_to_fixed_points(self):
        norm = (-10.0, -2.0)
        out = derive_bin_smi([-10.0, -2.0], norm, 2.0 ** 30)
        assert out == [0.0, 1.0]

    def test_composition_matches_pointwise(self):
        norm = (-9.0, -1.0)
        means = [-8.2, -6.0, -4.4, -2.2, -1.5]
        phi = 2.0 ** 30
        expected = [smi((v - norm[0]) / (norm[1] - norm[0]), phi) for v in means]
        assert derive_bin_smi(means, norm, phi) == pytest.approx(expected, abs=1e-15)

    def test_out_of_range_mean_rejected(self):
        with pytest.raises(DataError, match="normalization range"):
            derive_bin_smi([-11.0], (-10.0, -2.0), 4.0)


class TestFitLinear:
    def test_exact_line(self):
        fit = fit_linear([(0.0, 1.0), (1.0, 3.0), (2.0, 5.0)])
        assert fit.slope == pytest.approx(2.0, abs=1e-14)
        assert fit.intercept == pytest.approx(1.0, abs=1e-14)
        assert fit.r2 == pytest.approx(1.0, abs=1e-14)
        assert fit.mse == pytest.approx(0.0, abs=1e-14)
        assert not fit.degenerate

    def test_constant_y_degenerate_not_error(self):
        fit = fit_linear([(0.0, 2.0), (1.0, 2.0), (5.0, 2.0)])
        assert fit.degenerate
        assert fit.r2 == 0.0
        assert fit.slope == pytest.approx(0.0, abs=1e-14)

    def test_constant_x_rejected(self):
        with pytest.raises(DataError, match="identical"):
            fit_linear([(1.0, 2.0), (1.0, 3.0)])

    def test_single_point_rejected(self):
        with pytest.raises(DataError, match="at least 2"):
            fit_linear([(1.0, 2.0)])

    def test_against_normal_equations(self):
        rng = random.Random(17)
        for _ in range(200):
            n = rng.randint(2, 40)
            pts = [(rng.uniform(-5, 5), rng.uniform(-5, 5)) for _ in range(n)]
            if len({x for x, _ in pts}) == 1:
                continue
            slope, intercept, r2, mse = _oracles.ols_normal_equations(pts)
            fit = fit_linear(pts)
            assert fit.slope == pytest.approx(slope, abs=1e-10)
            assert fit.intercept == pytest.approx(intercept, abs=1e-10)
            assert fit.r2 == pytest.approx(r2, abs=1e-10)
            assert fit.mse == pytest.approx(mse, abs=1e-12)

    def test_r2_affine_invariant_in_x(self):
        rng = random.Random(23)
        pts = [(rng.uniform(0, 1), rng.uniform(0, 1)) for _ in range(30)]
        base = fit_linear(pts).r2
        for a, b in ((2.0, 0.0), (-1.0, 5.0), (0.25, -3.0)):
            moved = fit_linear([(a * x + b, y) for x, y in pts]).r2
            assert moved == pytest.approx(base, abs=1e-9)


class TestMsePerTask:
    def test_two_point_example(self):
        fit = fit_linear([(0.0, 0.0), (1.0, 1.0)])
        # both tasks off the identity line by 0.1
        assert mse_per_task(fit, [(0.0, 0.1), (1.0, 0.9)]) == pytest.approx(0.01, abs=1e-15)

    def test_matches_naive_loop(self):
        rng = random.Random(3)
        fit = fit_linear([(0.0, 0.2), (1.0, 0.8), (0.5, 0.6)])
        pts = [(rng.uniform(0, 1), rng.uniform(0, 1)) for _ in range(50)]
        assert mse_per_task(fit, pts) == pytest.approx(
            _oracles.naive_mse(fit.slope, fit.intercept, pts), abs=1e-12
        )

    def test_empty_rejected(self):
        fit = fit_linear([(0.0, 0.0), (1.0, 1.0)])
        with pytest.raises(DataError, match="at least one"):
            mse_per_task(fit, [])


class TestPercentileFilter:
    def test_bottom_fifth(self):
        values = {f"t{i}": float(i) for i in range(10)}
        assert percentile_filter(values, 0.2) == ["t0", "t1"]

    def test_floor_semantics(self):
        values = {f"t{i}": float(i) for i in range(9)}
        assert len(percentile_filter(values, 0.2)) == 1

    def test_ties_broken_by_id(self):
        values = {"b": 1.0, "a": 1.0, "c": 0.0}
        assert percentile_filter(values, 0.67) == ["c", "a"]

    def test_whole_set(self):
        values = {"a": 2.0, "b": 1.0}
        assert percentile_filter(values, 1.0) == ["b", "a"]

    def test_insertion_order_irrelevant(self):
        v1 = {"a": 3.0, "b": 1.0, "c": 2.0}
        v2 = {"c": 2.0, "a": 3.0, "b": 1.0}
        assert percentile_filter(v1, 0.67) == percentile_filter(v2, 0.67)

    def test_fraction_range_enforced(self):
        with pytest.raises(DataError):
            percentile_filter({"a": 1.0}, 0.0)
        with pytest.raises(DataError):
            percentile_filter({"a": 1.0}, 1.5)


class TestPairedTTest:
    def test_symmetric_differences_give_zero_t(self):
        result = paired_t_test([(0.0, 1.0), (1.0, 0.0), (0.5, 1.5), (1.5, 0.5)])
        assert result.t == pytest.approx(0.0, abs=1e-12)
        assert result.p == pytest.approx(1.0, abs=1e-12)

    def test_identical_columns_rejected(self):
        with pytest.raises(DataError, match="identical"):
            paired_t_test([(0.3, 0.3), (0.4, 0.4), (0.5, 0.5)])

    def test_sign_convention_positive_when_second_higher(self):
        result = paired_t_test([(0.1, 0.2), (0.2, 0.35), (0.3, 0.38)])
        assert result.t > 0.0
        assert result.mean_diff > 0.0

    def test_sign_flip_mirrors_t_and_ci(self):
        pairs = [(0.1, 0.2), (0.2, 0.35), (0.3, 0.38), (0.15, 0.3)]
        fwd = paired_t_test(pairs)
        rev = paired_t_test([(b, a) for a, b in pairs])
        assert rev.t == pytest.approx(-fwd.t, rel=1e-12)
        assert rev.p == pytest.approx(fwd.p, rel=1e-12)
        assert rev.ci_low == pytest.approx(-fwd.ci_high, rel=1e-12)
        assert rev.ci_high == pytest.approx(-fwd.ci_low, rel=1e-12)

    def test_against_textbook_formula(self):
        rng = random.Random(31)
        for _ in range(5):
            n = rng.randint(4, 12)
            pairs = [(rng.uniform(0, 1), rng.uniform(0, 1)) for _ in range(n)]
            diffs = [b - a for a, b in pairs]
            mean = sum(diffs) / n
            sd = math.sqrt(sum((d - mean) ** 2 for d in diffs) / (n - 1))
            expected_t = mean / (sd / math.sqrt(n))
            result = paired_t_test(pairs)
            assert result.t == pytest.approx(expected_t, abs=1e-10)
            assert result.df == n - 1
            assert result.sd_diff == pytest.approx(sd, abs=1e-12)

    def test_against_scipy(self):
        rng = random.Random(29)
        for _ in range(25):
            n = rng.randint(3, 30)
            pairs = [(rng.uniform(0, 1), rng.uniform(0, 1)) for _ in range(n)]
            a = [p[0] for p in pairs]
            b = [p[1] for p in pairs]
            expected = scipy.stats.ttest_rel(b, a)
            result = paired_t_test(pairs)
            assert result.t == pytest.approx(float(expected.statistic), rel=1e-10)
            assert result.p == pytest.approx(float(expected.pvalue), rel=1e-9)
            lo, hi = expected.confidence_interval(0.95)
            assert result.ci_low == pytest.approx(float(lo), rel=1e-9)
            assert result.ci_high == pytest.approx(float(hi), rel=1e-9)

    def test_too_few_pairs_rejected(self):
        with pytest.raises(DataError, match="at least 2"):
            paired_t_test([(0.1, 0.2)])


class TestAccuracyRecords:
    def test_valid_record(self):
        AccuracyRecord("t0", "m", 0.6825, 400).validate()

    def test_non_integral_product_rejected(self):
        # 0.333 * 400 = 133.2: no whole number of correct responses fits
        with pytest.raises(DataError, match="not integral"):
            AccuracyRecord("t0", "m", 0.333, 400).validate()

    def test_out_of_range_rejected(self):
        with pytest.raises(DataError, match=r"\[0, 1\]"):
            AccuracyRecord("t0", "m", 1.2, 400).validate()

    def test_load_and_group(self, tmp_path):
        p = tmp_path / "acc.jsonl"
        rows = [
            {"triple_id": "t0", "model": "m", "accuracy": 0.5, "n_responses": 400},
            {"triple_id": "t1", "model": "m", "accuracy": 0.25, "n_responses": 400},
        ]
        p.write_text("\n".join(json.dumps(r) for r in rows) + "\n")
        records = load_accuracies([p])
        grouped = group_accuracies(records, {"t0", "t1"})
        assert grouped == {"m": {"t0": 0.5, "t1": 0.25}}

    def test_duplicate_pair_rejected(self, tmp_path):
        p = tmp_path / "acc.jsonl"
        row = json.dumps({"triple_id": "t0", "model": "m", "accuracy": 0.5, "n_responses": 2})
        p.write_text(row + "\n" + row + "\n")
        with pytest.raises(DataError, match="duplicate accuracy"):
            load_accuracies([p])

    def test_unknown_triple_rejected(self, tmp_path):
        p = tmp_path / "acc.jsonl"
        p.write_text(json.dumps({"triple_id": "ghost", "model": "m", "accuracy": 0.5, "n_responses": 2}) + "\n")
        records = load_accuracies([p])
        with pytest.raises(DataError, match="unknown triple_id"):
            group_accuracies(records, {"t0"})


def _metrics_fixture(n=60, seed=41):
    """Counts with a wide log-MI spread plus both exclusion kinds."""
    rng = random.Random(seed)
    counts = [EntityCounts("zz_zero", 50, 50, 0), EntityCounts("zz_anti", 900, 900, 100)]
    for i in range(n):
        n_s = rng.randint(20, 300)
        n_o = rng.randint(20, 300)
        n_so = rng.randint(1, min(n_s, n_o) // 2 + 1)
        counts.append(EntityCounts(f"t{i:03d}", n_s, n_o, n_so))
    models = [ModelSpec("small", 2.0 ** 24), ModelSpec("big", 2.0 ** 36)]
    records, meta = compute_metrics(counts, 1000, models)
    return records, meta, models


class TestBuildReport:
    def _accuracy_for(self, records, coeff, noise_seed=None, model="small"):
        rng = random.Random(noise_seed)
        acc = {}
        for r in records:
            if r.excluded_reason is None:
                base = 0.1 + coeff * r.smi[model]
                if noise_seed is not None:
                    base += rng.uniform(-0.05, 0.05)
                acc[r.triple_id] = min(1.0, max(0.0, round(base * 400) / 400))
        return acc

    def test_report_shape_and_determinism(self):
        records, meta, models = _metrics_fixture()
        accs = {
            "small": self._accuracy_for(records, 0.5, model="small"),
            "big": self._accuracy_for(records, 0.55, noise_seed=1, model="big"),
        }
        r1 = build_report(records, meta, models, accs, created_at="x")
        r2 = build_report(records, meta, models, accs, created_at="x")
        assert r1 == r2
        for name in ("small", "big"):
            blocks = r1["models"][name]["metrics"]
            assert set(blocks) == {"cooccur", "mi", "smi"}
            for metric, blk in blocks.items():
                assert blk["n_bins"] >= 2
                assert blk["fit"]["n_points"] == blk["n_bins"]
                assert blk["mse_per_task"] >= 0.0
                assert "low_20pct" in blk["subset_fits"]
        tt = r1["r2_comparison"]["ttest"]
        assert tt["df"] == 1  # two models
        assert len(r1["r2_comparison"]["pairs"]) == 2

    def test_excluded_triples_take_no_part_in_any_fit(self):
        # accuracy table omits excluded triples entirely: must not error,
        # and every metric block covers exactly the non-excluded set
        records, meta, models = _metrics_fixture()
        accs = {
            "small": self._accuracy_for(records, 0.5),
            "big": self._accuracy_for(records, 0.5, model="big"),
        }
        report = build_report(records, meta, models, accs, created_at="x")
        n_usable = sum(1 for r in records if r.excluded_reason is None)
        for metric in ("cooccur", "mi", "smi"):
            blk = report["models"]["small"]["metrics"][metric]
            assert blk["n_triples"] == n_usable
            assert sum(b["count"] for b in blk["bins"]) == n_usable

    def test_missing_accuracy_for_usable_triple_rejected(self):
        records, meta, models = _metrics_fixture()
        accs = {"small": self._accuracy_for(records, 0.5), "big": {}}
        with pytest.raises(DataError, match="no accuracy"):
            build_report(records, meta, models, accs, created_at="x")

    def test_subset_fit_is_low_fraction_of_triples(self):
        records, meta, models = _metrics_fixture(n=100)
        accs = {
            "small": self._accuracy_for(records, 0.5),
            "big": self._accuracy_for(records, 0.5, model="big"),
        }
        report = build_report(records, meta, models, accs, created_at="x")
        blk = report["models"]["small"]["metrics"]["mi"]
        sub = blk["subset_fits"]["low_20pct"]
        assert sub["n_triples"] == math.floor(0.2 * blk["n_triples"])

    def test_unknown_model_rejected(self):
        records, meta, _ = _metrics_fixture()
        stranger = [ModelSpec("stranger", 2.0 ** 20)]
        with pytest.raises(DataError, match="not computed for model"):
            build_report(records, meta, stranger, {"stranger": {}}, created_at="x")

    def test_min_bin_count_filters_sparse_bins(self):
        records, meta, models = _metrics_fixture(n=100)
        accs = {
            "small": self._accuracy_for(records, 0.5),
            "big": self._accuracy_for(records, 0.5, model="big"),
        }
        loose = build_report(records, meta, models, accs, created_at="x")
        strict = build_report(records, meta, models, accs, min_bin_count=4, created_at="x")
        for metric in ("cooccur", "mi", "smi"):
            a = loose["models"]["small"]["metrics"][metric]["n_bins"]
            b = strict["models"]["small"]["metrics"][metric]["n_bins"]
            assert b <= a
