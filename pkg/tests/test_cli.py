"""Command-line interface: dispatch, report formats, exit codes, round trips."""

import csv
import json
import math

import numpy as np
import pytest
from click.testing import CliRunner

from clusrank import ingest_records, rgl_ranksum_subunit
from clusrank.cli import main


@pytest.fixture
def runner():
    return CliRunner()


def write_csv(path, header, rows):
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(header)
        writer.writerows(rows)


@pytest.fixture
def cluster_level_csv(tmp_path):
    rng = np.random.default_rng(0)
    path = tmp_path / "data.csv"
    rows = []
    for cid in range(12):
        group = "T" if cid < 6 else "C"
        for _ in range(3):
            rows.append([round(float(rng.normal(0, 1)), 6), cid, group])
    write_csv(path, ["x", "cid", "grp"], rows)
    return path


class TestCmdTest:
    def test_text_report_structure(self, runner, cluster_level_csv):
        result = runner.invoke(
            main, ["test", "--input", str(cluster_level_csv),
                   "--value", "x", "--cluster", "cid", "--group", "grp"]
        )
        assert result.exit_code == 0, result.output
        assert "Rosner-Glynn-Lee" in result.output
        assert "number of observations: 36;  number of clusters: 12" in result.output
        assert "Z = " in result.output and "p-value = " in result.output
        assert "alternative hypothesis: true difference in locations" in result.output

    def test_json_matches_text_at_six_digits(self, runner, cluster_level_csv):
        args = ["test", "--input", str(cluster_level_csv),
                "--value", "x", "--cluster", "cid", "--group", "grp"]
        text = runner.invoke(main, args).output
        payload = json.loads(runner.invoke(main, args + ["--json"]).output)
        assert f"Z = {payload['z']:.6g}," in text
        assert f"p-value = {payload['p_value']:.6g}" in text
        assert payload["n_observations"] == 36
        assert payload["method"].startswith("Clustered Wilcoxon rank sum")

    def test_ds_method(self, runner, cluster_level_csv):
        result = runner.invoke(
            main, ["test", "--input", str(cluster_level_csv),
                   "--value", "x", "--cluster", "cid", "--group", "grp", "--method", "ds"]
        )
        assert result.exit_code == 0
        assert "Datta-Satten" in result.output

    def test_exact_exhaustive_count(self, runner, tmp_path):
        rng = np.random.default_rng(1)
        path = tmp_path / "exact.csv"
        rows = []
        for cid in range(20):
            group = "A" if cid < 10 else "B"
            for _ in range(3):
                rows.append([round(float(rng.normal(0, 1)), 6), cid, group])
        write_csv(path, ["x", "cid", "grp"], rows)
        result = runner.invoke(
            main, ["test", "--input", str(path), "--value", "x", "--cluster", "cid",
                   "--group", "grp", "--exact", "--B", "0", "--json"]
        )
        assert result.exit_code == 0, result.output
        payload = json.loads(result.output)
        assert payload["n_resamples"] == math.comb(20, 10)
        assert payload["exact"]

    def test_ds_exact_rejected(self, runner, cluster_level_csv):
        result = runner.invoke(
            main, ["test", "--input", str(cluster_level_csv), "--value", "x",
                   "--cluster", "cid", "--group", "grp", "--method", "ds", "--exact"]
        )
        assert result.exit_code != 0
        assert "exact mode unsupported for ds" in result.output

    def test_unknown_column(self, runner, cluster_level_csv):
        result = runner.invoke(
            main, ["test", "--input", str(cluster_level_csv), "--value", "y",
                   "--cluster", "cid", "--group", "grp"]
        )
        assert result.exit_code != 0
        assert "unknown column: y" in result.output

    def test_paired_signed_rank(self, runner, tmp_path):
        rng = np.random.default_rng(2)
        path = tmp_path / "paired.csv"
        rows = [[round(float(rng.normal(0.2, 1)), 6), cid // 3] for cid in range(30)]
        write_csv(path, ["d", "cid"], rows)
        result = runner.invoke(
            main, ["test", "--input", str(path), "--value", "d", "--cluster", "cid", "--paired"]
        )
        assert result.exit_code == 0, result.output
        assert "signed rank" in result.output
        assert "true shift in location" in result.output

    def test_stratified_dispatch(self, runner, tmp_path):
        rng = np.random.default_rng(3)
        path = tmp_path / "strat.csv"
        rows = []
        for cid in range(16):
            group = "A" if cid % 2 else "B"
            stratum = "s1" if cid < 8 else "s2"
            rows.append([round(float(rng.normal(0, 1)), 6), cid, group, stratum])
        write_csv(path, ["x", "cid", "grp", "sid"], rows)
        result = runner.invoke(
            main, ["test", "--input", str(path), "--value", "x", "--cluster", "cid",
                   "--group", "grp", "--stratum", "sid"]
        )
        assert result.exit_code == 0, result.output
        assert "stratum: sid" in result.output

    def test_stratum_with_ds_rejected(self, runner, tmp_path):
        path = tmp_path / "strat2.csv"
        write_csv(path, ["x", "cid", "grp", "sid"],
                  [[1.0, 1, "A", "s"], [2.0, 2, "B", "s"]])
        result = runner.invoke(
            main, ["test", "--input", str(path), "--value", "x", "--cluster", "cid",
                   "--group", "grp", "--stratum", "sid", "--method", "ds"]
        )
        assert result.exit_code != 0
        assert "stratum" in result.output

    def test_subunit_dispatch_matches_library(self, runner, tmp_path):
        rng = np.random.default_rng(4)
        path = tmp_path / "subunit.csv"
        rows = []
        raw = []
        for cid in range(10):
            for _ in range(3):
                v = round(float(rng.normal(0, 1)), 6)
                g = "A" if rng.random() < 0.5 else "B"
                rows.append([v, cid, g])
                raw.append((v, cid, g))
        write_csv(path, ["x", "cid", "grp"], rows)
        result = runner.invoke(
            main, ["test", "--input", str(path), "--value", "x", "--cluster", "cid",
                   "--group", "grp", "--json"]
        )
        assert result.exit_code == 0, result.output
        payload = json.loads(result.output)
        expected = rgl_ranksum_subunit(ingest_records(raw))
        assert payload["statistic"] == pytest.approx(expected.statistic, rel=1e-12)
        assert payload["statistic_name"] == "theta"

    def test_subunit_exact_rejected(self, runner, tmp_path):
        path = tmp_path / "subunit2.csv"
        write_csv(path, ["x", "cid", "grp"],
                  [[1.0, 1, "A"], [2.0, 1, "B"], [3.0, 2, "A"], [4.0, 2, "B"], [5.0, 2, "A"]])
        result = runner.invoke(
            main, ["test", "--input", str(path), "--value", "x", "--cluster", "cid",
                   "--group", "grp", "--exact"]
        )
        assert result.exit_code != 0
        assert "cluster-level" in result.output

    def test_multigroup_chi_square_report(self, runner, tmp_path):
        rng = np.random.default_rng(5)
        path = tmp_path / "multi.csv"
        rows = []
        for cid in range(20):
            group = ["g1", "g2", "g3", "g4"][cid % 4]
            for _ in range(3):
                rows.append([round(float(rng.normal(0, 1)), 6), cid, group])
        write_csv(path, ["x", "cid", "grp"], rows)
        result = runner.invoke(
            main, ["test", "--input", str(path), "--value", "x", "--cluster", "cid",
                   "--group", "grp", "--method", "ds"]
        )
        assert result.exit_code == 0, result.output
        assert "number of groups: 4" in result.output
        assert "chi-square test statistic = " in result.output

    def test_bad_value_column(self, runner, tmp_path):
        path = tmp_path / "bad.csv"
        write_csv(path, ["x", "cid", "grp"], [["abc", 1, "A"], [2.0, 2, "B"]])
        result = runner.invoke(
            main, ["test", "--input", str(path), "--value", "x", "--cluster", "cid",
                   "--group", "grp"]
        )
        assert result.exit_code != 0


class TestCmdSim:
    def test_table_rows_written(self, runner, tmp_path):
        out = tmp_path / "rows.csv"
        result = runner.invoke(
            main, ["sim", "--table", "rsex", "--nrep", "2", "--seed", "7",
                   "--out", str(out)]
        )
        assert result.exit_code == 0, result.output
        with open(out) as handle:
            rows = list(csv.DictReader(handle))
        assert len(rows) == 108
        assert {row["delta"] for row in rows} == {"0.0", "0.2", "0.5"}

    def test_scenario_mode_report(self, runner):
        result = runner.invoke(
            main, ["sim", "--paired", "--nclus", "15", "--maxclsize", "2",
                   "--rho", "0.1", "--structure", "ex", "--delta", "0",
                   "--nrep", "100", "--seed", "3"]
        )
        assert result.exit_code == 0, result.output
        assert "rgl = " in result.output and "ds = " in result.output

    def test_scenario_deterministic(self, runner, tmp_path):
        args = ["sim", "--paired", "--nclus", "12", "--maxclsize", "2", "--rho", "0.2",
                "--delta", "0.2", "--nrep", "80", "--seed", "5"]
        out1 = runner.invoke(main, args + ["--out", str(tmp_path / "a.csv")])
        out2 = runner.invoke(main, args + ["--out", str(tmp_path / "b.csv")])
        assert out1.output == out2.output
        assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()

    def test_missing_scenario_flags(self, runner):
        result = runner.invoke(main, ["sim", "--nrep", "10"])
        assert result.exit_code != 0
        assert "--nclus" in result.output

    def test_dump_data_round_trip(self, runner, tmp_path):
        from clusrank import datgen_sum, substream
        from clusrank.simulate import Scenario

        dump = tmp_path / "dump.csv"
        result = runner.invoke(
            main, ["sim", "--nclus", "8", "--maxclsize", "3", "--rho", "0.4,0.4",
                   "--misrate", "0.25", "--nrep", "1", "--seed", "11",
                   "--dump-data", str(dump)]
        )
        assert result.exit_code == 0, result.output
        with open(dump) as handle:
            rows = [(float(r["x"]), r["cid"], r["grp"]) for r in csv.DictReader(handle)]
        round_tripped = ingest_records(rows)
        scenario = Scenario(paired=False, nclus=8, maxclsize=3, rho=(0.4, 0.4), misrate=0.25, seed=11)
        direct = datgen_sum(scenario, substream(11, 0))

        def by_cluster(sample):
            out = {}
            for code, label in enumerate(sample.cluster_labels):
                lo, hi = sample.cluster_starts[code], sample.cluster_starts[code + 1]
                groups = tuple(sample.group_labels[g] for g in sample.group_codes[lo:hi])
                out[label] = (sample.values[lo:hi].tolist(), groups)
            return out

        # same clusters with identical member values, order, and labels;
        # only the canonical cluster ordering (string vs numeric) may differ
        assert by_cluster(round_tripped) == by_cluster(direct)
        from clusrank import ds_ranksum

        assert ds_ranksum(round_tripped).p_value == pytest.approx(
            ds_ranksum(direct).p_value, rel=1e-12
        )

    def test_paired_dump(self, runner, tmp_path):
        dump = tmp_path / "dump_sgn.csv"
        result = runner.invoke(
            main, ["sim", "--paired", "--nclus", "6", "--maxclsize", "2", "--rho", "0.1",
                   "--nrep", "1", "--seed", "2", "--dump-data", str(dump)]
        )
        assert result.exit_code == 0
        with open(dump) as handle:
            header = next(csv.reader(handle))
        assert header == ["x", "cid"]

    def test_rho_pair_for_paired_rejected(self, runner):
        result = runner.invoke(
            main, ["sim", "--paired", "--nclus", "5", "--maxclsize", "2",
                   "--rho", "0.1,0.2", "--nrep", "10"]
        )
        assert result.exit_code != 0
