"""Command-line front end.

``clusrank test`` ingests a CSV with named columns, dispatches to the
matching test (method x pairing x grouping level), and prints a report
block; ``--json`` emits the same numbers at full precision.  ``clusrank
sim`` drives the simulation harness, either one scenario from flags or a
whole published table grid, writing machine-readable rows with ``--out``.
"""

from __future__ import annotations

import csv
import json
import sys
from pathlib import Path

import click
import numpy as np

from .distributions import check_alternative, substream
from .ranksum_ds import ds_ranksum, ds_ranksum_multigroup
from .ranksum_rgl import (
    rgl_ranksum,
    rgl_ranksum_exact,
    rgl_ranksum_stratified,
    rgl_ranksum_subunit,
)
from .result import TestResult
from .sample import ClusteredSample, ingest_records
from .signedrank_ds import ds_signedrank
from .signedrank_rgl import rgl_signedrank, rgl_signedrank_exact
from .simulate import Scenario, datgen_sgn, datgen_sum, format_table, run_table, simpower

_ALT_CHOICES = ("two-sided", "less", "greater")


def _read_csv(path: str, columns: dict[str, str | None]) -> list[dict]:
    with open(path, newline="", encoding="utf-8") as handle:
        reader = csv.DictReader(handle)
        if reader.fieldnames is None:
            raise click.ClickException(f"{path}: empty file or missing header row")
        for name in columns.values():
            if name is not None and name not in reader.fieldnames:
                raise click.ClickException(f"unknown column: {name}")
        return list(reader)


def _is_cluster_level(sample: ClusteredSample) -> bool:
    first = np.zeros(sample.n_clusters, dtype=np.intp)
    first[sample.cluster_codes] = sample.group_codes
    return bool(np.all(first[sample.cluster_codes] == sample.group_codes))


def _dispatch(
    sample: ClusteredSample,
    method: str,
    alternative: str,
    mu: float,
    exact: bool,
    b: int,
    seed: int,
    has_stratum: bool,
) -> TestResult:
    if sample.paired:
        if has_stratum:
            raise ValueError("stratum is not supported for signed-rank tests")
        if method == "ds":
            if exact:
                raise ValueError("exact mode unsupported for ds")
            return ds_signedrank(sample, alternative, mu)
        if exact:
            return rgl_signedrank_exact(sample, alternative, mu, b=b, seed=seed)
        return rgl_signedrank(sample, alternative, mu)

    if method == "ds":
        if exact:
            raise ValueError("exact mode unsupported for ds")
        if has_stratum:
            raise ValueError("stratum is only supported for method rgl")
        if sample.n_groups == 2:
            return ds_ranksum(sample, alternative, mu)
        if alternative not in ("two_sided", "two-sided"):
            raise ValueError("the multi-group chi-square test is two-sided only")
        return ds_ranksum_multigroup(sample)

    if sample.n_groups != 2:
        raise ValueError("method rgl compares exactly 2 groups; use method ds")
    if _is_cluster_level(sample):
        if exact:
            return rgl_ranksum_exact(sample, alternative, mu, b=b, seed=seed)
        if has_stratum:
            return rgl_ranksum_stratified(sample, alternative, mu)
        return rgl_ranksum(sample, alternative, mu)
    if exact:
        raise ValueError(
            "exact mode covers cluster-level grouping only; "
            "the subunit-level rank-sum test is asymptotic"
        )
    if has_stratum:
        raise ValueError("stratum is not supported for subunit-level grouping")
    return rgl_ranksum_subunit(sample, alternative, mu)


def _alternative_line(result: TestResult, mu: float) -> str:
    wording = {
        "two_sided": "not equal to",
        "less": "less than",
        "greater": "greater than",
    }[result.alternative]
    subject = (
        "true shift in location"
        if "signed rank" in result.method
        else "true difference in locations"
    )
    return f"alternative hypothesis: {subject} is {wording} {mu:g}"


def format_text_report(result: TestResult, data_line: str, mu: float) -> str:
    lines = [
        "",
        f"\t{result.method}",
        "",
        f"data: {data_line}",
        f"number of observations: {result.n_observations};  "
        f"number of clusters: {result.n_clusters}",
    ]
    if result.statistic_name == "chi-square":
        lines.append(f"number of groups: {result.n_groups}")
        lines.append(
            f"chi-square test statistic = {result.statistic:.6g}, "
            f"p-value = {result.p_value:.6g}"
        )
    elif result.exact:
        lines.append(
            f"{result.statistic_name} = {result.statistic:.6g}, "
            f"p-value = {result.p_value:.6g}"
        )
        lines.append(_alternative_line(result, mu))
    else:
        lines.append(f"Z = {result.z:.6g}, p-value = {result.p_value:.6g}")
        lines.append(_alternative_line(result, mu))
    lines.append("")
    return "\n".join(lines)


@click.group()
def main():
    """Rank-sum and signed-rank tests for clustered data."""


@main.command("test")
@click.option("--input", "path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--value", "value_col", required=True, help="Column of observed values.")
@click.option("--cluster", "cluster_col", required=True, help="Column of cluster ids.")
@click.option("--group", "group_col", default=None, help="Column of group labels.")
@click.option("--stratum", "stratum_col", default=None, help="Column of stratum ids.")
@click.option("--paired", is_flag=True, help="Values are paired differences.")
@click.option("--method", type=click.Choice(["rgl", "ds"]), default="rgl")
@click.option("--alternative", type=click.Choice(_ALT_CHOICES), default="two-sided")
@click.option("--mu", type=float, default=0.0, help="Null location shift.")
@click.option("--exact", is_flag=True, help="Permutation test (rgl only).")
@click.option("--B", "b", type=int, default=2000, help="Random permutations; 0 = exhaustive.")
@click.option("--seed", type=int, default=0)
@click.option("--json", "as_json", is_flag=True, help="Emit a JSON record.")
def cmd_test(
    path, value_col, cluster_col, group_col, stratum_col, paired,
    method, alternative, mu, exact, b, seed, as_json,
):
    """Run one clustered rank test on a CSV file."""
    if not paired and group_col is None:
        raise click.ClickException("--group is required unless --paired is set")
    columns = {
        "value": value_col,
        "cluster": cluster_col,
        "group": group_col,
        "stratum": stratum_col,
    }
    records = _read_csv(path, columns)
    if not records:
        raise click.ClickException(f"{path}: no data rows")
    try:
        rows = [
            (
                float(rec[value_col]),
                rec[cluster_col],
                rec[group_col] if group_col else None,
                rec[stratum_col] if stratum_col else None,
            )
            for rec in records
        ]
    except ValueError as err:
        raise click.ClickException(f"bad value in column {value_col!r}: {err}") from None

    try:
        sample = ingest_records(rows, paired=paired)
        result = _dispatch(
            sample,
            method,
            check_alternative(alternative),
            mu,
            exact,
            b,
            seed,
            has_stratum=stratum_col is not None,
        )
    except ValueError as err:
        raise click.ClickException(str(err)) from None

    data_line = f"{value_col}"
    if group_col:
        data_line += f"; group: {group_col}"
    data_line += f"; cluster: {cluster_col}"
    if stratum_col:
        data_line += f"; stratum: {stratum_col}"

    if as_json:
        payload = result.asdict()
        payload["mu"] = mu
        payload["input"] = str(path)
        click.echo(json.dumps(payload))
    else:
        click.echo(format_text_report(result, data_line, mu))


def _parse_rho(raw: str, paired: bool):
    parts = [float(p) for p in raw.split(",")]
    if paired:
        if len(parts) != 1:
            raise click.ClickException("--rho takes a single value for paired scenarios")
        return parts[0]
    if len(parts) == 1:
        return (parts[0], parts[0])
    if len(parts) == 2:
        return (parts[0], parts[1])
    raise click.ClickException("--rho takes one value or a 'rho0,rho1' pair")


def _write_rows(rows: list[dict], out: Path) -> None:
    with open(out, "w", newline="", encoding="utf-8") as handle:
        writer = csv.DictWriter(handle, fieldnames=list(rows[0].keys()))
        writer.writeheader()
        writer.writerows(rows)


def _dump_sample(sample: ClusteredSample, out: Path) -> None:
    names = ["x", "cid"] + (["grp"] if not sample.paired else [])
    with open(out, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(names)
        for i in range(sample.n_observations):
            row = [repr(float(sample.values[i])), sample.cluster_labels[sample.cluster_codes[i]]]
            if not sample.paired:
                row.append(sample.group_labels[sample.group_codes[i]])
            writer.writerow(row)


@main.command("sim")
@click.option("--table", "table_id", type=click.Choice(["rsex", "rsar", "srex", "srar"]))
@click.option("--paired", is_flag=True)
@click.option("--nclus", type=int, default=None, help="Clusters per group (total when paired).")
@click.option("--maxclsize", type=int, default=None)
@click.option("--delta", type=float, default=0.0)
@click.option("--rho", default=None, help="Correlation parameter; 'a,b' pair for rank-sum.")
@click.option("--structure", type=click.Choice(["ex", "ar1"]), default="ex")
@click.option("--misrate", type=float, default=0.0)
@click.option(
    "--grouping",
    type=click.Choice(["cluster", "subunit"]),
    default="cluster",
    help="Level of group assignment (rank-sum scenarios).",
)
@click.option("--level", type=float, default=0.05)
@click.option("--nrep", type=int, required=True)
@click.option("--seed", type=int, default=0)
@click.option("--out", type=click.Path(dir_okay=False), default=None)
@click.option(
    "--dump-data",
    type=click.Path(dir_okay=False),
    default=None,
    help="Write the first replicate's dataset as CSV and exit.",
)
def cmd_sim(
    table_id, paired, nclus, maxclsize, delta, rho, structure, misrate,
    grouping, level, nrep, seed, out, dump_data,
):
    """Empirical size/power runs, one scenario or a whole table grid."""
    if table_id is not None:
        try:
            rows = run_table(table_id, nrep=nrep, seed=seed, level=level)
        except ValueError as err:
            raise click.ClickException(str(err)) from None
        if out:
            _write_rows(rows, Path(out))
        click.echo(format_table(rows))
        return

    if nclus is None or maxclsize is None or rho is None:
        raise click.ClickException(
            "scenario mode needs --nclus, --maxclsize and --rho (or use --table)"
        )
    try:
        scenario = Scenario(
            paired=paired,
            nclus=nclus,
            maxclsize=maxclsize,
            delta=delta,
            rho=_parse_rho(rho, paired),
            structure=structure,
            misrate=misrate,
            clusgrp=grouping == "cluster",
            level=level,
            nrep=nrep,
            seed=seed,
        )
    except ValueError as err:
        raise click.ClickException(str(err)) from None

    if dump_data:
        datgen = datgen_sgn if paired else datgen_sum
        sample = datgen(scenario, substream(seed, 0))
        _dump_sample(sample, Path(dump_data))
        click.echo(f"wrote {sample.n_observations} rows to {dump_data}")
        return

    try:
        report = simpower(scenario)
    except ValueError as err:
        raise click.ClickException(str(err)) from None
    row = {
        "table": "",
        "group_level": "" if paired else grouping,
        "misrate": misrate,
        "maxclsize": maxclsize,
        "rho": rho,
        "nclus": nclus,
        "delta": delta,
        "rgl_rate": report.rgl_rate,
        "ds_rate": report.ds_rate,
        "rgl_se": report.rgl_se,
        "ds_se": report.ds_se,
        "nrep": report.nrep,
        "failures": report.failures,
    }
    if out:
        _write_rows([row], Path(out))
    click.echo(
        f"rejection at level {level:g} over {report.nrep} replicates "
        f"({report.failures} failures):"
    )
    click.echo(
        f"  rgl = {100 * report.rgl_rate:.2f}% (se {100 * report.rgl_se:.2f}pp)   "
        f"ds = {100 * report.ds_rate:.2f}% (se {100 * report.ds_se:.2f}pp)"
    )


if __name__ == "__main__":
    main()
