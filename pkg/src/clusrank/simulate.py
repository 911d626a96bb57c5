"""Size/power simulation harness.

Data generation follows two schemes.  For rank-sum scenarios, two groups of
``nclus`` clusters of size ``maxclsize`` are drawn as ``exp(Z) + delta *
group`` where ``Z`` is multivariate normal with a group-specific
exchangeable or AR1 correlation; group labels sit either on whole clusters
or, for subunit-level grouping, are a uniform random permutation of half
ones over all subunits.  For signed-rank scenarios the paired differences
are ``sign(Z) * exp(|Z|)`` with ``Z`` centered at ``delta``.  A missing
rate thins ``floor(misrate * rows)`` rows uniformly without replacement
across the whole dataset; clusters emptied by thinning disappear.

``simpower`` runs both the applicable RGL and DS tests on each replicate
and reports two-sided rejection rates at the requested level.  Every
replicate draws from its own substream of the scenario seed, so results are
a pure function of (scenario, seed).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from .distributions import CorrelationSpec, build_correlation, derive_seed, substream
from .ranksum_ds import ds_ranksum
from .ranksum_rgl import rgl_ranksum, rgl_ranksum_subunit
from .sample import ClusteredSample
from .signedrank_ds import ds_signedrank
from .signedrank_rgl import rgl_signedrank

__all__ = [
    "Scenario",
    "PowerReport",
    "datgen_sum",
    "datgen_sgn",
    "simpower",
    "run_table",
    "table_scenarios",
    "format_table",
    "TABLE_IDS",
]

TABLE_IDS = ("rsex", "rsar", "srex", "srar")

_DELTAS = (0.0, 0.2, 0.5)
_RHO_PAIRS = ((0.1, 0.1), (0.5, 0.5), (-0.1, 0.9))
_RHO_SINGLES = (0.1, 0.5, 0.9)
_RS_BLOCKS = ((0.0, 2), (0.0, 5), (0.5, 10))  # (misrate, maxclsize)
_SR_BLOCKS = ((0.0, 2), (0.0, 10), (0.5, 5), (0.5, 10))
_GROUP_SIZES = (20, 50)


@dataclass(frozen=True)
class Scenario:
    """One simulation configuration.

    ``rho`` is a pair (one parameter per group) for rank-sum scenarios and
    a scalar for paired scenarios; ``clusgrp`` switches between cluster- and
    subunit-level grouping and only applies when ``paired`` is false.
    """

    paired: bool
    nclus: int
    maxclsize: int
    delta: float = 0.0
    rho: tuple[float, float] | float = 0.1
    structure: str = "exchangeable"
    misrate: float = 0.0
    clusgrp: bool = True
    level: float = 0.05
    nrep: int = 4000
    seed: int = 0

    def __post_init__(self):
        if self.nclus < 1 or self.maxclsize < 1:
            raise ValueError("nclus and maxclsize must be positive")
        if not 0.0 < self.level < 1.0:
            raise ValueError("level must lie in (0, 1)")
        if not 0.0 <= self.misrate < 1.0:
            raise ValueError("misrate must lie in [0, 1)")
        if self.nrep < 1:
            raise ValueError("nrep must be positive")
        structure = {"ex": "exchangeable"}.get(self.structure, self.structure)
        object.__setattr__(self, "structure", structure)
        if self.paired:
            if isinstance(self.rho, (tuple, list)):
                if len(self.rho) != 1:
                    raise ValueError("paired scenarios take a single rho")
                object.__setattr__(self, "rho", float(self.rho[0]))
            else:
                object.__setattr__(self, "rho", float(self.rho))
        else:
            rho = self.rho
            if not isinstance(rho, (tuple, list)):
                rho = (rho, rho)
            if len(rho) != 2:
                raise ValueError("rank-sum scenarios take a (rho0, rho1) pair")
            object.__setattr__(self, "rho", (float(rho[0]), float(rho[1])))
        # validate the correlation parameterization eagerly
        for r in self.rho if isinstance(self.rho, tuple) else (self.rho,):
            build_correlation(CorrelationSpec(self.structure, r, self.maxclsize))


@dataclass(frozen=True)
class PowerReport:
    """Empirical rejection proportions of the RGL and DS tests."""

    nrep: int
    failures: int
    rgl_rate: float
    ds_rate: float

    @property
    def n_effective(self) -> int:
        return self.nrep - self.failures

    def mc_se(self, rate: float) -> float:
        return math.sqrt(rate * (1.0 - rate) / self.n_effective)

    @property
    def rgl_se(self) -> float:
        return self.mc_se(self.rgl_rate)

    @property
    def ds_se(self) -> float:
        return self.mc_se(self.ds_rate)


def _thin(
    rng: np.random.Generator, misrate: float, arrays: list[np.ndarray]
) -> list[np.ndarray]:
    rows = arrays[0].shape[0]
    n_drop = int(math.floor(misrate * rows))
    if n_drop == 0:
        return arrays
    drop = rng.choice(rows, size=n_drop, replace=False)
    keep = np.ones(rows, dtype=bool)
    keep[drop] = False
    return [a[keep] for a in arrays]


class _RanksumGenerator:
    """Reusable rank-sum data generator with pre-factored correlations."""

    def __init__(self, scenario: Scenario):
        g = scenario.maxclsize
        rho0, rho1 = scenario.rho
        self.scenario = scenario
        self.lower0 = np.linalg.cholesky(
            build_correlation(CorrelationSpec(scenario.structure, rho0, g))
        )
        self.lower1 = np.linalg.cholesky(
            build_correlation(CorrelationSpec(scenario.structure, rho1, g))
        )

    def draw(self, rng: np.random.Generator) -> ClusteredSample:
        sc = self.scenario
        g, nclus = sc.maxclsize, sc.nclus
        z0 = rng.standard_normal((nclus, g)) @ self.lower0.T
        z1 = rng.standard_normal((nclus, g)) @ self.lower1.T
        x = np.exp(np.concatenate([z0.ravel(), z1.ravel()]))
        group = np.repeat(np.array([0, 1]), nclus * g)
        if not sc.clusgrp:
            group = rng.permutation(group)
        x = x + sc.delta * group
        cid = np.repeat(np.arange(2 * nclus), g)
        x, group, cid = _thin(rng, sc.misrate, [x, group, cid])
        return ClusteredSample.from_arrays(x, cid, groups=group, paired=False)


class _SignedrankGenerator:
    """Reusable paired-differences generator with a pre-factored correlation."""

    def __init__(self, scenario: Scenario):
        self.scenario = scenario
        self.lower = np.linalg.cholesky(
            build_correlation(
                CorrelationSpec(scenario.structure, scenario.rho, scenario.maxclsize)
            )
        )

    def draw(self, rng: np.random.Generator) -> ClusteredSample:
        sc = self.scenario
        z = sc.delta + rng.standard_normal((sc.nclus, sc.maxclsize)) @ self.lower.T
        x = (np.sign(z) * np.exp(np.abs(z))).ravel()
        cid = np.repeat(np.arange(sc.nclus), sc.maxclsize)
        x, cid = _thin(rng, sc.misrate, [x, cid])
        return ClusteredSample.from_arrays(x, cid, paired=True)


def datgen_sum(scenario: Scenario, rng: np.random.Generator) -> ClusteredSample:
    """Draw one rank-sum dataset (two groups of ``nclus`` clusters)."""
    if scenario.paired:
        raise ValueError("datgen_sum needs an unpaired scenario")
    return _RanksumGenerator(scenario).draw(rng)


def datgen_sgn(scenario: Scenario, rng: np.random.Generator) -> ClusteredSample:
    """Draw one paired-differences dataset (``nclus`` clusters)."""
    if not scenario.paired:
        raise ValueError("datgen_sgn needs a paired scenario")
    return _SignedrankGenerator(scenario).draw(rng)


def _replicate_pvalues(sample: ClusteredSample, scenario: Scenario) -> tuple[float, float]:
    if scenario.paired:
        return (
            rgl_signedrank(sample).p_value,
            ds_signedrank(sample).p_value,
        )
    rgl_test = rgl_ranksum if scenario.clusgrp else rgl_ranksum_subunit
    return rgl_test(sample).p_value, ds_ranksum(sample).p_value


def simpower(scenario: Scenario) -> PowerReport:
    """Empirical rejection rates of the RGL and DS tests for one scenario.

    Each replicate generates a dataset from its own substream, runs the
    applicable test pair, and scores two-sided p-values against
    ``scenario.level``.  Replicates whose tests degenerate count as
    failures and are excluded from the rates.
    """
    gen = (
        _SignedrankGenerator(scenario) if scenario.paired else _RanksumGenerator(scenario)
    )
    rgl_hits = ds_hits = failures = 0
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        for rep in range(scenario.nrep):
            rng = substream(scenario.seed, rep)
            try:
                sample = gen.draw(rng)
                p_rgl, p_ds = _replicate_pvalues(sample, scenario)
            except ValueError:
                failures += 1
                continue
            rgl_hits += p_rgl < scenario.level
            ds_hits += p_ds < scenario.level
    n_eff = scenario.nrep - failures
    if n_eff == 0:
        raise ValueError("every replicate failed; scenario is degenerate")
    return PowerReport(
        nrep=scenario.nrep,
        failures=failures,
        rgl_rate=rgl_hits / n_eff,
        ds_rate=ds_hits / n_eff,
    )


def table_scenarios(table_id: str) -> list[Scenario]:
    """Scenario grid (without delta) of one published comparison table."""
    if table_id not in TABLE_IDS:
        raise ValueError(f"table must be one of {TABLE_IDS}, got {table_id!r}")
    structure = "exchangeable" if table_id.endswith("ex") else "ar1"
    scenarios: list[Scenario] = []
    if table_id.startswith("rs"):
        for clusgrp in (True, False):
            for misrate, g in _RS_BLOCKS:
                for rho in _RHO_PAIRS:
                    for nclus in _GROUP_SIZES:
                        scenarios.append(
                            Scenario(
                                paired=False,
                                nclus=nclus,
                                maxclsize=g,
                                rho=rho,
                                structure=structure,
                                misrate=misrate,
                                clusgrp=clusgrp,
                            )
                        )
    else:
        for misrate, g in _SR_BLOCKS:
            for rho in _RHO_SINGLES:
                for nclus in _GROUP_SIZES:
                    scenarios.append(
                        Scenario(
                            paired=True,
                            nclus=nclus,
                            maxclsize=g,
                            rho=rho,
                            structure=structure,
                            misrate=misrate,
                        )
                    )
    return scenarios


def run_table(
    table_id: str, nrep: int, seed: int, level: float = 0.05
) -> list[dict]:
    """Run a full table grid; one record per scenario per delta.

    Each record carries both methods' rejection rates with their
    Monte-Carlo standard errors.  Seeds derive deterministically from
    ``seed`` and the grid position.
    """
    rows: list[dict] = []
    for idx, base in enumerate(table_scenarios(table_id)):
        for d_idx, delta in enumerate(_DELTAS):
            scenario = replace(
                base,
                delta=delta,
                nrep=nrep,
                level=level,
                seed=derive_seed(seed, idx, d_idx),
            )
            report = simpower(scenario)
            rows.append(
                {
                    "table": table_id,
                    "group_level": (
                        "" if scenario.paired else ("cluster" if scenario.clusgrp else "subunit")
                    ),
                    "misrate": scenario.misrate,
                    "maxclsize": scenario.maxclsize,
                    "rho": (
                        f"{scenario.rho}"
                        if scenario.paired
                        else f"{scenario.rho[0]},{scenario.rho[1]}"
                    ),
                    "nclus": scenario.nclus,
                    "delta": delta,
                    "rgl_rate": report.rgl_rate,
                    "ds_rate": report.ds_rate,
                    "rgl_se": report.rgl_se,
                    "ds_se": report.ds_se,
                    "nrep": report.nrep,
                    "failures": report.failures,
                }
            )
    return rows


def format_table(rows: Sequence[dict]) -> str:
    """Human-readable table: one line per scenario, RGL/DS rejection
    percentages side by side for each delta."""
    by_scenario: dict[tuple, dict[float, dict]] = {}
    for row in rows:
        key = (
            row["group_level"],
            row["misrate"],
            row["maxclsize"],
            row["rho"],
            row["nclus"],
        )
        by_scenario.setdefault(key, {})[row["delta"]] = row

    deltas = sorted({row["delta"] for row in rows})
    header_cells = ["level", "miss", "size", "rho", "n"]
    for d in deltas:
        header_cells += [f"RGL(d={d:g})", f"DS(d={d:g})"]
    lines = ["  ".join(f"{c:>10}" for c in header_cells)]
    for key, per_delta in by_scenario.items():
        cells = [f"{key[0] or '-':>10}"] + [f"{k:>10}" for k in key[1:]]
        for d in deltas:
            row = per_delta.get(d)
            if row is None:
                cells += [f"{'-':>10}"] * 2
            else:
                cells += [
                    f"{100 * row['rgl_rate']:>10.1f}",
                    f"{100 * row['ds_rate']:>10.1f}",
                ]
        lines.append("  ".join(cells))
    return "\n".join(lines)
