"""Rank-sum and signed-rank tests for clustered data.

Two method families are implemented: RGL (cluster-size-stratified rank
sums with permutation nulls, plus a subunit-level extension) and DS
(within-cluster resampling, valid under informative cluster sizes), for
both two-or-more-group comparisons and paired differences.  Exact and
Monte-Carlo permutation variants, a reproducible simulation harness, and a
CSV command-line front end round out the package.
"""

from ._backend import active_backend
from .distributions import (
    CorrelationSpec,
    build_correlation,
    chi_square_sf,
    mvn_sample,
    p_value,
    std_normal_cdf,
    substream,
)
from .permutation import (
    PermutationPlan,
    enumerate_assignments,
    enumerate_sign_flips,
    permutation_pvalue,
)
from .ranksum_ds import ds_ranksum, ds_ranksum_multigroup
from .ranksum_rgl import (
    GroupCountProfile,
    SizeStratum,
    rgl_ranksum,
    rgl_ranksum_exact,
    rgl_ranksum_stratified,
    rgl_ranksum_subunit,
    rgl_ranksum_subunit_balanced,
)
from .result import DegenerateClustersWarning, TestResult
from .sample import (
    ClusteredSample,
    RankedView,
    ecdf_pair,
    ingest_records,
    midranks,
    pooled_ecdf,
    ranked_view,
)
from .signedrank_ds import ds_signedrank
from .signedrank_rgl import rgl_signedrank, rgl_signedrank_exact
from .simulate import PowerReport, Scenario, datgen_sgn, datgen_sum, run_table, simpower

__version__ = "0.1.0"

__all__ = [
    "ClusteredSample",
    "CorrelationSpec",
    "DegenerateClustersWarning",
    "GroupCountProfile",
    "PermutationPlan",
    "PowerReport",
    "RankedView",
    "Scenario",
    "SizeStratum",
    "TestResult",
    "active_backend",
    "build_correlation",
    "chi_square_sf",
    "datgen_sgn",
    "datgen_sum",
    "ds_ranksum",
    "ds_ranksum_multigroup",
    "ds_signedrank",
    "ecdf_pair",
    "enumerate_assignments",
    "enumerate_sign_flips",
    "ingest_records",
    "midranks",
    "mvn_sample",
    "p_value",
    "permutation_pvalue",
    "pooled_ecdf",
    "ranked_view",
    "rgl_ranksum",
    "rgl_ranksum_exact",
    "rgl_ranksum_stratified",
    "rgl_ranksum_subunit",
    "rgl_ranksum_subunit_balanced",
    "rgl_signedrank",
    "rgl_signedrank_exact",
    "simpower",
    "run_table",
    "std_normal_cdf",
    "substream",
]
