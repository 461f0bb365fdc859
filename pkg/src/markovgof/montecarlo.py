"""Size/power studies and finite-sample normality checks."""

from __future__ import annotations

import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import stats as sps

from markovgof.bootstrap import BootstrapConfig, critical_value, run_test
from markovgof.errors import BootstrapAbort, DegeneratePoolError, EstimationError
from markovgof.estimators import fit_model
from markovgof.gof import Side, TestVariant, VariantKind, u_values
from markovgof.models import DEFAULT_BURN_IN, InnovationDistribution, ModelSpec, simulate

__all__ = [
    "McReport",
    "McRow",
    "McScenario",
    "PointDiagnostic",
    "TABLE1_DGPS",
    "TABLE2_DGPS",
    "data_seed",
    "normality_diagnostic",
    "rejection_rate",
    "reproduce_table",
    "table_scenarios",
]

logger = logging.getLogger(__name__)

ABORT_TOLERANCE = 0.01


@dataclass(frozen=True, eq=False)
class McScenario:
    """One cell block of a simulation table: a DGP tested against a null."""

    dgp: ModelSpec
    null: ModelSpec
    variant: TestVariant
    n: int
    alphas: tuple[float, ...] = (0.05, 0.10)
    replications: int = 200
    B: int = 500
    master_seed: int = 0
    burn_in: int = DEFAULT_BURN_IN
    label: str = ""

    def __post_init__(self) -> None:
        if self.replications < 1:
            raise ValueError("replications must be >= 1")
        if self.dgp.theta is None:
            raise ValueError("the data-generating process must be fully parametrized")
        if self.variant.kind is not VariantKind.FULL and not self.null.family.testable:
            raise ValueError(f"{self.null.family.value} cannot be a null model")
        errors = self.bootstrap_config().validate(self.alphas)
        if errors:
            raise ValueError("; ".join(errors))

    @property
    def null_order(self) -> int:
        if self.variant.kind is VariantKind.FULL:
            return self.variant.transition.p
        return self.null.p

    def bootstrap_config(self, master_seed: int | None = None) -> BootstrapConfig:
        return BootstrapConfig(
            B=self.B,
            alpha=self.alphas[0],
            burn_in=self.burn_in,
            master_seed=self.master_seed if master_seed is None else master_seed,
        )


@dataclass(frozen=True)
class McRow:
    n: int
    alpha: float
    dgp: str
    variant: str
    rejection_rate: float
    rejections: int
    replications: int
    B: int
    seed: int
    s_mean: float
    s_min: float
    s_max: float
    degenerate: int
    aborted: int


@dataclass(eq=False)
class McReport:
    label: str
    rows: list[McRow]
    s_values: np.ndarray = field(repr=False)
    wall_time: float = 0.0

    def rate(self, alpha: float) -> float:
        for row in self.rows:
            if math.isclose(row.alpha, alpha):
                return row.rejection_rate
        raise KeyError(alpha)


def data_seed(master_seed: int, r: int) -> np.random.SeedSequence:
    """Stream for the data of replication ``r``."""
    return np.random.SeedSequence([master_seed, r])


def _bootstrap_seed(master_seed: int, r: int) -> int:
    # distinct from the data stream: a third key word
    return int(np.random.SeedSequence([master_seed, r, 1]).generate_state(1)[0])


def _replicate(scenario: McScenario, r: int):
    series = simulate(
        scenario.dgp, scenario.n, data_seed(scenario.master_seed, r),
        scenario.burn_in, lags=scenario.null_order,
    )
    config = scenario.bootstrap_config(_bootstrap_seed(scenario.master_seed, r))
    try:
        report = run_test(series, scenario.variant, scenario.null, config)
    except (BootstrapAbort, DegeneratePoolError, EstimationError) as exc:
        logger.warning("replication %d aborted: %s", r, exc)
        return None
    decisions = tuple(
        report.s_n > critical_value(report.outcome.stats, a) for a in scenario.alphas
    )
    return report.s_n, decisions, report.outcome.degenerate_count


def _replicate_chunk(args):
    scenario, indices = args
    return [_replicate(scenario, r) for r in indices]


def rejection_rate(scenario: McScenario, workers: int = 1) -> McReport:
    """Estimate rejection probabilities of the bootstrap test by simulation.

    Replication ``r`` draws its data from stream ``(master_seed, r)`` and
    its bootstrap from a stream derived from the same pair, so the report
    does not depend on ``workers``.
    """
    start = time.perf_counter()
    reps = list(range(scenario.replications))
    if workers <= 1:
        results = _replicate_chunk((scenario, reps))
    else:
        chunks = [reps[i::workers] for i in range(workers)]
        with ProcessPoolExecutor(workers) as pool:
            parts = list(pool.map(_replicate_chunk, [(scenario, c) for c in chunks]))
        results = [None] * len(reps)
        for chunk, part in zip(chunks, parts):
            for r, res in zip(chunk, part):
                results[r] = res
    done = [res for res in results if res is not None]
    aborted = len(results) - len(done)
    if aborted and aborted >= ABORT_TOLERANCE * len(results):
        raise BootstrapAbort(
            f"{aborted} of {len(results)} replications aborted in scenario {scenario.label!r}"
        )
    s_values = np.array([res[0] for res in done])
    degenerate = sum(res[2] for res in done)
    rows = []
    for i, alpha in enumerate(scenario.alphas):
        rejections = sum(1 for res in done if res[1][i])
        rows.append(McRow(
            n=scenario.n,
            alpha=alpha,
            dgp=scenario.label or scenario.dgp.describe(),
            variant=scenario.variant.describe(),
            rejection_rate=rejections / len(done),
            rejections=rejections,
            replications=len(done),
            B=scenario.B,
            seed=scenario.master_seed,
            s_mean=float(s_values.mean()),
            s_min=float(s_values.min()),
            s_max=float(s_values.max()),
            degenerate=degenerate,
            aborted=aborted,
        ))
    return McReport(scenario.label, rows, s_values, time.perf_counter() - start)


TABLE1_DGPS = {
    "ARCH(1) N(0,1)": ModelSpec.arch((0.1, 0.4)),
    "ARCH(1) t5": ModelSpec.arch((0.1, 0.4), InnovationDistribution.student_t(5)),
    "ARCH(2) theta2=0.4": ModelSpec.arch((0.1, 0.4, 0.4)),
    "GARCH(1,1)": ModelSpec.garch11((0.08, 0.7, 0.2)),
    "SV": ModelSpec.sv((-0.9, 0.6, 1.0)),
}

TABLE2_DGPS = {
    "iid N(0,1)": (ModelSpec.iid(InnovationDistribution.normal()), "normal"),
    "iid U(-sqrt3,sqrt3)": (ModelSpec.iid(InnovationDistribution.uniform()), "uniform"),
    "AR(1) theta=0.2": (ModelSpec.ar([0.2]), "normal"),
    "AR(1) theta=0.4": (ModelSpec.ar([0.4]), "normal"),
    "AR(1) theta=0.6": (ModelSpec.ar([0.6]), "normal"),
}

TABLE_SIZES = {1: (100, 200, 400), 2: (25, 50, 100)}


def table_scenarios(
    table_id: int,
    scale: str = "full",
    replications: int | None = None,
    B: int = 500,
    master_seed: int = 0,
    ns=None,
    dgps=None,
    iid_null: str = "edf",
) -> list[McScenario]:
    """Scenario grid of simulation table 1 (ARCH null) or 2 (i.i.d. null).

    ``iid_null`` selects the table 2 model term: ``"edf"`` compares with
    the empirical marginal law of the sample (a test of serial
    independence, the default), ``"specified"`` with the named law.
    """
    if scale not in ("full", "reduced"):
        raise ValueError("scale must be 'full' or 'reduced'")
    if iid_null not in ("edf", "specified"):
        raise ValueError("iid_null must be 'edf' or 'specified'")
    if table_id not in TABLE_SIZES:
        raise ValueError(f"unknown table {table_id!r}")
    if replications is None:
        replications = 200 if scale == "full" else 100
    ns = TABLE_SIZES[table_id] if ns is None else ns
    scenarios = []
    if table_id == 1:
        null = ModelSpec.template("arch", 1)
        variant = TestVariant.parametric(InnovationDistribution.normal())
        names = list(TABLE1_DGPS) if dgps is None else dgps
        for n in ns:
            for name in names:
                scenarios.append(McScenario(
                    TABLE1_DGPS[name], null, variant, n, (0.05, 0.10),
                    replications, B, master_seed, label=name,
                ))
    elif table_id == 2:
        laws = {
            "normal": InnovationDistribution.normal(),
            "uniform": InnovationDistribution.uniform(),
        }
        names = list(TABLE2_DGPS) if dgps is None else dgps
        for n in ns:
            for name in names:
                dgp, law = TABLE2_DGPS[name]
                if iid_null == "edf":
                    null = ModelSpec.template("iid", 1)
                    variant = TestVariant.semiparametric()
                else:
                    null = ModelSpec.iid(laws[law], p=1)
                    variant = TestVariant.fully_specified(null)
                scenarios.append(McScenario(
                    dgp, null, variant, n, (0.05, 0.10),
                    replications, B, master_seed, label=name,
                ))
    else:
        raise ValueError(f"unknown table {table_id!r}")
    return scenarios


def reproduce_table(table_id: int, scale: str = "full", workers: int = 1, **kwargs) -> list[McReport]:
    """Run every scenario of a simulation table."""
    reports = []
    for scenario in table_scenarios(table_id, scale, **kwargs):
        logger.info("table %s: n=%d %s", table_id, scenario.n, scenario.label)
        reports.append(rejection_rate(scenario, workers))
    return reports


@dataclass(frozen=True, eq=False)
class PointDiagnostic:
    x: tuple[float, ...]
    y: float
    values: np.ndarray = field(repr=False)
    mean: float
    variance: float
    ad_statistic: float
    ad_critical_1pct: float

    @property
    def normal_ok(self) -> bool:
        return bool(self.ad_statistic < self.ad_critical_1pct)


def normality_diagnostic(
    null_spec: ModelSpec,
    variant: TestVariant,
    n: int,
    points,
    replications: int,
    seed: int,
    burn_in: int = DEFAULT_BURN_IN,
) -> list[PointDiagnostic]:
    """Distribution of ``U_n(x, y)`` at fixed points under the null.

    Returns per point the sample mean and variance over ``replications``
    simulated series, and the Anderson-Darling statistic against the normal
    family with its 1% critical value.
    """
    points = [(tuple(np.atleast_1d(np.asarray(x, dtype=float))), float(y)) for x, y in points]
    values = np.empty((replications, len(points)))
    template = ModelSpec.template(null_spec.family, null_spec.p, null_spec.innovation)
    for r in range(replications):
        series = simulate(null_spec, n, data_seed(seed, r), burn_in)
        fitted = None if variant.kind is VariantKind.FULL else fit_model(series, template)
        for j, (x, y) in enumerate(points):
            values[r, j] = u_values(series, variant, fitted, x, [y], [Side.AT])[0]
    out = []
    for j, (x, y) in enumerate(points):
        col = values[:, j]
        if np.ptp(col) == 0:
            ad, crit = math.nan, math.nan
        else:
            res = sps.anderson(col, dist="norm")
            ad = float(res.statistic)
            crit = float(res.critical_values[list(res.significance_level).index(1.0)])
        out.append(PointDiagnostic(x, y, col, float(col.mean()), float(col.var(ddof=1)), ad, crit))
    return out
