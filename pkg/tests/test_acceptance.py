"""Acceptance criteria.

Every test appends one ``PASS``/``FAIL`` line to the session log, printed in
the ``acceptance criteria`` section of the terminal summary, then asserts.
Tolerances are the published ones and must not be loosened.
"""

from __future__ import annotations

import math
import os
import time
import zlib

import numpy as np
import pytest
from scipy import stats as sps

import oracles
from markovgof.bootstrap import BootstrapConfig, bootstrap_statistics
from markovgof.cli import main
from markovgof.estimators import build_innovation_pool, fit_model
from markovgof.gof import Side, TestVariant, build_grid, sup_statistic, u_values
from markovgof.models import ModelSpec, Series, simulate
from markovgof.montecarlo import normality_diagnostic, rejection_rate, table_scenarios

WORKERS = os.cpu_count() or 1
INTEL_ENV = "MARKOVGOF_INTEL_CSV"
INTEL_COLUMN_ENV = "MARKOVGOF_INTEL_COLUMN"

pytestmark = pytest.mark.acceptance


def record(log, criterion: str, ok: bool, detail: str) -> None:
    log.append(f"{'PASS' if ok else 'FAIL'}  {criterion}: {detail}")
    assert ok, f"{criterion}: {detail}"


def run_table(table_id, dgp, n, **kw):
    (scenario,) = table_scenarios(table_id, dgps=[dgp], ns=(n,), **kw)
    return rejection_rate(scenario, workers=WORKERS)


class TestSize:
    @pytest.mark.parametrize("n", [100, 200, 400])
    def test_arch_null_size(self, n, acceptance_log):
        rep = run_table(1, "ARCH(1) N(0,1)", n)
        r05, r10 = rep.rate(0.05), rep.rate(0.10)
        ok = 0.005 <= r05 <= 0.095 and abs(r10 - 0.10) <= 0.065
        record(acceptance_log, f"1 size ARCH(1) N(0,1) n={n}", ok,
               f"alpha=0.05 rate {r05:.3f} in [0.005, 0.095]; "
               f"alpha=0.10 rate {r10:.3f} in [0.035, 0.165]")


class TestPower:
    @pytest.mark.parametrize("dgp,n,bar", [
        ("SV", 200, 0.65),
        ("ARCH(1) t5", 400, 0.35),
        ("GARCH(1,1)", 400, 0.25),
    ])
    def test_table1_power(self, dgp, n, bar, acceptance_log):
        rate = run_table(1, dgp, n).rate(0.05)
        record(acceptance_log, f"2 power {dgp} n={n}", rate >= bar,
               f"alpha=0.05 rate {rate:.3f} >= {bar}")


class TestTable2:
    def test_iid_size(self, acceptance_log):
        rate = run_table(2, "iid N(0,1)", 100).rate(0.05)
        record(acceptance_log, "3 size iid N(0,1) n=100", 0.01 <= rate <= 0.11,
               f"alpha=0.05 rate {rate:.3f} in [0.01, 0.11]")

    @pytest.mark.parametrize("theta,bar", [(0.6, 0.95), (0.4, 0.70)])
    def test_ar_power(self, theta, bar, acceptance_log):
        rate = run_table(2, f"AR(1) theta={theta}", 100).rate(0.05)
        record(acceptance_log, f"3 power AR(1) theta={theta} n=100", rate >= bar,
               f"alpha=0.05 rate {rate:.3f} >= {bar}")


class TestOracleEquivalence:
    def test_sweep_brute_force_dense(self, acceptance_log):
        rng = np.random.default_rng(4_000_004)
        start = time.perf_counter()
        worst_grid, worst_dense = 0.0, -math.inf
        for i in range(1000):
            family = ("ar", "arch")[i % 2]
            kind = ("semi", "param", "full")[(i // 2) % 3]
            n = int(rng.integers(5, 51))
            series, variant, fitted = oracles.random_instance(
                rng, family, kind, n, ties=bool(rng.random() < 0.3))
            s_n = sup_statistic(series, variant, fitted).s_n
            brute = oracles.brute_force_sup(series, variant, fitted)[0]
            worst_grid = max(worst_grid, abs(s_n - brute))
            worst_dense = max(worst_dense, oracles.dense_sup(series, variant, fitted) - s_n)
        elapsed = time.perf_counter() - start
        ok = worst_grid <= 1e-10 and worst_dense <= 1e-12 and elapsed < 60.0
        record(acceptance_log, "4 oracle equivalence (1000 instances)", ok,
               f"max |sweep - brute| {worst_grid:.2e} <= 1e-10; "
               f"max dense excess {worst_dense:.2e} <= 1e-12; runtime {elapsed:.1f}s < 60s")


def _instances(seed: int, count: int):
    rng = np.random.default_rng(seed)
    for i in range(count):
        family = ("ar", "arch")[i % 2]
        kind = ("semi", "param", "full")[(i // 2) % 3]
        yield oracles.random_instance(rng, family, kind, int(rng.integers(5, 60)),
                                      ties=bool(rng.random() < 0.3))


class TestInvariants:
    def test_boundary_zeros(self, acceptance_log):
        worst = 0.0
        for series, variant, fitted in _instances(51, 120):
            grid = build_grid(series)
            for x in grid.x_candidates[0]:
                vals = u_values(series, variant, fitted, [x], [-np.inf, np.inf],
                                [Side.AT, Side.AT])
                worst = max(worst, float(np.abs(vals).max()))
            top = u_values(series, variant, fitted, [np.inf], [-np.inf, np.inf],
                           [Side.AT, Side.AT])
            worst = max(worst, float(np.abs(top).max()))
        record(acceptance_log, "5 boundary zeros U_n(x, +-inf)", worst == 0.0,
               f"max |U_n| {worst:.2e} == 0")

    def test_monotone_between_jumps(self, acceptance_log):
        violations = 0
        checked = 0
        for series, variant, fitted in _instances(52, 60):
            v = np.unique(series.current)
            rng = np.random.default_rng(zlib.crc32(series.values.tobytes()))
            for x in build_grid(series).x_candidates[0][:: max(1, v.size // 6)]:
                for lo, hi in zip(v[:-1], v[1:]):
                    ends = u_values(series, variant, fitted, [x], [lo, hi],
                                    [Side.AT, Side.LEFT])
                    inner = u_values(series, variant, fitted, [x],
                                     np.sort(rng.uniform(lo, hi, 20)), Side.AT)
                    tol = 1e-12
                    violations += int(np.any(inner > ends.max() + tol)
                                      | np.any(inner < ends.min() - tol))
                    # no atoms between the jumps: U_n is nonincreasing there
                    seq = np.concatenate(([ends[0]], inner, [ends[1]]))
                    violations += int(np.any(np.diff(seq) > tol))
                    checked += 1
        record(acceptance_log, "5 monotone between jumps", violations == 0,
               f"{violations} violations in {checked} gaps")

    def test_scale_invariance(self, acceptance_log):
        worst = 0.0
        semi = TestVariant.semiparametric()
        for family, truth in (("ar", ModelSpec.ar([0.5])), ("arch", ModelSpec.arch([0.1, 0.4]))):
            template = ModelSpec.template(family, 1)
            for seed in range(5):
                base = simulate(truth, 150, seed)
                ref = sup_statistic(base, semi, fit_model(base, template)).s_n
                for c in (0.1, 3.0, 100.0):
                    scaled = Series(c * base.values, 1)
                    got = sup_statistic(scaled, semi, fit_model(scaled, template)).s_n
                    worst = max(worst, abs(got - ref))
        record(acceptance_log, "5 scale invariance c in {0.1, 3, 100}", worst <= 1e-9,
               f"max |S_n(cX) - S_n(X)| {worst:.2e} <= 1e-9")

    def test_pool_normalization(self, acceptance_log):
        rng = np.random.default_rng(53)
        worst = 0.0
        for i in range(300):
            n = int(rng.integers(3, 2000))
            raw = rng.standard_t(3, n) * rng.uniform(0.01, 100) + rng.uniform(-50, 50)
            family = ("ar", "arch", "iid")[i % 3]
            pool = build_innovation_pool(raw, family)
            err = abs(pool.mean()) / n
            if family == "arch":
                err = max(err, abs((pool**2).mean() - 1.0) / n)
            worst = max(worst, err)
        record(acceptance_log, "5 pool normalization", worst <= 1e-9,
               f"max deviation / n {worst:.2e} <= 1e-9")


class TestBootstrapFaithfulness:
    def test_bootstrap_vs_monte_carlo(self, acceptance_log):
        null = ModelSpec.iid()
        variant = TestVariant.fully_specified(null)
        observed = simulate(null, 200, 7)
        boot = bootstrap_statistics(observed, variant, None,
                                    BootstrapConfig(B=500, master_seed=8), workers=WORKERS)
        mc = [sup_statistic(simulate(null, 200, 900_000 + r), variant, None).s_n
              for r in range(500)]
        ks = sps.ks_2samp(boot, mc).statistic
        record(acceptance_log, "6 bootstrap faithfulness", ks < 0.12,
               f"two-sample KS {ks:.4f} < 0.12")


class TestNormality:
    def test_anchored_point(self, acceptance_log):
        null = ModelSpec.iid()
        (d,) = normality_diagnostic(null, TestVariant.fully_specified(null), 500,
                                    [((np.inf,), 0.0)], 1000, seed=777)
        ok = abs(d.mean) <= 0.1 and abs(d.variance - 0.25) <= 0.1 and d.normal_ok
        record(acceptance_log, "7 normality at (+inf, 0), n=500", ok,
               f"mean {d.mean:.4f}, variance {d.variance:.4f}, "
               f"AD {d.ad_statistic:.3f} < {d.ad_critical_1pct:.3f}")


class TestDeterminism:
    def test_byte_identical_reports(self, tmp_path, acceptance_log):
        series = simulate(ModelSpec.arch([0.1, 0.4]), 150, 12)
        data = tmp_path / "series.csv"
        data.write_text("x\n" + "".join(f"{v!r}\n" for v in series.values.tolist()))
        blobs = []
        for i, workers in enumerate((1, 2, 8, 1)):
            out = tmp_path / f"report{i}.json"
            code = main(["test", "--input", str(data), "--model", "arch", "--variant", "param",
                         "--innov", "normal", "--B", "99", "--seed", "31",
                         "--workers", str(workers), "--output", str(out)])
            assert code in (0, 2)
            blobs.append(out.read_bytes())
        same = all(b == blobs[0] for b in blobs)
        record(acceptance_log, "8 determinism (workers 1, 2, 8, rerun)", same,
               f"{len(set(blobs))} distinct report(s)")


class TestRealData:
    def test_intel_recipe(self, tmp_path, acceptance_log, capsys):
        path = os.environ.get(INTEL_ENV)
        if not path:
            acceptance_log.append(f"SKIP  9 real-data recipe: set {INTEL_ENV} to run")
            pytest.skip(f"set {INTEL_ENV} to a monthly log-return CSV")
        import json

        out = tmp_path / "intel.json"
        code = main(["test", "--input", path, "--column", os.environ.get(INTEL_COLUMN_ENV, "0"),
                     "--mean-adjust", "0.0174", "--model", "arch", "--order", "1",
                     "--variant", "param", "--innov", "normal", "--B", "1000",
                     "--workers", str(WORKERS), "--output", str(out)])
        result = json.loads(out.read_text())["result"]
        ok = code == 2 and result["S_n"] > result["critical_value"]
        record(acceptance_log, "9 real-data recipe (informative)", ok,
               f"S_n {result['S_n']:.3f} vs critical value {result['critical_value']:.3f}")
