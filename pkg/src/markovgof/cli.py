"""Command-line interface.

Exit status: 0 for a completed run (for ``test``: null not rejected),
2 for a completed ``test`` that rejects the null, 1 for any error.
"""

from __future__ import annotations

import argparse
import csv
import logging
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from markovgof import __version__
from markovgof.bootstrap import BootstrapConfig, run_test
from markovgof.errors import MarkovGofError
from markovgof.gof import TestVariant
from markovgof.models import DEFAULT_BURN_IN, Family, InnovationDistribution, ModelSpec, Series, simulate
from markovgof.montecarlo import McScenario, rejection_rate, reproduce_table
from markovgof.report import emit_report, mc_csv

__all__ = ["RunConfig", "dispatch", "ingest_csv", "main", "parse_innovation"]

logger = logging.getLogger("markovgof")

EXIT_OK, EXIT_ERROR, EXIT_REJECT = 0, 1, 2


def parse_innovation(text: str) -> InnovationDistribution:
    """``normal``, ``uniform`` or ``t:<df>``."""
    text = text.strip().lower()
    if text == "normal":
        return InnovationDistribution.normal()
    if text == "uniform":
        return InnovationDistribution.uniform()
    if text.startswith("t:") or text == "t":
        df = float(text[2:]) if text.startswith("t:") else 5.0
        return InnovationDistribution.student_t(df)
    raise ValueError(f"unknown innovation law {text!r} (use normal, uniform or t:<df>)")


def _parse_floats(text: str) -> tuple[float, ...]:
    return tuple(float(v) for v in text.split(",") if v.strip())


def _is_number(text: str) -> bool:
    try:
        float(text)
    except ValueError:
        return False
    return True


def ingest_csv(path, column=0, p: int = 1) -> Series:
    """Read one numeric column of a comma-separated file as a series.

    ``column`` is a 0-based index or a header name.  A header row is
    detected when the selected cell of the first row is not numeric.  The
    first ``p`` values become the initial lags.
    """
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        rows = [row for row in csv.reader(fh)]
    rows = [(i + 1, row) for i, row in enumerate(rows) if row and any(c.strip() for c in row)]
    if not rows:
        raise ValueError(f"{path}: file is empty")
    first_line, first = rows[0]
    if isinstance(column, str) and not column.lstrip("-").isdigit():
        if column not in [c.strip() for c in first]:
            raise ValueError(f"{path}: column {column!r} not found in header")
        idx = [c.strip() for c in first].index(column)
        rows = rows[1:]
    else:
        idx = int(column)
        if idx >= len(first) or idx < 0:
            raise ValueError(f"{path}: column index {idx} out of range")
        if not _is_number(first[idx].strip()):
            rows = rows[1:]
    values = []
    for line, row in rows:
        if idx >= len(row):
            raise ValueError(f"{path}: row {line} has no column {idx}")
        cell = row[idx].strip()
        try:
            value = float(cell)
        except ValueError:
            raise ValueError(f"{path}: row {line}: non-numeric value {cell!r}") from None
        if not math.isfinite(value):
            raise ValueError(f"{path}: row {line}: non-finite value {cell!r}")
        values.append(value)
    if len(values) < p + 2:
        raise ValueError(f"{path}: need at least {p + 2} rows for order {p}, got {len(values)}")
    return Series(np.array(values), p)


@dataclass
class RunConfig:
    command: str
    input: str | None = None
    column: str = "0"
    model: str = "arch"
    order: int = 1
    variant: str = "param"
    innov: str | None = None
    theta: str | None = None
    estimator: str = "ls"
    mean_adjust: float = 0.0
    B: int = 500
    alpha: str = "0.05"
    seed: int = 0
    burn_in: int = DEFAULT_BURN_IN
    workers: int = 1
    output: str | None = None
    csv: str | None = None
    table: int = 1
    scale: str = "full"
    iid_null: str = "edf"
    n: int = 200
    replications: int | None = None
    dgp: str | None = None
    dgp_theta: str | None = None
    dgp_innov: str = "normal"
    extra: dict = field(default_factory=dict)

    @property
    def alphas(self) -> tuple[float, ...]:
        return _parse_floats(self.alpha)

    def validate(self) -> list[str]:
        """All configuration problems at once."""
        errors = []
        needs_null = self.command in ("test", "mc")
        if self.command == "test" and not self.input:
            errors.append("test requires --input")
        try:
            alphas = self.alphas
            if not alphas:
                errors.append("--alpha must list at least one level")
        except ValueError:
            errors.append(f"--alpha {self.alpha!r} is not a comma-separated list of numbers")
            alphas = ()
        if self.command == "test" and len(alphas) > 1:
            errors.append("test takes a single --alpha")
        if self.B < 1:
            errors.append("--B must be positive")
        else:
            for a in alphas:
                if not 0 < a < 1:
                    errors.append(f"--alpha {a} must lie in (0, 1)")
                elif math.ceil((1 - a) * (self.B + 1) - 1e-9) > self.B:
                    errors.append(f"--alpha {a} is too small for --B {self.B}")
        if self.seed < 0:
            errors.append("--seed must be nonnegative")
        if self.burn_in < 0:
            errors.append("--burn-in must be nonnegative")
        if self.workers < 1:
            errors.append("--workers must be >= 1")
        if self.order < 1:
            errors.append("--order must be >= 1")
        if needs_null:
            if self.model not in ("ar", "arch", "iid"):
                errors.append(f"--model {self.model!r} must be ar, arch or iid")
            if self.variant not in ("semi", "param", "full"):
                errors.append(f"--variant {self.variant!r} must be semi, param or full")
            if self.variant == "semi" and self.innov is not None:
                errors.append("--variant semi leaves the innovation law unspecified; drop --innov")
            if self.variant in ("param", "full") and self.innov is None:
                errors.append(f"--variant {self.variant} requires --innov")
            if self.variant == "full" and self.model in ("ar", "arch") and not self.theta:
                errors.append("--variant full with an ar/arch model requires --theta")
            if self.variant != "full" and self.theta:
                errors.append("--theta fixes the null only for --variant full")
            if self.estimator not in ("ls", "yw"):
                errors.append("--estimator must be ls or yw")
            if self.estimator == "yw" and self.model != "ar":
                errors.append("--estimator yw applies to --model ar only")
        for label, text in (("--innov", self.innov), ("--dgp-innov", self.dgp_innov)):
            if text is not None:
                try:
                    parse_innovation(text)
                except ValueError as exc:
                    errors.append(f"{label}: {exc}")
        if needs_null and self.variant == "full" and self.theta and self.innov:
            try:
                self.null_spec()
            except (ValueError, MarkovGofError) as exc:
                errors.append(f"--theta: {exc}")
        if self.command in ("mc", "simulate"):
            if not self.dgp:
                errors.append(f"{self.command} requires --dgp")
            else:
                try:
                    self.dgp_spec()
                except (ValueError, MarkovGofError) as exc:
                    errors.append(f"--dgp: {exc}")
            if self.n < 2:
                errors.append("--n must be >= 2")
        if self.command == "reproduce-table":
            if self.table not in (1, 2):
                errors.append("--table must be 1 or 2")
            if self.scale not in ("full", "reduced"):
                errors.append("--scale must be full or reduced")
            if self.iid_null not in ("edf", "specified"):
                errors.append("--iid-null must be edf or specified")
        if self.replications is not None and self.replications < 1:
            errors.append("--replications must be >= 1")
        return errors

    def null_spec(self) -> ModelSpec:
        family = Family(self.model)
        innov = parse_innovation(self.innov) if self.innov else InnovationDistribution.normal()
        if self.variant == "full":
            if family is Family.IID:
                return ModelSpec.iid(innov, p=self.order)
            theta = _parse_floats(self.theta)
            spec = ModelSpec(family, theta, innov, self.order)
            return spec
        return ModelSpec.template(family, self.order, innov)

    def test_variant(self) -> TestVariant:
        if self.variant == "semi":
            return TestVariant.semiparametric()
        if self.variant == "param":
            return TestVariant.parametric(parse_innovation(self.innov))
        return TestVariant.fully_specified(self.null_spec())

    def dgp_spec(self) -> ModelSpec:
        family = Family(self.dgp)
        innov = parse_innovation(self.dgp_innov)
        theta = _parse_floats(self.dgp_theta) if self.dgp_theta else None
        if family is Family.GARCH11:
            return ModelSpec.garch11(theta or (0.08, 0.7, 0.2), innov)
        if family is Family.SV:
            return ModelSpec.sv(theta or (-0.9, 0.6, 1.0), innov)
        if family is Family.IID:
            return ModelSpec.iid(innov, p=1)
        if theta is None:
            raise ValueError(f"--dgp {family.value} requires --dgp-theta")
        if family is Family.AR:
            return ModelSpec.ar(theta, innov)
        return ModelSpec.arch(theta, innov)

    def echo(self) -> dict:
        keys = (
            "command", "input", "column", "model", "order", "variant", "innov", "theta",
            "estimator", "mean_adjust", "B", "alpha", "seed", "burn_in", "table", "scale",
            "iid_null", "n", "replications", "dgp", "dgp_theta", "dgp_innov",
        )
        return {k: getattr(self, k) for k in keys}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="markovgof",
        description="Goodness-of-fit tests for Markovian time-series models.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--B", type=int, default=500, help="bootstrap resamples")
        p.add_argument("--alpha", help="level (test) or comma-separated levels (mc)")
        p.add_argument("--seed", type=int, default=0, help="master seed")
        p.add_argument("--burn-in", dest="burn_in", type=int, default=DEFAULT_BURN_IN)
        p.add_argument("--workers", type=int, default=1, help="worker processes")
        p.add_argument("--output", help="JSON report path")
        p.add_argument("-v", "--verbose", action="store_true")

    def null(p):
        p.add_argument("--model", default="arch", help="null family: ar, arch or iid")
        p.add_argument("--order", type=int, default=1)
        p.add_argument("--variant", default="param", help="semi, param or full")
        p.add_argument("--innov", help="innovation law: normal, uniform or t:<df>")
        p.add_argument("--theta", help="parameters of a fully specified null")
        p.add_argument("--estimator", default="ls", help="AR estimator: ls or yw")

    def dgp(p):
        p.add_argument("--dgp", help="ar, arch, iid, garch11 or sv")
        p.add_argument("--dgp-theta", dest="dgp_theta", help="comma-separated parameters")
        p.add_argument("--dgp-innov", dest="dgp_innov", default="normal")
        p.add_argument("--n", type=int, default=200)

    p_test = sub.add_parser("test", help="test a series read from CSV")
    p_test.add_argument("--input")
    p_test.add_argument("--column", default="0", help="0-based index or header name")
    p_test.add_argument("--mean-adjust", dest="mean_adjust", type=float, default=0.0,
                        help="constant subtracted from the data before testing")
    null(p_test)
    common(p_test)

    p_sim = sub.add_parser("simulate", help="simulate a series and write it as CSV")
    dgp(p_sim)
    p_sim.add_argument("--order", type=int, default=1, help="initial lag values to keep")
    common(p_sim)

    p_mc = sub.add_parser("mc", help="rejection rate of the test for one scenario")
    dgp(p_mc)
    null(p_mc)
    p_mc.add_argument("--replications", type=int, default=200)
    p_mc.add_argument("--csv", help="CSV table path")
    common(p_mc)

    p_tab = sub.add_parser("reproduce-table", help="rerun a simulation table")
    p_tab.add_argument("--table", type=int, default=1)
    p_tab.add_argument("--scale", default="full")
    p_tab.add_argument("--iid-null", default="edf",
                       help="table 2 model term: edf (sample marginal) or specified (named law)")
    p_tab.add_argument("--replications", type=int)
    p_tab.add_argument("--csv", help="CSV table path")
    common(p_tab)
    return parser


def _config_from_args(args: argparse.Namespace) -> RunConfig:
    fields = {k: v for k, v in vars(args).items() if k in RunConfig.__dataclass_fields__}
    if fields.get("alpha") is None:
        fields["alpha"] = "0.05,0.10" if args.command in ("mc", "reproduce-table") else "0.05"
    return RunConfig(**fields)


def _run_test(cfg: RunConfig) -> int:
    series = ingest_csv(cfg.input, cfg.column, cfg.order)
    if cfg.mean_adjust:
        series = Series(series.values - cfg.mean_adjust, series.p)
    config = BootstrapConfig(B=cfg.B, alpha=cfg.alphas[0], burn_in=cfg.burn_in,
                             master_seed=cfg.seed)
    report = run_test(series, cfg.test_variant(), cfg.null_spec(), config,
                      method=cfg.estimator, workers=cfg.workers)
    emit_report(report, cfg.output, "test", cfg.echo())
    theta = ", ".join(f"{v:.6g}" for v in report.fitted.theta) if report.fitted else "fixed"
    print(f"null: {report.null.describe()}  variant: {report.variant.describe()}  n={report.n}")
    print(f"theta_hat: ({theta})")
    print(f"S_n = {report.s_n:.6f}   critical value ({1 - cfg.alphas[0]:.0%}) = "
          f"{report.critical_value:.6f}   p-value = {report.p_value:.4f}")
    verdict = "REJECT" if report.reject else "do not reject"
    print(f"decision at alpha={cfg.alphas[0]:g}: {verdict}" + (" (tie)" if report.tie else ""))
    return EXIT_REJECT if report.reject else EXIT_OK


def _run_simulate(cfg: RunConfig) -> int:
    series = simulate(cfg.dgp_spec(), cfg.n, cfg.seed, cfg.burn_in, lags=cfg.order)
    text = "x\n" + "".join(f"{float(v)!r}\n" for v in series.values)
    if cfg.output and cfg.output != "-":
        Path(cfg.output).write_text(text, encoding="utf-8")
        print(f"wrote {len(series)} values to {cfg.output}")
    else:
        sys.stdout.write(text)
    return EXIT_OK


def _print_rows(reports) -> None:
    print(f"{'n':>5} {'alpha':>6}  {'dgp':<22} {'rate':>6} {'reps':>5}")
    for report in reports:
        for row in report.rows:
            print(f"{row.n:>5} {row.alpha:>6.3f}  {row.dgp:<22} {row.rejection_rate:>6.3f} "
                  f"{row.replications:>5}")


def _run_mc(cfg: RunConfig) -> int:
    dgp = cfg.dgp_spec()
    scenario = McScenario(
        dgp, cfg.null_spec(), cfg.test_variant(), cfg.n, cfg.alphas,
        cfg.replications, cfg.B, cfg.seed, cfg.burn_in, label=dgp.describe(),
    )
    report = rejection_rate(scenario, cfg.workers)
    emit_report(report, cfg.output, "mc", cfg.echo())
    if cfg.csv:
        mc_csv(report, cfg.csv)
    _print_rows([report])
    return EXIT_OK


def _run_table(cfg: RunConfig) -> int:
    kwargs = {"B": cfg.B, "master_seed": cfg.seed}
    if cfg.table == 2:
        kwargs["iid_null"] = cfg.iid_null
    if cfg.replications is not None:
        kwargs["replications"] = cfg.replications
    reports = reproduce_table(cfg.table, cfg.scale, cfg.workers, **kwargs)
    emit_report(reports, cfg.output, "reproduce-table", cfg.echo())
    if cfg.csv:
        mc_csv(reports, cfg.csv)
    _print_rows(reports)
    return EXIT_OK


def dispatch(cfg: RunConfig) -> int:
    """Validate and execute a run; returns the exit status."""
    errors = cfg.validate()
    if errors:
        print("configuration errors:", file=sys.stderr)
        for err in errors:
            print(f"  - {err}", file=sys.stderr)
        return EXIT_ERROR
    handlers = {
        "test": _run_test,
        "simulate": _run_simulate,
        "mc": _run_mc,
        "reproduce-table": _run_table,
    }
    try:
        return handlers[cfg.command](cfg)
    except (MarkovGofError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on usage errors; 2 is reserved for rejection
        return EXIT_OK if exc.code == 0 else EXIT_ERROR
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    return dispatch(_config_from_args(args))


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
