"""Goodness-of-fit tests for Markovian time-series models.

The test compares the empirical one-step transition distribution of a
series with the one implied by a null model (AR(p), ARCH(p) or i.i.d.),
takes the supremum deviation over a finite grid and calibrates it with a
model-based bootstrap.
"""

__version__ = "0.1.0"

from markovgof.bootstrap import (  # noqa: E402
    BootstrapConfig,
    TestReport,
    bootstrap_statistics,
    critical_value,
    generate_pseudo_series,
    p_value,
    run_test,
)
from markovgof.estimators import (  # noqa: E402
    FittedModel,
    build_innovation_pool,
    compute_residuals,
    edf_eval,
    fit_ar_ls,
    fit_arch_ls,
    fit_model,
)
from markovgof.gof import (  # noqa: E402
    DeviationStat,
    Side,
    TestVariant,
    build_grid,
    sup_statistic,
    u_value,
)
from markovgof.models import (  # noqa: E402
    Family,
    InnovationDistribution,
    ModelSpec,
    Series,
    apply_G,
    innovation_cdf,
    link_w,
    simulate,
    vasicek_to_ar1,
)

__all__ = [
    "BootstrapConfig",
    "DeviationStat",
    "Family",
    "FittedModel",
    "InnovationDistribution",
    "ModelSpec",
    "Series",
    "Side",
    "TestReport",
    "TestVariant",
    "apply_G",
    "bootstrap_statistics",
    "build_grid",
    "build_innovation_pool",
    "compute_residuals",
    "critical_value",
    "edf_eval",
    "fit_ar_ls",
    "fit_arch_ls",
    "fit_model",
    "generate_pseudo_series",
    "innovation_cdf",
    "link_w",
    "p_value",
    "run_test",
    "simulate",
    "sup_statistic",
    "u_value",
    "vasicek_to_ar1",
]
