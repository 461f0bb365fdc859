"""Model families, innovation laws and simulation.

Every family that can serve as a null hypothesis has an affine residual
link: ``w(lags, y, theta) = (y - location) / scale`` with ``scale > 0``.
The generator ``G`` is its inverse in the innovation argument.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Sequence

import numpy as np
from scipy import special

from markovgof import _kernels
from markovgof.errors import ConstraintViolation, UnsupportedFamilyError

__all__ = [
    "DEFAULT_BURN_IN",
    "Family",
    "InnovationDistribution",
    "ModelSpec",
    "Series",
    "apply_G",
    "innovation_cdf",
    "link_w",
    "link_location_scale",
    "simulate",
    "vasicek_to_ar1",
]

DEFAULT_BURN_IN = 500
SQRT3 = math.sqrt(3.0)


class Family(str, Enum):
    AR = "ar"
    ARCH = "arch"
    IID = "iid"
    GARCH11 = "garch11"
    SV = "sv"

    @property
    def testable(self) -> bool:
        return self in (Family.AR, Family.ARCH, Family.IID)


@dataclass(frozen=True, eq=False)
class InnovationDistribution:
    """Law of the i.i.d. innovations.

    ``kind`` is one of ``"normal"``, ``"t"`` (Student t scaled to unit
    variance), ``"uniform"`` (on (-sqrt 3, sqrt 3)) or ``"empirical"``
    (uniform over a sorted pool of values).
    """

    kind: str
    df: float | None = None
    pool: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self) -> None:
        if self.kind == "t":
            if self.df is None or not self.df > 2:
                raise ConstraintViolation("Student t innovations need df > 2")
        elif self.kind == "empirical":
            pool = np.asarray(self.pool, dtype=float)
            if pool.ndim != 1 or pool.size == 0:
                raise ValueError("empirical pool must be a nonempty 1-d array")
            if not np.all(np.isfinite(pool)):
                raise ValueError("empirical pool must be finite")
            pool = np.sort(pool)
            pool.flags.writeable = False
            object.__setattr__(self, "pool", pool)
        elif self.kind not in ("normal", "uniform"):
            raise ValueError(f"unknown innovation kind {self.kind!r}")

    @classmethod
    def normal(cls) -> InnovationDistribution:
        return cls("normal")

    @classmethod
    def student_t(cls, df: float = 5.0) -> InnovationDistribution:
        return cls("t", df=float(df))

    @classmethod
    def uniform(cls) -> InnovationDistribution:
        return cls("uniform")

    @classmethod
    def empirical(cls, pool: Sequence[float] | np.ndarray) -> InnovationDistribution:
        return cls("empirical", pool=np.asarray(pool, dtype=float))

    @property
    def continuous(self) -> bool:
        return self.kind != "empirical"

    @property
    def label(self) -> str:
        if self.kind == "t":
            return f"t:{self.df:g}"
        if self.kind == "empirical":
            return f"empirical[{self.pool.size}]"
        return self.kind

    def cdf(self, w, left: bool = False):
        """Distribution function at ``w``; ``left=True`` gives F(w-0)."""
        w = np.asarray(w, dtype=float)
        if self.kind == "normal":
            out = special.ndtr(w)
        elif self.kind == "t":
            out = special.stdtr(self.df, w / math.sqrt((self.df - 2.0) / self.df))
        elif self.kind == "uniform":
            out = np.clip((w + SQRT3) / (2.0 * SQRT3), 0.0, 1.0)
        else:
            side = "left" if left else "right"
            out = np.searchsorted(self.pool, w, side=side) / self.pool.size
        return out if out.ndim else float(out)

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        if self.kind == "normal":
            return rng.standard_normal(size)
        if self.kind == "t":
            return rng.standard_t(self.df, size) * math.sqrt((self.df - 2.0) / self.df)
        if self.kind == "uniform":
            return rng.uniform(-SQRT3, SQRT3, size)
        return self.pool[rng.integers(0, self.pool.size, size)]


def innovation_cdf(dist: InnovationDistribution, w):
    return dist.cdf(w)


@dataclass(frozen=True, eq=False)
class ModelSpec:
    """A model family with (optionally) a parameter vector.

    ``theta=None`` describes a template whose parameters are to be
    estimated.  Parameter layouts: AR ``(theta_1..theta_p)``; ARCH
    ``(theta_0, theta_1..theta_p)``; IID ``()``; GARCH11
    ``(omega, alpha, beta)``; SV ``(intercept, phi, vol_of_vol)`` for
    ``h_t = intercept + phi h_{t-1} + vol_of_vol omega_t``.
    """

    family: Family
    theta: tuple[float, ...] | None
    innovation: InnovationDistribution = field(default_factory=InnovationDistribution.normal)
    p: int = 1

    def __post_init__(self) -> None:
        object.__setattr__(self, "family", Family(self.family))
        if self.p < 0 or int(self.p) != self.p:
            raise ValueError("lag order p must be a nonnegative integer")
        if self.family in (Family.GARCH11, Family.SV) and self.p != 1:
            raise ValueError(f"{self.family.value} is a first-order model; p must be 1")
        if self.family in (Family.AR, Family.ARCH) and self.p < 1:
            raise ValueError(f"{self.family.value} needs p >= 1")
        if self.theta is not None:
            theta = tuple(float(v) for v in np.ravel(self.theta))
            object.__setattr__(self, "theta", theta)
            _check_constraints(self.family, theta, self.p)

    # -- named constructors -------------------------------------------------
    @classmethod
    def ar(cls, theta, innovation: InnovationDistribution | None = None) -> ModelSpec:
        theta = tuple(np.ravel(theta).astype(float))
        return cls(Family.AR, theta, innovation or InnovationDistribution.normal(), len(theta))

    @classmethod
    def arch(cls, theta, innovation: InnovationDistribution | None = None) -> ModelSpec:
        theta = tuple(np.ravel(theta).astype(float))
        return cls(Family.ARCH, theta, innovation or InnovationDistribution.normal(), len(theta) - 1)

    @classmethod
    def iid(cls, innovation: InnovationDistribution | None = None, p: int = 1) -> ModelSpec:
        return cls(Family.IID, (), innovation or InnovationDistribution.normal(), p)

    @classmethod
    def garch11(
        cls, theta=(0.08, 0.7, 0.2), innovation: InnovationDistribution | None = None
    ) -> ModelSpec:
        return cls(Family.GARCH11, tuple(theta), innovation or InnovationDistribution.normal(), 1)

    @classmethod
    def sv(
        cls, theta=(-0.9, 0.6, 1.0), innovation: InnovationDistribution | None = None
    ) -> ModelSpec:
        return cls(Family.SV, tuple(theta), innovation or InnovationDistribution.normal(), 1)

    @classmethod
    def template(
        cls, family, p: int = 1, innovation: InnovationDistribution | None = None
    ) -> ModelSpec:
        family = Family(family)
        theta = () if family is Family.IID else None
        return cls(family, theta, innovation or InnovationDistribution.normal(), p)

    # -- helpers ------------------------------------------------------------
    def with_theta(self, theta) -> ModelSpec:
        return ModelSpec(self.family, tuple(np.ravel(theta)), self.innovation, self.p)

    def with_innovation(self, innovation: InnovationDistribution) -> ModelSpec:
        return ModelSpec(self.family, self.theta, innovation, self.p)

    @property
    def theta_array(self) -> np.ndarray:
        if self.theta is None:
            raise ValueError("model template has no parameter vector")
        return np.asarray(self.theta, dtype=float)

    def describe(self) -> str:
        theta = "?" if self.theta is None else ",".join(f"{v:g}" for v in self.theta)
        return f"{self.family.value}({self.p})[{theta}]/{self.innovation.label}"


def _check_constraints(family: Family, theta: tuple[float, ...], p: int) -> None:
    if not all(math.isfinite(v) for v in theta):
        raise ConstraintViolation("parameters must be finite")
    if family is Family.AR:
        if len(theta) != p:
            raise ValueError(f"AR({p}) needs {p} parameters, got {len(theta)}")
        roots = ar_roots(theta)
        if roots.size and np.min(np.abs(roots)) <= 1.0:
            raise ConstraintViolation(
                "AR stationarity violated: 1 - theta_1 z - ... - theta_p z^p has a root "
                f"with |z| <= 1 (min modulus {np.min(np.abs(roots)):.6g})"
            )
    elif family is Family.ARCH:
        if len(theta) != p + 1:
            raise ValueError(f"ARCH({p}) needs {p + 1} parameters, got {len(theta)}")
        if not theta[0] > 0:
            raise ConstraintViolation("ARCH constraint violated: theta_0 > 0")
        if any(v < 0 for v in theta[1:]):
            raise ConstraintViolation("ARCH constraint violated: theta_i >= 0 for i >= 1")
        if not sum(theta[1:]) < 1:
            raise ConstraintViolation("ARCH constraint violated: theta_1 + ... + theta_p < 1")
    elif family is Family.IID:
        if theta:
            raise ValueError("IID null has no parameters")
    elif family is Family.GARCH11:
        if len(theta) != 3:
            raise ValueError("GARCH(1,1) needs (omega, alpha, beta)")
        omega, alpha, beta = theta
        if not omega > 0:
            raise ConstraintViolation("GARCH constraint violated: omega > 0")
        if alpha < 0 or beta < 0:
            raise ConstraintViolation("GARCH constraint violated: alpha >= 0, beta >= 0")
        if not alpha + beta < 1:
            raise ConstraintViolation("GARCH constraint violated: alpha + beta < 1")
    elif family is Family.SV:
        if len(theta) != 3:
            raise ValueError("SV needs (intercept, phi, vol_of_vol)")
        if not abs(theta[1]) < 1:
            raise ConstraintViolation("SV constraint violated: |phi| < 1")
        if theta[2] < 0:
            raise ConstraintViolation("SV constraint violated: vol_of_vol >= 0")


def ar_roots(theta) -> np.ndarray:
    """Roots of ``1 - theta_1 z - ... - theta_p z^p``.

    Computed as reciprocals of the companion-matrix eigenvalues, which
    stays finite for tiny leading coefficients; zero eigenvalues (roots at
    infinity) are dropped.
    """
    theta = np.asarray(theta, dtype=float)
    p = theta.size
    if p == 0:
        return np.empty(0, dtype=complex)
    companion = np.zeros((p, p))
    companion[0] = theta
    companion[1:, :-1] = np.eye(p - 1)
    eig = np.linalg.eigvals(companion)
    eig = eig[eig != 0]
    with np.errstate(over="ignore", divide="ignore"):
        return 1.0 / eig


@dataclass(frozen=True, eq=False)
class Series:
    """Observations ``X_{1-p}, ..., X_n``; the first ``p`` are initial lags."""

    values: np.ndarray
    p: int = 1

    def __post_init__(self) -> None:
        values = np.array(self.values, dtype=float).ravel()
        if not np.all(np.isfinite(values)):
            raise ValueError("series contains non-finite values")
        if self.p < 0:
            raise ValueError("lag order must be nonnegative")
        if values.size - self.p < self.p + 1 or values.size - self.p < 1:
            raise ValueError(
                f"series of length {values.size} too short for lag order {self.p}"
            )
        values.flags.writeable = False
        object.__setattr__(self, "values", values)

    @property
    def n(self) -> int:
        return self.values.size - self.p

    @property
    def current(self) -> np.ndarray:
        """``X_1, ..., X_n``."""
        return self.values[self.p:]

    @property
    def lags(self) -> np.ndarray:
        """Matrix whose row ``t-1`` is ``(X_{t-1}, ..., X_{t-p})``."""
        n, p = self.n, self.p
        out = np.empty((n, p))
        for k in range(1, p + 1):
            out[:, k - 1] = self.values[p - k:p - k + n]
        return out

    def with_order(self, p: int) -> Series:
        return Series(self.values, p)

    def __len__(self) -> int:
        return self.values.size


def _check_lag(spec: ModelSpec, lag) -> np.ndarray:
    lag = np.atleast_1d(np.asarray(lag, dtype=float))
    if lag.shape[-1] != spec.p:
        raise ValueError(f"lag vector has length {lag.shape[-1]}, model order is {spec.p}")
    return lag


def link_location_scale(family: Family, theta, lags: np.ndarray):
    """Location and scale of the affine residual link for each lag row."""
    family = Family(family)
    lags = np.atleast_2d(np.asarray(lags, dtype=float))
    theta = np.asarray(theta, dtype=float)
    m = lags.shape[0]
    if family is Family.AR:
        return lags @ theta, np.ones(m)
    if family is Family.ARCH:
        return np.zeros(m), np.sqrt(theta[0] + (lags * lags) @ theta[1:])
    if family is Family.IID:
        return np.zeros(m), np.ones(m)
    raise UnsupportedFamilyError(f"{family.value} has no residual link")


def apply_G(spec: ModelSpec, lag, eps: float) -> float:
    """One step of the model recursion from lag vector ``lag``."""
    if not spec.family.testable:
        raise UnsupportedFamilyError(f"{spec.family.value} is simulation-only")
    lag = _check_lag(spec, lag)
    loc, scale = link_location_scale(spec.family, spec.theta_array, lag)
    return float(loc[0] + scale[0] * eps)


def link_w(spec: ModelSpec, lag, y, theta=None):
    """Residual link ``w(lag, y, theta)``; inverse of ``apply_G`` in ``eps``."""
    if not spec.family.testable:
        raise UnsupportedFamilyError(f"{spec.family.value} has no residual link")
    lag = _check_lag(spec, lag)
    theta = spec.theta_array if theta is None else np.asarray(theta, dtype=float)
    loc, scale = link_location_scale(spec.family, theta, lag)
    out = (np.asarray(y, dtype=float) - loc[0]) / scale[0]
    return out if np.ndim(out) else float(out)


def _stationary_start(spec: ModelSpec) -> float:
    theta = spec.theta_array
    if spec.family is Family.ARCH:
        return theta[0] / (1.0 - theta[1:].sum())
    if spec.family is Family.GARCH11:
        return theta[0] / (1.0 - theta[1] - theta[2])
    if spec.family is Family.SV:
        return theta[0] / (1.0 - theta[1])
    return 0.0


def simulate(
    spec: ModelSpec,
    n: int,
    seed,
    burn_in: int = DEFAULT_BURN_IN,
    lags: int | None = None,
) -> Series:
    """Simulate ``n + lags`` observations after discarding ``burn_in`` steps.

    Parameters
    ----------
    spec : ModelSpec
        Fully parametrized model.
    n : int
        Effective sample length.
    seed : int, sequence of int or numpy.random.SeedSequence
        Seed for ``numpy.random.default_rng``.
    burn_in : int
        Number of leading steps discarded.
    lags : int, optional
        Number of initial lag values in the returned series; defaults to
        ``spec.p``.  Set it to the order of the null model being tested.
    """
    if spec.theta is None:
        raise ValueError("cannot simulate a model template without parameters")
    if burn_in < 0:
        raise ValueError("burn_in must be nonnegative")
    lags = spec.p if lags is None else lags
    total = burn_in + n + lags
    rng = np.random.default_rng(seed)
    eps = np.ascontiguousarray(spec.innovation.sample(rng, total), dtype=float)
    theta = spec.theta_array
    if spec.family is Family.AR:
        x = _kernels.ar_recursion(theta, eps)
    elif spec.family is Family.ARCH:
        x = _kernels.arch_recursion(theta, eps, _stationary_start(spec))
    elif spec.family is Family.IID:
        x = eps
    elif spec.family is Family.GARCH11:
        x = _kernels.garch11_recursion(theta[0], theta[1], theta[2], eps, _stationary_start(spec))
    else:
        omega = rng.standard_normal(total)
        x = _kernels.sv_recursion(theta[0], theta[1], theta[2], eps, omega, _stationary_start(spec))
    return Series(x[total - n - lags:], lags)


def vasicek_to_ar1(theta1: float, theta2: float, theta3: float, delta: float, series: Series):
    """Reduce a discretely sampled Ornstein-Uhlenbeck path to an AR(1).

    Returns the centered series ``X - theta2``, its AR(1) coefficient
    ``exp(-theta1 * delta)`` and the innovation standard deviation.
    """
    if not theta1 > 0:
        raise ConstraintViolation("Vasicek constraint violated: theta1 > 0")
    if not theta3 > 0:
        raise ConstraintViolation("Vasicek constraint violated: theta3 > 0")
    if not delta > 0:
        raise ConstraintViolation("sampling interval must satisfy delta > 0")
    coef = math.exp(-theta1 * delta)
    sd = math.sqrt(theta3**2 * (1.0 - math.exp(-2.0 * theta1 * delta)) / (2.0 * theta1))
    return Series(series.values - theta2, series.p), coef, sd
