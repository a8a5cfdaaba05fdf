from enum import Enum
from typing import List, Optional

from pydantic import BaseModel, ConfigDict, Field, model_validator


class DistFamily(str, Enum):
    NORMAL = "normal"
    POISSON = "poisson"
    GAMMA = "gamma"
    BETA = "beta"
    BINOMIAL = "binomial"
    HYPERGEOMETRIC = "hypergeometric"
    BERNOULLI = "bernoulli"
    LAPLACE = "laplace"
    RADEMACHER = "rademacher"


# Parameters each family needs, in the order they are reported
_DIST_PARAMS = {
    DistFamily.NORMAL: ("mu", "sigma"),
    DistFamily.POISSON: ("lam",),
    DistFamily.GAMMA: ("shape", "scale"),
    DistFamily.BETA: ("a", "b"),
    DistFamily.BINOMIAL: ("n", "p"),
    DistFamily.HYPERGEOMETRIC: ("population", "successes", "n"),
    DistFamily.BERNOULLI: ("p",),
    DistFamily.LAPLACE: ("mu", "b"),
    DistFamily.RADEMACHER: (),
}


class DistSpec(BaseModel):
    """Scalar distribution description consumed by the samplers."""

    model_config = ConfigDict(extra="forbid")

    family: DistFamily
    mu: float = Field(0.0, description="Location (normal, laplace)")
    sigma: Optional[float] = Field(None, description="Standard deviation (normal)")
    lam: Optional[float] = Field(None, description="Rate (poisson)")
    shape: Optional[float] = Field(None, description="Shape k (gamma)")
    scale: Optional[float] = Field(None, description="Scale theta (gamma)")
    a: Optional[float] = Field(None, description="First shape (beta)")
    b: Optional[float] = Field(None, description="Second shape (beta) or scale (laplace)")
    n: Optional[int] = Field(None, description="Trials (binomial) or draws (hypergeometric)")
    p: Optional[float] = Field(None, description="Success probability")
    population: Optional[int] = Field(None, description="Population size N (hypergeometric)")
    successes: Optional[int] = Field(None, description="Successes K in the population")

    @model_validator(mode="after")
    def check_domain(self) -> "DistSpec":
        for name in _DIST_PARAMS[self.family]:
            if getattr(self, name) is None:
                raise ValueError(f"{self.family.value}: parameter '{name}' is required")

        def bound(ok: bool, name: str, rule: str) -> None:
            if not ok:
                raise ValueError(
                    f"{self.family.value}: parameter {name}={getattr(self, name)} "
                    f"violates {rule}"
                )

        family = self.family
        if family == DistFamily.NORMAL:
            bound(self.sigma > 0, "sigma", "sigma > 0")
        elif family == DistFamily.POISSON:
            bound(self.lam >= 0, "lam", "lam >= 0")
        elif family == DistFamily.GAMMA:
            bound(self.shape > 0, "shape", "shape > 0")
            bound(self.scale > 0, "scale", "scale > 0")
        elif family == DistFamily.BETA:
            bound(self.a > 0, "a", "a > 0")
            bound(self.b > 0, "b", "b > 0")
        elif family == DistFamily.BINOMIAL:
            bound(self.n >= 0, "n", "n >= 0")
            bound(0 <= self.p <= 1, "p", "0 <= p <= 1")
        elif family == DistFamily.HYPERGEOMETRIC:
            bound(self.population >= 0, "population", "N >= 0")
            bound(
                0 <= self.successes <= self.population, "successes", "0 <= K <= N"
            )
            bound(0 <= self.n <= self.population, "n", "0 <= n <= N")
        elif family == DistFamily.BERNOULLI:
            bound(0 <= self.p <= 1, "p", "0 <= p <= 1")
        elif family == DistFamily.LAPLACE:
            bound(self.b > 0, "b", "b > 0")
        return self

    def describe(self) -> str:
        params = ", ".join(
            f"{name}={getattr(self, name)}" for name in _DIST_PARAMS[self.family]
        )
        return f"{self.family.value}({params})"


class NoiseFamily(str, Enum):
    ADDITIVE_GAUSSIAN = "additive_gaussian"
    ADDITIVE_LAPLACE = "additive_laplace"
    ADDITIVE_LOG_GAMMA = "additive_log_gamma"
    CORRELATED_GAUSSIAN = "correlated_gaussian"
    POISSON = "poisson"
    GAMMA = "gamma"
    BINOMIAL = "binomial"
    BERNOULLI_MASK = "bernoulli_mask"
    POISSON_GAUSSIAN = "poisson_gaussian"


ADDITIVE_FAMILIES = frozenset(
    {
        NoiseFamily.ADDITIVE_GAUSSIAN,
        NoiseFamily.ADDITIVE_LAPLACE,
        NoiseFamily.ADDITIVE_LOG_GAMMA,
        NoiseFamily.CORRELATED_GAUSSIAN,
    }
)
NEF_FAMILIES = frozenset(
    {
        NoiseFamily.ADDITIVE_GAUSSIAN,
        NoiseFamily.POISSON,
        NoiseFamily.GAMMA,
        NoiseFamily.BINOMIAL,
    }
)

_NOISE_PARAMS = {
    NoiseFamily.ADDITIVE_GAUSSIAN: ("sigma",),
    NoiseFamily.ADDITIVE_LAPLACE: ("b",),
    NoiseFamily.ADDITIVE_LOG_GAMMA: ("ell", "sigma"),
    NoiseFamily.CORRELATED_GAUSSIAN: ("sigma",),
    NoiseFamily.POISSON: ("gamma",),
    NoiseFamily.GAMMA: ("ell",),
    NoiseFamily.BINOMIAL: ("n_trials",),
    NoiseFamily.BERNOULLI_MASK: ("p0",),
    NoiseFamily.POISSON_GAUSSIAN: ("gamma", "sigma"),
}


class NoiseModel(BaseModel):
    """Corruption law y|x, parameters in units of image intensity in [0, 1]."""

    model_config = ConfigDict(extra="forbid")

    family: NoiseFamily
    sigma: Optional[float] = Field(None, description="Gaussian std or target std")
    b: Optional[float] = Field(None, description="Laplace scale")
    ell: Optional[float] = Field(None, description="Gamma shape / looks")
    gamma: Optional[float] = Field(None, description="Poisson gain")
    n_trials: Optional[int] = Field(None, description="Binomial trials")
    p0: Optional[float] = Field(None, description="Bernoulli keep probability")
    kernel: Optional[List[List[float]]] = Field(
        None, description="Spatial kernel for correlated noise, odd extent"
    )

    @model_validator(mode="after")
    def check_domain(self) -> "NoiseModel":
        for name in _NOISE_PARAMS[self.family]:
            if getattr(self, name) is None:
                raise ValueError(f"{self.family.value}: parameter '{name}' is required")
        for name in ("sigma", "b", "ell", "gamma"):
            value = getattr(self, name)
            if value is not None and not value > 0:
                raise ValueError(f"{self.family.value}: {name}={value} must be > 0")
        if self.n_trials is not None and self.n_trials < 1:
            raise ValueError(f"{self.family.value}: n_trials={self.n_trials} must be >= 1")
        if self.p0 is not None and not 0 < self.p0 < 1:
            raise ValueError(f"{self.family.value}: p0={self.p0} must be in (0, 1)")
        if self.kernel is not None:
            rows = len(self.kernel)
            if rows == 0 or rows % 2 == 0 or any(len(r) != rows for r in self.kernel):
                raise ValueError("kernel must be square with odd extent")
            total = sum(sum(r) for r in self.kernel)
            if total != total or abs(total) == float("inf"):
                raise ValueError("kernel must sum to a finite value")
        return self

    @property
    def is_additive(self) -> bool:
        return self.family in ADDITIVE_FAMILIES

    @property
    def is_nef(self) -> bool:
        return self.family in NEF_FAMILIES

    def describe(self) -> str:
        params = ", ".join(
            f"{name}={getattr(self, name)}" for name in _NOISE_PARAMS[self.family]
        )
        return f"{self.family.value}({params})"
