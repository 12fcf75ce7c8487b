"""Model parameter sets, Feller validation and the closed-form Heston
characteristic function used as the analytic oracle.

The characteristic function is evaluated in an exponent-shifted form so that
large |psi| * T never overflows the cosh/sinh terms.
"""
from __future__ import annotations

import math
import cmath
from dataclasses import dataclass, field

import numpy as np

from .errors import ParameterError, DataError


@dataclass(frozen=True)
class HestonParams:
    """Square-root stochastic volatility coefficients.

    mu: drift (1/year), kappa: mean-reversion speed, theta: long-run
    variance, gamma: vol-of-variance, rho: leverage correlation, v0:
    initial variance (defaults to theta).
    """
    mu: float
    kappa: float
    theta: float
    gamma: float
    rho: float
    v0: float | None = None

    def __post_init__(self):
        vals = [self.mu, self.kappa, self.theta, self.gamma, self.rho]
        if self.v0 is not None:
            vals.append(self.v0)
        if not all(math.isfinite(v) for v in vals):
            raise ParameterError("non-finite Heston parameter")
        if self.kappa <= 0 or self.theta <= 0 or self.gamma <= 0:
            raise ParameterError("kappa, theta and gamma must be positive")
        if not -1.0 <= self.rho <= 1.0:
            raise ParameterError(f"rho={self.rho} outside [-1, 1]")
        if self.v0 is None:
            object.__setattr__(self, "v0", self.theta)
        elif self.v0 < 0:
            raise ParameterError(f"v0={self.v0} must be nonnegative")


@dataclass(frozen=True)
class JumpParams:
    """Compound-Poisson jump layer: intensity lambda_ (1/year) and normal
    jump-size standard deviation sigma_j.  Jump sizes have zero mean so the
    jump part of the return is a martingale."""
    lambda_: float
    sigma_j: float

    def __post_init__(self):
        if not (math.isfinite(self.lambda_) and math.isfinite(self.sigma_j)):
            raise ParameterError("non-finite jump parameter")
        if self.lambda_ < 0:
            raise ParameterError("lambda must be nonnegative")
        if self.sigma_j <= 0:
            raise ParameterError("sigma_j must be positive")


@dataclass(frozen=True)
class SwapSpec:
    """Swap contract: hedge number beta per unit initial price, maturity in
    years, fixed leg (defaults to zero) and initial price scale."""
    maturity_T: float
    beta: float
    fixed_leg: float = 0.0
    notional_scale: float = 1.0

    def __post_init__(self):
        if not self.maturity_T > 0:
            raise ParameterError("maturity_T must be positive")


@dataclass(frozen=True)
class FellerReport:
    feller_ok: bool
    margin: float


def validate(params: HestonParams) -> FellerReport:
    """Check the Feller condition 2*kappa*theta > gamma**2.

    The margin 2*kappa*theta - gamma**2 is positive exactly when the
    variance process stays strictly positive.
    """
    margin = 2.0 * params.kappa * params.theta - params.gamma ** 2
    return FellerReport(feller_ok=margin > 0.0, margin=margin)


def cf_heston(psi, params: HestonParams, T: float):
    """Closed-form characteristic function E[exp(i*psi*R_T)] of the Heston
    log-return, with V_0 = theta.

    Accepts a scalar or an array of real frequencies.  Evaluated as a single
    exponential: the cosh/sinh ratio terms are rewritten with exp(-xi*T) so
    nothing overflows for large |psi|*T, and the complex power in the
    denominator becomes a product in the exponent (principal log), which is
    the branch-stable form.
    """
    if T <= 0:
        raise ParameterError("T must be positive")
    psi = np.asarray(psi, dtype=float)
    scalar = psi.ndim == 0
    psi = np.atleast_1d(psi)

    mu, kappa, theta = params.mu, params.kappa, params.theta
    gamma, rho = params.gamma, params.rho

    k = kappa - 1j * gamma * rho * psi
    xi = np.sqrt(gamma ** 2 * (psi ** 2 + 1j * psi) + k ** 2)
    # principal root has Re(xi) >= 0, so |exp(-xi*T)| <= 1
    e = np.exp(-xi * T)
    # coth(xi T/2) = (1 + e) / (1 - e); at psi=0, xi=kappa>0 so 1-e>0
    coth = (1.0 + e) / (1.0 - e)
    d = 2.0 * kappa * theta / gamma ** 2
    # cosh(xi T/2) + (k/xi) sinh(xi T/2) = exp(xi T/2) * m
    m = 0.5 * ((1.0 + k / xi) + (1.0 - k / xi) * e)
    exponent = (-(1j * psi + psi ** 2) * theta / (xi * coth + k)
                + kappa * theta * T * k / gamma ** 2
                + 1j * psi * mu * T
                - d * xi * T / 2.0
                - d * np.log(m))
    out = np.exp(exponent)
    return complex(out[0]) if scalar else out


_PARAM_KEYS = ("mu", "kappa", "theta", "gamma", "rho", "v0",
               "lambda", "sigma_j", "beta", "maturity", "fixed_leg")


def params_to_text(heston: HestonParams,
                   jumps: JumpParams | None = None,
                   spec: SwapSpec | None = None) -> str:
    """Serialize parameter records to a flat key=value block."""
    lines = [f"mu={heston.mu!r}", f"kappa={heston.kappa!r}",
             f"theta={heston.theta!r}", f"gamma={heston.gamma!r}",
             f"rho={heston.rho!r}", f"v0={heston.v0!r}"]
    if jumps is not None:
        lines += [f"lambda={jumps.lambda_!r}", f"sigma_j={jumps.sigma_j!r}"]
    if spec is not None:
        lines += [f"beta={spec.beta!r}", f"maturity={spec.maturity_T!r}",
                  f"fixed_leg={spec.fixed_leg!r}"]
    return "\n".join(lines) + "\n"


def parse_params_text(text: str) -> dict[str, float]:
    """Parse a flat key=value block; unknown keys are rejected."""
    out: dict[str, float] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise DataError(f"line {lineno}: expected key=value, got {raw!r}")
        key, _, val = line.partition("=")
        key = key.strip()
        if key not in _PARAM_KEYS:
            raise DataError(f"line {lineno}: unknown parameter key {key!r}")
        try:
            out[key] = float(val.strip())
        except ValueError:
            raise DataError(f"line {lineno}: bad number {val.strip()!r}")
    return out


def params_from_text(text: str) -> tuple[HestonParams, JumpParams | None, SwapSpec | None]:
    """Build parameter records from a key=value block.

    Jump and swap records are produced only when their keys are present.
    """
    kv = parse_params_text(text)
    missing = [k for k in ("mu", "kappa", "theta", "gamma", "rho") if k not in kv]
    if missing:
        raise DataError(f"missing parameter keys: {', '.join(missing)}")
    heston = HestonParams(mu=kv["mu"], kappa=kv["kappa"], theta=kv["theta"],
                          gamma=kv["gamma"], rho=kv["rho"], v0=kv.get("v0"))
    jumps = None
    if "lambda" in kv or "sigma_j" in kv:
        if not ("lambda" in kv and "sigma_j" in kv):
            raise DataError("jump parameters require both lambda and sigma_j")
        jumps = JumpParams(lambda_=kv["lambda"], sigma_j=kv["sigma_j"])
    spec = None
    if "maturity" in kv:
        spec = SwapSpec(maturity_T=kv["maturity"], beta=kv.get("beta", 0.0),
                        fixed_leg=kv.get("fixed_leg", 0.0))
    return heston, jumps, spec
