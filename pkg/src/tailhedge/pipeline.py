"""End-to-end driver: PDE march over a frequency batch, assembly of the
characteristic function, inversion to a density, and moment extraction.

The default solve grid keeps the variance spacing of the reference
configuration (dv = 0.0075) but extends the variance domain to 0.45,
which retains the probability mass that a 0.3 cap absorbs through the
far-field boundary (about 1.6% at these parameters).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import adi, spectral
from .models import HestonParams, JumpParams, SwapSpec, cf_heston

__all__ = [
    "SolveConfig",
    "SolveResult",
    "solve_density",
    "analytic_density",
    "convergence_study",
]


@dataclass(frozen=True)
class SolveConfig:
    """Numerical settings for a density solve."""

    r_max: float = 0.5
    v_max: float = 0.45
    n: int = 61
    dt: float = 1e-3
    phi_max: float = 256.0
    phi_count: int = 257
    x_min: float = -0.6
    x_max: float = 0.6
    x_count: int = 1201
    renormalize: bool = True
    boundary: str = "dirichlet"
    phi_chunk: int = 64

    def phi_grid(self) -> spectral.PhiGrid:
        return spectral.PhiGrid(self.phi_max, self.phi_count)


@dataclass
class SolveResult:
    curve: spectral.DensityCurve
    moments: spectral.MomentSummary
    u0: complex
    config: SolveConfig
    metadata: dict = field(default_factory=dict)


def _evolve_chunked(params, spec, jumps, grid, config, phis):
    """Run the ADI march over phi in blocks to bound memory."""
    u = np.empty(phis.size, dtype=complex)
    for lo in range(0, phis.size, config.phi_chunk):
        block = phis[lo:lo + config.phi_chunk]
        if jumps is None:
            _, ub = adi.evolve(params, spec, grid, config.dt, block,
                               boundary=config.boundary)
        else:
            _, ub = adi.evolve_svjd(params, jumps, spec, grid, config.dt,
                                    block, boundary=config.boundary)
        u[lo:lo + config.phi_chunk] = ub
    return u


def solve_density(params: HestonParams, spec: SwapSpec,
                  jumps: JumpParams | None = None,
                  config: SolveConfig = SolveConfig()) -> SolveResult:
    """Density and moments of the hedged return X_T via the PDE route."""
    grid = adi.build_grid(config.r_max, config.v_max, config.n, params.v0)
    phis = config.phi_grid().nodes()
    u = _evolve_chunked(params, spec, jumps, grid, config, phis)
    phi_full, cf_full = spectral.chf_assemble(phis, u,
                                              renormalize=config.renormalize)
    curve = spectral.pdf_from_cf(phi_full, cf_full, config.x_min,
                                 config.x_max, config.x_count)
    moments = spectral.moments_from_pdf(curve)
    moments.renormalized = config.renormalize
    meta = {
        "model": "heston" if jumps is None else "svjd",
        "beta": spec.beta,
        "maturity": spec.maturity_T,
        "grid": {"r_max": config.r_max, "v_max": config.v_max,
                 "n": config.n, "dt": config.dt},
        "phi": {"phi_max": config.phi_max, "count": config.phi_count},
        "u0": [u[0].real, u[0].imag],
        "renormalized": config.renormalize,
    }
    return SolveResult(curve, moments, complex(u[0]), config, meta)


def analytic_density(params: HestonParams, T: float,
                     config: SolveConfig = SolveConfig()) -> SolveResult:
    """Unhedged-return density from the closed-form characteristic
    function; the independent oracle for the beta = 0 PDE route."""
    phis = config.phi_grid().nodes()
    u = np.conj(cf_heston(phis, params, T))
    phi_full, cf_full = spectral.chf_assemble(phis, u, renormalize=False)
    curve = spectral.pdf_from_cf(phi_full, cf_full, config.x_min,
                                 config.x_max, config.x_count)
    moments = spectral.moments_from_pdf(curve)
    moments.renormalized = False
    meta = {"model": "heston-analytic", "beta": 0.0, "maturity": T}
    return SolveResult(curve, moments, complex(u[0]), config, meta)


def convergence_study(params: HestonParams, T: float,
                      dr_values=(0.05, 0.02, 0.01, 0.005, 0.004),
                      r_max: float = 0.8, v_max: float = 0.8,
                      dt: float = 1e-3, phi_max: float = 64.0,
                      phi_count: int = 65, x_count: int = 401,
                      phi_chunk: int = 16) -> list[tuple[float, float]]:
    """RMSE of the PDE density against the analytic-cf density for a
    sequence of spatial resolutions (beta = 0).

    Both densities are inverted from the same frequency grid, so the
    spectral truncation error cancels and the figure isolates the
    spatial discretization error of the march.
    """
    spec = SwapSpec(maturity_T=T, beta=0.0)
    results = []
    for dr in dr_values:
        n = int(round(2 * r_max / dr)) + 1
        # The explicitly treated cross term bounds the stable step by a
        # multiple of dr*dv; cap the requested dt accordingly.
        dv = v_max / (n - 1)
        dt_use = T / int(np.ceil(T / min(dt, 6.0 * dr * dv)))
        config = SolveConfig(r_max=r_max, v_max=v_max, n=n, dt=dt_use,
                             phi_max=phi_max, phi_count=phi_count,
                             x_count=x_count, phi_chunk=phi_chunk)
        pde = solve_density(params, spec, config=config)
        ref = analytic_density(params, T, config=config)
        results.append((dr, spectral.rmse(pde.curve, ref.curve)))
    return results
