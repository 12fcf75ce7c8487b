"""Fourier-transformed forward Kolmogorov equations on a uniform (r, v)
grid, advanced in time with the Peaceman-Rachford ADI scheme.

Spatial derivatives use central differences in the interior.  Two boundary
closures are provided: zero Dirichlet edges (the default, and the only
stable choice -- v = 0 is an inflow boundary of the non-conservative form,
so extrapolating rows there feed an exponentially growing boundary mode)
and one-sided difference rows, which make each half-step matrix tridiagonal
except for one extra entry in the first and last row.  The extra entries
are eliminated with a single row operation, after which a standard Thomas
sweep applies.  Matrices are time-independent, so their factorizations are
built once per evolution.

A whole batch of frequencies is marched at once: fields have shape
(nphi, N, N) with axis 1 indexing r and axis 2 indexing v.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (ConfigurationError, InstabilityError,
                     SingularSystemError)
from .models import HestonParams, JumpParams, SwapSpec, validate

BLOWUP_NORM = 1e6
RESIDUAL_RTOL = 1e-10


@dataclass(frozen=True)
class Grid2D:
    r_max: float
    v_max: float
    n: int
    dr: float
    dv: float
    r_nodes: np.ndarray
    v_nodes: np.ndarray
    idx_r0: int
    idx_v0: int
    v0_snap_distance: float


def build_grid(r_max: float, v_max: float, n: int, v0: float) -> Grid2D:
    """Uniform grid on [-r_max, r_max] x [0, v_max] with n points per axis.

    n must be odd so that r = 0 falls on a node; v0 is snapped to the
    nearest v node and the snap distance is recorded.
    """
    if n < 5 or n % 2 == 0:
        raise ConfigurationError(f"n={n} must be an odd integer >= 5")
    if r_max <= 0 or v_max <= 0:
        raise ConfigurationError("r_max and v_max must be positive")
    if not 0.0 <= v0 <= v_max:
        raise ConfigurationError(f"v0={v0} outside [0, {v_max}]")
    dr = 2.0 * r_max / (n - 1)
    dv = v_max / (n - 1)
    r_nodes = np.linspace(-r_max, r_max, n)
    v_nodes = np.linspace(0.0, v_max, n)
    idx_v0 = int(round(v0 / dv))
    return Grid2D(r_max=r_max, v_max=v_max, n=n, dr=dr, dv=dv,
                  r_nodes=r_nodes, v_nodes=v_nodes,
                  idx_r0=(n - 1) // 2, idx_v0=idx_v0,
                  v0_snap_distance=abs(v0 - idx_v0 * dv))


@dataclass(frozen=True)
class CoefficientSet:
    """Nodewise PDE coefficients, broadcastable to (nphi, N, N)."""
    mu_r: np.ndarray
    sigma_r: np.ndarray
    mu_v: np.ndarray
    sigma_v: np.ndarray
    cross: np.ndarray
    alpha: np.ndarray
    phis: np.ndarray


def coefficients_heston(grid: Grid2D, params: HestonParams, phis,
                        beta: float) -> CoefficientSet:
    """Coefficients of the frequency-domain forward equation for the
    hedged-portfolio density under Heston dynamics."""
    phi = np.atleast_1d(np.asarray(phis, dtype=float))[:, None, None]
    r = grid.r_nodes[None, :, None]
    v = grid.v_nodes[None, None, :]
    mu, kappa, theta = params.mu, params.kappa, params.theta
    gamma, rho = params.gamma, params.rho

    mu_r = -mu + 0.5 * v + 1j * phi * v + rho * gamma
    sigma_r = 0.5 * v + 0j * phi
    mu_v = -kappa * (theta - v) + gamma ** 2 + 1j * rho * gamma * phi * v
    sigma_v = 0.5 * gamma ** 2 * v + 0j * phi
    cross = rho * gamma * v + 0j * phi
    alpha = (1j * phi * (-mu + 0.5 * v + 2.0 * beta * r * v)
             - 0.5 * phi ** 2 * v + 1j * rho * gamma * phi + kappa)
    return CoefficientSet(mu_r=mu_r, sigma_r=sigma_r, mu_v=mu_v,
                          sigma_v=sigma_v, cross=cross,
                          alpha=alpha * np.ones_like(r),
                          phis=np.atleast_1d(np.asarray(phis, dtype=float)))


def coefficients_third_moment(grid: Grid2D, params: HestonParams,
                              phis) -> CoefficientSet:
    """Coefficients of the frequency-domain forward equation for the
    density of the third-moment variation itself."""
    phi = np.atleast_1d(np.asarray(phis, dtype=float))[:, None, None]
    r = grid.r_nodes[None, :, None]
    v = grid.v_nodes[None, None, :]
    mu, kappa, theta = params.mu, params.kappa, params.theta
    gamma, rho = params.gamma, params.rho

    ones = np.ones_like(phi)
    mu_r = (-mu + 0.5 * v + rho * gamma) * (ones + 0j)
    sigma_r = (0.5 * v) * (ones + 0j)
    mu_v = (-kappa * (theta - v) + gamma ** 2) * (ones + 0j)
    sigma_v = (0.5 * gamma ** 2 * v) * (ones + 0j)
    cross = (rho * gamma * v) * (ones + 0j)
    alpha = -2j * phi * r * v + kappa
    return CoefficientSet(mu_r=mu_r, sigma_r=sigma_r, mu_v=mu_v,
                          sigma_v=sigma_v, cross=cross, alpha=alpha,
                          phis=np.atleast_1d(np.asarray(phis, dtype=float)))


def init_delta(grid: Grid2D) -> np.ndarray:
    """Discrete Dirac mass at (r=0, v=v0): 1/(dr*dv) at a single node so
    the trapezoidal integral of the field is exactly 1."""
    field = np.zeros((grid.n, grid.n), dtype=complex)
    field[grid.idx_r0, grid.idx_v0] = 1.0 / (grid.dr * grid.dv)
    return field


def trapz2d(field: np.ndarray, grid: Grid2D) -> np.ndarray:
    """Trapezoidal integral over (r, v) of the trailing two axes."""
    w = np.ones(grid.n)
    w[0] = w[-1] = 0.5
    return np.einsum("...ij,i,j->...", field, w, w) * grid.dr * grid.dv


def _d1(F: np.ndarray, h: float, axis: int) -> np.ndarray:
    """First derivative: central interior, one-sided at both ends."""
    out = np.empty_like(F)
    Fm = np.moveaxis(F, axis, -1)
    om = np.moveaxis(out, axis, -1)
    om[..., 1:-1] = (Fm[..., 2:] - Fm[..., :-2]) / (2.0 * h)
    om[..., 0] = (Fm[..., 1] - Fm[..., 0]) / h
    om[..., -1] = (Fm[..., -1] - Fm[..., -2]) / h
    return out


def _d2(F: np.ndarray, h: float, axis: int) -> np.ndarray:
    """Second derivative: central interior, shifted stencil at the ends."""
    out = np.empty_like(F)
    Fm = np.moveaxis(F, axis, -1)
    om = np.moveaxis(out, axis, -1)
    om[..., 1:-1] = (Fm[..., 2:] - 2.0 * Fm[..., 1:-1] + Fm[..., :-2]) / h ** 2
    om[..., 0] = (Fm[..., 2] - 2.0 * Fm[..., 1] + Fm[..., 0]) / h ** 2
    om[..., -1] = (Fm[..., -1] - 2.0 * Fm[..., -2] + Fm[..., -3]) / h ** 2
    return out


class QuasiTriFactor:
    """Factorized batch of quasi-tridiagonal systems (solve along the last
    axis).

    Rows are tridiagonal except row 0, which carries an extra entry in
    column 2, and row N-1 with an extra entry in column N-3.  Both extras
    are eliminated with one row operation against the neighboring row,
    then a Thomas factorization is stored for repeated right-hand sides.
    """

    def __init__(self, sub, diag, sup, corner_first, corner_last):
        sub = np.array(sub, dtype=complex)
        diag = np.array(diag, dtype=complex)
        sup = np.array(sup, dtype=complex)
        self._orig = (sub.copy(), diag.copy(), sup.copy(),
                      np.array(corner_first, dtype=complex),
                      np.array(corner_last, dtype=complex))
        n = diag.shape[-1]
        if n < 4:
            raise ConfigurationError("system size must be >= 4")

        corner_first = np.asarray(corner_first, dtype=complex)
        corner_last = np.asarray(corner_last, dtype=complex)
        piv_top = sup[..., 1]
        piv_bot = sub[..., -2]
        if np.any((piv_top == 0) & (corner_first != 0)):
            raise SingularSystemError(1)
        if np.any((piv_bot == 0) & (corner_last != 0)):
            raise SingularSystemError(n - 2)
        self.fac_top = np.where(corner_first != 0,
                                corner_first / np.where(piv_top == 0, 1.0, piv_top),
                                0.0)
        self.fac_bot = np.where(corner_last != 0,
                                corner_last / np.where(piv_bot == 0, 1.0, piv_bot),
                                0.0)
        diag = diag.copy()
        sup = sup.copy()
        sub = sub.copy()
        diag[..., 0] = diag[..., 0] - self.fac_top * sub[..., 1]
        sup[..., 0] = sup[..., 0] - self.fac_top * diag[..., 1]
        sub[..., -1] = sub[..., -1] - self.fac_bot * diag[..., -2]
        diag[..., -1] = diag[..., -1] - self.fac_bot * sup[..., -2]

        # Thomas factorization: den[i] = diag[i] - sub[i]*cp[i-1]
        cp = np.empty_like(diag)
        inv_den = np.empty_like(diag)
        den = diag[..., 0]
        if np.any(den == 0):
            raise SingularSystemError(0)
        inv_den[..., 0] = 1.0 / den
        cp[..., 0] = sup[..., 0] * inv_den[..., 0]
        for i in range(1, n):
            den = diag[..., i] - sub[..., i] * cp[..., i - 1]
            if np.any(den == 0):
                raise SingularSystemError(i)
            inv_den[..., i] = 1.0 / den
            cp[..., i] = sup[..., i] * inv_den[..., i]
        self.sub = sub
        self.cp = cp
        self.inv_den = inv_den
        self.n = n

    def solve(self, rhs: np.ndarray, check_residual: bool = True) -> np.ndarray:
        b = np.array(rhs, dtype=complex)
        b[..., 0] = b[..., 0] - self.fac_top * rhs[..., 1]
        b[..., -1] = b[..., -1] - self.fac_bot * rhs[..., -2]
        x = np.empty_like(b)
        x[..., 0] = b[..., 0] * self.inv_den[..., 0]
        for i in range(1, self.n):
            x[..., i] = (b[..., i] - self.sub[..., i] * x[..., i - 1]) \
                * self.inv_den[..., i]
        for i in range(self.n - 2, -1, -1):
            x[..., i] = x[..., i] - self.cp[..., i] * x[..., i + 1]
        if check_residual:
            self._check(x, rhs)
        return x

    def matvec(self, x: np.ndarray) -> np.ndarray:
        sub, diag, sup, c_first, c_last = self._orig
        y = diag * x
        y[..., 1:] += sub[..., 1:] * x[..., :-1]
        y[..., :-1] += sup[..., :-1] * x[..., 1:]
        y[..., 0] += c_first * x[..., 2]
        y[..., -1] += c_last * x[..., -3]
        return y

    def _check(self, x, rhs):
        res = np.max(np.abs(self.matvec(x) - rhs))
        scale = np.max(np.abs(rhs))
        if scale > 0 and res > RESIDUAL_RTOL * scale:
            raise SingularSystemError(-1)


def _band_arrays(mu, sg, al, h: float, dt: float, shape, swap: bool,
                 boundary: str):
    """Sub/diag/sup plus corner extras for one ADI direction.

    swap=True lays systems out along the r axis (arrays transposed to
    (nphi, N_v, N_r)); swap=False solves along v.  boundary='one_sided'
    installs the displayed extrapolating rows; 'dirichlet' pins the edge
    rows to the identity (their right-hand sides are zeroed by the caller).
    """
    mu = np.broadcast_to(mu, shape)
    sg = np.broadcast_to(sg, shape)
    al = np.broadcast_to(al, shape)
    if swap:
        mu, sg, al = (np.swapaxes(a, 1, 2) for a in (mu, sg, al))
    sub = np.array(mu / (2 * h) - sg / h ** 2)
    diag = np.array(2.0 / dt + 2.0 * sg / h ** 2 - al)
    sup = np.array(-mu / (2 * h) - sg / h ** 2)
    if boundary == "one_sided":
        mu0, sg0, al0 = mu[..., 0], sg[..., 0], al[..., 0]
        muN, sgN, alN = mu[..., -1], sg[..., -1], al[..., -1]
        diag[..., 0] = 2.0 / dt + mu0 / h - sg0 / h ** 2 - al0
        sup[..., 0] = -mu0 / h + 2.0 * sg0 / h ** 2
        corner_first = -sg0 / h ** 2
        corner_last = -sgN / h ** 2
        sub[..., -1] = muN / h + 2.0 * sgN / h ** 2
        diag[..., -1] = 2.0 / dt - muN / h - sgN / h ** 2 - alN
    elif boundary == "dirichlet":
        diag[..., 0] = 1.0
        sup[..., 0] = 0.0
        diag[..., -1] = 1.0
        sub[..., -1] = 0.0
        corner_first = np.zeros(diag.shape[:-1], dtype=complex)
        corner_last = np.zeros(diag.shape[:-1], dtype=complex)
    else:
        raise ConfigurationError(f"unknown boundary mode {boundary!r}")
    return sub, diag, sup, corner_first, corner_last


def _r_factor(coeffs: CoefficientSet, grid: Grid2D, dt: float, shape,
              boundary: str) -> QuasiTriFactor:
    """Half-step systems along r, one per (phi, v-column)."""
    return QuasiTriFactor(*_band_arrays(coeffs.mu_r, coeffs.sigma_r,
                                        coeffs.alpha, grid.dr, dt, shape,
                                        swap=True, boundary=boundary))


def _v_factor(coeffs: CoefficientSet, grid: Grid2D, dt: float, shape,
              boundary: str) -> QuasiTriFactor:
    """Half-step systems along v, one per (phi, r-row)."""
    return QuasiTriFactor(*_band_arrays(coeffs.mu_v, coeffs.sigma_v,
                                        coeffs.alpha, grid.dv, dt, shape,
                                        swap=False, boundary=boundary))


class AdiStepper:
    """One-frequency-batch Peaceman-Rachford stepper with frozen
    factorizations.

    Step: implicit in r with the v-derivative and cross terms explicit,
    then implicit in v with the r-derivative and cross terms explicit (on
    the half-step field).  The reaction coefficient is implicit in both
    halves, as the row equations prescribe.
    """

    def __init__(self, coeffs: CoefficientSet, grid: Grid2D, dt: float,
                 boundary: str = "dirichlet"):
        nphi = coeffs.phis.size
        shape = (nphi, grid.n, grid.n)
        self.grid = grid
        self.dt = dt
        self.coeffs = coeffs
        self.shape = shape
        self.boundary = boundary
        self._fr = _r_factor(coeffs, grid, dt, shape, boundary)
        self._fv = _v_factor(coeffs, grid, dt, shape, boundary)

    def _zero_edges(self, rhs: np.ndarray) -> np.ndarray:
        rhs[:, 0, :] = 0.0
        rhs[:, -1, :] = 0.0
        rhs[:, :, 0] = 0.0
        rhs[:, :, -1] = 0.0
        return rhs

    def step(self, field: np.ndarray, rhs_extra=None) -> np.ndarray:
        """Advance one full dt.  rhs_extra(field) -> explicit source term
        (the jump contribution) evaluated on the supplied field and added
        to both half-step right-hand sides."""
        g, dt, c = self.grid, self.dt, self.coeffs
        b = (2.0 * field / dt
             + c.mu_v * _d1(field, g.dv, axis=2)
             + c.sigma_v * _d2(field, g.dv, axis=2)
             + c.cross * _d1(_d1(field, g.dv, axis=2), g.dr, axis=1))
        if rhs_extra is not None:
            b = b + rhs_extra(field)
        if self.boundary == "dirichlet":
            b = self._zero_edges(b)
        half = np.swapaxes(self._fr.solve(np.swapaxes(b, 1, 2)), 1, 2)

        cvec = (2.0 * half / dt
                + c.mu_r * _d1(half, g.dr, axis=1)
                + c.sigma_r * _d2(half, g.dr, axis=1)
                + c.cross * _d1(_d1(half, g.dv, axis=2), g.dr, axis=1))
        if rhs_extra is not None:
            cvec = cvec + rhs_extra(half)
        if self.boundary == "dirichlet":
            cvec = self._zero_edges(cvec)
        return self._fv.solve(cvec)


def adi_step(field: np.ndarray, coeffs: CoefficientSet, grid: Grid2D,
             dt: float, boundary: str = "dirichlet") -> np.ndarray:
    """Single ADI step for a (nphi, N, N) or (N, N) field."""
    single = field.ndim == 2
    F = field[None] if single else field
    out = AdiStepper(coeffs, grid, dt, boundary).step(np.asarray(F, dtype=complex))
    return out[0] if single else out


def jump_rhs_factory(grid: Grid2D, jumps: JumpParams, phis, beta: float,
                     drift_proxy: float, t: float, n_quad: int = 64):
    """Explicit jump source lambda * (integral - field) for the SVJD
    forward equation.

    The integral convolves the field (shifted in r, zero outside the grid,
    linear interpolation) with the normal jump density over [-6s, 6s] by
    composite trapezoid, each node phase-weighted by the induced portfolio
    jump z - 2*beta*drift_proxy*t*z^2 - beta*z^3.
    """
    phi = np.atleast_1d(np.asarray(phis, dtype=float))
    s = jumps.sigma_j
    z = np.linspace(-6.0 * s, 6.0 * s, n_quad)
    w = np.full(n_quad, z[1] - z[0])
    w[0] *= 0.5
    w[-1] *= 0.5
    psi = np.exp(-0.5 * (z / s) ** 2) / (s * np.sqrt(2.0 * np.pi))
    z_x = z - 2.0 * beta * drift_proxy * t * z ** 2 - beta * z ** 3
    # (nphi, nq) complex weights
    wq = (w * psi)[None, :] * np.exp(-1j * np.outer(phi, z_x))
    dr = grid.dr
    lam = jumps.lambda_

    # value at r_i - z is (1-frac)*F[i-k0] + frac*F[i-k0-1]; collapse the
    # quadrature into one complex kernel per distinct integer shift
    kernels: dict[int, np.ndarray] = {}
    for q in range(n_quad):
        p = z[q] / dr
        k0 = int(np.floor(p))
        frac = p - k0
        for shift, wgt in ((k0, 1.0 - frac), (k0 + 1, frac)):
            if wgt == 0.0:
                continue
            ker = kernels.setdefault(shift, np.zeros(phi.size, dtype=complex))
            ker += wq[:, q] * wgt

    def apply(field: np.ndarray) -> np.ndarray:
        integral = np.zeros_like(field)
        n = grid.n
        for shift, ker in kernels.items():
            kv = ker[:, None, None]
            if shift >= 0:
                if shift < n:
                    integral[:, shift:, :] += kv * field[:, :n - shift, :]
            elif -shift < n:
                integral[:, :shift, :] += kv * field[:, -shift:, :]
        return lam * (integral - field)

    return apply


def _march(stepper: AdiStepper, field: np.ndarray, steps: int,
           rhs_extra_at=None) -> np.ndarray:
    for k in range(steps):
        extra = None if rhs_extra_at is None else rhs_extra_at(k)
        field = stepper.step(field, rhs_extra=extra)
        norm = np.max(np.abs(field))
        if not np.isfinite(norm) or norm > BLOWUP_NORM:
            raise InstabilityError(step=k, norm=float(norm))
    return field


def _check_feller(params: HestonParams):
    rep = validate(params)
    if not rep.feller_ok:
        raise ConfigurationError(
            f"Feller condition violated (margin {rep.margin})")


def evolve(params: HestonParams, spec: SwapSpec, grid: Grid2D, dt: float,
           phis, boundary: str = "dirichlet") -> tuple[np.ndarray, np.ndarray]:
    """March the hedged-portfolio equation to maturity for a batch of
    frequencies.  Returns (fields, u) where u[p] is the (r, v) integral of
    the terminal field, i.e. E[exp(-i*phi_p*X_T)]."""
    _check_feller(params)
    steps = _step_count(spec.maturity_T, dt)
    coeffs = coefficients_heston(grid, params, phis, spec.beta)
    stepper = AdiStepper(coeffs, grid, dt, boundary)
    nphi = coeffs.phis.size
    field = np.broadcast_to(init_delta(grid), (nphi, grid.n, grid.n)).copy()
    field = _march(stepper, field, steps)
    return field, trapz2d(field, grid)


def evolve_third_moment(params: HestonParams, grid: Grid2D, dt: float,
                        phis, T: float,
                        boundary: str = "dirichlet") -> tuple[np.ndarray, np.ndarray]:
    """Same march for the third-moment variation's own density."""
    _check_feller(params)
    steps = _step_count(T, dt)
    coeffs = coefficients_third_moment(grid, params, phis)
    stepper = AdiStepper(coeffs, grid, dt, boundary)
    nphi = coeffs.phis.size
    field = np.broadcast_to(init_delta(grid), (nphi, grid.n, grid.n)).copy()
    field = _march(stepper, field, steps)
    return field, trapz2d(field, grid)


def evolve_svjd(params: HestonParams, jumps: JumpParams, spec: SwapSpec,
                grid: Grid2D, dt: float, phis,
                boundary: str = "dirichlet") -> tuple[np.ndarray, np.ndarray]:
    """Heston march plus the explicit jump source, evaluated at each
    step's left endpoint on the most recent field."""
    _check_feller(params)
    steps = _step_count(spec.maturity_T, dt)
    coeffs = coefficients_heston(grid, params, phis, spec.beta)
    stepper = AdiStepper(coeffs, grid, dt, boundary)
    nphi = coeffs.phis.size
    field = np.broadcast_to(init_delta(grid), (nphi, grid.n, grid.n)).copy()
    drift_proxy = params.mu - 0.5 * params.theta

    if jumps.lambda_ == 0.0:
        field = _march(stepper, field, steps)
    else:
        def rhs_at(k):
            return jump_rhs_factory(grid, jumps, coeffs.phis, spec.beta,
                                    drift_proxy, t=k * dt)
        field = _march(stepper, field, steps, rhs_extra_at=rhs_at)
    return field, trapz2d(field, grid)


def _step_count(T: float, dt: float) -> int:
    steps = round(T / dt)
    if steps < 1 or abs(steps * dt - T) > 1e-9 * max(T, 1.0):
        raise ConfigurationError(f"T={T} is not an integral multiple of dt={dt}")
    return steps


def explicit_reference_evolve(params: HestonParams, spec: SwapSpec,
                              grid: Grid2D, dt: float, phis,
                              T: float | None = None,
                              boundary: str = "dirichlet") -> tuple[np.ndarray, np.ndarray]:
    """Forward-Euler march with the same spatial stencils.

    Serves as the brute-force oracle for the ADI scheme on small problems
    and as the blow-up reference for the stability envelope: it requires a
    far smaller dt than the ADI march on the same grid.
    """
    _check_feller(params)
    if T is None:
        T = spec.maturity_T
    steps = _step_count(T, dt)
    c = coefficients_heston(grid, params, phis, spec.beta)
    nphi = c.phis.size
    field = np.broadcast_to(init_delta(grid), (nphi, grid.n, grid.n)).copy()
    g = grid
    for k in range(steps):
        rate = (c.mu_r * _d1(field, g.dr, axis=1)
                + c.sigma_r * _d2(field, g.dr, axis=1)
                + c.mu_v * _d1(field, g.dv, axis=2)
                + c.sigma_v * _d2(field, g.dv, axis=2)
                + c.cross * _d1(_d1(field, g.dv, axis=2), g.dr, axis=1)
                + c.alpha * field)
        field = field + dt * rate
        if boundary == "dirichlet":
            field[:, 0, :] = 0.0
            field[:, -1, :] = 0.0
            field[:, :, 0] = 0.0
            field[:, :, -1] = 0.0
        norm = np.max(np.abs(field))
        if not np.isfinite(norm) or norm > BLOWUP_NORM:
            raise InstabilityError(step=k, norm=float(norm))
    return field, trapz2d(field, grid)


def field_to_csv(field: np.ndarray, grid: Grid2D) -> str:
    """Snapshot export: one row per node, r,v,re,im."""
    lines = ["r,v,re,im"]
    for i, r in enumerate(grid.r_nodes):
        for j, v in enumerate(grid.v_nodes):
            val = field[i, j]
            lines.append(f"{r:.17g},{v:.17g},{val.real:.17g},{val.imag:.17g}")
    return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class QuasiTridiagonalSystem:
    """One banded system: tridiagonal plus a first-row entry in column 2
    and a last-row entry in column N-3, with its right-hand side."""
    sub: np.ndarray
    diag: np.ndarray
    sup: np.ndarray
    corner_first: complex
    corner_last: complex
    rhs: np.ndarray


def assemble_r_system(field: np.ndarray, coeffs: CoefficientSet,
                      grid: Grid2D, dt: float, j: int,
                      phi_index: int = 0) -> QuasiTridiagonalSystem:
    """System for v-column j of the r-implicit half-step, with the
    one-sided boundary rows of the displayed difference equations."""
    shape = (coeffs.phis.size, grid.n, grid.n)
    sub, diag, sup, c_first, c_last = _band_arrays(
        coeffs.mu_r, coeffs.sigma_r, coeffs.alpha, grid.dr, dt, shape,
        swap=True, boundary="one_sided")
    F = field[None] if field.ndim == 2 else field
    c = coeffs
    b = (2.0 * F / dt
         + c.mu_v * _d1(F, grid.dv, axis=2)
         + c.sigma_v * _d2(F, grid.dv, axis=2)
         + c.cross * _d1(_d1(F, grid.dv, axis=2), grid.dr, axis=1))
    p = phi_index
    return QuasiTridiagonalSystem(sub=sub[p, j], diag=diag[p, j],
                                  sup=sup[p, j],
                                  corner_first=complex(c_first[p, j]),
                                  corner_last=complex(c_last[p, j]),
                                  rhs=b[p, :, j])


def assemble_v_system(field_half: np.ndarray, coeffs: CoefficientSet,
                      grid: Grid2D, dt: float, i: int,
                      phi_index: int = 0) -> QuasiTridiagonalSystem:
    """System for r-row i of the v-implicit half-step; the explicit
    r-direction and cross terms are evaluated on the half-step field."""
    shape = (coeffs.phis.size, grid.n, grid.n)
    sub, diag, sup, c_first, c_last = _band_arrays(
        coeffs.mu_v, coeffs.sigma_v, coeffs.alpha, grid.dv, dt, shape,
        swap=False, boundary="one_sided")
    F = field_half[None] if field_half.ndim == 2 else field_half
    c = coeffs
    cvec = (2.0 * F / dt
            + c.mu_r * _d1(F, grid.dr, axis=1)
            + c.sigma_r * _d2(F, grid.dr, axis=1)
            + c.cross * _d1(_d1(F, grid.dv, axis=2), grid.dr, axis=1))
    p = phi_index
    return QuasiTridiagonalSystem(sub=sub[p, i], diag=diag[p, i],
                                  sup=sup[p, i],
                                  corner_first=complex(c_first[p, i]),
                                  corner_last=complex(c_last[p, i]),
                                  rhs=cvec[p, i, :])


def solve_quasi_tridiagonal(system: QuasiTridiagonalSystem) -> np.ndarray:
    """Solve one quasi-tridiagonal system; residual-checked."""
    factor = QuasiTriFactor(system.sub[None], system.diag[None],
                            system.sup[None],
                            np.array([system.corner_first]),
                            np.array([system.corner_last]))
    return factor.solve(system.rhs[None])[0]
