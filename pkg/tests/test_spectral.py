"""Tests for characteristic-function assembly and Fourier inversion,
anchored on Gaussian closed forms and cross-checked against Monte Carlo."""
import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tailhedge import mc, pipeline, spectral
from tailhedge.errors import (ConfigurationError, DataError,
                              DegenerateSampleError, MassLossError)
from tailhedge.models import HestonParams, SwapSpec


def gaussian_u(phis, m, s):
    """Solver-convention transform u(phi) = E[exp(-i phi X)] for
    X ~ N(m, s^2)."""
    phis = np.asarray(phis, dtype=float)
    return np.exp(-1j * phis * m - 0.5 * (s * phis) ** 2)


# ------------------------------------------------------------- PhiGrid

class TestPhiGrid:
    def test_nodes_and_spacing(self):
        grid = spectral.PhiGrid(phi_max=256.0, count=257)
        nodes = grid.nodes()
        assert grid.dphi == pytest.approx(1.0)
        assert nodes[0] == 0.0 and nodes[-1] == 256.0
        assert nodes.size == 257

    @pytest.mark.parametrize("kwargs", [
        {"phi_max": 0.0},
        {"phi_max": -1.0},
        {"phi_max": 10.0, "count": 15},
    ])
    def test_rejects_bad_configuration(self, kwargs):
        with pytest.raises(ConfigurationError):
            spectral.PhiGrid(**kwargs)


# -------------------------------------------------------- chf_assemble

class TestChfAssemble:
    def test_full_axis_symmetry(self):
        phis = np.linspace(0.0, 50.0, 51)
        u = gaussian_u(phis, 0.03, 0.1)
        phi_full, cf_full = spectral.chf_assemble(phis, u)
        assert phi_full.size == 2 * phis.size - 1
        assert np.allclose(phi_full, -phi_full[::-1])
        assert np.allclose(cf_full, np.conj(cf_full[::-1]))
        # cf(phi) = conj(u(phi)) = E[exp(+i phi X)] on the right half
        assert np.allclose(cf_full[phis.size - 1:], np.conj(u))

    def test_renormalization_divides_by_u0(self):
        phis = np.linspace(0.0, 50.0, 51)
        u = 0.95 * gaussian_u(phis, 0.0, 0.1)
        _, cf = spectral.chf_assemble(phis, u, renormalize=True)
        assert cf[phis.size - 1] == pytest.approx(1.0)
        _, cf_raw = spectral.chf_assemble(phis, u, renormalize=False)
        assert cf_raw[phis.size - 1] == pytest.approx(0.95)

    def test_rejects_grid_not_starting_at_zero(self):
        phis = np.linspace(1.0, 50.0, 50)
        with pytest.raises(ConfigurationError):
            spectral.chf_assemble(phis, gaussian_u(phis, 0.0, 0.1))

    def test_mass_loss_guard(self):
        phis = np.linspace(0.0, 50.0, 51)
        u = 0.5 * gaussian_u(phis, 0.0, 0.1)
        with pytest.raises(MassLossError):
            spectral.chf_assemble(phis, u)


# ---------------------------------------------------------- inversion

class TestInversion:
    def test_gaussian_round_trip(self):
        m, s = 0.01, 0.1
        phis = np.linspace(0.0, 256.0, 257)
        phi, cf = spectral.chf_assemble(phis, gaussian_u(phis, m, s))
        curve = spectral.pdf_from_cf(phi, cf, -0.6, 0.6, 1201)
        ref = np.exp(-0.5 * ((curve.x - m) / s) ** 2) / (s * np.sqrt(2 * np.pi))
        assert np.max(np.abs(curve.density - ref)) < 1e-8
        mom = spectral.moments_from_pdf(curve)
        assert mom.mean == pytest.approx(m, abs=1e-9)
        assert mom.std_dev == pytest.approx(s, abs=1e-7)
        assert mom.skewness == pytest.approx(0.0, abs=1e-6)
        assert mom.kurtosis == pytest.approx(3.0, abs=1e-4)

    @settings(max_examples=25, deadline=None)
    @given(m=st.floats(-0.1, 0.1), s=st.floats(0.02, 0.2))
    def test_gaussian_round_trip_property(self, m, s):
        phis = np.linspace(0.0, 600.0, 1201)
        phi, cf = spectral.chf_assemble(phis, gaussian_u(phis, m, s))
        curve = spectral.pdf_from_cf(phi, cf, -1.2, 1.2, 961)
        mom = spectral.moments_from_pdf(curve)
        assert mom.mean == pytest.approx(m, abs=1e-5)
        assert mom.std_dev == pytest.approx(s, rel=1e-4)
        assert abs(mom.skewness) < 1e-3
        assert mom.kurtosis == pytest.approx(3.0, rel=1e-3)

    def test_czt_path_matches_trapezoid(self):
        phis = np.linspace(0.0, 256.0, 257)
        phi, cf = spectral.chf_assemble(phis, gaussian_u(phis, 0.02, 0.08))
        direct = spectral.pdf_from_cf(phi, cf, -0.6, 0.6, 1201,
                                      method="trapezoid")
        fast = spectral.pdf_from_cf(phi, cf, -0.6, 0.6, 1201, method="fft")
        assert np.max(np.abs(direct.density - fast.density)) < 1e-10

    def test_unit_cf_gives_unit_mass_spike(self):
        # cf = 1 inverts to the Dirichlet kernel sin(phi_max x)/(pi x);
        # its trapezoid mass over a wide window is 1 up to truncation
        phi = np.linspace(-256.0, 256.0, 513)
        cf = np.ones_like(phi, dtype=complex)
        curve = spectral.pdf_from_cf(phi, cf, -0.6, 0.6, 4801)
        assert curve.mass() == pytest.approx(1.0, abs=0.02)

    def test_nyquist_guard(self):
        phi = np.linspace(-256.0, 256.0, 513)
        cf = np.ones_like(phi, dtype=complex)
        with pytest.raises(ConfigurationError):
            spectral.pdf_from_cf(phi, cf, -4.0, 4.0, 101)

    def test_asymmetric_cf_rejected(self):
        phi = np.linspace(-50.0, 50.0, 101)
        cf = np.exp(-0.005 * phi ** 2) * np.exp(1j * 0.3 * np.abs(phi))
        with pytest.raises(DataError):
            spectral.pdf_from_cf(phi, cf, -0.5, 0.5, 201)

    def test_nonuniform_phi_rejected(self):
        phi = np.array([-2.0, -1.0, 0.0, 0.5, 2.0])
        with pytest.raises(ConfigurationError):
            spectral.pdf_from_cf(phi, np.ones(5, dtype=complex),
                                 -0.5, 0.5, 101)

    def test_x_refinement_does_not_increase_gaussian_error(self):
        m, s = 0.0, 0.1
        phis = np.linspace(0.0, 256.0, 257)
        phi, cf = spectral.chf_assemble(phis, gaussian_u(phis, m, s))
        errs = []
        for count in (301, 601, 1201):
            curve = spectral.pdf_from_cf(phi, cf, -0.6, 0.6, count)
            mom = spectral.moments_from_pdf(curve)
            errs.append(abs(mom.kurtosis - 3.0))
        assert errs[0] >= errs[1] >= errs[2] - 1e-12


# ----------------------------------------------------- curves, moments

class TestCurvesAndMoments:
    def test_csv_round_trip(self, tmp_path):
        x = np.linspace(-0.5, 0.5, 11)
        curve = spectral.DensityCurve(x, np.exp(-x ** 2))
        path = tmp_path / "curve.csv"
        curve.to_csv(path)
        back = spectral.DensityCurve.from_csv(path)
        assert np.array_equal(back.x, curve.x)
        assert np.array_equal(back.density, curve.density)

    def test_curve_invariants(self):
        with pytest.raises(DataError):
            spectral.DensityCurve(np.array([0.0, 1.0]), np.array([1.0]))
        with pytest.raises(DataError):
            spectral.DensityCurve(np.array([0.0]), np.array([1.0]))

    def test_zero_mass_curve_rejected(self):
        curve = spectral.DensityCurve(np.linspace(0, 1, 5), np.zeros(5))
        with pytest.raises(DegenerateSampleError):
            spectral.moments_from_pdf(curve)

    def test_moment_summary_json(self):
        mom = spectral.MomentSummary(mean=0.01, std_dev=0.1,
                                     skewness=-0.4, kurtosis=3.3,
                                     mass=0.998)
        back = json.loads(mom.to_json())
        assert back["mean"] == 0.01
        assert back["mass"] == 0.998
        assert back["renormalized"] is True

    def test_rmse_hand_value(self):
        x = np.array([0.0, 1.0])
        a = spectral.DensityCurve(x, np.array([0.0, 0.0]))
        b = spectral.DensityCurve(x, np.array([3.0, 4.0]))
        assert spectral.rmse(a, b) == pytest.approx(np.sqrt(12.5))

    def test_rmse_rejects_mismatched_grids(self):
        a = spectral.DensityCurve(np.array([0.0, 1.0]), np.array([1.0, 1.0]))
        b = spectral.DensityCurve(np.array([0.0, 2.0]), np.array([1.0, 1.0]))
        with pytest.raises(DataError):
            spectral.rmse(a, b)


# ------------------------------------------- analytic cf vs Monte Carlo

class TestAnalyticAgainstMonteCarlo:
    def test_heston_analytic_density_matches_simulated_moments(self):
        params = HestonParams(mu=0.05, kappa=18.0, theta=0.1, gamma=1.0,
                              rho=-0.62)
        result = pipeline.analytic_density(params, T=0.1)
        curve, mom = result.curve, result.moments
        assert curve.mass() == pytest.approx(1.0, abs=0.01)
        sim = mc.simulate_heston(params, SwapSpec(maturity_T=0.1, beta=0.0),
                                 mc.SimConfig(steps=1000, paths=50000,
                                              seed=21))
        sm = mc.sample_moments(sim.x_T)
        assert mom.mean == pytest.approx(sm.mean, abs=3.5 * sm.se_mean)
        assert mom.std_dev == pytest.approx(sm.std_dev,
                                            abs=3.5 * sm.se_std_dev)
        assert mom.skewness == pytest.approx(sm.skewness,
                                             abs=3.5 * sm.se_skewness)
        assert mom.kurtosis == pytest.approx(sm.kurtosis,
                                             abs=3.5 * sm.se_kurtosis)
