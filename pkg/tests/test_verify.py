"""Tests for the identity verification engine.

Quadrature-backed verifiers are checked against an independent oracle
(re-running at a finer resolution must not move the answer), and every
identity is exercised on at least one hand-picked configuration.
"""

import math

import numpy as np
import pytest

from lenstri import verify
from lenstri.models import ModelFamily, Spin
from lenstri.params import (
    ContourViolationError,
    InvalidParameterError,
    physical_parameters,
)


def sample_t(rng, n, span):
    im = span * (0.4 / n + 0.6 * rng.dirichlet([2.0] * n))
    re = rng.uniform(-0.8, 0.8, n)
    re -= re.mean()
    return [complex(a, b) for a, b in zip(re, im)]


class TestReportPlumbing:
    def test_relative_residual(self):
        rep = verify.make_report("x", {}, 2.0, 2.0 + 1e-8j, 1e-6)
        assert rep.passed
        assert rep.rel_residual == pytest.approx(5e-9)

    def test_absolute_fallback_for_tiny_rhs(self):
        rep = verify.make_report("x", {}, 1e-12, 0.0, 1e-10)
        assert rep.passed
        rep = verify.make_report("x", {}, 1e-8, 0.0, 1e-10)
        assert not rep.passed

    def test_master_parameter_invariants(self):
        pr = physical_parameters(0.05, 0.5, 1)
        good = tuple(2j * pr.eta / 6 + dx for dx in (0.1, -0.1, 0.2, -0.2, 0.3, -0.3))
        verify.MasterParameters(good, (0,) * 6, pr)
        with pytest.raises(InvalidParameterError):
            verify.MasterParameters(good, (1, 0, 0, 0, 0, 0), pr)
        with pytest.raises(InvalidParameterError):
            verify.MasterParameters(tuple(t + 0.01 for t in good), (0,) * 6, pr)


class TestStarTriangle:
    def test_r1_passes(self):
        pr = physical_parameters(0.05, 0.5, 1)
        eta = pr.eta.real
        spins = (Spin(0.6, 0), Spin(1.7, 0), Spin(2.9, 0))
        rep = verify.verify_str(spins, (0.2 * eta, 0.3 * eta, 0.5 * eta), pr)
        assert rep.passed, rep.rel_residual

    def test_degenerate_spins_r2(self):
        pr = physical_parameters(0.05, 0.5, 2)
        eta = pr.eta.real
        spins = (Spin(0.0, 0), Spin(0.0, 0), Spin(0.0, 0))
        rep = verify.verify_str(spins, (eta / 3, eta / 3, eta / 3), pr)
        assert rep.passed, rep.rel_residual

    def test_refinement_oracle(self):
        # quadrupling the quadrature resolution must not move the LHS
        pr = physical_parameters(0.05, 0.5, 2)
        eta = pr.eta.real
        spins = (Spin(0.8, 1), Spin(1.9, 0), Spin(2.4, 1))
        alphas = (0.25 * eta, 0.35 * eta, 0.4 * eta)
        coarse = verify.verify_str(spins, alphas, pr, quad_tol=1e-8)
        fine = verify.verify_str(spins, alphas, pr, quad_tol=1e-11)
        assert abs(coarse.lhs - fine.lhs) <= 1e-7 * abs(fine.lhs)

    def test_alpha_constraint_enforced(self):
        pr = physical_parameters(0.05, 0.5, 1)
        spins = (Spin(0.6, 0), Spin(1.7, 0), Spin(2.9, 0))
        with pytest.raises(InvalidParameterError):
            verify.verify_str(spins, (0.5, 0.5, 0.6), pr)


class TestRInfStarTriangle:
    def test_zero_spins(self):
        pr = physical_parameters(0.05, 0.5, 1)
        eta = pr.eta.real
        spins = (Spin(0.0, 0), Spin(0.0, 0), Spin(0.0, 0))
        rep = verify.verify_rinfstr(spins, (eta / 3, eta / 3, eta / 3), pr)
        assert rep.passed, rep.rel_residual

    def test_nonzero_integer_parts(self):
        pr = physical_parameters(0.05, 0.5, 1)
        eta = pr.eta.real
        spins = (Spin(0.9, 2), Spin(1.4, -1), Spin(2.6, 0))
        rep = verify.verify_rinfstr(spins, (0.3 * eta, 0.45 * eta, 0.25 * eta), pr)
        assert rep.passed, rep.rel_residual
        assert rep.numerics_meta["tail_bound"] <= 0.1 * rep.tolerance


class TestGammaStarTriangle:
    def test_symmetric_point(self):
        spins = (Spin(0.0, 0), Spin(0.0, 0), Spin(0.0, 0))
        rep = verify.verify_strmsg(spins, (1 / 3, 1 / 3, 1 / 3))
        assert rep.passed, rep.rel_residual

    def test_mixed_spins(self):
        spins = (Spin(0.5, 0), Spin(1.0, 1), Spin(-0.3, -1))
        rep = verify.verify_strmsg(spins, (0.3, 0.45, 0.25))
        assert rep.passed, rep.rel_residual

    def test_residual_stable_under_refinement(self):
        spins = (Spin(0.5, 0), Spin(1.0, 1), Spin(-0.3, -1))
        alphas = (0.3, 0.45, 0.25)
        coarse = verify.verify_strmsg(spins, alphas, quad_tol=1e-4)
        fine = verify.verify_strmsg(spins, alphas, quad_tol=1e-6)
        assert fine.rel_residual <= coarse.rel_residual + 1e-14


class TestMasterIdentity:
    def test_elliptic_beta_reduction(self):
        # r=1 with all u=0 is the elliptic beta integral
        pr = physical_parameters(0.05, 0.5, 1)
        t = sample_t(np.random.default_rng(21), 6, (2j * pr.eta).imag)
        t[5] = 2j * pr.eta - sum(t[:5])
        mp = verify.MasterParameters(tuple(t), (0,) * 6, pr)
        rep = verify.verify_master(mp)
        assert rep.passed, rep.rel_residual

    def test_r2_with_nonzero_u(self):
        pr = physical_parameters(0.05, 0.5, 2)
        t = sample_t(np.random.default_rng(22), 6, (2j * pr.eta).imag)
        t[5] = 2j * pr.eta - sum(t[:5])
        mp = verify.MasterParameters(tuple(t), (1, -1, 0, 0, 0, 0), pr)
        rep = verify.verify_master(mp)
        assert rep.passed, rep.rel_residual

    def test_unsafe_contour_rejected(self):
        pr = physical_parameters(0.05, 0.5, 1)
        span = (2j * pr.eta).imag
        t = [complex(0.1, 1e-6)] + [complex(d, span / 5) for d in
                                    (-0.2, 0.15, -0.05, 0.1)]
        t.append(2j * pr.eta - sum(t))
        mp = verify.MasterParameters(tuple(t), (0,) * 6, pr)
        with pytest.raises(ContourViolationError):
            verify.verify_master(mp)


class TestConstantForm:
    def test_r1_constant(self):
        pr = physical_parameters(0.05, 0.5, 1)
        t = tuple(sample_t(np.random.default_rng(23), 5,
                           0.4 * (2j * pr.eta).imag))
        rep = verify.verify_I_constant(t, (0,) * 5, pr)
        assert rep.passed, (rep.rel_residual, rep.numerics_meta)
        assert rep.numerics_meta["shift_residual"] <= 1e-7

    def test_r2_with_u(self):
        pr = physical_parameters(0.05, 0.5, 2)
        t = tuple(sample_t(np.random.default_rng(24), 5,
                           0.4 * (2j * pr.eta).imag))
        rep = verify.verify_I_constant(t, (1, -1, 0, 1, -1), pr)
        assert rep.passed, (rep.rel_residual, rep.numerics_meta)

    def test_near_degenerate_pair_trend(self):
        # t1+t2 -> 0 is the residue regime; the identity must keep holding
        # as the pair sum shrinks toward it
        pr = physical_parameters(0.05, 0.5, 1)
        base = sample_t(np.random.default_rng(25), 5, 0.35 * (2j * pr.eta).imag)
        for gap in (1e-2, 1e-3):
            t = list(base)
            # place t2 nearly opposite t1 in the real direction
            t[1] = complex(-t[0].real + gap, t[1].imag)
            rep = verify.verify_I_constant(tuple(t), (0,) * 5, pr)
            assert rep.passed, (gap, rep.rel_residual)


class TestThetaDifference:
    def _case(self, r, seed):
        pr = physical_parameters(0.05, 0.5, r)
        rng = np.random.default_rng(seed)
        t = tuple(sample_t(rng, 5, 1.6 * pr.eta.real))
        u = tuple(int(v) for v in rng.integers(-2, 3, 5))
        y = int(rng.integers(0, r))
        z = complex(rng.uniform(0, 2 * math.pi), rng.uniform(-0.1, 0.1))
        return pr, t, u, y, z

    @pytest.mark.parametrize("r", [1, 2, 3])
    def test_identity_and_shift(self, r):
        pr, t, u, y, z = self._case(r, 30 + r)
        rep = verify.verify_theta_difference(z, y, t, u, pr)
        assert rep.passed, rep.rel_residual
        assert rep.numerics_meta["period_shift_residual_lhs"] <= 1e-8
        assert rep.numerics_meta["period_shift_residual_rhs"] <= 1e-8

    def test_near_pole_value(self):
        pr, t, u, y, z = self._case(2, 41)
        rep = verify.verify_theta_difference(z, y, t, u, pr)
        assert abs(rep.numerics_meta["near_pole_lhs"] + 1) <= 1e-4
        assert abs(rep.numerics_meta["near_pole_rhs"] + 1) <= 1e-4

    def test_difference_equation_oracle(self):
        # independent route: the same identity written through the ratio
        # rho and its telescoping companion must balance exactly
        pr = physical_parameters(0.05, 0.5, 2)
        rng = np.random.default_rng(42)
        t = tuple(sample_t(rng, 5, 0.4 * (2j * pr.eta).imag))
        u = (1, 0, -1, 1, 0)
        z = 0.83 + 0.02j
        for y in range(pr.r):
            shifted = verify.rho_integrand(
                z, y, (t[0] + math.pi * pr.sigma,) + t[1:], (u[0] - 1,) + u[1:], pr)
            lhs = shifted - verify.rho_integrand(z, y, t, u, pr)
            rhs = (verify.g_function(z - math.pi * pr.sigma, y + 1, t, u, pr)
                   - verify.g_function(z, y, t, u, pr))
            assert abs(lhs - rhs) <= 1e-12 * max(abs(lhs), abs(rhs), 1e-30)


class TestPoleDiagnostics:
    def test_uniform_heights(self):
        pr = physical_parameters(0.05, 0.5, 2)
        h = (2j * pr.eta).imag / 6
        t = tuple(complex(0.1 * k, h) for k in range(-2, 3))
        assert verify.pole_diagnostics(t, (0, 1, -1, 0, 0), pr) == pytest.approx(h)

    def test_thin_margin_tracks_t(self):
        pr = physical_parameters(0.05, 0.5, 2)
        h = (2j * pr.eta).imag / 6
        t = (complex(0.1, 1e-4),) + tuple(complex(0.1 * k, h) for k in range(4))
        assert verify.pole_diagnostics(t, (0,) * 5, pr) == pytest.approx(1e-4)

    def test_large_im_a_unsafe(self):
        pr = physical_parameters(0.05, 0.5, 2)
        span = (2j * pr.eta).imag
        t = tuple(complex(0.1 * k, 0.45 * span) for k in range(-2, 3))
        assert verify.pole_diagnostics(t, (0,) * 5, pr) <= 0.0

    def test_accepts_master_parameters(self):
        pr = physical_parameters(0.05, 0.5, 1)
        t = tuple(2j * pr.eta / 6 + dx for dx in (0.1, -0.1, 0.2, -0.2, 0.3, -0.3))
        mp = verify.MasterParameters(t, (0,) * 6, pr)
        assert verify.pole_diagnostics(mp) > 0


class TestBrackets:
    def test_full_sweep(self):
        rep = verify.verify_bracket_identities(64)
        assert rep.passed
        assert rep.numerics_meta["failures"] == []
        assert rep.numerics_meta["cases_checked"] == sum(
            6 * r + 1 for r in range(1, 65))

    def test_spot_example(self):
        # [[-m]] + [[m-1]] = r-1 at m=0, r=3
        import lenstri.special_functions as sf
        assert sf.mod_bracket(0, 3) + sf.mod_bracket(-1, 3) == 2


class TestLimits:
    def test_r_to_inf(self):
        pr = physical_parameters(0.05, 0.5, 1)
        rep = verify.verify_limit_r_to_inf(0.3, 1, pr)
        assert rep.passed
        errs = rep.numerics_meta["errors"]
        assert errs[-1] <= errs[0]

    def test_r_to_inf_negative_index(self):
        pr = physical_parameters(0.05, 0.5, 1)
        rep = verify.verify_limit_r_to_inf(0.3, -2, pr)
        assert rep.passed

    def test_hbar(self):
        rep = verify.verify_limit_hbar(0.4, 1.0, 0)
        assert rep.passed
        for key in ("dev_q", "dev_kappa", "dev_single_spin"):
            seq = rep.numerics_meta[key]
            assert all(b < a for a, b in zip(seq, seq[1:]))

    def test_hbar_nonzero_m(self):
        rep = verify.verify_limit_hbar(0.3, 0.8, 2)
        assert rep.passed


class TestInversionAndBridge:
    @pytest.mark.parametrize("family", [ModelFamily.ELLIPTIC,
                                        ModelFamily.Q_LIMIT,
                                        ModelFamily.GAMMA_LIMIT])
    def test_first_inversion(self, family):
        pr = physical_parameters(0.05, 0.5, 2)
        spins = (Spin(0.7, 1), Spin(1.9, 0))
        rep = verify.verify_inversion_first(family, 0.35, spins, pr)
        assert rep.passed, rep.rel_residual

    def test_bridge_residual_recorded(self):
        pr = physical_parameters(0.05, 0.5, 2)
        rep = verify.verify_gamma_phi_bridge(0.37 + 0.21j, 1, pr)
        assert rep.rel_residual <= 1e-10

    def test_bridge_stable_under_half_period(self):
        pr = physical_parameters(0.05, 0.5, 2)
        r1 = verify.verify_gamma_phi_bridge(0.37 + 0.21j, 1, pr)
        r2 = verify.verify_gamma_phi_bridge(0.37 + math.pi + 0.21j, 1, pr)
        assert r1.rel_residual <= 1e-10 and r2.rel_residual <= 1e-10


class TestChangeOfVariables:
    @pytest.mark.parametrize("r", [1, 2])
    def test_lhs_and_rhs_reproduced(self, r):
        pr = physical_parameters(0.05, 0.5, r)
        eta = pr.eta.real
        spins = (Spin(0.7, 0), Spin(1.6, r // 2), Spin(2.5, 0))
        alphas = (0.28 * eta, 0.33 * eta, 0.39 * eta)
        rep = verify.verify_cov_consistency(spins, alphas, pr)
        assert rep.passed
        assert rep.numerics_meta["lhs_residual"] <= 1e-8
        assert rep.numerics_meta["rhs_residual"] <= 1e-8
