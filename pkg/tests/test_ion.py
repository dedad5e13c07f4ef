import math
import warnings

import numpy as np
import pytest

from drivengate import ion
from drivengate.ion import (TWO_PI, GatePlan, PlanError, RamanModel, TrapModel, ac_stark_shifts,
                            beam_rabi_for_detuning, coupling_matrix, default_setup,
                            effective_rabi, effective_scattering_rates, lamb_dicke, mode_spectrum,
                            plan_gate, sideband_couplings, transverse_modes)

TRAP = TrapModel.default()
SETUP = default_setup()


def test_transverse_modes():
    omega, M = transverse_modes(TRAP)
    assert omega[0] == TRAP.omega_x
    assert omega[1] / TWO_PI == pytest.approx(3.8730e6, abs=50)
    assert np.array_equal(M.T @ M, np.eye(2)) or np.allclose(M.T @ M, np.eye(2), atol=1e-15)
    assert M[0, 1] == -M[1, 1] and M[0, 1] > 0
    tiny = TrapModel(TRAP.omega_x, 1e-6, TRAP.ion_mass, TRAP.wavelength)
    assert transverse_modes(tiny)[0][1] == pytest.approx(TRAP.omega_x, rel=1e-15)
    with pytest.raises(ValueError):
        TrapModel(TRAP.omega_z, TRAP.omega_x, TRAP.ion_mass, TRAP.wavelength)
    with pytest.raises(ValueError):
        TrapModel(TRAP.omega_x, TRAP.omega_z, -1.0, TRAP.wavelength)


def test_lamb_dicke_matches_table_values():
    omega, _ = transverse_modes(TRAP)
    eta = lamb_dicke(TRAP, omega)
    assert round(float(eta[0]), 3) == 0.225 or f"{eta[0]:.3g}" == "0.226"
    assert f"{eta[0]:.3g}" in ("0.225", "0.226")
    assert abs(eta[0] - 0.225) < 1e-3
    assert abs(eta[1] - 0.229) < 1e-3
    assert lamb_dicke(TRAP, 4 * omega[0]) / eta[0] == pytest.approx(0.5, rel=1e-14)


def test_beam_geometry_wavevectors():
    k = TWO_PI / TRAP.wavelength
    assert TRAP.k_eff == pytest.approx(math.sqrt(2) * k)
    cp = TrapModel(TRAP.omega_x, TRAP.omega_z, TRAP.ion_mass, TRAP.wavelength, "counter-propagating")
    assert cp.k_eff == pytest.approx(2 * k)
    cu = TrapModel(TRAP.omega_x, TRAP.omega_z, TRAP.ion_mass, TRAP.wavelength, "custom", k_custom=3.0)
    assert cu.k_eff == 3.0


def test_effective_rabi_and_round_trip():
    om, d = 2 * math.pi * 300e6, 2 * math.pi * 50e9
    assert effective_rabi(om, om, d) == pytest.approx(-om**2 / (2 * d))
    target = TWO_PI * 811e3
    for delta in TWO_PI * np.array([1e11, 1e12, 1e13]):
        b = beam_rabi_for_detuning(delta, target)
        assert abs(effective_rabi(b, b, delta)) == pytest.approx(target, rel=1e-12)
    b = beam_rabi_for_detuning(TWO_PI * 100e9, target)
    assert b / TWO_PI == pytest.approx(402.7e6, rel=1e-3)
    with pytest.raises(ValueError):
        effective_rabi(1.0, 1.0, 0.0)


def _raman(delta=TWO_PI * 1e12, o1=None, o2=None, gamma=TWO_PI * 43e6):
    o = beam_rabi_for_detuning(delta, TWO_PI * 811e3)
    return RamanModel(Delta=delta, Omega1=o if o1 is None else o1, Omega2=o if o2 is None else o2,
                      Gamma_down=gamma / 2, Gamma_up=gamma / 2, k_eff=TRAP.k_eff)


def test_ac_stark_shifts():
    r = _raman()
    d, u = ac_stark_shifts(r)
    assert u - d == 0
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        r0 = _raman(o2=0.0)
    d0, u0 = ac_stark_shifts(r0)
    assert u0 == 0 and d0 == pytest.approx(-abs(r.Omega1) ** 2 / (4 * r.Delta))
    r2 = RamanModel(2 * r.Delta, r.Omega1, r.Omega2, r.Gamma_down, r.Gamma_up, r.k_eff)
    assert ac_stark_shifts(r2)[0] == pytest.approx(d / 2)


def test_raman_validation():
    with pytest.raises(ValueError):
        RamanModel(Delta=10.0, Omega1=1.0, Omega2=1.0, Gamma_down=0, Gamma_up=0, k_eff=1.0)
    with pytest.warns(UserWarning):
        RamanModel(Delta=70.0, Omega1=1.0, Omega2=1.0, Gamma_down=0, Gamma_up=0, k_eff=1.0)
    with pytest.warns(UserWarning):
        RamanModel(Delta=1e4, Omega1=1.0, Omega2=2.0, Gamma_down=0, Gamma_up=0, k_eff=1.0)
    r = _raman()
    assert r.Gamma == pytest.approx(r.Gamma_down + r.Gamma_up)


def test_sideband_couplings():
    spec = SETUP.spectrum
    oL = TWO_PI * 811e3
    F = sideband_couplings(oL, spec)
    assert np.all(F.real == 0)
    assert abs(F[0, 0]) == pytest.approx(spec.eta[0] * oL / (2 * math.sqrt(2)))
    # with the quoted eta_com = 0.225 the same formula gives 2 pi x 64.5 kHz
    assert 0.225 * 811e3 / (2 * math.sqrt(2)) == pytest.approx(64.5e3, rel=1e-3)
    assert abs(F[0, 0]) / TWO_PI == pytest.approx(64.5e3, rel=5e-3)
    assert F[0, 1] == -F[1, 1]


def test_scattering_rates():
    r = _raman()
    rates = effective_scattering_rates(r)
    om2 = abs(r.Omega1) ** 2
    den = 4 * r.Delta**2 + r.Gamma**2
    assert rates["ud"] == pytest.approx(r.Gamma * om2 / (2 * den))
    assert rates["du"] == pytest.approx(r.Gamma * om2 / (2 * den))
    assert rates["dd"] == pytest.approx(r.Gamma * om2 / (4 * den))
    assert rates["uu"] == pytest.approx(r.Gamma * om2 / (4 * den))
    zero = effective_scattering_rates(_raman(gamma=0.0))
    assert all(v == 0 for v in zero.values())
    # quadrupling Delta at fixed beam Rabi frequency divides rates by ~16
    r4 = RamanModel(4 * r.Delta, r.Omega1, r.Omega2, r.Gamma_down, r.Gamma_up, r.k_eff)
    assert effective_scattering_rates(r4)["ud"] / rates["ud"] == pytest.approx(1 / 16, rel=1e-6)
    # and by ~4 at fixed Omega_L
    r4L = _raman(delta=4 * r.Delta)
    assert effective_scattering_rates(r4L)["ud"] / rates["ud"] == pytest.approx(1 / 4, rel=1e-6)


def test_total_scattering_probability_scales_inverse_delta():
    t_g = SETUP.plan.t_g
    p = [ion.total_scattering_rate(_raman(delta=TWO_PI * d)) * t_g for d in (1e12, 1e13)]
    assert p[0] / p[1] == pytest.approx(10.0, rel=1e-3)


def test_coupling_matrix():
    f = 2 * math.pi * 1e4j
    d = 2 * math.pi * 1e5
    J = coupling_matrix(np.array([[f, 0], [f, 0]]), np.array([d, 2 * d]))
    assert J[0, 1] == pytest.approx(-abs(f) ** 2 / (4 * d))
    spec = SETUP.spectrum
    oL = TWO_PI * 811e3
    J = coupling_matrix(sideband_couplings(oL, spec), spec.delta)
    expected = -(oL**2 / 32) * (spec.eta[0] ** 2 / spec.delta[0] - spec.eta[1] ** 2 / spec.delta[1])
    assert J[0, 1] == pytest.approx(expected, rel=1e-12)
    assert np.array_equal(J, J.T)
    assert J[0, 0] == pytest.approx(J[1, 1], rel=1e-14)
    with pytest.raises(ValueError):
        coupling_matrix(np.ones((2, 2)), [1.0, 0.0])


def test_plan_gate_verify_reports_literal_phase():
    spec = SETUP.spectrum
    F = sideband_couplings(TWO_PI * 811e3, spec)
    plan = plan_gate(spec, F, TWO_PI * 40e6, 8, 16, mode="verify")
    assert plan.t_g == pytest.approx(62.99e-6, rel=1e-4)
    assert plan.t_g * spec.delta[1] / TWO_PI == pytest.approx(16, rel=1e-12)
    assert plan.echo_time == plan.t_g / 2
    assert plan.theta == plan.literal_theta
    # the quoted parameters give a phase close to -pi, far from the Bell condition
    assert plan.literal_theta == pytest.approx(-3.1533, abs=1e-3)
    assert plan.omega_L_scale == 1.0


def test_plan_gate_calibrate():
    plan = SETUP.plan
    assert plan.theta == pytest.approx(-3 * math.pi / 4, rel=1e-12)
    assert plan.calibration["target_theta"] == -3 * math.pi / 4
    # theta is pi/4 modulo pi, so the relative phases form the conditional pi/2 gate
    assert math.remainder(plan.theta - math.pi / 4, math.pi) == pytest.approx(0, abs=1e-12)
    scale = plan.omega_L_scale
    assert scale == pytest.approx(0.8644182369591688, rel=1e-12)
    spec = SETUP.spectrum
    assert np.allclose(plan.F, scale * sideband_couplings(TWO_PI * 811e3, spec), rtol=1e-14)


def test_calibration_branch_follows_sign():
    assert ion.calibration_target(0.3) == math.pi / 4
    assert ion.calibration_target(-0.3) == -3 * math.pi / 4
    with pytest.raises(PlanError):
        ion.calibration_target(0.0)


def test_plan_gate_errors():
    spec = SETUP.spectrum
    F = sideband_couplings(TWO_PI * 811e3, spec)
    with pytest.raises(PlanError):
        plan_gate(spec, F, TWO_PI * 40e6, 8, 15)
    with pytest.raises(PlanError):
        plan_gate(spec, F, TWO_PI * 1e6, 8, 16)
    plan = plan_gate(spec, F, 0.0, 8, 16, check_drive=False)
    assert plan.Omega_d == 0.0
    with pytest.raises(ValueError):
        plan_gate(spec, F, TWO_PI * 40e6, mode="guess")


def test_conventions():
    assert ion.convert_rate(43e6, "cyclic") == pytest.approx(TWO_PI * 43e6)
    assert ion.convert_rate(43e6, "angular") == 43e6
    with pytest.raises(ValueError):
        ion.convert_rate(1.0, "hertz")
    assert default_setup().gamma == 43e6
    assert default_setup(gamma_convention="cyclic").gamma == pytest.approx(TWO_PI * 43e6)
    assert default_setup(omega_d_convention="angular").plan.Omega_d == 40e6
