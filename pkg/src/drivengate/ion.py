"""Two-ion trap, Raman laser and gate-plan parameters.

Every stored frequency is angular (rad/s). Mode order is ``(com, zz)`` and ion
order is ``(1, 2)``; matrices indexed ``[ion, mode]``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace
from fractions import Fraction

import numpy as np

TWO_PI = 2.0 * math.pi
HBAR = 1.054571817e-34
AMU = 1.66053906660e-27
MODE_LABELS = ("com", "zz")
# scattering channel labels (final, initial) with their jump operator
CHANNELS = (("dd", "z"), ("ud", "minus"), ("du", "plus"), ("uu", "z"))

# default gate setup for 25Mg+ (cyclic values where the source quotes /2pi)
DEFAULTS = {
    "omega_z_cyclic": 1e6,
    "omega_x_cyclic": 4e6,
    "delta_com_cyclic": 127e3,
    "delta_zz_cyclic": 254e3,
    "omega_L_cyclic": 811e3,
    "gamma_value": 43e6,
    "wavelength": 280e-9,
    "mass_amu": 25.0,
    "omega_d_value": 40e6,
    "k_com": 8,
    "k_zz": 16,
}

RATIO_MIN = 50.0
RATIO_WARN = 100.0
DRIVE_RATIO_MIN = 20.0


class PlanError(ValueError):
    """Gate plan constraints cannot be met."""


def convert_rate(value: float, convention: str) -> float:
    """Turn a quoted frequency into rad/s: ``cyclic`` multiplies by 2 pi, ``angular`` keeps it."""
    if convention == "cyclic":
        return TWO_PI * value
    if convention == "angular":
        return float(value)
    raise ValueError(f"unknown frequency convention {convention!r}")


@dataclass(frozen=True)
class TrapModel:
    omega_x: float
    omega_z: float
    ion_mass: float
    wavelength: float
    beam_geometry: str = "right-angle"
    k_custom: float | None = None
    n_ions: int = 2

    def __post_init__(self):
        if self.n_ions != 2:
            raise ValueError("only two-ion crystals are supported")
        if not (self.omega_x > self.omega_z > 0):
            raise ValueError("need omega_x > omega_z > 0 for a transverse zig-zag mode")
        if self.ion_mass <= 0:
            raise ValueError("ion mass must be positive")
        if self.beam_geometry not in ("right-angle", "counter-propagating", "custom"):
            raise ValueError(f"unknown beam geometry {self.beam_geometry!r}")
        if self.beam_geometry == "custom" and not self.k_custom:
            raise ValueError("custom geometry needs k_custom")

    @property
    def k_eff(self) -> float:
        k = TWO_PI / self.wavelength
        if self.beam_geometry == "right-angle":
            return math.sqrt(2.0) * k
        if self.beam_geometry == "counter-propagating":
            return 2.0 * k
        return float(self.k_custom)

    @classmethod
    def default(cls) -> "TrapModel":
        return cls(
            omega_x=TWO_PI * DEFAULTS["omega_x_cyclic"],
            omega_z=TWO_PI * DEFAULTS["omega_z_cyclic"],
            ion_mass=DEFAULTS["mass_amu"] * AMU,
            wavelength=DEFAULTS["wavelength"],
        )


@dataclass(frozen=True)
class ModeSpectrum:
    omega: np.ndarray
    delta: np.ndarray
    eta: np.ndarray
    M: np.ndarray

    def __post_init__(self):
        M = np.asarray(self.M, dtype=float)
        if np.max(np.abs(M.T @ M - np.eye(2))) > 1e-12:
            raise ValueError("mode amplitudes are not orthonormal")
        if np.any(np.asarray(self.eta) <= 0):
            raise ValueError("Lamb-Dicke parameters must be positive")
        delta = np.asarray(self.delta, dtype=float)
        if np.any(delta <= 0) or np.any(delta >= np.asarray(self.omega)):
            raise ValueError("need 0 < delta_n < omega_n")


def transverse_modes(trap: TrapModel) -> tuple[np.ndarray, np.ndarray]:
    """Transverse normal-mode frequencies (com, zz) and amplitudes ``M[ion, mode]``."""
    omega_zz = math.sqrt(trap.omega_x**2 - trap.omega_z**2)
    M = np.array([[1.0, 1.0], [1.0, -1.0]]) / math.sqrt(2.0)
    return np.array([trap.omega_x, omega_zz]), M


def lamb_dicke(trap: TrapModel, omega_n) -> np.ndarray | float:
    return trap.k_eff * np.sqrt(HBAR / (2.0 * trap.ion_mass * np.asarray(omega_n, dtype=float)))


def mode_spectrum(trap: TrapModel, delta) -> ModeSpectrum:
    omega, M = transverse_modes(trap)
    return ModeSpectrum(omega=omega, delta=np.asarray(delta, dtype=float),
                        eta=np.asarray(lamb_dicke(trap, omega)), M=M)


def effective_rabi(Omega1: complex, Omega2: complex, Delta: float) -> complex:
    """Two-photon Rabi frequency of the adiabatically eliminated Raman pair."""
    if Delta == 0:
        raise ValueError("Delta must be nonzero")
    return -Omega1 * np.conj(Omega2) / (2.0 * Delta)


def beam_rabi_for_detuning(Delta: float, Omega_L: complex) -> float:
    """Equal single-beam Rabi modulus giving ``|Omega_L|`` at detuning ``Delta``."""
    return math.sqrt(abs(2.0 * Delta * Omega_L))


@dataclass(frozen=True)
class RamanModel:
    Delta: float
    Omega1: complex
    Omega2: complex
    Gamma_down: float
    Gamma_up: float
    k_eff: float
    phi_L: float = 0.0

    def __post_init__(self):
        if self.Gamma_down < 0 or self.Gamma_up < 0:
            raise ValueError("decay rates must be non-negative")
        if self.Delta == 0:
            raise ValueError("Delta must be nonzero")
        big = max(abs(self.Omega1), abs(self.Omega2), self.Gamma, 1e-300)
        ratio = abs(self.Delta) / big
        if ratio < RATIO_MIN:
            raise ValueError(
                f"|Delta| / max(|Omega|, Gamma) = {ratio:.3g} < {RATIO_MIN}: "
                "adiabatic elimination not valid")
        if ratio < RATIO_WARN:
            warnings.warn(f"|Delta| / max(|Omega|, Gamma) = {ratio:.3g} is below {RATIO_WARN}",
                          stacklevel=2)
        if not math.isclose(abs(self.Omega1), abs(self.Omega2), rel_tol=1e-9):
            warnings.warn("unequal beam Rabi frequencies leave a differential ac-Stark shift "
                          "that the gate model ignores", stacklevel=2)

    @property
    def Gamma(self) -> float:
        return self.Gamma_down + self.Gamma_up

    @property
    def Omega_L(self) -> complex:
        return complex(effective_rabi(self.Omega1, self.Omega2, self.Delta))

    @classmethod
    def for_detuning(cls, Delta: float, Omega_L_abs: float, Gamma: float, k_eff: float,
                     branching: float = 0.5) -> "RamanModel":
        """Equal-intensity beams whose effective Rabi modulus is ``Omega_L_abs``."""
        om = beam_rabi_for_detuning(Delta, Omega_L_abs)
        return cls(Delta=Delta, Omega1=om, Omega2=om, Gamma_down=branching * Gamma,
                   Gamma_up=(1.0 - branching) * Gamma, k_eff=k_eff)


def ac_stark_shifts(raman: RamanModel) -> tuple[float, float]:
    d = -abs(raman.Omega1) ** 2 / (4.0 * raman.Delta)
    u = -abs(raman.Omega2) ** 2 / (4.0 * raman.Delta)
    return d, u


def sideband_couplings(Omega_L: complex, spectrum: ModeSpectrum) -> np.ndarray:
    """``F[ion, mode] = (i/2) eta_n Omega_L M[ion, mode]``."""
    return 0.5j * Omega_L * spectrum.eta[None, :] * spectrum.M


def effective_scattering_rates(raman: RamanModel) -> dict[str, float]:
    """Per-ion rates of the four effective jump channels, keyed as in ``CHANNELS``."""
    den = 4.0 * raman.Delta**2 + raman.Gamma**2
    o1 = abs(raman.Omega1) ** 2
    o2 = abs(raman.Omega2) ** 2
    return {
        "dd": raman.Gamma_down * o1 / (2.0 * den),
        "ud": raman.Gamma_down * o2 / den,
        "du": raman.Gamma_up * o1 / den,
        "uu": raman.Gamma_up * o2 / (2.0 * den),
    }


def total_scattering_rate(raman: RamanModel) -> float:
    """Photon scattering rate summed over channels, counting a sigma^z channel once per photon.

    A dephasing jump ``sqrt(r) sigma^z`` scatters photons at rate ``r`` from either
    level, so the summed jump rates equal the physical photon rate.
    """
    return float(sum(effective_scattering_rates(raman).values()))


def coupling_matrix(F: np.ndarray, delta) -> np.ndarray:
    delta = np.asarray(delta, dtype=float)
    if np.any(delta <= 0):
        raise ValueError("delta_n must be positive")
    J = -np.einsum("in,jn,n->ij", F, F.conj(), 1.0 / (4.0 * delta))
    if np.max(np.abs(J.imag)) > 1e-9 * max(np.max(np.abs(J)), 1e-300):
        raise ValueError("coupling matrix is not real")
    J = J.real
    return 0.5 * (J + J.T)


@dataclass(frozen=True)
class GatePlan:
    Omega_d: float
    loop_counts: tuple[int, int]
    t_g: float
    echo_time: float
    J: np.ndarray
    F: np.ndarray
    delta: np.ndarray
    theta: float
    literal_theta: float
    calibration: dict = field(default_factory=dict)

    @property
    def omega_L_scale(self) -> float:
        return self.calibration.get("omega_L_scale", 1.0)


def closure_time(delta, loop_counts) -> float:
    """Common loop-closure time, checking that both modes close with the given counts."""
    delta = np.asarray(delta, dtype=float)
    times = [k * TWO_PI / d for k, d in zip(loop_counts, delta)]
    if any(k <= 0 for k in loop_counts):
        raise PlanError("loop counts must be positive integers")
    # the frequency ratio must be rational with the stated counts
    ratio = Fraction(delta[1] / delta[0]).limit_denominator(1000)
    if not math.isclose(times[0], times[1], rel_tol=1e-9) or \
            not math.isclose(float(ratio), delta[1] / delta[0], rel_tol=1e-12):
        raise PlanError(f"modes do not close together: t_com={times[0]:.6g}, t_zz={times[1]:.6g}")
    return times[0]


def wrap_phase(x: float) -> float:
    """Map an angle into (-pi, pi]."""
    y = math.remainder(x, TWO_PI)
    return math.pi if y == -math.pi else y


def calibration_target(theta_literal: float) -> float:
    """Smallest-magnitude entangling phase congruent to pi/4 mod pi with the sign of ``theta_literal``.

    Rescaling ``|Omega_L|`` multiplies the phase by a positive factor, so the sign
    of ``J_12`` fixes which branch is reachable; the branch must be pi/4 mod pi so
    that |down,down> maps onto (|dd> - i|uu>)/sqrt(2).
    """
    if theta_literal > 0:
        return math.pi / 4
    if theta_literal < 0:
        return -3 * math.pi / 4
    raise PlanError("J_12 = 0: no entangling phase to calibrate")


def plan_gate(spectrum: ModeSpectrum, F: np.ndarray, Omega_d: float, k_com: int = 8,
              k_zz: int = 16, mode: str = "verify", check_drive: bool = True) -> GatePlan:
    """Gate timing and coupling matrix; ``calibrate`` rescales |Omega_L| to hit the target phase."""
    if mode not in ("verify", "calibrate"):
        raise ValueError(f"mode must be 'verify' or 'calibrate', got {mode!r}")
    t_g = closure_time(spectrum.delta, (k_com, k_zz))
    J = coupling_matrix(F, spectrum.delta)
    literal = t_g * 2.0 * J[0, 1]
    calibration = {"mode": mode, "omega_L_scale": 1.0}
    if mode == "calibrate":
        target = calibration_target(literal)
        scale = math.sqrt(target / literal)
        F = F * scale
        J = coupling_matrix(F, spectrum.delta)
        # remove the last ulp of rounding so the phase condition holds exactly
        J[0, 1] = J[1, 0] = target / (2.0 * t_g)
        calibration.update(omega_L_scale=scale, target_theta=target)
    theta = t_g * 2.0 * J[0, 1]
    if check_drive:
        slowest = max(np.max(np.abs(F)), np.max(spectrum.delta))
        if Omega_d < DRIVE_RATIO_MIN * slowest:
            raise PlanError(f"Omega_d = {Omega_d:.4g} rad/s is below {DRIVE_RATIO_MIN} x "
                            f"max(|F|, delta) = {slowest:.4g} rad/s")
    return GatePlan(Omega_d=float(Omega_d), loop_counts=(k_com, k_zz), t_g=t_g, echo_time=t_g / 2,
                    J=J, F=F, delta=np.asarray(spectrum.delta, dtype=float), theta=theta,
                    literal_theta=literal, calibration=calibration)


@dataclass(frozen=True)
class GateSetup:
    """Resolved parameters for one gate simulation."""
    trap: TrapModel
    spectrum: ModeSpectrum
    omega_L: float
    plan: GatePlan
    gamma: float

    @property
    def omega_L_calibrated(self) -> float:
        return self.omega_L * self.plan.omega_L_scale

    def raman(self, Delta: float, branching: float = 0.5, gamma: float | None = None) -> RamanModel:
        """Raman beams at detuning ``Delta`` delivering the calibrated effective Rabi frequency."""
        g = self.gamma if gamma is None else gamma
        return RamanModel.for_detuning(Delta, self.omega_L_calibrated, g, self.trap.k_eff, branching)

    def with_plan(self, plan: GatePlan) -> "GateSetup":
        return replace(self, plan=plan)


def default_setup(gamma_convention: str = "angular", omega_d_convention: str = "cyclic",
                  omega_d: float | None = None, mode: str = "calibrate",
                  check_drive: bool = True, omega_L: float | None = None) -> GateSetup:
    """Default two-ion 25Mg+ gate, calibrated to the Bell phase unless ``mode='verify'``.

    The quoted linewidth 43 MHz carries no 2 pi label and is read as 4.3e7 s^-1
    by default (``gamma_convention='angular'``); ``'cyclic'`` gives 2 pi x 43 MHz.

    ``omega_d`` and ``omega_L`` override the defaults and are angular (rad/s).
    """
    trap = TrapModel.default()
    spec = mode_spectrum(trap, TWO_PI * np.array([DEFAULTS["delta_com_cyclic"],
                                                  DEFAULTS["delta_zz_cyclic"]]))
    oL = TWO_PI * DEFAULTS["omega_L_cyclic"] if omega_L is None else float(omega_L)
    F = sideband_couplings(oL, spec)
    Od = convert_rate(DEFAULTS["omega_d_value"], omega_d_convention) if omega_d is None else omega_d
    plan = plan_gate(spec, F, Od, DEFAULTS["k_com"], DEFAULTS["k_zz"], mode=mode,
                     check_drive=check_drive)
    gamma = convert_rate(DEFAULTS["gamma_value"], gamma_convention)
    return GateSetup(trap=trap, spectrum=spec, omega_L=oL, plan=plan, gamma=gamma)
