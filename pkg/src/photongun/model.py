"""Physical model: drive pulses, parameter sets, Hamiltonians and dissipators.

Unit conventions
----------------
All rates and angular frequencies are stored in rad/ns, all times in ns.
External interfaces quote ordinary frequencies in MHz; the conversion is

    omega[rad/ns] = 2*pi * 1e-3 * f[MHz]

which keeps a 210 ns pulse a round number for rates quoted as (2*pi)(MHz).

Hamiltonians are returned divided by hbar, i.e. as angular-frequency
matrices over the basis of :mod:`photongun.basis`.

The four-level entangler couples the excited state resonantly to |g-> and
|g+> through the left/right polarized cavity modes (coupling g for both)
and to |g1> through the classical drive Omega(t):

    H = g (a_L s_{e,g-} + a_L+ s_{g-,e} + a_R s_{e,g+} + a_R+ s_{g+,e})
        + Omega(t)/2 (s_{g1,e} + s_{e,g1})

The three-level Raman model lives in the frame rotating with the drive and
cavity: |g1,n> at zero energy, |e,n> at the pump detuning Delta, |g2,n> at
the two-photon (Raman differential) detuning delta, with the same drive
term and cavity coupling g (a s_{e,g2} + h.c.).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .basis import (
    EFFECTIVE_TWO_LEVEL,
    FOUR_LEVEL,
    LEVELS,
    MODEL_KINDS,
    THREE_LEVEL_RAMAN,
    Basis,
    annihilation_operator,
    atomic_projector,
    build_basis,
    number_operator,
)
from .errors import ConfigError

#: MHz -> rad/ns
RAD_NS_PER_MHZ = 2.0 * math.pi * 1e-3

PULSE_SHAPES = ("constant", "sin2", "ramp-on")


@dataclass(frozen=True)
class Pulse:
    """Classical drive envelope Omega(t) >= 0.

    shape:
        ``constant``  Omega0 inside [t_on, t_on + t0] (t0 may be inf)
        ``sin2``      Omega0 sin^2(pi (t - t_on) / t0) inside the window
        ``ramp-on``   Omega0 sin^2(pi (t - t_on) / (2 t0)) during the ramp,
                      then held at Omega0 (counter-intuitive turn-on against
                      the always-on cavity coupling)
    omega0: peak amplitude, rad/ns.  t0: duration / ramp time, ns.
    """

    shape: str
    omega0: float
    t0: float
    t_on: float = 0.0

    def __post_init__(self):
        if self.shape not in PULSE_SHAPES:
            raise ConfigError(f"unknown pulse shape {self.shape!r}; expected {PULSE_SHAPES}")
        if not self.omega0 >= 0.0:
            raise ConfigError(f"pulse omega0 must be >= 0, got {self.omega0!r}")
        if not self.t0 > 0.0:
            raise ConfigError(f"pulse t0 must be > 0, got {self.t0!r}")
        if math.isinf(self.t0) and self.shape != "constant":
            raise ConfigError(f"infinite t0 only makes sense for a constant pulse")
        if not math.isfinite(self.t_on):
            raise ConfigError(f"pulse t_on must be finite, got {self.t_on!r}")

    def amplitude(self, t):
        """Omega(t) in rad/ns; accepts scalars or arrays."""
        t = np.asarray(t, dtype=float)
        tau = t - self.t_on
        if self.shape == "constant":
            if math.isinf(self.t0):
                inside = tau >= 0.0
            else:
                inside = (tau >= 0.0) & (tau <= self.t0)
            out = np.where(inside, self.omega0, 0.0)
        elif self.shape == "sin2":
            inside = (tau >= 0.0) & (tau <= self.t0)
            phase = np.pi * np.clip(tau, 0.0, self.t0) / self.t0
            out = np.where(inside, self.omega0 * np.sin(phase) ** 2, 0.0)
        else:  # ramp-on
            ramp = (tau >= 0.0) & (tau < self.t0)
            phase = np.pi * np.clip(tau, 0.0, self.t0) / (2.0 * self.t0)
            out = np.where(tau >= self.t0, self.omega0, 0.0)
            out = np.where(ramp, self.omega0 * np.sin(phase) ** 2, out)
        return out if out.ndim else float(out)

    @property
    def end_time(self) -> float:
        """Time after which the envelope stops changing."""
        return self.t_on + self.t0

    def discontinuities(self) -> tuple[tuple[float, float, float], ...]:
        """(time, left limit, right limit) of every envelope jump.

        Only the truncated constant shape jumps; integrators align their
        stage samples to these so each step sees a single drive segment.
        """
        if self.shape != "constant" or self.omega0 == 0.0:
            return ()
        jumps = [(self.t_on, 0.0, self.omega0)]
        if math.isfinite(self.t0):
            jumps.append((self.t_on + self.t0, self.omega0, 0.0))
        return tuple(jumps)


def _default_beta(kind: str) -> tuple[float, ...]:
    if kind == FOUR_LEVEL:
        return (1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0)
    if kind == THREE_LEVEL_RAMAN:
        return (0.5, 0.5)
    return ()


@dataclass(frozen=True)
class ModelConfig:
    """Validated physical parameter set (all rates rad/ns, times ns).

    beta lists the spontaneous branching ratios from |e> into the ground
    levels, ordered as the model's ground levels: (g1, g-, g+) for the
    four-level model, (g1, g2) for the Raman model.  delta is the pump
    detuning and delta_raman the two-photon detuning; both are only
    meaningful away from the resonant four-level model.
    """

    kind: str
    g: float
    kappa: float
    gamma: float
    pulse: Pulse
    beta: tuple[float, ...] | None = None
    delta: float = 0.0
    delta_raman: float = 0.0
    n_max: int = 1

    def __post_init__(self):
        if self.kind not in MODEL_KINDS:
            raise ConfigError(f"unknown model kind {self.kind!r}")
        # zero rates are allowed so lossless / undriven corners stay testable;
        # the file interface in runconfig.py is stricter
        for name in ("g", "kappa", "gamma"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value >= 0.0):
                raise ConfigError(f"{name} must be finite and >= 0, got {value!r}")
        if not isinstance(self.n_max, int) or self.n_max < 1:
            raise ConfigError(f"n_max must be an integer >= 1, got {self.n_max!r}")
        beta = self.beta if self.beta is not None else _default_beta(self.kind)
        object.__setattr__(self, "beta", tuple(float(b) for b in beta))
        if self.kind != EFFECTIVE_TWO_LEVEL:
            expected = len(LEVELS[self.kind]) - 1
            if len(self.beta) != expected:
                raise ConfigError(
                    f"{self.kind} needs {expected} branching ratios, got {len(self.beta)}"
                )
            if any(b < 0.0 for b in self.beta):
                raise ConfigError(f"branching ratios must be >= 0, got {self.beta}")
            if abs(sum(self.beta) - 1.0) > 1e-12:
                raise ConfigError(f"branching ratios must sum to 1, got sum={sum(self.beta)!r}")
        if self.kind == FOUR_LEVEL and (self.delta != 0.0 or self.delta_raman != 0.0):
            raise ConfigError("the four-level model is resonant; delta terms are undefined")
        if self.kind == EFFECTIVE_TWO_LEVEL and self.delta == 0.0:
            raise ConfigError("the reduced two-level model needs a nonzero pump detuning")

    @property
    def ground_levels(self) -> tuple[str, ...]:
        return tuple(lev for lev in LEVELS[self.kind] if lev != "e")

    def with_pulse(self, **kwargs) -> "ModelConfig":
        return replace(self, pulse=replace(self.pulse, **kwargs))

    def make_basis(self) -> Basis:
        return build_basis(self.kind, self.n_max)

    def max_rate(self) -> float:
        """Largest of (g, kappa, gamma, Omega0): the step-size guard scale."""
        return max(self.g, self.kappa, self.gamma, self.pulse.omega0)

    def detuning_scale(self) -> float:
        """Largest detuning frequency entering the rotating-frame phases."""
        if self.kind == THREE_LEVEL_RAMAN:
            return max(abs(self.delta), abs(self.delta_raman))
        return 0.0

    def stiffest_scale(self) -> float:
        """Largest dynamical frequency, detunings included."""
        return max(self.max_rate(), self.detuning_scale())


def _require_matching(config: ModelConfig, basis: Basis) -> None:
    if basis.kind != config.kind or basis.n_max != config.n_max:
        raise ValueError(
            f"basis ({basis.kind}, n_max={basis.n_max}) does not match "
            f"config ({config.kind}, n_max={config.n_max})"
        )


def drive_operator(config: ModelConfig, basis: Basis) -> np.ndarray:
    """Hermitian drive structure: H_drive = (s_{g1,e} + s_{e,g1}) / 2.

    The time-dependent Hamiltonian is H(t) = H_static + Omega(t) * H_drive.
    """
    _require_matching(config, basis)
    if config.kind == EFFECTIVE_TWO_LEVEL:
        raise ValueError("the reduced model has no bare drive operator")
    return 0.5 * (atomic_projector(basis, "g1", "e") + atomic_projector(basis, "e", "g1"))


def static_hamiltonian(config: ModelConfig, basis: Basis) -> np.ndarray:
    """Drive-independent coherent part (couplings to the cavity, detunings)."""
    _require_matching(config, basis)
    g = config.g
    if config.kind == FOUR_LEVEL:
        a_l = annihilation_operator(basis, "L")
        a_r = annihilation_operator(basis, "R")
        h = g * (
            a_l @ atomic_projector(basis, "e", "g-")
            + a_l.conj().T @ atomic_projector(basis, "g-", "e")
            + a_r @ atomic_projector(basis, "e", "g+")
            + a_r.conj().T @ atomic_projector(basis, "g+", "e")
        )
        return h
    if config.kind == THREE_LEVEL_RAMAN:
        a = annihilation_operator(basis, "L")
        h = g * (
            a @ atomic_projector(basis, "e", "g2")
            + a.conj().T @ atomic_projector(basis, "g2", "e")
        )
        h += config.delta * atomic_projector(basis, "e", "e")
        h += config.delta_raman * atomic_projector(basis, "g2", "g2")
        return h
    raise ValueError("use effective_two_level_hamiltonian for the reduced model")


def coherent_hamiltonian(config: ModelConfig, basis: Basis, t: float) -> np.ndarray:
    """Hermitian H(t) (units of angular frequency) at time t."""
    return static_hamiltonian(config, basis) + config.pulse.amplitude(t) * drive_operator(
        config, basis
    )


def decay_diagonal(config: ModelConfig, basis: Basis) -> np.ndarray:
    """Anti-Hermitian damping -i*(kappa*N_tot + gamma/2*s_ee), as a diagonal."""
    _require_matching(config, basis)
    n_tot = sum(basis.photon_numbers(m) for m in basis.modes)
    e_pop = basis.level_indicator("e") if "e" in basis.levels else 0.0
    return -1j * (config.kappa * n_tot + 0.5 * config.gamma * e_pop)


def conditional_hamiltonian(config: ModelConfig, basis: Basis, t: float) -> np.ndarray:
    """Non-Hermitian generator of the no-jump dynamics.

    For the full models this is H(t) - i kappa (N_L + N_R) - i gamma/2 s_ee;
    its Hermitian part equals :func:`coherent_hamiltonian` and its
    anti-Hermitian part is negative semidefinite, so the norm only decays.
    """
    if config.kind == EFFECTIVE_TWO_LEVEL:
        return effective_two_level_hamiltonian(config, basis, t)
    return coherent_hamiltonian(config, basis, t) + np.diag(decay_diagonal(config, basis))


def raman_effective_rates(omega: float, g: float, delta: float, gamma: float) -> tuple[float, float]:
    """Adiabatic elimination of the far-detuned excited state.

    Returns (Omega_eff, gamma_eff) = (omega*g / (2*delta),
    gamma * omega^2 / (4*delta^2)).  Rejects delta = 0 where the
    perturbative reduction is invalid.
    """
    if delta == 0.0:
        raise ConfigError("raman reduction needs a nonzero pump detuning")
    omega_eff = 0.5 * omega * g / delta
    gamma_eff = 0.25 * (omega / delta) ** 2 * gamma
    return omega_eff, gamma_eff


def stark_compensation_delta(omega0: float, g: float, delta: float) -> float:
    """Two-photon detuning that cancels the differential ac Stark shift.

    The drive shifts |g1,0> by -omega0^2/(4*delta) and the cavity coupling
    shifts |g2,1> by -g^2/delta; setting delta_raman = (g^2 - omega0^2/4)/delta
    restores the two-photon resonance at second order.
    """
    if delta == 0.0:
        raise ConfigError("stark compensation needs a nonzero pump detuning")
    return (g * g - 0.25 * omega0 * omega0) / delta


def effective_two_level_hamiltonian(
    config: ModelConfig, basis: Basis, t: float = 0.0
) -> np.ndarray:
    """Non-Hermitian 2x2 generator on {|g1,0>, |g2,1>}.

    Off-diagonal Omega_eff(t), diagonal -i*gamma_eff(t)/2 on |g1,0> and
    -i*kappa on |g2,1>.
    """
    _require_matching(config, basis)
    if config.kind != EFFECTIVE_TWO_LEVEL:
        raise ValueError(f"wrong kind {config.kind!r} for the reduced model")
    omega = config.pulse.amplitude(t)
    omega_eff, gamma_eff = raman_effective_rates(omega, config.g, config.delta, config.gamma)
    return np.array(
        [[-0.5j * gamma_eff, omega_eff], [omega_eff, -1j * config.kappa]], dtype=complex
    )


def collapse_channels(config: ModelConfig, basis: Basis):
    """Jump channels of the master equation as (rate, operator) pairs.

    Cavity: rate 2*kappa with operator a_mode (photon population decays at
    2*kappa).  Atom: rate gamma*beta_mu with operator s_{mu,e} for each
    ground level mu.
    """
    _require_matching(config, basis)
    if config.kind == EFFECTIVE_TWO_LEVEL:
        raise ValueError("the master equation is defined for the full atomic models")
    channels = [(2.0 * config.kappa, annihilation_operator(basis, m)) for m in basis.modes]
    for mu, b in zip(config.ground_levels, config.beta):
        if b > 0.0:
            channels.append((config.gamma * b, atomic_projector(basis, mu, "e")))
    return channels


def lindblad_rhs(config: ModelConfig, basis: Basis, rho: np.ndarray, t: float) -> np.ndarray:
    """d(rho)/dt of the master equation at time t.

    -i[H, rho] + kappa * sum_modes (2 a rho a+ - {a+a, rho})
    + gamma/2 * sum_mu beta_mu (2 s_{mu,e} rho s_{e,mu}) - gamma/2 {s_ee, rho}

    Trace-free and Hermiticity-preserving by construction.
    """
    _require_matching(config, basis)
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (basis.dim, basis.dim):
        raise ValueError(f"rho shape {rho.shape} does not match basis dim {basis.dim}")
    h = coherent_hamiltonian(config, basis, t)
    out = -1j * (h @ rho - rho @ h)
    for mode in basis.modes:
        a = annihilation_operator(basis, mode)
        n = a.conj().T @ a
        out += config.kappa * (2.0 * (a @ rho @ a.conj().T) - n @ rho - rho @ n)
    s_ee = atomic_projector(basis, "e", "e")
    for mu, b in zip(config.ground_levels, config.beta):
        if b > 0.0:
            s = atomic_projector(basis, mu, "e")
            out += config.gamma * b * (s @ rho @ s.conj().T)
    out -= 0.5 * config.gamma * (s_ee @ rho + rho @ s_ee)
    return out


@dataclass(frozen=True)
class RegimeReport:
    """Operating-regime diagnostics for a parameter set.

    cooperativity C = g^2/(kappa*gamma); critical_atom_number is its
    inverse.  The bad-cavity condition kappa >> g^2/kappa >> gamma is
    summarized by the two margin ratios; raman_window checks whether
    Omega0/Delta sits inside (kappa/g, g/gamma).
    """

    cooperativity: float
    critical_atom_number: float
    margin_cavity: float  # kappa / (g^2/kappa)
    margin_emission: float  # (g^2/kappa) / gamma
    bad_cavity_ok: bool
    omega_over_delta: float | None
    raman_window: tuple[float, float]
    raman_window_ok: bool | None


def _ratio(num: float, den: float) -> float:
    if den != 0.0:
        return num / den
    return math.inf if num > 0.0 else math.nan


def regime_report(config: ModelConfig) -> RegimeReport:
    g, kappa, gamma = config.g, config.kappa, config.gamma
    c = _ratio(g * g, kappa * gamma)
    g2_over_kappa = _ratio(g * g, kappa)
    margin_cavity = _ratio(kappa, g2_over_kappa)
    margin_emission = _ratio(g2_over_kappa, gamma)
    window = (_ratio(kappa, g), _ratio(g, gamma))
    if config.kind != FOUR_LEVEL and config.delta != 0.0:
        ratio = config.pulse.omega0 / config.delta
        window_ok = window[0] < ratio < window[1]
    else:
        ratio = None
        window_ok = None
    return RegimeReport(
        cooperativity=c,
        critical_atom_number=_ratio(1.0, c) if math.isfinite(c) else 0.0,
        margin_cavity=margin_cavity,
        margin_emission=margin_emission,
        bad_cavity_ok=margin_cavity > 1.0 and margin_emission > 1.0,
        omega_over_delta=ratio,
        raman_window=window,
        raman_window_ok=window_ok,
    )
