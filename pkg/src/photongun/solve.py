"""Fixed-step RK4 propagation of the conditional wavefunction and the
density matrix, plus the closed-form adiabatic amplitudes.

The conditional (no-jump) state evolves under the non-Hermitian generator
of :func:`photongun.model.conditional_hamiltonian`; its squared norm is the
probability that no decay event has occurred.  Emission and spontaneous
loss probabilities are accumulated by the trapezoid rule on the same time
grid as the integrator:

    P_mode(t) = 2*kappa * integral <a+ a>(t') dt'
    P_spont(t) = gamma * integral <s_ee>(t') dt'

so that ||psi(t)||^2 + sum_modes P_mode(t) + P_spont(t) = 1 up to
integration error.

Both integrators use classic RK4 with a fixed step.  Over stretches where
the drive envelope is constant the one-step RK4 map of the linear system
is itself a constant matrix (the quartic Taylor truncation of the
exponential), so it is built once and applied as a matrix-vector product;
this is algebraically identical to stepping through the four stages.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .basis import EFFECTIVE_TWO_LEVEL, FOUR_LEVEL, Basis, basis_vector
from .errors import ConfigError, IntegrationError
from .model import (
    ModelConfig,
    decay_diagonal,
    drive_operator,
    static_hamiltonian,
)

#: dt * (fastest configured rate) must not exceed this without an override
STEP_GUARD = 0.05
#: default steps run finer than the guard so the trapezoid bookkeeping
#: residual stays well below 1e-6 even mid-pulse; populations oscillate at
#: twice the generalized Rabi frequency, hence the small factor
DEFAULT_DT_FACTOR = 0.01
#: above this detuning-to-rate ratio the fast phase carries only an
#: (V/Delta)^2-suppressed population wiggle, so phase accuracy suffices
DISPERSIVE_RATIO = 4.0

_CHUNK_VALUES = 1 << 21  # complex values buffered per chunk of conditional steps


@dataclass(frozen=True)
class IntegrationSpec:
    """Fixed-step integration plan.

    dt and t_final in ns.  record_stride thins the stored samples; loss
    integrals are always accumulated at full step resolution.  Setting
    allow_coarse_dt overrides the step-size guard dt <= 0.05/max(g, kappa,
    gamma, Omega0); convergence_check is then the way to certify results.
    """

    dt: float
    t_final: float
    method: str = "rk4-fixed"
    record_stride: int = 1
    allow_coarse_dt: bool = False

    def __post_init__(self):
        if not (math.isfinite(self.dt) and self.dt > 0.0):
            raise ConfigError(f"dt must be finite and > 0, got {self.dt!r}")
        if not (math.isfinite(self.t_final) and self.t_final > 0.0):
            raise ConfigError(f"t_final must be finite and > 0, got {self.t_final!r}")
        if self.method != "rk4-fixed":
            raise ConfigError(f"unknown method {self.method!r}; only 'rk4-fixed' is provided")
        if not isinstance(self.record_stride, int) or self.record_stride < 1:
            raise ConfigError(f"record_stride must be an integer >= 1, got {self.record_stride!r}")

    @property
    def n_steps(self) -> int:
        return max(1, int(round(self.t_final / self.dt)))

    @classmethod
    def suggested(
        cls,
        config: ModelConfig,
        t_final: float | None = None,
        record_stride: int | None = None,
    ) -> "IntegrationSpec":
        """Default step: 0.01 / (largest rate) keeps the trapezoid loss
        bookkeeping accurate; dispersively large detunings only require
        phase accuracy (0.05 / detuning), while comparable ones join the
        oscillation frequency and tighten the rate criterion.  t_final
        defaults to 3 * pulse duration for pulsed configs."""
        rate = config.max_rate()
        detuning = config.detuning_scale()
        if rate == 0.0 and detuning == 0.0:
            raise ConfigError("all rates are zero; give dt explicitly")
        if detuning > DISPERSIVE_RATIO * rate:
            dt = STEP_GUARD / detuning
            if rate > 0.0:
                dt = min(dt, DEFAULT_DT_FACTOR / rate)
        else:
            dt = DEFAULT_DT_FACTOR / max(rate, detuning)
        if t_final is None:
            if math.isinf(config.pulse.t0):
                raise ConfigError("t_final is required for an untruncated constant drive")
            t_final = config.pulse.t_on + 3.0 * config.pulse.t0
        if record_stride is None:
            record_stride = max(1, int(math.ceil(t_final / dt / 4000.0)))
        return cls(dt=dt, t_final=t_final, record_stride=record_stride)


@dataclass(frozen=True)
class Trajectory:
    """Recorded time evolution plus cumulative loss bookkeeping.

    states has shape (n_recorded, dim) for conditional runs and
    (n_recorded, dim, dim) for master runs.  norm_sq is ||psi||^2 or
    trace(rho).  emission maps mode -> cumulative detection probability;
    spontaneous is the accumulated atomic decay probability.
    """

    solver: str
    config: ModelConfig
    basis: Basis
    spec: IntegrationSpec
    times: np.ndarray
    states: np.ndarray
    norm_sq: np.ndarray
    emission: dict[str, np.ndarray]
    spontaneous: np.ndarray
    flags: tuple[str, ...] = ()

    @property
    def t_final(self) -> float:
        return float(self.times[-1])

    @property
    def final_state(self) -> np.ndarray:
        return self.states[-1]

    @property
    def final_norm_sq(self) -> float:
        return float(self.norm_sq[-1])

    def total_emission(self) -> np.ndarray:
        """Summed cumulative detection probability over all modes."""
        out = np.zeros_like(self.spontaneous)
        for arr in self.emission.values():
            out = out + arr
        return out

    def amplitude(self, level: str, n_l: int = 0, n_r: int = 0) -> np.ndarray:
        """Recorded amplitude time series of one basis state (conditional)."""
        if self.solver != "conditional":
            raise ValueError("amplitudes are defined for conditional trajectories")
        return self.states[:, self.basis.index_of(level, n_l, n_r)]

    def population(self, level: str, n_l: int = 0, n_r: int = 0) -> np.ndarray:
        """Recorded population of one basis state, either solver."""
        idx = self.basis.index_of(level, n_l, n_r)
        if self.solver == "conditional":
            return np.abs(self.states[:, idx]) ** 2
        return self.states[:, idx, idx].real


def _check_guard(config: ModelConfig, spec: IntegrationSpec) -> None:
    rate = config.max_rate()
    if rate == 0.0:
        return
    dt_max = STEP_GUARD / rate
    if spec.dt > dt_max * (1.0 + 1e-12) and not spec.allow_coarse_dt:
        raise IntegrationError(
            f"dt={spec.dt:g} ns exceeds the step guard {dt_max:g} ns "
            f"(0.05/max rate); pass allow_coarse_dt=True to override"
        )


def _rk4_step_matrix(a: np.ndarray, dt: float) -> np.ndarray:
    """One-step RK4 map for the autonomous linear system psi' = a psi."""
    x = dt * a
    eye = np.eye(a.shape[0], dtype=complex)
    m = eye / 6.0 + x / 24.0
    m = eye / 2.0 + x @ m
    m = eye + x @ m
    return eye + x @ m


def _stage_samples(pulse, dt: float, n_steps: int):
    """Drive samples for the RK4 stages of every step.

    Returns (w_half, w0, wm, w1): the half-grid samples plus per-step stage
    values.  Where an envelope jump lands exactly on the grid, the stage
    samples take the one-sided limits so each step sees a single segment of
    a piecewise drive instead of straddling the jump.
    """
    w_half = np.asarray(pulse.amplitude(np.arange(2 * n_steps + 1) * (0.5 * dt)))
    w0 = w_half[0 : 2 * n_steps : 2].copy()
    wm = w_half[1 : 2 * n_steps : 2]
    w1 = w_half[2 : 2 * n_steps + 2 : 2].copy()
    for t_jump, left, right in pulse.discontinuities():
        steps = t_jump / dt
        k = int(round(steps))
        if abs(steps - k) > 1e-9 * max(1.0, abs(steps)):
            continue  # off-grid jump: nothing exact to do
        if 1 <= k <= n_steps:
            w1[k - 1] = left
        if 0 <= k <= n_steps - 1:
            w0[k] = right
    return w_half, w0, wm, w1


def _generator_parts(config: ModelConfig, basis: Basis):
    """A(t) with psi' = A(t) psi as A0 + w A1 (+ w^2 A2), w = Omega(t)."""
    if config.kind == EFFECTIVE_TWO_LEVEL:
        a0 = np.array([[0.0, 0.0], [0.0, -config.kappa]], dtype=complex)
        coupling = config.g / (2.0 * config.delta)
        a1 = -1j * coupling * np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
        a2 = np.array(
            [[-config.gamma / (8.0 * config.delta**2), 0.0], [0.0, 0.0]], dtype=complex
        )
        return a0, a1, a2
    h_static = static_hamiltonian(config, basis) + np.diag(decay_diagonal(config, basis))
    return -1j * h_static, -1j * drive_operator(config, basis), None


def _conditional_integrands(config: ModelConfig, basis: Basis):
    """Weight vectors for the loss integrands evaluated on |psi_i|^2."""
    emission = {
        mode: 2.0 * config.kappa * basis.photon_numbers(mode) for mode in basis.modes
    }
    if config.kind == EFFECTIVE_TWO_LEVEL:
        # gamma_eff(t) |a_g1|^2 with gamma_eff = gamma * Omega(t)^2 / (4 Delta^2)
        coeff = config.gamma / (4.0 * config.delta**2)
        g1_weight = np.array([1.0, 0.0])

        def spont(probs: np.ndarray, w: np.ndarray) -> np.ndarray:
            return coeff * w**2 * (probs @ g1_weight)

    else:
        e_weight = config.gamma * basis.level_indicator("e")

        def spont(probs: np.ndarray, w: np.ndarray) -> np.ndarray:
            return probs @ e_weight

    return emission, spont


def integrate_conditional(
    config: ModelConfig,
    spec: IntegrationSpec,
    psi0: np.ndarray | None = None,
) -> Trajectory:
    """Propagate the no-jump wavefunction under the conditional generator.

    psi0 defaults to |g1, 0, 0>.  The returned trajectory records every
    record_stride-th step (the final step always included) and carries the
    cumulative per-mode detection and spontaneous-decay probabilities.
    """
    basis = config.make_basis()
    if psi0 is None:
        psi = basis_vector(basis, "g1", 0, 0)
    else:
        psi = np.asarray(psi0, dtype=complex).copy()
        if psi.shape != (basis.dim,):
            raise ValueError(f"psi0 shape {psi.shape} does not match basis dim {basis.dim}")
        norm = np.vdot(psi, psi).real
        if abs(norm - 1.0) > 1e-6:
            raise ValueError(f"psi0 must be normalized, got ||psi0||^2 = {norm!r}")
    _check_guard(config, spec)

    dt = spec.dt
    n_steps = spec.n_steps
    a0, a1, a2 = _generator_parts(config, basis)
    emission_w, spont_eval = _conditional_integrands(config, basis)

    w_half, w0_arr, wm_arr, w1_arr = _stage_samples(config.pulse, dt, n_steps)
    rec = np.arange(0, n_steps + 1, spec.record_stride)
    if rec[-1] != n_steps:
        rec = np.append(rec, n_steps)

    dim = basis.dim
    rec_states = np.empty((rec.size, dim), dtype=complex)
    rec_norm = np.empty(rec.size)
    rec_emission = {m: np.empty(rec.size) for m in emission_w}
    rec_spont = np.empty(rec.size)
    flags: list[str] = []
    step_cache: dict[float, dict] = {}

    def step_entry(w: float) -> dict:
        entry = step_cache.get(w)
        if entry is None:
            a = a0 + w * a1 if a2 is None else a0 + w * a1 + (w * w) * a2
            entry = {"matrix": _rk4_step_matrix(a, dt), "eig": None}
            step_cache[w] = entry
        return entry

    chunk_steps = max(1, _CHUNK_VALUES // dim)

    def propagate_const(w: float, m: int, psi: np.ndarray) -> np.ndarray:
        """States after steps 1..m of the constant-envelope RK4 map.

        Long stretches apply the one-step matrix through its
        eigendecomposition (vectorized powers); short ones, or matrices
        whose eigenbasis is ill-conditioned, step explicitly.
        """
        entry = step_entry(w)
        matrix = entry["matrix"]
        if m >= 96 and entry["eig"] is not False:
            if entry["eig"] is None:
                try:
                    mu, vec = np.linalg.eig(matrix)
                    residual = np.max(
                        np.abs((vec * mu) @ np.linalg.inv(vec) - matrix)
                    )
                    scale = max(np.max(np.abs(matrix)), 1.0)
                    entry["eig"] = (mu, vec) if residual <= 1e-12 * scale else False
                except np.linalg.LinAlgError:
                    entry["eig"] = False
            if entry["eig"] is not False:
                mu, vec = entry["eig"]
                coeff = np.linalg.solve(vec, psi)
                powers = np.cumprod(np.broadcast_to(mu[:, None], (dim, m)), axis=1)
                return np.ascontiguousarray((vec @ (powers * coeff[:, None])).T)
        out = np.empty((m, dim), dtype=complex)
        for j in range(m):
            psi = matrix @ psi
            out[j] = psi
        return out

    def propagate_var(k: int, m: int, psi: np.ndarray) -> np.ndarray:
        """Literal four-stage RK4 over steps k..k+m-1 of a varying drive."""
        out = np.empty((m, dim), dtype=complex)
        half = 0.5 * dt
        sixth = dt / 6.0
        for j in range(m):
            w0 = w0_arr[k + j]
            wm = wm_arr[k + j]
            w1 = w1_arr[k + j]
            if a2 is None:
                b0 = a0 + w0 * a1
                bm = a0 + wm * a1
                b1 = a0 + w1 * a1
            else:
                b0 = a0 + w0 * a1 + (w0 * w0) * a2
                bm = a0 + wm * a1 + (wm * wm) * a2
                b1 = a0 + w1 * a1 + (w1 * w1) * a2
            k1 = b0 @ psi
            k2 = bm @ (psi + half * k1)
            k3 = bm @ (psi + half * k2)
            k4 = b1 @ (psi + dt * k3)
            psi = psi + sixth * (k1 + 2.0 * (k2 + k3) + k4)
            out[j] = psi
        return out

    def step_is_const(k: int) -> bool:
        return w0_arr[k] == wm_arr[k] == w1_arr[k]

    def blocks(psi: np.ndarray):
        """Yield (start_step, states_after_each_step) in bounded blocks."""
        k = 0
        while k < n_steps:
            const = step_is_const(k)
            j = k + 1
            if const:
                w = w0_arr[k]
                while j < n_steps and step_is_const(j) and w0_arr[j] == w:
                    j += 1
            else:
                while j < n_steps and not step_is_const(j):
                    j += 1
            while k < j:
                m = min(chunk_steps, j - k)
                if const:
                    block = propagate_const(w0_arr[k], m, psi)
                else:
                    block = propagate_var(k, m, psi)
                psi = block[-1]
                yield k, block
                k += m

    cum = {m: 0.0 for m in emission_w}
    cum_spont = 0.0
    rec_pos = 0
    boundary = psi

    if rec[0] == 0:
        rec_states[0] = psi
        rec_norm[0] = float(np.vdot(psi, psi).real)
        for m in emission_w:
            rec_emission[m][0] = 0.0
        rec_spont[0] = 0.0
        rec_pos = 1

    # overflow in an unstable run is reported per block, not as a warning
    with np.errstate(over="ignore", invalid="ignore"):
        for k_start, block in blocks(psi):
            n_here = block.shape[0]
            chunk = np.concatenate((boundary[None, :], block))
            if not np.all(np.isfinite(chunk)):
                bad = int(np.argmin(np.all(np.isfinite(chunk), axis=1)))
                raise IntegrationError(
                    f"non-finite state at t ~ {(k_start + bad) * dt:g} ns; "
                    f"reduce dt (guard overridden?) or shorten the horizon"
                )
            probs = np.abs(chunk) ** 2
            norms = probs.sum(axis=1)
            if np.any(np.sqrt(norms[1:]) > np.sqrt(norms[:-1]) + 1e-12):
                flags.append("norm-increase")
            if norms[-1] > 1.0 + 1e-6:
                raise IntegrationError(
                    f"norm grew to {norms[-1]:g}; the step size is unstable for this model"
                )

            w_full = w_half[2 * k_start : 2 * (k_start + n_here) + 1 : 2]
            integrands = {m: probs @ emission_w[m] for m in emission_w}
            integrands["spont"] = spont_eval(probs, w_full)
            cums = {}
            for name, f in integrands.items():
                local = np.concatenate(([0.0], np.cumsum(0.5 * dt * (f[1:] + f[:-1]))))
                base = cum_spont if name == "spont" else cum[name]
                cums[name] = base + local
                if name == "spont":
                    cum_spont = float(cums[name][-1])
                else:
                    cum[name] = float(cums[name][-1])

            while rec_pos < rec.size and rec[rec_pos] <= k_start + n_here:
                local_idx = rec[rec_pos] - k_start
                rec_states[rec_pos] = chunk[local_idx]
                rec_norm[rec_pos] = norms[local_idx]
                for m in emission_w:
                    rec_emission[m][rec_pos] = cums[m][local_idx]
                rec_spont[rec_pos] = cums["spont"][local_idx]
                rec_pos += 1

            boundary = block[-1]

    flags = sorted(set(flags))
    return Trajectory(
        solver="conditional",
        config=config,
        basis=basis,
        spec=spec,
        times=rec * dt,
        states=rec_states,
        norm_sq=rec_norm,
        emission=rec_emission,
        spontaneous=rec_spont,
        flags=tuple(flags),
    )


def integrate_master(
    config: ModelConfig,
    spec: IntegrationSpec,
    rho0: np.ndarray | None = None,
) -> Trajectory:
    """Propagate the density matrix under the full master equation.

    Records trace, per-mode cumulative detection probability (Eq. of the
    photon flux, 2*kappa * integral of <a+ a>), and the accumulated
    spontaneous-emission probability gamma * integral of <s_ee> (which,
    unlike the conditional one, counts repeated decays).
    """
    from .model import collapse_channels  # local import avoids cycle at module load

    if config.kind == EFFECTIVE_TWO_LEVEL:
        raise ValueError("the master equation is defined for the full atomic models")
    basis = config.make_basis()
    dim = basis.dim
    if rho0 is None:
        psi = basis_vector(basis, "g1", 0, 0)
        rho = np.outer(psi, psi.conj())
    else:
        rho = np.asarray(rho0, dtype=complex).copy()
        if rho.shape != (dim, dim):
            raise ValueError(f"rho0 shape {rho.shape} does not match basis dim {dim}")
        if np.max(np.abs(rho - rho.conj().T)) > 1e-10:
            raise ValueError("rho0 must be Hermitian")
        if abs(np.trace(rho).real - 1.0) > 1e-8:
            raise ValueError(f"rho0 must have unit trace, got {np.trace(rho).real!r}")
        if np.linalg.eigvalsh(rho).min() < -1e-8:
            raise ValueError("rho0 must be positive semidefinite")
    _check_guard(config, spec)

    dt = spec.dt
    n_steps = spec.n_steps
    h_static = static_hamiltonian(config, basis)
    h_drive = drive_operator(config, basis)
    channels = collapse_channels(config, basis)
    # anticommutator part is diagonal: kappa * n_tot + gamma/2 * e-indicator
    half_decay = np.zeros(dim)
    for mode in basis.modes:
        half_decay += config.kappa * basis.photon_numbers(mode)
    half_decay += 0.5 * config.gamma * basis.level_indicator("e")

    n_weights = {m: basis.photon_numbers(m) for m in basis.modes}
    e_weight = basis.level_indicator("e")

    def rhs(w: float, r: np.ndarray) -> np.ndarray:
        h = h_static if w == 0.0 else h_static + w * h_drive
        hr = h @ r
        out = -1j * (hr - hr.conj().T)
        for rate, op in channels:
            out += rate * (op @ r @ op.conj().T)
        out -= half_decay[:, None] * r + r * half_decay[None, :]
        return out

    w_half = np.asarray(config.pulse.amplitude(np.arange(2 * n_steps + 1) * (0.5 * dt)))
    rec = np.arange(0, n_steps + 1, spec.record_stride)
    if rec[-1] != n_steps:
        rec = np.append(rec, n_steps)

    rec_states = np.empty((rec.size, dim, dim), dtype=complex)
    rec_trace = np.empty(rec.size)
    rec_emission = {m: np.empty(rec.size) for m in basis.modes}
    rec_spont = np.empty(rec.size)
    flags: set[str] = set()

    def diag_expect(r: np.ndarray, weights: np.ndarray) -> float:
        return float(np.real(np.diag(r)) @ weights)

    cum = {m: 0.0 for m in basis.modes}
    cum_spont = 0.0
    prev_f = {m: 2.0 * config.kappa * diag_expect(rho, n_weights[m]) for m in basis.modes}
    prev_spont = config.gamma * diag_expect(rho, e_weight)

    rec_pos = 0
    if rec[0] == 0:
        rec_states[0] = rho
        rec_trace[0] = np.trace(rho).real
        for m in basis.modes:
            rec_emission[m][0] = 0.0
        rec_spont[0] = 0.0
        rec_pos = 1

    half = 0.5 * dt
    sixth = dt / 6.0
    for k in range(n_steps):
        i = 2 * k
        k1 = rhs(w_half[i], rho)
        k2 = rhs(w_half[i + 1], rho + half * k1)
        k3 = rhs(w_half[i + 1], rho + half * k2)
        k4 = rhs(w_half[i + 2], rho + dt * k3)
        rho = rho + sixth * (k1 + 2.0 * (k2 + k3) + k4)

        for m in basis.modes:
            f = 2.0 * config.kappa * diag_expect(rho, n_weights[m])
            cum[m] += half * (prev_f[m] + f)
            prev_f[m] = f
        f_spont = config.gamma * diag_expect(rho, e_weight)
        cum_spont += half * (prev_spont + f_spont)
        prev_spont = f_spont

        if rec_pos < rec.size and rec[rec_pos] == k + 1:
            if not np.all(np.isfinite(rho)):
                raise IntegrationError(f"non-finite density matrix at t ~ {(k + 1) * dt:g} ns")
            tr = np.trace(rho).real
            if abs(tr - 1.0) > 1e-8:
                flags.add("master-trace")
            if np.max(np.abs(rho - rho.conj().T)) > 1e-10:
                flags.add("master-hermiticity")
            if np.linalg.eigvalsh(rho).min() < -1e-8:
                flags.add("master-positivity")
            rec_states[rec_pos] = rho
            rec_trace[rec_pos] = tr
            for m in basis.modes:
                rec_emission[m][rec_pos] = cum[m]
            rec_spont[rec_pos] = cum_spont
            rec_pos += 1

    return Trajectory(
        solver="master",
        config=config,
        basis=basis,
        spec=spec,
        times=rec * dt,
        states=rec_states,
        norm_sq=rec_trace,
        emission=rec_emission,
        spontaneous=rec_spont,
        flags=tuple(sorted(flags)),
    )


def _drive_squared_integral(pulse, t):
    """Closed-form integral of Omega(t')^2 from 0 to t."""
    tau = np.clip(np.asarray(t, dtype=float) - pulse.t_on, 0.0, None)
    if pulse.shape == "constant":
        if not math.isinf(pulse.t0):
            tau = np.minimum(tau, pulse.t0)
        return pulse.omega0**2 * tau
    if pulse.shape == "sin2":
        tau = np.minimum(tau, pulse.t0)
        t0 = pulse.t0
        return pulse.omega0**2 * (
            3.0 * tau / 8.0
            - t0 * np.sin(2.0 * np.pi * tau / t0) / (4.0 * np.pi)
            + t0 * np.sin(4.0 * np.pi * tau / t0) / (32.0 * np.pi)
        )
    raise ValueError(f"no closed-form drive integral for shape {pulse.shape!r}")


def adiabatic_amplitudes(config: ModelConfig, t):
    """Closed-form amplitudes of the driven four-level entangler when the
    drive is weak, Omega(t) << g^2/kappa.

    Returns (a_g1, a_e, a_gmp) with

        a_g1(t) = exp(-integral(Omega^2)/(2 (4 g^2/kappa + gamma)))
        a_e(t)  = -i Omega(t) a_g1(t) / (4 g^2/kappa + gamma)
        a_gmp(t)= -i (g/kappa) a_e(t)

    where a_gmp is the common amplitude of |g-,1,0> and |g+,0,1>.
    Supports sin2 and constant pulses (those with a closed-form integral).
    """
    if config.kind != FOUR_LEVEL:
        raise ValueError("the adiabatic amplitudes describe the four-level entangler")
    if config.pulse.shape not in ("sin2", "constant"):
        raise ValueError(f"unsupported pulse shape {config.pulse.shape!r}")
    denom = 4.0 * config.g**2 / config.kappa + config.gamma
    integral = _drive_squared_integral(config.pulse, t)
    a_g1 = np.exp(-integral / (2.0 * denom)).astype(complex)
    a_e = -1j * np.asarray(config.pulse.amplitude(t)) / denom * a_g1
    a_gmp = -1j * (config.g / config.kappa) * a_e
    return a_g1, a_e, a_gmp


@dataclass(frozen=True)
class ConvergenceReport:
    """Deviation of final probabilities between dt and dt/2 runs."""

    dt: float
    deviations: dict
    max_deviation: float
    tolerance: float
    converged: bool


def convergence_check(
    config: ModelConfig,
    spec: IntegrationSpec,
    solver: str = "conditional",
    tolerance: float = 1e-6,
) -> ConvergenceReport:
    """Rerun at dt/2 and report the drift of the final probabilities.

    Certifies a dt choice: converged=False flags a step size that the
    acceptance machinery must not trust.
    """
    if solver == "conditional":
        run = integrate_conditional
    elif solver == "master":
        run = integrate_master
    else:
        raise ValueError(f"unknown solver {solver!r}")
    coarse = run(config, spec)
    fine = run(config, replace(spec, dt=spec.dt / 2.0))
    deviations = {"norm_sq": abs(coarse.final_norm_sq - fine.final_norm_sq)}
    for mode in coarse.emission:
        deviations[f"P_{mode}"] = abs(
            float(coarse.emission[mode][-1]) - float(fine.emission[mode][-1])
        )
    deviations["P_spont"] = abs(float(coarse.spontaneous[-1]) - float(fine.spontaneous[-1]))
    max_dev = max(deviations.values())
    return ConvergenceReport(
        dt=spec.dt,
        deviations=deviations,
        max_deviation=max_dev,
        tolerance=tolerance,
        converged=max_dev <= tolerance,
    )
