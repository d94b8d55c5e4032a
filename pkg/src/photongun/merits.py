"""Figures of merit computed from trajectories.

All probabilities are dimensionless in [0, 1].  Conditional quantities are
evaluated on the decaying-norm state: ``success_rate`` renormalizes by the
surviving norm (probability conditioned on no decay event from the atom or
the cavity), ``bell_fidelity`` conditions on the photon-emitting subspace.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .basis import EFFECTIVE_TWO_LEVEL, FOUR_LEVEL, Basis, BasisState
from .errors import UnreliableResultError, UnsaturatedHorizonError
from .solve import Trajectory

#: conditional bookkeeping residual above which a run is untrustworthy
BOOKKEEPING_TOLERANCE = 1e-4
#: master trace residual threshold
TRACE_TOLERANCE = 1e-8
#: emission_rate demands the norm to have decayed below this
SATURATION_NORM = 0.01


def photon_detection_probability(traj: Trajectory, mode: str, t: float) -> float:
    """Cumulative probability of having detected a photon of one mode by t.

    2*kappa * integral_0^t <a+ a>(t') dt', accumulated by the solver on the
    integration grid; linear interpolation between recorded samples.
    """
    if mode not in traj.emission:
        raise ValueError(f"mode {mode!r} not tracked by this trajectory")
    times = traj.times
    if t < times[0] - 1e-9 or t > times[-1] + 1e-9:
        raise ValueError(f"t={t:g} ns outside the trajectory horizon [0, {times[-1]:g}]")
    return float(np.interp(t, times, traj.emission[mode]))


def bell_fidelity(psi: np.ndarray, basis: Basis) -> float:
    """Overlap with (|g-,1,0> + |g+,0,1>)/sqrt(2), conditioned on emission.

    F = |a_{g-} + a_{g+}|^2 / (2 (|a_{g-}|^2 + |a_{g+}|^2)); invariant under
    global phase and scale of psi.
    """
    if basis.kind != FOUR_LEVEL:
        raise ValueError("the entangled target state lives in the four-level model")
    a_m = psi[basis.index_of("g-", 1, 0)]
    a_p = psi[basis.index_of("g+", 0, 1)]
    weight = abs(a_m) ** 2 + abs(a_p) ** 2
    total = float(np.vdot(psi, psi).real)
    if weight <= 1e-12 * max(total, 1e-300):
        raise UnreliableResultError("no weight in the emitting subspace; fidelity undefined")
    return float(abs(a_m + a_p) ** 2 / (2.0 * weight))


def transfer_peak_time(traj: Trajectory, target: BasisState) -> float:
    """Recorded time maximizing the raw target-state population."""
    if traj.solver != "conditional":
        raise ValueError("transfer peak search expects a conditional trajectory")
    pops = np.abs(traj.states[:, traj.basis.index(target)]) ** 2
    return float(traj.times[int(np.argmax(pops))])


def success_rate(
    traj: Trajectory, target: BasisState, t_eval: float | None = None
) -> float:
    """Conditional probability of occupying the target state.

    |<target|psi(t)>|^2 / ||psi(t)||^2, i.e. conditioned on no spontaneous
    emission from either the atom or the cavity.  By default t is the time
    maximizing the numerator (the transfer peak).
    """
    if traj.solver != "conditional":
        raise ValueError("success_rate expects a conditional trajectory")
    idx = traj.basis.index(target)
    pops = np.abs(traj.states[:, idx]) ** 2
    if t_eval is None:
        k = int(np.argmax(pops))
    else:
        k = int(np.argmin(np.abs(traj.times - t_eval)))
        dt_grid = traj.times[min(k + 1, traj.times.size - 1)] - traj.times[max(k - 1, 0)]
        if abs(traj.times[k] - t_eval) > max(dt_grid, 1e-9):
            raise ValueError(f"t_eval={t_eval:g} ns is not on the recorded grid")
    norm = traj.norm_sq[k]
    if norm < 1e-12:
        raise UnreliableResultError(
            f"surviving norm {norm:g} at t={traj.times[k]:g} ns is too small to condition on"
        )
    return float(pops[k] / norm)


def emission_rate(traj: Trajectory, require_saturated: bool = True) -> float:
    """Total probability that the run emitted a photon through the cavity.

    2*kappa * integral |a_{g2,1}|^2 dt over the whole horizon, for the
    photon-gun (state-mapping) models.  Together with the spontaneous
    probability this approaches 1 as the surviving norm goes to zero.
    """
    if traj.solver != "conditional":
        raise ValueError("emission_rate expects a conditional trajectory")
    if traj.config.kind == FOUR_LEVEL:
        raise ValueError("emission_rate applies to the single-mode state-mapping models")
    if require_saturated and traj.final_norm_sq > SATURATION_NORM:
        raise UnsaturatedHorizonError(
            f"horizon too short: ||psi||^2 = {traj.final_norm_sq:g} > {SATURATION_NORM:g} "
            f"at t = {traj.t_final:g} ns"
        )
    return float(traj.total_emission()[-1])


@dataclass(frozen=True)
class Bookkeeping:
    """Probability conservation accounting for one trajectory."""

    solver: str
    components: dict
    residual: float
    reliable: bool
    flags: tuple[str, ...]


def probability_bookkeeping(traj: Trajectory) -> Bookkeeping:
    """Check the conservation identity and flag unreliable integrations.

    Conditional: ||psi||^2 + sum_modes P_mode + P_spont = 1; residual above
    1e-4 marks the run unreliable.  Master: trace must stay within 1e-8 of
    one at every recorded step.
    """
    components = {f"P_{m}": float(traj.emission[m][-1]) for m in traj.emission}
    components["P_spont"] = float(traj.spontaneous[-1])
    components["norm_sq"] = traj.final_norm_sq
    if traj.solver == "conditional":
        residual = abs(1.0 - (sum(traj.emission[m][-1] for m in traj.emission)
                              + traj.spontaneous[-1] + traj.final_norm_sq))
        reliable = residual <= BOOKKEEPING_TOLERANCE and not traj.flags
    else:
        residual = float(np.max(np.abs(traj.norm_sq - 1.0)))
        reliable = residual <= TRACE_TOLERANCE and not traj.flags
    flags = traj.flags if reliable else traj.flags + ("bookkeeping-residual",) * (
        residual > (BOOKKEEPING_TOLERANCE if traj.solver == "conditional" else TRACE_TOLERANCE)
    )
    return Bookkeeping(
        solver=traj.solver,
        components=components,
        residual=float(residual),
        reliable=reliable,
        flags=flags,
    )


@dataclass(frozen=True)
class MeritReport:
    """Summary of the figures of merit of one run.

    Fields that do not apply to the model kind (for example the Bell
    fidelity of a single-mode run) are None.
    """

    p_l: float | None
    p_r: float | None
    p_spont: float
    bell_fidelity: float | None
    success_rate: float | None
    emission_rate: float | None
    evaluated_at: float
    residual: float
    flags: tuple[str, ...]


def merit_report(
    traj: Trajectory,
    target: BasisState | None = None,
    t_eval: float | None = None,
) -> MeritReport:
    """Assemble the standard merit summary from a trajectory."""
    book = probability_bookkeeping(traj)
    flags = list(book.flags)
    t_ref = traj.t_final if t_eval is None else t_eval

    p_l = photon_detection_probability(traj, "L", t_ref) if "L" in traj.emission else None
    p_r = photon_detection_probability(traj, "R", t_ref) if "R" in traj.emission else None
    p_spont = float(np.interp(t_ref, traj.times, traj.spontaneous))

    fidelity = None
    if traj.config.kind == FOUR_LEVEL and traj.solver == "conditional":
        # read out where the emitting subspace actually carries weight
        weight = (
            np.abs(traj.states[:, traj.basis.index_of("g-", 1, 0)]) ** 2
            + np.abs(traj.states[:, traj.basis.index_of("g+", 0, 1)]) ** 2
        )
        k = int(np.argmax(weight))
        try:
            fidelity = bell_fidelity(traj.states[k], traj.basis)
        except UnreliableResultError:
            fidelity = None  # nothing ever emitted; not a defect of the run

    success = None
    if target is None and traj.config.kind in (EFFECTIVE_TWO_LEVEL, "three-level-raman"):
        target = BasisState("g2", 1, 0)
    if target is not None and traj.solver == "conditional":
        try:
            success = success_rate(traj, target, t_eval)
        except UnreliableResultError:
            flags.append("success-rate-undefined")

    emitted = None
    if (
        traj.solver == "conditional"
        and traj.config.kind != FOUR_LEVEL
        and traj.final_norm_sq <= SATURATION_NORM
    ):
        emitted = emission_rate(traj)

    return MeritReport(
        p_l=p_l,
        p_r=p_r,
        p_spont=p_spont,
        bell_fidelity=fidelity,
        success_rate=success,
        emission_rate=emitted,
        evaluated_at=float(t_ref),
        residual=book.residual,
        flags=tuple(flags),
    )
