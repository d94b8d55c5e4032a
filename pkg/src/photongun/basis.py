"""Composite atom (x) photon basis and dense operator constructors.

States are labelled |level, n_L, n_R> where the level runs over the atomic
levels of the chosen model and n_L, n_R count photons in the left/right
circularly polarized cavity modes.  Everything downstream (Hamiltonians,
dissipators, expectation values) is plain dense numpy over this basis, so
ordering is fixed once and for all here: atomic level major, then n_L,
then n_R.

Model kinds:

* ``four-level``        levels (g1, e, g-, g+), two cavity modes
* ``three-level-raman`` levels (g1, e, g2), single cavity mode
* ``effective-two-level`` the reduced pair {|g1,0>, |g2,1>} obtained by
  adiabatic elimination of the far-detuned excited state
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

FOUR_LEVEL = "four-level"
THREE_LEVEL_RAMAN = "three-level-raman"
EFFECTIVE_TWO_LEVEL = "effective-two-level"

MODEL_KINDS = (FOUR_LEVEL, THREE_LEVEL_RAMAN, EFFECTIVE_TWO_LEVEL)

#: ordered atomic levels per model kind
LEVELS = {
    FOUR_LEVEL: ("g1", "e", "g-", "g+"),
    THREE_LEVEL_RAMAN: ("g1", "e", "g2"),
    EFFECTIVE_TWO_LEVEL: ("g1", "g2"),
}

#: cavity modes per model kind
MODES = {
    FOUR_LEVEL: ("L", "R"),
    THREE_LEVEL_RAMAN: ("L",),
    EFFECTIVE_TWO_LEVEL: ("L",),
}


@dataclass(frozen=True, order=True)
class BasisState:
    """One labelled composite state |level, n_L, n_R>."""

    level: str
    n_l: int
    n_r: int = 0

    def label(self) -> str:
        return f"{self.level};{self.n_l};{self.n_r}"


@dataclass(frozen=True)
class Basis:
    """Deterministically ordered list of basis states with an index map."""

    kind: str
    n_max: int
    states: tuple[BasisState, ...]
    _index: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        self._index.update({s: i for i, s in enumerate(self.states)})

    @property
    def dim(self) -> int:
        return len(self.states)

    @property
    def levels(self) -> tuple[str, ...]:
        return LEVELS[self.kind]

    @property
    def modes(self) -> tuple[str, ...]:
        return MODES[self.kind]

    def index(self, state: BasisState) -> int:
        try:
            return self._index[state]
        except KeyError:
            raise ValueError(f"state {state} not in {self.kind} basis") from None

    def index_of(self, level: str, n_l: int, n_r: int = 0) -> int:
        return self.index(BasisState(level, n_l, n_r))

    def photon_numbers(self, mode: str) -> np.ndarray:
        """Vector of photon counts of the given mode, per basis state."""
        if mode not in self.modes:
            raise ValueError(f"mode {mode!r} not in {self.kind} model")
        attr = "n_l" if mode == "L" else "n_r"
        return np.array([getattr(s, attr) for s in self.states], dtype=float)

    def level_indicator(self, level: str) -> np.ndarray:
        """0/1 vector marking basis states with the given atomic level."""
        if level not in self.levels:
            raise ValueError(f"level {level!r} not in {self.kind} model")
        return np.array([1.0 if s.level == level else 0.0 for s in self.states])


def build_basis(kind: str, n_max: int = 1) -> Basis:
    """Enumerate the composite basis for a model kind.

    n_max is the per-mode photon cutoff; n_max = 0 is rejected because no
    photon emission would be representable.
    """
    if kind not in MODEL_KINDS:
        raise ValueError(f"unknown model kind {kind!r}; expected one of {MODEL_KINDS}")
    if not isinstance(n_max, int) or n_max < 1:
        raise ValueError(f"photon cutoff n_max must be an integer >= 1, got {n_max!r}")

    if kind == EFFECTIVE_TWO_LEVEL:
        states = (BasisState("g1", 0, 0), BasisState("g2", 1, 0))
        return Basis(kind, n_max, states)

    counts = range(n_max + 1)
    if kind == FOUR_LEVEL:
        states = tuple(
            BasisState(lev, nl, nr) for lev in LEVELS[kind] for nl in counts for nr in counts
        )
    else:
        states = tuple(BasisState(lev, nl, 0) for lev in LEVELS[kind] for nl in counts)
    return Basis(kind, n_max, states)


def annihilation_operator(basis: Basis, mode: str) -> np.ndarray:
    """Photon annihilation operator a_mode: <level, n-1| a |level, n> = sqrt(n)."""
    if basis.kind == EFFECTIVE_TWO_LEVEL:
        raise ValueError("no ladder operators on the reduced two-state basis")
    if mode not in basis.modes:
        raise ValueError(f"mode {mode!r} not in {basis.kind} model")
    a = np.zeros((basis.dim, basis.dim), dtype=complex)
    for i, s in enumerate(basis.states):
        n = s.n_l if mode == "L" else s.n_r
        if n == 0:
            continue
        lowered = (
            BasisState(s.level, s.n_l - 1, s.n_r)
            if mode == "L"
            else BasisState(s.level, s.n_l, s.n_r - 1)
        )
        a[basis.index(lowered), i] = np.sqrt(n)
    return a


def number_operator(basis: Basis, mode: str) -> np.ndarray:
    """Photon number operator of a mode; diagonal in this basis.

    Defined for every kind, including the reduced two-state model where it
    is diag(0, 1).
    """
    return np.diag(basis.photon_numbers(mode)).astype(complex)


def atomic_projector(basis: Basis, mu: str, nu: str) -> np.ndarray:
    """Atomic operator |mu><nu| acting as identity on the photon sector."""
    levels = basis.levels
    if mu not in levels or nu not in levels:
        raise ValueError(f"levels ({mu!r}, {nu!r}) not both in {basis.kind} model")
    op = np.zeros((basis.dim, basis.dim), dtype=complex)
    for i, s in enumerate(basis.states):
        if s.level != nu:
            continue
        partner = BasisState(mu, s.n_l, s.n_r)
        if partner in basis._index:
            op[basis.index(partner), i] = 1.0
    return op


def basis_vector(basis: Basis, level: str, n_l: int = 0, n_r: int = 0) -> np.ndarray:
    """Unit state vector for one basis state."""
    psi = np.zeros(basis.dim, dtype=complex)
    psi[basis.index_of(level, n_l, n_r)] = 1.0
    return psi


def expectation(state: np.ndarray, op: np.ndarray) -> complex:
    """<op> on a state vector (unnormalized <psi|op|psi>) or density matrix.

    State vectors are deliberately not renormalized: conditional dynamics
    evaluates expectations on the decaying-norm state.
    """
    state = np.asarray(state)
    op = np.asarray(op)
    if state.ndim == 1:
        if op.shape != (state.size, state.size):
            raise ValueError(f"dimension mismatch: state {state.size}, op {op.shape}")
        return complex(np.vdot(state, op @ state))
    if state.ndim == 2:
        if op.shape != state.shape:
            raise ValueError(f"dimension mismatch: rho {state.shape}, op {op.shape}")
        return complex(np.trace(state @ op))
    raise ValueError("state must be a vector or a square matrix")
