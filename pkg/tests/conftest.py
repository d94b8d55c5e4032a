"""Shared fixtures and independent propagation oracles for the test suite."""

import numpy as np
import pytest

from photongun import IntegrationSpec, ModelConfig, Pulse, RAD_NS_PER_MHZ


def mhz(value: float) -> float:
    """Ordinary frequency in MHz -> angular rad/ns."""
    return value * RAD_NS_PER_MHZ


def expm_propagate(h_eff: np.ndarray, psi0: np.ndarray, ts: np.ndarray) -> np.ndarray:
    """Exact propagation under a constant (possibly non-Hermitian) generator.

    Independent of the package's RK4 machinery: eigendecompose H_eff once
    and evaluate psi(t) = V exp(-i diag(lam) t) V^-1 psi0 on the whole grid.
    Returns an array of shape (len(ts), dim).
    """
    lam, vec = np.linalg.eig(h_eff)
    coeff = np.linalg.solve(vec, psi0)
    return (vec @ (np.exp(-1j * np.outer(lam, ts)) * coeff[:, None])).T


def lindblad_euler_reference(rhs, rho0: np.ndarray, dt: float, n_steps: int) -> np.ndarray:
    """Brute-force midpoint-rule master integration for small cross-checks."""
    rho = rho0.copy()
    for k in range(n_steps):
        t = k * dt
        k1 = rhs(t, rho)
        k2 = rhs(t + 0.5 * dt, rho + 0.5 * dt * k1)
        rho = rho + dt * k2
    return rho


@pytest.fixture(scope="session")
def headline_config() -> ModelConfig:
    """Reference entangler operating point: (2pi)(45, 45, 4.5, 45) MHz,
    sin^2 pulse of 210 ns."""
    return ModelConfig(
        kind="four-level",
        g=mhz(45.0),
        kappa=mhz(45.0),
        gamma=mhz(4.5),
        pulse=Pulse("sin2", mhz(45.0), 210.0),
    )


@pytest.fixture(scope="session")
def headline_conditional(headline_config):
    from photongun import integrate_conditional

    spec = IntegrationSpec.suggested(headline_config)
    return integrate_conditional(headline_config, spec)


@pytest.fixture(scope="session")
def headline_master(headline_config):
    from photongun import integrate_master

    spec = IntegrationSpec.suggested(headline_config)
    return integrate_master(headline_config, spec)


def raman_mapping_config(
    omega_over_delta: float = 0.2,
    kappa_over_gamma: float = 1.0,
    cooperativity: float = 10.0,
    delta_over_gamma: float = 50.0,
    gamma_mhz_value: float = 20.0,
    compensate: bool = True,
) -> ModelConfig:
    """Constant-drive Raman state-mapping config used across tests."""
    from photongun import stark_compensation_delta

    gamma = mhz(gamma_mhz_value)
    kappa = kappa_over_gamma * gamma
    g = np.sqrt(cooperativity * kappa * gamma)
    delta = delta_over_gamma * gamma
    omega0 = omega_over_delta * delta
    delta_raman = stark_compensation_delta(omega0, g, delta) if compensate else 0.0
    return ModelConfig(
        kind="three-level-raman",
        g=g,
        kappa=kappa,
        gamma=gamma,
        delta=delta,
        delta_raman=delta_raman,
        pulse=Pulse("constant", omega0, float("inf")),
    )
