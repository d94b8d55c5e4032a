"""Basis enumeration and dense operator machinery."""

import itertools

import numpy as np
import pytest

from photongun import (
    BasisState,
    annihilation_operator,
    atomic_projector,
    basis_vector,
    build_basis,
    expectation,
    number_operator,
)


def test_dimensions():
    assert build_basis("four-level", 1).dim == 16
    assert build_basis("three-level-raman", 1).dim == 6
    assert build_basis("effective-two-level", 1).dim == 2
    assert build_basis("four-level", 2).dim == 36


def test_effective_basis_is_the_reduced_pair():
    basis = build_basis("effective-two-level", 1)
    assert basis.states == (BasisState("g1", 0, 0), BasisState("g2", 1, 0))


def test_rejects_bad_arguments():
    with pytest.raises(ValueError):
        build_basis("four-level", 0)
    with pytest.raises(ValueError):
        build_basis("five-level", 1)
    with pytest.raises(ValueError):
        build_basis("four-level", 1.5)


def test_ordering_deterministic():
    a = build_basis("four-level", 2)
    b = build_basis("four-level", 2)
    assert a.states == b.states
    # level major, then n_L, then n_R
    assert a.states[0] == BasisState("g1", 0, 0)
    assert a.states[1] == BasisState("g1", 0, 1)
    assert a.states[3] == BasisState("g1", 1, 0)


def test_annihilation_sqrt_n_rule():
    basis = build_basis("four-level", 1)
    a_l = annihilation_operator(basis, "L")
    psi = basis_vector(basis, "g-", 1, 0)
    out = a_l @ psi
    expected = basis_vector(basis, "g-", 0, 0)
    assert np.allclose(out, expected)

    # vacuum is annihilated
    assert np.allclose(a_l @ basis_vector(basis, "e", 0, 0), 0.0)

    big = build_basis("four-level", 2)
    out2 = annihilation_operator(big, "L") @ basis_vector(big, "e", 2, 0)
    assert np.allclose(out2, np.sqrt(2.0) * basis_vector(big, "e", 1, 0))


def test_annihilation_mode_errors():
    with pytest.raises(ValueError):
        annihilation_operator(build_basis("three-level-raman", 1), "R")
    with pytest.raises(ValueError):
        annihilation_operator(build_basis("effective-two-level", 1), "L")


def test_number_operator_effective():
    basis = build_basis("effective-two-level", 1)
    assert np.allclose(number_operator(basis, "L"), np.diag([0.0, 1.0]))


def test_commutator_below_cutoff():
    """[a, a+] = 1 on the sub-block with n < n_max: no truncation artifact.

    (sqrt(2))^2 lands one ulp away from 2 in binary floating point, so
    "exact" here means within machine epsilon; the truncated top row is off
    by O(1), which is what the sub-block restriction excludes.
    """
    basis = build_basis("four-level", 2)
    a = annihilation_operator(basis, "L")
    comm = a @ a.conj().T - a.conj().T @ a
    below = [i for i, s in enumerate(basis.states) if s.n_l < basis.n_max]
    sub = comm[np.ix_(below, below)]
    assert np.max(np.abs(sub - np.eye(len(below)))) <= 2 * np.finfo(float).eps
    top = [i for i, s in enumerate(basis.states) if s.n_l == basis.n_max]
    assert np.min(np.abs(np.diag(comm)[top])) >= 1.0  # cutoff row is corrupted


@pytest.mark.parametrize("kind", ["four-level", "three-level-raman"])
def test_projector_algebra_exhaustive(kind):
    """s_{mu,nu} s_{nu',lam} = delta(nu,nu') s_{mu,lam}, all level triples."""
    basis = build_basis(kind, 1)
    levels = basis.levels
    for mu, nu, nu2, lam in itertools.product(levels, repeat=4):
        product = atomic_projector(basis, mu, nu) @ atomic_projector(basis, nu2, lam)
        expected = atomic_projector(basis, mu, lam) if nu == nu2 else 0.0 * product
        assert np.array_equal(product, expected)


def test_projector_examples():
    basis = build_basis("four-level", 1)
    s_ee = atomic_projector(basis, "e", "e")
    e00 = basis_vector(basis, "e", 0, 0)
    assert np.allclose(s_ee @ e00, e00)
    assert np.allclose(atomic_projector(basis, "g1", "e") @ basis_vector(basis, "g-", 1, 0), 0.0)
    prod = atomic_projector(basis, "e", "g1") @ atomic_projector(basis, "g1", "e")
    assert np.array_equal(prod, s_ee)
    with pytest.raises(ValueError):
        atomic_projector(basis, "g2", "e")


def test_expectation_examples():
    basis = build_basis("four-level", 1)
    e00 = basis_vector(basis, "e", 0, 0)
    rho = np.outer(e00, e00.conj())
    assert expectation(rho, atomic_projector(basis, "e", "e")) == pytest.approx(1.0)

    psi = 0.3 * basis_vector(basis, "g-", 1, 0)
    n_l = number_operator(basis, "L")
    assert expectation(psi, n_l) == pytest.approx(0.09)

    # normalized pure state, identity
    assert expectation(e00, np.eye(16)) == pytest.approx(1.0)


def test_expectation_hermitian_imag_small():
    rng = np.random.default_rng(7)
    basis = build_basis("three-level-raman", 1)
    psi = rng.normal(size=6) + 1j * rng.normal(size=6)
    psi /= np.linalg.norm(psi)
    herm = rng.normal(size=(6, 6)) + 1j * rng.normal(size=(6, 6))
    herm = herm + herm.conj().T
    assert abs(expectation(psi, herm).imag) < 1e-12


def test_expectation_dimension_mismatch():
    basis = build_basis("four-level", 1)
    with pytest.raises(ValueError):
        expectation(np.zeros(4, dtype=complex), number_operator(basis, "L"))
