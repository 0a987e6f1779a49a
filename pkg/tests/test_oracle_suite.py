import numpy as np
import pytest

from conftest import bell_phi_plus, random_state
from irrcorr.correlation_spectrum import correlation_levels
from irrcorr.matrix_core import vn_entropy
from irrcorr.maxent_solver import make_problem, solve_projection
from irrcorr.oracle_suite import (
    NotDiagonal,
    diagonal_embedding,
    diagonal_extraction,
    ipf_maxent,
    mutual_information_check,
    random_distribution,
)
from irrcorr.state_library import depolarize


def _entropy_bits(p):
    p = p[p > 0]
    return float(-(p * np.log2(p)).sum())


def _marginal(p, keep, n):
    return p.reshape((2,) * n).sum(axis=tuple(i for i in range(n) if i not in keep))


def test_embedding_roundtrip():
    assert np.allclose(diagonal_embedding(np.full(8, 1 / 8)), np.eye(8) / 8)
    p = random_distribution(3, 1)
    assert np.max(np.abs(diagonal_extraction(diagonal_embedding(p)) - p)) <= 1e-12
    with pytest.raises(NotDiagonal):
        diagonal_extraction(bell_phi_plus())


def test_ipf_trivial_cases():
    a, b, c = np.array([0.3, 0.7]), np.array([0.6, 0.4]), np.array([0.1, 0.9])
    prod = np.einsum("i,j,k->ijk", a, b, c).ravel()
    assert np.max(np.abs(ipf_maxent(prod, 1) - prod)) <= 1e-9
    uni = np.full(8, 1 / 8)
    for m in (1, 2, 3):
        assert np.allclose(ipf_maxent(uni, m), uni)


def test_ipf_matches_marginals_and_raises_entropy():
    for seed in range(5):
        p = random_distribution(3, seed)
        q = ipf_maxent(p, 2)
        for keep in [(0, 1), (0, 2), (1, 2)]:
            assert np.max(np.abs(_marginal(q, keep, 3) - _marginal(p, keep, 3))) <= 1e-8
        assert _entropy_bits(q) >= _entropy_bits(p) - 1e-10


def test_ipf_agrees_with_quantum_projection():
    for seed in range(3):
        p = random_distribution(3, 100 + seed)
        res = solve_projection(make_problem(diagonal_embedding(p), 2))
        off = res.state - np.diag(np.diag(res.state))
        assert np.max(np.abs(off)) <= 1e-9
        assert np.max(np.abs(diagonal_extraction(res.state) - ipf_maxent(p, 2))) <= 1e-7


def test_mutual_information_examples(rng):
    a, b = random_state(1, rng), random_state(1, rng)
    assert mutual_information_check(np.kron(a, b)) == pytest.approx(0.0, abs=1e-12)
    assert mutual_information_check(np.eye(4) / 4) == pytest.approx(0.0, abs=1e-15)
    # eigenvalues {0.625, 0.125, 0.125, 0.125}
    s = -(0.625 * np.log2(0.625) + 3 * 0.125 * np.log2(0.125))
    assert s == pytest.approx(1.54879, abs=1e-5)
    rho = depolarize(bell_phi_plus(), 0.5)
    assert vn_entropy(rho) == pytest.approx(s, abs=1e-12)
    assert mutual_information_check(rho) == pytest.approx(2 - s, abs=1e-12)
    assert 2 - s == pytest.approx(0.45121, abs=1e-5)


def test_mutual_information_equals_c2(rng):
    rho = random_state(2, rng)
    rec, _ = correlation_levels(rho)
    assert rec.C_bits[2] == pytest.approx(mutual_information_check(rho), abs=1e-7)
