"""Shared fixtures and random-operator helpers for the test suite."""

import numpy as np
import pytest

from povm_entangle import HermitianOperator, PovmSet, bell_povm


def random_pd_element(rng, parties=(2, 2), trace=1.0):
    """Full-rank positive element G G^dag scaled to the requested trace."""
    dim = int(np.prod(parties))
    g = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    m = g @ g.conj().T
    m *= trace / np.trace(m).real
    return HermitianOperator(m, parties)


def random_product_state(rng, dims):
    """Normalized product vector, one Haar-ish factor per party."""
    factors = []
    for d in dims:
        v = rng.standard_normal(d) + 1j * rng.standard_normal(d)
        factors.append(v / np.linalg.norm(v))
    out = factors[0]
    for v in factors[1:]:
        out = np.kron(out, v)
    return out


def random_separable_element(rng, dims=(2, 2), terms=10, trace=1.0):
    """Convex mixture of at most `terms` product projectors."""
    k = int(rng.integers(1, terms + 1))
    weights = rng.random(k)
    weights /= weights.sum()
    dim = int(np.prod(dims))
    m = np.zeros((dim, dim), dtype=complex)
    for w in weights:
        v = random_product_state(rng, dims)
        m += w * np.outer(v, v.conj())
    m *= trace / np.trace(m).real
    return HermitianOperator(m, tuple(dims))


def random_povm(rng, outcomes=4, parties=(2, 2)):
    """Random full-rank POVM: whiten positive blocks so they sum to identity."""
    dim = int(np.prod(parties))
    blocks = []
    for _ in range(outcomes):
        g = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
        blocks.append(g @ g.conj().T)
    total = sum(blocks)
    w, v = np.linalg.eigh(total)
    whiten = v @ np.diag(w**-0.5) @ v.conj().T
    elements = tuple(
        HermitianOperator(whiten @ b @ whiten.conj().T, parties) for b in blocks
    )
    labels = tuple(f"k{i}" for i in range(outcomes))
    return PovmSet(labels, elements)


@pytest.fixture
def rng():
    return np.random.default_rng(20260822)


@pytest.fixture
def ideal_bell():
    return bell_povm()
