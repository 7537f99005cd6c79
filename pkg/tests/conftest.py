import numpy as np
import pytest

import semicone as sc
from semicone.field import ControlField, Polynomial


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(20260810)


@pytest.fixture(scope="session")
def conical_nf():
    return sc.builtin("CONICAL_NF")


@pytest.fixture(scope="session")
def semiconical_nf():
    return sc.builtin("SEMICONICAL_NF")


@pytest.fixture(scope="session")
def f_conical_nf():
    return sc.builtin("F_CONICAL_NF")


@pytest.fixture(scope="session")
def f_semiconical_nf():
    return sc.builtin("F_SEMICONICAL_NF", m0=1.0)


@pytest.fixture(scope="session")
def stirap():
    return sc.builtin("STIRAP", E=0.0, Eprime=1.0)


def random_polynomial(rng, arity, max_power=3, n_terms=6, force_zero=False):
    terms = {}
    for _ in range(n_terms):
        e = tuple(int(v) for v in rng.integers(0, max_power + 1, size=arity))
        if force_zero and all(v == 0 for v in e):
            continue
        terms[e] = terms.get(e, 0.0) + float(rng.normal())
    if not terms:
        e = (1,) + (0,) * (arity - 1)
        terms[e] = 1.0
    return Polynomial(arity, terms)


def random_field(rng, arity, max_power=3, n_terms=6, force_zero=False):
    return ControlField(
        random_polynomial(rng, arity, max_power, n_terms, force_zero),
        random_polynomial(rng, arity, max_power, n_terms, force_zero),
    )


def dense_random_field(rng, arity, total_degree=3, force_zero=False):
    """Every monomial of total degree <= total_degree gets a N(0,1) coefficient."""
    def monomials():
        if arity == 2:
            return [(i, j) for i in range(total_degree + 1)
                    for j in range(total_degree + 1 - i)]
        return [(i, j, k) for i in range(total_degree + 1)
                for j in range(total_degree + 1 - i)
                for k in range(total_degree + 1 - i - j)]

    comps = []
    for _ in range(2):
        terms = {}
        for e in monomials():
            if force_zero and all(v == 0 for v in e):
                continue
            terms[e] = float(rng.normal())
        comps.append(Polynomial(arity, terms))
    return ControlField(comps[0], comps[1])
