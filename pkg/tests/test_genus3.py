"""Genus-3 coverage: six moduli coordinates, classical identities, and the
n-point operator with the full pair set.

A shorter word length keeps the six-times-larger group affordable; the
configuration is separated enough that the shell tail still sits near
1e-9, so tolerances are looser than at genus 2 but far from trivial.
"""

import cmath

import numpy as np
import pytest

from schottkyvir.differentials import Surface, TruncationPolicy, get_surface
from schottkyvir.moduli import PolynomialModuli
from schottkyvir.schottky import SchottkyParams, shell_count, validate
from schottkyvir.variations import FDConfig, check_rauch
from schottkyvir.virgraphs import apply_Dn

X = 14.0 * cmath.exp(0.5j)
Z1 = 14.0 * cmath.exp(2.6j)


@pytest.fixture(scope="module")
def params3():
    return SchottkyParams(
        genus=3,
        handles=(
            (-6.0, -3.5, 0.02),
            (-1.2, 1.2, 0.02),
            (3.5, 6.0, 0.02),
        ),
    )


@pytest.fixture(scope="module")
def surface3(params3):
    return get_surface(params3, TruncationPolicy(max_word_length=6, tail_tol=1e-6))


def test_configuration_admissible(params3):
    assert validate(params3).ok


def test_shell_counts(params3):
    from schottkyvir.schottky import enumerate_group

    by_len = {}
    for el in enumerate_group(params3, 3):
        by_len[len(el.word)] = by_len.get(len(el.word), 0) + 1
    assert by_len == {0: 1, 1: 6, 2: 30, 3: 150}
    assert shell_count(3, 2) == 30


def test_alpha_normalisation(surface3):
    for a in (1, 2, 3):
        for b in (1, 2, 3):
            v = surface3.alpha_period_nu(a, b)
            assert abs(v - (1.0 if a == b else 0.0)) < 1e-7


def test_period_matrix_and_coordinates(surface3):
    pm = surface3.period_matrix()
    assert pm.asymmetry < 1e-7
    assert pm.min_im_eigenvalue > 0
    # six unordered pairs serve as the moduli coordinates
    assert len(pm.index_set_K) == 6
    assert pm.index_set_K == ((1, 1), (1, 2), (1, 3), (2, 2), (2, 3), (3, 3))


def test_two_form_span_rank(surface3):
    # dim of holomorphic two-forms is 3g - 3 = 6
    xs = 14.0 * np.exp(1j * np.linspace(0.1, 2 * np.pi - 0.2, 18))
    M = np.array([surface3.theta_matrix(x).ravel() for x in xs])
    sv = np.linalg.svd(M, compute_uv=False)
    assert int(np.sum(sv > 1e-4 * sv[0])) == 6


def test_rauch_identity(surface3):
    out = check_rauch(surface3, X, FDConfig())
    assert out["residual"] < 1e-5


def test_npoint_operator(surface3):
    F = PolynomialModuli({((1, 3), (2, 2)): 1.0, ((1, 2),): 0.5})
    a = apply_Dn(surface3, 2, 1.0, F, (Z1, X))
    b = apply_Dn(surface3, 2, 1.0, F, (X, Z1))
    assert abs(a - b) < 1e-7 * max(abs(a), 1e-12)
    # degenerate-chain value at order 1 matches the coordinate gradient
    from schottkyvir.variations import nabla_moduli

    d1 = apply_Dn(surface3, 1, 0.0, F, (Z1,))
    want = nabla_moduli(surface3, Z1, lambda prs: F.derivative(surface3.tau, prs))
    assert abs(d1 - want) < 1e-12 * max(abs(want), 1e-12)
