"""Symplectic elements, transformation laws and operator automorphy."""

import cmath
import math

import numpy as np
import pytest

from schottkyvir.modular import (
    SpElement,
    logdetM_derivative_check,
    logdet_gradient,
    random_sp,
    transform_frame,
    transformed_differentials,
    verify_automorphy,
)
from schottkyvir.moduli import PolynomialModuli, SiegelTheta, sqrt2_lattice
from schottkyvir.variations import nabla_moduli

TWO_PI_I = 2j * math.pi
X = 6.0 * cmath.exp(0.4j)
Y = 6.0 * cmath.exp(2.1j)
Z1 = 6.0 * cmath.exp(0.7j)
Z2 = 6.0 * cmath.exp(2.9j)


@pytest.fixture(scope="module")
def rng():
    return np.random.default_rng(42)


@pytest.fixture(scope="module")
def omega_cap(surface):
    return surface.period_matrix().omega_cap


class TestSpElement:
    def test_word_length_zero_is_identity(self, rng):
        sp = random_sp(2, 0, rng)
        assert sp == SpElement.identity(2)

    def test_samples_satisfy_relations_exactly(self, rng):
        # the dataclass validates the block relations over the integers
        for _ in range(10):
            random_sp(2, 6, rng)
        for _ in range(3):
            random_sp(3, 5, rng)

    def test_inverse_law(self, rng):
        for _ in range(5):
            sp = random_sp(2, 6, rng)
            assert sp.compose(sp.inverse()) == SpElement.identity(2)

    def test_rejects_non_symplectic(self):
        with pytest.raises(ValueError):
            SpElement(
                A=((1, 0), (0, 1)),
                B=((0, 0), (0, 0)),
                C=((1, 1), (0, 1)),
                D=((1, 0), (0, 1)),
            )


class TestFrame:
    def test_identity_frame(self, omega_cap):
        fr = transform_frame(omega_cap, SpElement.identity(2))
        assert np.abs(fr.omega_new - omega_cap).max() < 1e-15
        assert np.abs(fr.M - np.eye(2)).max() < 1e-15

    def test_derived_matrices(self, omega_cap, rng):
        for _ in range(5):
            sp = random_sp(2, 6, rng)
            fr = transform_frame(omega_cap, sp)
            A, _, C, _ = sp.blocks()
            assert np.abs(fr.N @ fr.M - np.eye(2)).max() < 1e-12
            assert np.abs(fr.omega_new - fr.omega_new.T).max() < 1e-9
            assert np.linalg.eigvalsh(fr.omega_new.imag).min() > 1e-9
            assert np.abs(fr.N - (A.T - C.T @ fr.omega_new)).max() < 1e-10
            assert np.abs(fr.nc() - fr.nc().T).max() < 1e-10

    def test_inversion_element(self, omega_cap):
        fr = transform_frame(omega_cap, SpElement.inversion(2))
        assert np.abs(fr.omega_new + np.linalg.inv(omega_cap)).max() < 1e-12


class TestLogDet:
    def test_fd_oracle(self, omega_cap, rng):
        for _ in range(5):
            sp = random_sp(2, 6, rng)
            assert logdetM_derivative_check(omega_cap, sp) < 1e-7

    def test_shear_gives_zero(self, omega_cap):
        shear = SpElement.shear(np.array([[1, 1], [1, 0]]))
        fr = transform_frame(omega_cap, shear)
        grad = logdet_gradient(fr)
        assert all(abs(v) < 1e-15 for v in grad.values())
        assert logdetM_derivative_check(omega_cap, shear) < 1e-12

    def test_diagonal_entry(self, omega_cap):
        sp = SpElement.inversion(2)
        from schottkyvir.modular import logdet_gradient_fd

        fd = logdet_gradient_fd(omega_cap, sp)
        exact = logdet_gradient(transform_frame(omega_cap, sp))
        assert abs(fd[(1, 1)] - exact[(1, 1)]) < 1e-8


class TestTransformedDifferentials:
    def test_shear_fixes_forms(self, surface):
        shear = SpElement.shear(np.array([[2, 1], [1, 0]]))
        out = transformed_differentials(surface, shear, X, Y)
        assert abs(out["omega_new"] - surface.omega_raw(X, Y)) < 1e-14
        assert abs(out["s_new"] - surface.s_raw(X)) < 1e-14
        assert np.abs(out["nu_new_x"] - surface.nu_vec(X)).max() < 1e-14

    def test_transformed_omega_symmetric(self, surface, rng):
        sp = random_sp(2, 6, rng)
        a = transformed_differentials(surface, sp, X, Y)["omega_new"]
        b = transformed_differentials(surface, sp, Y, X)["omega_new"]
        assert abs(a - b) < 1e-9 * abs(a)

    def test_new_alpha_normalisation_by_quadrature(self, surface, rng):
        # oint over the new cycles written as integer combinations of the
        # old ones, both measured by quadrature, against 2 pi i delta
        sp = random_sp(2, 4, rng)
        fr = transform_frame(surface.period_matrix().omega_cap, sp)
        _, _, C, D = sp.blocks()
        g = surface.genus
        beta_nu = np.empty((g, g), complex)  # oint_{beta_b} nu_d
        alpha_nu = np.empty((g, g), complex)  # oint_{alpha_b} nu_d
        for b in range(1, g + 1):
            zs, ws = surface._beta_path(b)
            for d in range(1, g + 1):
                beta_nu[b - 1, d - 1] = np.sum(ws * surface.nu_raw(d, zs))
                alpha_nu[b - 1, d - 1] = TWO_PI_I * surface.alpha_period_nu(d, b)
        new_alpha_nu_t = (C @ beta_nu + D @ alpha_nu) @ fr.N
        assert np.abs(new_alpha_nu_t / TWO_PI_I - np.eye(g)).max() < 1e-7

    def test_gradient_form_of_omega_shift(self, surface, rng):
        # the bidifferential shift equals the symmetrised one-form pairing
        # against the log-det gradient
        sp = random_sp(2, 6, rng)
        pm = surface.period_matrix()
        fr = transform_frame(pm.omega_cap, sp)
        grad = logdet_gradient(fr)
        nu_x, nu_y = surface.nu_vec(X), surface.nu_vec(Y)
        shift = 0.0
        for (a, b), g_ab in grad.items():
            pair = nu_x[a - 1] * nu_y[b - 1] + nu_x[b - 1] * nu_y[a - 1]
            shift += 0.5 * pair * g_ab
        out = transformed_differentials(surface, sp, X, Y)
        direct = surface.omega_raw(X, Y) - out["omega_new"]
        assert abs(shift - direct) < 1e-8 * max(abs(direct), 1e-10)

    def test_gradient_form_of_s_shift(self, surface, rng):
        sp = random_sp(2, 6, rng)
        pm = surface.period_matrix()
        fr = transform_frame(pm.omega_cap, sp)
        grad = logdet_gradient(fr)
        nab = nabla_moduli(surface, X, lambda prs: grad[prs[0]])
        out = transformed_differentials(surface, sp, X, Y)
        assert abs((surface.s_raw(X) - 6.0 * nab) - out["s_new"]) < 1e-7 * max(
            1.0, abs(out["s_new"])
        )


class TestAutomorphy:
    def test_identity_element(self, surface):
        th = SiegelTheta(sqrt2_lattice())
        out = verify_automorphy(surface, SpElement.identity(2), 1, 1.0, th, (Z1,))
        assert out["residual"] < 1e-10

    def test_shear_elements(self, surface):
        th = SiegelTheta(sqrt2_lattice())
        shear = SpElement.shear(np.array([[1, -1], [-1, 1]]))
        out = verify_automorphy(surface, shear, 1, 1.0, th, (Z1,))
        assert out["residual"] < 1e-8

    def test_random_elements_order_one(self, surface, rng):
        th = SiegelTheta(sqrt2_lattice())
        for _ in range(5):
            sp = random_sp(2, 6, rng)
            out = verify_automorphy(surface, sp, 1, 1.0, th, (Z1,))
            assert out["residual"] < 1e-4

    def test_order_two(self, surface, rng):
        th = SiegelTheta(sqrt2_lattice())
        sp = random_sp(2, 6, rng)
        out = verify_automorphy(surface, sp, 2, 1.0, th, (Z1, Z2))
        assert out["residual"] < 1e-4

    def test_polynomial_supplier(self, surface, rng):
        F = PolynomialModuli({((1, 1), (2, 2)): 1.0, ((1, 2),): 0.3})
        sp = random_sp(2, 6, rng)
        out = verify_automorphy(surface, sp, 1, 2.0, F, (Z1,))
        assert out["residual"] < 1e-4

    def test_weight_matched_supplier(self, surface, rng):
        # a supplier transforming with weight k pairs with c = 2k; the
        # rank-one lattice series has k = 1/2, so c = 1 is the matched case
        th = SiegelTheta(sqrt2_lattice())
        sp = random_sp(2, 6, rng)
        out = verify_automorphy(surface, sp, 1, 1.0, th, (Z1,))
        assert out["residual"] < 1e-4

    def test_order_guard(self, surface):
        th = SiegelTheta(sqrt2_lattice())
        with pytest.raises(ValueError):
            verify_automorphy(surface, SpElement.identity(2), 3, 1.0, th, (Z1, Z2, Z1))
