"""Suppliers: lattice theta series and polynomial test functions."""

import cmath
import math

import numpy as np
import pytest

from schottkyvir.moduli import (
    EvenLattice,
    PolynomialModuli,
    SiegelTheta,
    e8_lattice,
    parse_supplier,
    sqrt2_lattice,
)

TWO_PI_I = 2j * math.pi


@pytest.fixture(scope="module")
def tau(request):
    # use the session surface via a nested request to keep one cache
    return None


def _tau(surface):
    return surface.tau


class TestEvenLattice:
    def test_sqrt2(self):
        lat = sqrt2_lattice()
        assert lat.rank == 1
        assert lat.gram == ((2,),)

    def test_e8_is_even_unimodular(self):
        lat = e8_lattice()
        g = lat.gram_array()
        assert lat.rank == 8
        assert round(float(np.linalg.det(g.astype(float)))) == 1
        assert all(d % 2 == 0 for d in np.diag(g))

    def test_rejects_odd_diagonal(self):
        with pytest.raises(ValueError):
            EvenLattice(gram=((1,),))

    def test_rejects_indefinite(self):
        with pytest.raises(ValueError):
            EvenLattice(gram=((2, 3), (3, 2)))


class TestSiegelTheta:
    def test_genus_one_scalar_oracle(self):
        from schottkyvir.differentials import Surface, TruncationPolicy
        from schottkyvir.schottky import SchottkyParams

        p = SchottkyParams(genus=1, handles=((0.0, 4.0, 0.05 + 0.05j),))
        t1 = Surface(p, TruncationPolicy()).tau
        q = cmath.exp(t1[0, 0])
        oracle = sum(q ** (m * m) for m in range(-30, 31))
        theta = SiegelTheta(sqrt2_lattice()).value(t1)
        assert abs(theta - oracle) < 1e-12

    def test_dominant_term_limit(self):
        tau = TWO_PI_I * np.diag([50.0j, 50.0j])
        assert abs(SiegelTheta(sqrt2_lattice()).value(tau) - 1.0) < 1e-60

    def test_first_derivative_against_fd(self, surface):
        th = SiegelTheta(sqrt2_lattice())
        tau = _tau(surface)
        h = 1e-5
        for (a, b) in ((1, 1), (1, 2), (2, 2)):
            def val(t):
                tp = tau.copy()
                tp[a - 1, b - 1] += t
                if a != b:
                    tp[b - 1, a - 1] += t
                return th.value(tp)

            fd = ((val(h) - val(-h)) / (2 * h) * 4 - (val(2 * h) - val(-2 * h)) / (4 * h)) / 3
            an = th.derivative(tau, ((a, b),))
            assert abs(fd - an) < 1e-8 * max(abs(an), abs(th.value(tau)))

    def test_relabelling_symmetry(self, surface):
        # swapping both handle labels and tau rows/columns is a summand
        # bijection
        th = SiegelTheta(sqrt2_lattice())
        tau = _tau(surface)
        perm = tau[::-1, ::-1].copy()
        assert abs(th.value(tau) - th.value(perm)) < 1e-12

    def test_radius_doubling_within_tail_bound(self, surface):
        tau = _tau(surface)
        auto = SiegelTheta(sqrt2_lattice())
        v1 = auto.value(tau)
        wide = SiegelTheta(sqrt2_lattice(), radius=2.0 * auto._radius_for(tau / TWO_PI_I))
        v2 = wide.value(tau)
        assert abs(v1 - v2) <= auto.tail_bound(tau) + 1e-15

    def test_mixed_derivative_symmetry(self, surface):
        th = SiegelTheta(sqrt2_lattice())
        tau = _tau(surface)
        a = th.derivative(tau, ((1, 1), (1, 2)))
        b = th.derivative(tau, ((1, 2), (1, 1)))
        assert a == b

    def test_rejects_bad_imaginary_part(self):
        tau = TWO_PI_I * np.diag([-1.0j, 1.0j])
        with pytest.raises(ValueError):
            SiegelTheta(sqrt2_lattice()).value(tau)


class TestPolynomial:
    def test_basic_derivatives(self, surface):
        tau = _tau(surface)
        f1 = PolynomialModuli({((1, 1),): 1.0})
        assert f1.derivative(tau, ((1, 1),)) == 1.0
        assert f1.derivative(tau, ((1, 2),)) == 0.0
        f2 = PolynomialModuli({((1, 2), (1, 2)): 1.0})
        assert f2.derivative(tau, ((1, 2), (1, 2))) == 2.0
        f3 = PolynomialModuli({((1, 1), (2, 2)): 1.0})
        assert f3.derivative(tau, ((1, 1), (2, 2))) == 1.0

    def test_value(self, surface):
        tau = _tau(surface)
        f = PolynomialModuli({((1, 1), (2, 2)): 2.0, ((1, 2),): -1.0})
        want = 2.0 * tau[0, 0] * tau[1, 1] - tau[0, 1]
        assert abs(f.value(tau) - want) < 1e-14

    def test_pair_order_normalised(self, surface):
        tau = _tau(surface)
        f = PolynomialModuli({((2, 1),): 1.0})
        assert abs(f.value(tau) - tau[0, 1]) < 1e-15
        assert f.derivative(tau, ((1, 2),)) == 1.0


class TestParseSupplier:
    def test_lattice_names(self):
        assert isinstance(parse_supplier("lattice:sqrt2"), SiegelTheta)
        assert parse_supplier("lattice:e8").lattice.rank == 8

    def test_poly_json(self, surface):
        tau = _tau(surface)
        spec = 'poly:{"terms": [{"c": [1.0, 0.0], "pairs": [[1, 1], [2, 2]]}]}'
        f = parse_supplier(spec)
        assert abs(f.value(tau) - tau[0, 0] * tau[1, 1]) < 1e-14

    def test_lattice_file(self, tmp_path):
        doc = tmp_path / "gram.json"
        doc.write_text('{"gram": [[2, 0], [0, 4]]}')
        f = parse_supplier(f"lattice:file={doc}")
        assert f.lattice.rank == 2

    def test_unknown_kind(self):
        with pytest.raises(ValueError):
            parse_supplier("nope:thing")
