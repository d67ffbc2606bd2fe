"""Coefficient-table algebra against direct pointwise evaluation."""

import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

from sbs_workbench.tables import PolyTable


def random_table(rng, degree=3):
    out = PolyTable.zero()
    for a in range(degree + 1):
        for b in range(degree + 1 - a):
            out = out + PolyTable.monomial(a, b, complex(rng.normal(), rng.normal()))
    return out


def test_monomial_evaluate():
    t = PolyTable.monomial(2, 1, 3.0 - 1.0j)
    z = np.array([0.5 + 0.25j, -1.0 + 2.0j])
    expect = (3.0 - 1.0j) * z ** 2 * np.conj(z)
    assert np.allclose(t.evaluate(z), expect, atol=1e-15)


def test_product_matches_pointwise(rng):
    a = random_table(rng)
    b = random_table(rng)
    z = rng.normal(size=7) + 1j * rng.normal(size=7)
    lhs = (a * b).evaluate(z)
    rhs = a.evaluate(z) * b.evaluate(z)
    assert np.max(np.abs(lhs - rhs)) < 1e-12


def test_partials_are_exact(rng):
    # oracle: five-point central differences on random base points
    t = random_table(rng)
    z = 0.3 + 0.4j
    h = 1e-5
    for table, step in ((t.partial_x(), h), (t.partial_y(), h * 1j)):
        fd = (-t.evaluate(np.array(z + 2 * step)) + 8 * t.evaluate(np.array(z + step))
              - 8 * t.evaluate(np.array(z - step)) + t.evaluate(np.array(z - 2 * step))) / (12 * h)
        assert abs(table.evaluate(np.array(z)) - fd) < 1e-9


def test_wirtinger_pair_recombines(rng):
    t = random_table(rng)
    z = np.array(0.7 - 0.2j)
    dx = t.partial_x().evaluate(z)
    dz = t.partial_z().evaluate(z)
    dzb = t.partial_zbar().evaluate(z)
    assert abs(dx - (dz + dzb)) < 1e-13
    dy = t.partial_y().evaluate(z)
    assert abs(dy - 1j * (dz - dzb)) < 1e-13


def test_sup_bound_dominates(rng):
    t = random_table(rng)
    theta = np.linspace(0, 2 * np.pi, 64, endpoint=False)
    for r in (0.5, 1.0, 2.0):
        vals = np.abs(t.evaluate(r * np.exp(1j * theta)))
        assert vals.max() <= t.sup_bound(r) + 1e-12


def test_split_at_partitions(rng):
    t = random_table(rng, degree=4)
    low, high = t.split_at(2)
    z = np.array([1.1 + 0.3j])
    assert np.allclose((low + high).evaluate(z), t.evaluate(z), atol=1e-13)
    assert low.degree <= 2
    for a in range(high.coeffs.shape[0]):
        for b in range(high.coeffs.shape[1]):
            if high.coeffs[a, b] != 0:
                assert a + b > 2


def test_conjugate_evaluates_conjugate(rng):
    t = random_table(rng)
    z = np.array(0.2 + 0.9j)
    assert abs(t.conjugate().evaluate(z) - np.conj(t.evaluate(z))) < 1e-13


def test_realness_predicates():
    assert PolyTable.coord_x().is_real_valued()
    assert not PolyTable.monomial(1, 0).is_real_valued()
    assert PolyTable.monomial(3, 0).is_holomorphic()
    assert not PolyTable.coord_x().is_holomorphic()


def test_pairs_round_trip(rng):
    t = random_table(rng)
    back = PolyTable.from_pairs(t.to_pairs())
    assert back.allclose(t)


@settings(deadline=None, max_examples=50)
@given(st.integers(0, 4), st.integers(0, 4),
       st.floats(-2, 2), st.floats(-2, 2))
def test_single_term_partial_z(a, b, re, im):
    c = complex(re, im)
    t = PolyTable.monomial(a, b, c)
    z = np.array(0.6 + 0.35j)
    expect = 0 if a == 0 else a * c * z ** (a - 1) * np.conj(z) ** b
    assert abs(t.partial_z().evaluate(z) - expect) < 1e-12


def test_trim_drops_zero_rows():
    t = PolyTable.monomial(1, 0) + PolyTable.monomial(3, 2, 0.0)
    assert t.trim().degree == 1


def test_evaluate_scalar_shape():
    t = PolyTable.monomial(1, 1)
    out = t.evaluate(np.array(2.0 + 0j))
    assert out.shape == ()
    assert abs(out - 4.0) < 1e-15
