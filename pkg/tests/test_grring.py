import itertools

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from capit.abgroup import FiniteAbelianGroup, cyclic
from capit.extension import GAction
from capit.grring import (
    GroupMismatch,
    GroupRingElement,
    act,
    augmentation,
    augmentation_annihilator,
    augmentation_generators,
    det_adjugate,
    leibniz_det,
    matmul,
    multiply,
    norm_element,
)

GROUPS = [(2,), (3,), (4,), (2, 2), (6,), (2, 4), (2, 2, 2), (8,)]


def elements(g, lo=-3, hi=3):
    return st.lists(st.integers(lo, hi), min_size=g.order, max_size=g.order).map(
        lambda c: GroupRingElement(g, tuple(c))
    )


@st.composite
def group_and_elements(draw, n=2):
    g = FiniteAbelianGroup(draw(st.sampled_from(GROUPS)))
    return (g,) + tuple(draw(elements(g)) for _ in range(n))


def test_multiply_examples():
    g = cyclic(2)
    one = GroupRingElement.one(g)
    s = GroupRingElement.basis(g, (1,))
    x = GroupRingElement(g, (3, -2))
    assert x * one == x
    assert not multiply(s - one, s + one)
    nu = norm_element(g)
    for sigma in FiniteAbelianGroup((2, 2)).elements():
        v = FiniteAbelianGroup((2, 2))
        assert norm_element(v) * GroupRingElement.basis(v, sigma) == norm_element(v)
    assert nu * s == nu


def test_group_mismatch():
    with pytest.raises(GroupMismatch):
        multiply(GroupRingElement.one(cyclic(2)), GroupRingElement.one(cyclic(3)))


def test_augmentation_examples():
    for inv in GROUPS:
        g = FiniteAbelianGroup(inv)
        assert augmentation(norm_element(g)) == g.order
        for x in augmentation_generators(g):
            assert augmentation(x) == 0


def test_degree_of_matrix_entries():
    # m_ij = e_i delta_ij - theta_ij with theta in I_G has degree e_i delta_ij
    g = FiniteAbelianGroup((2, 2))
    ig = augmentation_generators(g)
    e = [2, 4]
    for i, j in itertools.product(range(2), repeat=2):
        theta = ig[(i + j) % len(ig)] * (i + 2 * j + 1)
        m = GroupRingElement.scalar(g, e[i] * (i == j)) - theta
        assert augmentation(m) == e[i] * (i == j)


@settings(max_examples=80, deadline=None)
@given(group_and_elements(3))
def test_ring_axioms(data):
    g, x, y, z = data
    assert x * y == y * x
    assert (x * y) * z == x * (y * z)
    assert x * (y + z) == x * y + x * z
    assert augmentation(x * y) == augmentation(x) * augmentation(y)


def test_det_adjugate_small_cases():
    g = cyclic(3)
    x = GroupRingElement(g, (1, 2, -1))
    det, adj = det_adjugate([[x]])
    assert det == x and adj == [[GroupRingElement.one(g)]]
    diag = [[GroupRingElement.scalar(g, e if i == j else 0) for j in range(3)] for i, e in enumerate([2, 3, 5])]
    assert det_adjugate(diag)[0] == GroupRingElement.scalar(g, 30)


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 4).flatmap(lambda n: st.tuples(st.just(n), st.sampled_from(GROUPS[:5]))), st.data())
def test_adjugate_identity(shape, data):
    n, inv = shape
    g = FiniteAbelianGroup(inv)
    m = [[data.draw(elements(g, -2, 2)) for _ in range(n)] for _ in range(n)]
    det, adj = det_adjugate(m)
    assert det == leibniz_det(m)
    scalar = [[det if i == j else GroupRingElement.zero(g) for j in range(n)] for i in range(n)]
    assert matmul(adj, m) == scalar
    assert matmul(m, adj) == scalar
    # augmentation is a ring map, so deg det M = det [deg m_ij]
    degs = [[GroupRingElement.scalar(g, augmentation(x)) for x in row] for row in m]
    assert augmentation(det) == augmentation(leibniz_det(degs))


def test_det_size_cap():
    g = cyclic(2)
    m = [[GroupRingElement.one(g)] * 7 for _ in range(7)]
    with pytest.raises(ValueError):
        det_adjugate(m)


@pytest.mark.parametrize("inv", [(1,), (2,), (3,), (4,), (2, 2), (5,), (6,), (7,), (2, 4), (2, 2, 2), (8,)])
def test_annihilator_of_augmentation_ideal_is_z_nu(inv):
    g = FiniteAbelianGroup(tuple(d for d in inv if d > 1))
    basis = augmentation_annihilator(g)
    assert len(basis) == 1
    b = basis[0]
    assert b == norm_element(g) or b == -norm_element(g)
    # and nu does kill I_G
    for x in augmentation_generators(g):
        assert not (norm_element(g) * x)


def test_annihilator_exhaustive_small():
    # every x with small coefficients killing I_G is a multiple of nu
    g = FiniteAbelianGroup((2, 2))
    ig = augmentation_generators(g)
    for coeffs in itertools.product(range(-1, 2), repeat=4):
        x = GroupRingElement(g, coeffs)
        if all(not (x * s) for s in ig):
            assert len(set(coeffs)) == 1


def test_action_on_module():
    g = cyclic(2)
    inv = GAction(g, cyclic(4), [[[3]]])
    triv = GAction.trivial(g, cyclic(4))
    one = GroupRingElement.one(g)
    s = GroupRingElement.basis(g, (1,))
    assert act(one, (3,), inv) == (3,)
    assert act(norm_element(g), (1,), inv) == (0,)
    assert act(norm_element(g), (1,), triv) == (2,)
    assert act(s - one, (1,), triv) == (0,)
    # N(a) is the sum of conjugates
    v = FiniteAbelianGroup((2, 2))
    act_v = GAction(v, cyclic(4), [[[3]], [[1]]])
    for a in cyclic(4).elements():
        total = cyclic(4).total(act_v.act(sigma, a) for sigma in v.elements())
        assert act(norm_element(v), a, act_v) == total
    with pytest.raises(GroupMismatch):
        act(GroupRingElement.one(cyclic(3)), (1,), inv)
