import itertools

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from capit.abgroup import (
    ElementOutOfGroup,
    FiniteAbelianGroup,
    Homomorphism,
    IncompatibleHom,
    InfiniteQuotient,
    all_subgroups,
    cyclic,
    from_presentation,
    hom_image,
    hom_kernel,
    invariants_from_order_counts,
    matmul,
    quotient,
    smith_normal_form,
    span_set,
    subgroup_generated,
)


def _det(m):
    n = len(m)
    if n == 0:
        return 1
    total = 0
    for perm in itertools.permutations(range(n)):
        sign = 1
        for i in range(n):
            for j in range(i + 1, n):
                if perm[i] > perm[j]:
                    sign = -sign
        p = 1
        for i in range(n):
            p *= m[i][perm[i]]
        total += sign * p
    return total


def _diag_ok(d):
    k = min(len(d), len(d[0]) if d else 0)
    for i, row in enumerate(d):
        for j, x in enumerate(row):
            if i != j and x:
                return False
    diag = [d[i][i] for i in range(k)]
    if any(x < 0 for x in diag):
        return False
    for a, b in zip(diag, diag[1:]):
        if a == 0 and b != 0:
            return False
        if a and b % a:
            return False
    return True


def brute_order(group, gens):
    return len(span_set(group, gens))


class TestSmithNormalForm:
    def test_identity(self):
        u, d, v = smith_normal_form([[1, 0], [0, 1]])
        assert d == [[1, 0], [0, 1]]
        assert matmul(matmul(u, [[1, 0], [0, 1]]), v) == d

    def test_diag_2_3(self):
        _, d, _ = smith_normal_form([[2, 0], [0, 3]])
        assert d == [[1, 0], [0, 6]]

    def test_4224(self):
        _, d, _ = smith_normal_form([[4, 2], [2, 4]])
        assert d == [[2, 0], [0, 6]]

    def test_zero_and_empty_rows(self):
        m = [[0, 0, 0], [0, 0, 0]]
        u, d, v = smith_normal_form(m)
        assert d == m

    @settings(max_examples=60, deadline=None)
    @given(
        st.integers(1, 12).flatmap(
            lambda r: st.integers(1, 12).flatmap(
                lambda c: st.lists(
                    st.lists(st.integers(-99, 99), min_size=c, max_size=c), min_size=r, max_size=r
                )
            )
        )
    )
    def test_round_trip(self, m):
        u, d, v = smith_normal_form(m)
        assert matmul(matmul(u, m), v) == d
        assert _diag_ok(d)
        if len(u) <= 7:
            assert abs(_det(u)) == 1
        if len(v) <= 7:
            assert abs(_det(v)) == 1

    @settings(max_examples=40, deadline=None)
    @given(st.lists(st.lists(st.integers(-9, 9), min_size=3, max_size=3), min_size=3, max_size=3))
    def test_determinant_preserved(self, m):
        _, d, _ = smith_normal_form(m)
        assert abs(_det(m)) == abs(d[0][0] * d[1][1] * d[2][2])


class TestGroups:
    def test_canonical_form(self):
        assert FiniteAbelianGroup.from_orders([2, 3]).invariants == (6,)
        assert FiniteAbelianGroup.from_orders([4, 2, 1]).invariants == (2, 4)
        with pytest.raises(ValueError):
            FiniteAbelianGroup((4, 2))
        with pytest.raises(ValueError):
            FiniteAbelianGroup((1, 2))

    def test_trivial(self):
        g = FiniteAbelianGroup(())
        assert g.order == 1
        assert list(g.elements()) == [()]

    def test_lexicographic_elements(self):
        g = FiniteAbelianGroup((2, 4))
        els = list(g.elements())
        assert els == sorted(els)
        assert len(els) == 8

    def test_check(self):
        with pytest.raises(ElementOutOfGroup):
            cyclic(4).check((4,))
        with pytest.raises(ElementOutOfGroup):
            cyclic(4).check((1, 1))


class TestPresentation:
    def test_cyclic(self):
        g, _ = from_presentation(1, [[4]])
        assert g.invariants == (4,)

    def test_klein(self):
        g, _ = from_presentation(2, [[2, 0], [0, 2]])
        assert g.invariants == (2, 2)

    def test_mixed(self):
        g, proj = from_presentation(2, [[2, 1], [0, 2]])
        assert g.invariants == (4,)
        # the projection kills the relations
        assert not any(proj([2, 1]))
        assert not any(proj([0, 2]))

    def test_infinite(self):
        with pytest.raises(InfiniteQuotient):
            from_presentation(2, [[2, 0]])

    @settings(max_examples=50, deadline=None)
    @given(st.lists(st.sampled_from([2, 3, 4, 6, 8, 9, 12]), min_size=0, max_size=4))
    def test_known_group_is_fixed(self, orders):
        g = FiniteAbelianGroup.from_orders(orders)
        rels = [[d if i == j else 0 for j in range(g.rank)] for i, d in enumerate(g.invariants)]
        h, _ = from_presentation(g.rank, rels)
        assert h.invariants == g.invariants

    @settings(max_examples=50, deadline=None)
    @given(st.lists(st.lists(st.integers(-6, 6), min_size=2, max_size=2), min_size=1, max_size=4))
    def test_projection_is_onto_and_kills_relations(self, extra):
        rels = [[6, 0], [0, 4]] + extra
        g, proj = from_presentation(2, rels)
        for r in rels:
            assert not any(proj(r))
        images = {proj([x, y]) for x in range(6) for y in range(4)}
        assert len(images) == g.order


class TestSubgroupsAndQuotients:
    def test_subgroup_examples(self):
        assert subgroup_generated(cyclic(4), [(0,)])[0].order == 1
        assert subgroup_generated(cyclic(4), [(2,)])[0].invariants == (2,)
        sub, emb = subgroup_generated(FiniteAbelianGroup((2, 4)), [(1, 1)])
        assert sub.invariants == (4,)
        assert emb.is_injective()

    def test_subgroup_bad_element(self):
        with pytest.raises(ElementOutOfGroup):
            subgroup_generated(cyclic(4), [(5,)])

    def test_quotient_examples(self):
        assert quotient(cyclic(4), [(2,)])[0].invariants == (2,)
        assert quotient(FiniteAbelianGroup((2, 4)), [])[0].invariants == (2, 4)
        assert quotient(FiniteAbelianGroup((2, 2)), [(1, 1)])[0].invariants == (2,)

    @settings(max_examples=60, deadline=None)
    @given(
        st.lists(st.sampled_from([2, 3, 4, 6, 8]), min_size=1, max_size=3).flatmap(
            lambda orders: st.tuples(
                st.just(orders),
                st.lists(st.lists(st.integers(0, 50), min_size=len(orders), max_size=len(orders)), max_size=3),
            )
        )
    )
    def test_order_bookkeeping(self, data):
        orders, raw = data
        g = FiniteAbelianGroup.from_orders(orders)
        gens = [g.reduce(x[: g.rank] + [0] * (g.rank - len(x))) for x in raw]
        sub, emb = subgroup_generated(g, gens)
        q, _ = quotient(g, gens)
        assert sub.order == brute_order(g, gens)
        assert g.order == sub.order * q.order
        assert emb.is_injective()
        assert {emb(x) for x in sub.elements()} == set(span_set(g, gens))

    def test_all_subgroups_counts(self):
        # numbers of subgroups: Z/2^2 -> 5, Z/2^3 -> 16, Z/2 x Z/4 -> 8
        assert len(all_subgroups(FiniteAbelianGroup((2, 2)))) == 5
        assert len(all_subgroups(FiniteAbelianGroup((2, 2, 2)))) == 16
        assert len(all_subgroups(FiniteAbelianGroup((2, 4)))) == 8


class TestHomomorphisms:
    def test_zero_map(self):
        h = Homomorphism(cyclic(4), cyclic(2))
        assert hom_kernel(h)[0].invariants == (4,)

    def test_reduction(self):
        h = Homomorphism.from_images(cyclic(4), cyclic(2), [(1,)])
        assert hom_kernel(h)[0].invariants == (2,)

    def test_sum_map(self):
        v = FiniteAbelianGroup((2, 2))
        h = Homomorphism.from_images(v, cyclic(2), [(1,), (1,)])
        ker, emb = hom_kernel(h)
        assert ker.invariants == (2,)
        assert {emb(x) for x in ker.elements()} == {(0, 0), (1, 1)}

    def test_incompatible(self):
        with pytest.raises(IncompatibleHom):
            Homomorphism.from_images(cyclic(2), cyclic(4), [(1,)])

    @settings(max_examples=60, deadline=None)
    @given(
        st.sampled_from([(2,), (4,), (2, 2), (2, 4), (6,), (3, 3)]),
        st.sampled_from([(2,), (4,), (2, 2), (2, 4), (12,)]),
        st.randoms(use_true_random=False),
    )
    def test_kernel_image_orders(self, dom_inv, cod_inv, rnd):
        dom, cod = FiniteAbelianGroup(dom_inv), FiniteAbelianGroup(cod_inv)
        images = []
        for d in dom.invariants:
            allowed = [x for x in cod.elements() if not any(cod.scale(d, x))]
            images.append(rnd.choice(allowed))
        h = Homomorphism.from_images(dom, cod, images)
        ker, emb = hom_kernel(h)
        im, _ = hom_image(h)
        assert ker.order * im.order == dom.order
        brute_ker = [x for x in dom.elements() if not any(h(x))]
        assert len(brute_ker) == ker.order
        assert all(not any(h(emb(x))) for x in ker.gens())
        assert len({h(x) for x in dom.elements()}) == im.order


def test_invariants_from_order_counts():
    for inv in [(2,), (2, 4), (2, 2, 8), (6, 12), (3, 9)]:
        g = FiniteAbelianGroup(inv)
        counts = lambda n: sum(1 for x in g.elements() if not any(g.scale(n, x)))  # noqa: E731
        assert invariants_from_order_counts(g.order, counts) == inv
