import pytest

from capit.abgroup import FiniteAbelianGroup, cyclic
from capit.census import census
from capit.extension import ExtensionGroup, GAction, TwoCocycle

S = (1,)


def make_z4():
    """Z/4 as an extension of Z/2 by Z/2: trivial action, c(s, s) = 1."""
    act = GAction.trivial(cyclic(2), cyclic(2))
    return ExtensionGroup(TwoCocycle(act, {(S, S): (1,)}), name="z4")


def make_q8():
    """Q8 over A = Z/4 with inversion and c(s, s) = 2."""
    act = GAction(cyclic(2), cyclic(4), [[[3]]])
    return ExtensionGroup(TwoCocycle(act, {(S, S): (2,)}), name="q8")


def make_d4():
    act = GAction(cyclic(2), cyclic(4), [[[3]]])
    return ExtensionGroup(TwoCocycle(act, {}), name="d4")


def naive_mul(ext, x, y):
    """The extension law evaluated straight from the action and cocycle."""
    (a, s), (b, t) = x, y
    A, G = ext.A, ext.G
    return (A.add(A.add(a, ext.action.act(s, b)), ext.cocycle(s, t)), G.add(s, t))


@pytest.fixture
def z4():
    return make_z4()


@pytest.fixture
def q8():
    return make_q8()


@pytest.fixture
def d4():
    return make_d4()


@pytest.fixture(scope="session")
def small_census():
    return [inst.ext for inst in census(16, class_cap=16)]


@pytest.fixture(scope="session")
def medium_census():
    return [inst.ext for inst in census(32, class_cap=8)]


def trivial_group():
    return FiniteAbelianGroup(())
