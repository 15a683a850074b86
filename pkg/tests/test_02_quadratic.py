import pytest
from fractions import Fraction

from src.errors import InvalidParams, ValidationError
from src.plumbing import lattice, spinc_classes
from src.quadratic import GradingContext, chi_k, chi_t, grading_constant, parse_t, zemke_bound


@pytest.mark.parametrize("text, expected", [
    ("0", Fraction(0)),
    ("2/3", Fraction(2, 3)),
    ("2", Fraction(2)),
    (Fraction(1, 2), Fraction(1, 2)),
])
def test_parse_t(text, expected):
    assert parse_t(text) == expected


@pytest.mark.parametrize("text", ["3", "-1/2", "abc", "1/0"])
def test_parse_t_rejects(text):
    with pytest.raises(InvalidParams):
        parse_t(text)


def test_trefoil_grading_constants(trefoil, trefoil_class):
    """
    k = (-1, -2, 1): k^2 = -3, c0 = 0, c1 = (k.F - F^2)/2 = 2.
    """
    _, lat = trefoil
    ctx = GradingContext.build(lat, trefoil_class.representative)
    assert ctx.ksq == -3
    assert ctx.c0 == 0
    assert ctx.c1 == 2
    assert grading_constant(ctx, Fraction(1)) == -2
    assert ctx.twisted().k == (-1, -2, 3)


def test_chi_values(trefoil, trefoil_class):
    """
    chi_k at known points, and the twisted term -(t/2) u.x.
    """
    _, lat = trefoil
    ctx = GradingContext.build(lat, trefoil_class.representative)
    assert chi_k(ctx, (0, 0, 0)) == 0
    # x = (1, 1, 3): k.x = 0, xQx = -2
    assert chi_k(ctx, (1, 1, 3)) == 1
    assert chi_t(ctx, Fraction(1), (1, 1, 3)) == Fraction(-1, 2)


def test_coset_identity(trefoil, trefoil_class):
    """
    c(k + 2Qx, t) = c(k, t) - 2 chi_t(x).
    """
    _, lat = trefoil
    ctx = GradingContext.build(lat, trefoil_class.representative)
    for x in [(1, 0, 0), (0, 2, -1), (1, 1, 3)]:
        shifted = ctx.shifted(x)
        for t in [Fraction(0), Fraction(1, 3), Fraction(2)]:
            assert grading_constant(shifted, t) == grading_constant(ctx, t) - 2 * chi_t(ctx, t, x)


def test_rp3_constants(rp3):
    _, lat = rp3
    ctx = GradingContext.build(lat, (0,))
    assert ctx.c0 == Fraction(1, 4)
    assert ctx.c1 == Fraction(1, 4)
    other = GradingContext.build(lat, (-2,))
    assert other.c0 == Fraction(-1, 4)
    assert other.c1 == Fraction(-1, 4)


def test_non_characteristic_rejected(rp3):
    _, lat = rp3
    with pytest.raises(ValidationError):
        GradingContext.build(lat, (1,))


def test_disk_bound_matches_constants(graphs):
    """
    The independently solved bound equals the cached grading constant.
    """
    for name in ("trefoil", "double-cover", "torus34"):
        lat = lattice(graphs[name])
        for spinc in spinc_classes(lat):
            ctx = GradingContext.build(lat, spinc.representative)
            for t in [Fraction(0), Fraction(2, 3), Fraction(2)]:
                assert zemke_bound(ctx, t) == grading_constant(ctx, t)
