import itertools
import random
from fractions import Fraction

import pytest

from src.errors import AuditFailure, InvalidParams, NotNegativeDefinite
from src.linalg import dot, quadratic, round_half_up
from src.plumbing import SpincClass, bad_vertices, connected_sum, lattice, parse, spinc_classes
from src.quadratic import GradingContext, chi_t, grading_constant
from src.upsilon import (
    _ceil_sqrt,
    PiecewiseLinearFn,
    UpsilonEngine,
    d_invariant,
    d_oracle,
    minimize_chi,
    real_minimizer,
    tau,
    upsilon,
    zemke_audit,
)

F = Fraction
SAMPLE_TS = [F(j, 8) for j in range(17)]


def brute_upsilon(lat, k, t, radius=3):
    """
    max over a box around the rounded real minimizer, plus the grading constant.
    """
    ctx = GradingContext.build(lat, k)
    center = [round_half_up(c) for c in real_minimizer(ctx, t)]
    twisted = tuple(ki + t * ui for ki, ui in zip(k, lat.v0))
    best = max(
        dot(twisted, x) + quadratic(lat.form, x)
        for z in itertools.product(range(-radius, radius + 1), repeat=lat.order)
        for x in [tuple(c + zi for c, zi in zip(center, z))]
    )
    return best + grading_constant(ctx, t)


def test_trefoil_upsilon(trefoil, trefoil_class):
    """
    Breakpoints (0,0), (1,-1), (2,0); tau = 1; d = 0.
    """
    _, lat = trefoil
    f = upsilon(lat, trefoil_class)
    assert f.breakpoints == ((F(0), F(0)), (F(1), F(-1)), (F(2), F(0)))
    assert tau(f) == 1
    assert d_invariant(f) == 0
    for t in SAMPLE_TS:
        assert f(t) == brute_upsilon(lat, trefoil_class.representative, t, radius=4)


def test_unknot_upsilon(unknot):
    _, lat = unknot
    f = upsilon(lat, spinc_classes(lat)[0])
    assert f.breakpoints == ((F(0), F(0)), (F(2), F(0)))
    assert tau(f) == 0
    assert d_invariant(f) == 0


def test_rp3_upsilon(rp3):
    """
    Upsilon = 1/4 - t/4 and -1/4 + t/4 on the two classes.
    """
    _, lat = rp3
    curves = [upsilon(lat, s).breakpoints for s in spinc_classes(lat)]
    assert curves == [
        ((F(0), F(1, 4)), (F(2), F(-1, 4))),
        ((F(0), F(-1, 4)), (F(2), F(1, 4))),
    ]


@pytest.mark.parametrize("name, expected_tau", [("torus25", 2), ("torus34", 3)])
def test_torus_knot_tau(graphs, name, expected_tau):
    lat = lattice(graphs[name])
    spinc = spinc_classes(lat)[0]
    f = upsilon(lat, spinc)
    assert tau(f) == expected_tau
    assert d_invariant(f) == 0
    assert f.is_convex()
    for t in [F(0), F(1, 3), F(2, 3), F(1), F(3, 2), F(2)]:
        assert f(t) == brute_upsilon(lat, spinc.representative, t, radius=3)


def test_double_cover_against_oracles(double_cover):
    """
    Each class matches the brute-force curve and the d oracle.
    """
    _, lat = double_cover
    for spinc in spinc_classes(lat):
        f = upsilon(lat, spinc)
        assert f.is_convex()
        assert d_invariant(f) == d_oracle(lat, spinc, 2)
        for t in [F(0), F(1, 2), F(1), F(5, 4), F(2)]:
            assert f(t) == brute_upsilon(lat, spinc.representative, t, radius=3)


def test_coset_invariance(trefoil, trefoil_class, double_cover):
    """
    Any representative of the class gives the same breakpoints.
    """
    rng = random.Random(7)
    for lat, spinc in [(trefoil[1], trefoil_class), (double_cover[1], spinc_classes(double_cover[1])[1])]:
        base = upsilon(lat, spinc)
        for _ in range(5):
            z = tuple(rng.randint(-2, 2) for _ in range(lat.order))
            moved = SpincClass(lat.shift(spinc.representative, z), spinc.index)
            assert upsilon(lat, moved).breakpoints == base.breakpoints


def test_minimizer_certificate_matches_box_search(graphs):
    """
    The certified minimum equals an exhaustive search of a box that contains
    the search radius.
    """
    rng = random.Random(11)
    for name in ("trefoil", "double-cover", "chain22", "torus25"):
        lat = lattice(graphs[name])
        for spinc in spinc_classes(lat):
            ctx = GradingContext.build(lat, spinc.representative)
            t = F(rng.randint(0, 12), 6)
            cert = minimize_chi(ctx, t)
            best, argmin = box_minimum(ctx, t, cert)
            assert cert.min_value == best
            assert cert.argmin == argmin


def test_connected_sum_is_additive(graphs, trefoil, trefoil_class):
    _, lat = trefoil
    single = upsilon(lat, trefoil_class)
    total = lattice(connected_sum(graphs["trefoil"], graphs["trefoil"]))
    doubled = upsilon(total, spinc_classes(total)[0])
    assert doubled.breakpoints == (single + single).breakpoints
    assert tau(doubled) == 2


def test_piecewise_validation():
    with pytest.raises(InvalidParams):
        PiecewiseLinearFn(((F(0), F(0)), (F(1), F(0))))
    with pytest.raises(InvalidParams):
        PiecewiseLinearFn(((F(0), F(0)), (F(1), F(0)), (F(1), F(1)), (F(2), F(0))))
    f = PiecewiseLinearFn(((F(0), F(0)), (F(2), F(4))))
    assert f(F(1, 2)) == 1
    with pytest.raises(InvalidParams):
        f(F(3))


def test_zemke_audit(trefoil, trefoil_class):
    """
    The trefoil curve is sharp; a lowered curve is caught.
    """
    _, lat = trefoil
    f = upsilon(lat, trefoil_class)
    report = zemke_audit(lat, trefoil_class, f, 2)
    # boxes around z = 0 and around the rounded t = 1 minimizer (1, 1, 2) share 4 * 4 * 3 points
    assert report.vectors_checked == 125 + 125 - 48
    assert report.sharp
    lowered = PiecewiseLinearFn(((F(0), F(-1)), (F(2), F(-1))))
    with pytest.raises(AuditFailure):
        zemke_audit(lat, trefoil_class, lowered, 2)


def test_engine_compute(mock_config, double_cover):
    graph, lat = double_cover
    engine = UpsilonEngine(mock_config)
    results = [engine.compute(lat, s, len(bad_vertices(graph))) for s in spinc_classes(lat)]
    assert [item.spinc.index for item in results] == [0, 1, 2]
    for item in results:
        assert item.sharp_expected
        assert 625 <= item.audit.vectors_checked <= 1250
        assert item.upsilon(F(0)) == item.d
        assert item.tau == -item.upsilon.slopes()[0]


def box_minimum(ctx, t, cert):
    """
    Exhaustive min of chi_t over a box one wider than the certified search radius.
    """
    center = [round_half_up(c) for c in real_minimizer(ctx, t)]
    reach = int(cert.search_radius) + 1
    values = {
        x: chi_t(ctx, t, x)
        for z in itertools.product(range(-reach, reach + 1), repeat=ctx.lattice.order)
        for x in [tuple(c + zi for c, zi in zip(center, z))]
    }
    best = min(values.values())
    return best, min(x for x, v in values.items() if v == best)


def random_lattice(rng, order):
    lines = [f"x{i} {rng.randint(-4, -1)}" for i in range(order)] + ["v0 *", "edges:"]
    lines += [f"x{i} x{rng.randrange(i)}" for i in range(1, order)]
    lines.append(f"x{rng.randrange(order)} v0")
    return lattice(parse("\n".join(lines) + "\n"))


def test_ceil_sqrt():
    assert [_ceil_sqrt(F(v)) for v in (-3, 0, 1, 2, 4, 5)] == [0, 0, 1, 2, 2, 3]
    assert _ceil_sqrt(F(9, 4)) == 2
    assert _ceil_sqrt(F(10**20 + 1)) == 10**10 + 1


@pytest.mark.slow
def test_coset_invariance_all_fixtures(graphs):
    """
    Twenty random representatives per class on every fixture give the same curve.
    """
    rng = random.Random(5)
    for name, graph in graphs.items():
        lat = lattice(graph)
        for spinc in spinc_classes(lat):
            base = upsilon(lat, spinc)
            for _ in range(20):
                z = tuple(rng.randint(-3, 3) for _ in range(lat.order))
                moved = SpincClass(lat.shift(spinc.representative, z), spinc.index)
                assert upsilon(lat, moved).breakpoints == base.breakpoints, (name, spinc.index, z)


@pytest.mark.slow
def test_minimizer_certificate_random_instances():
    """
    200 random definite trees with up to four vertices: the certificate agrees
    with exhaustive search.
    """
    rng = random.Random(2024)
    checked = 0
    while checked < 200:
        try:
            lat = random_lattice(rng, rng.randint(1, 4))
        except NotNegativeDefinite:
            continue
        if abs(lat.det) > 40:
            continue
        spinc = rng.choice(spinc_classes(lat))
        ctx = GradingContext.build(lat, spinc.representative)
        t = F(rng.randint(0, 24), 12)
        cert = minimize_chi(ctx, t)
        if cert.search_radius > 4:
            continue
        best, argmin = box_minimum(ctx, t, cert)
        assert cert.min_value == best, (lat.form, spinc.representative, t)
        assert cert.argmin == argmin
        checked += 1
