from fractions import Fraction

import pytest

from src import cubecx
from src.errors import CapacityError, ConfigError, InvalidParams, MissingFreePart
from src.persistence import Bar, Barcode, prefix_ranks_mod2, rank_mod2, reduce_boundary
from src.plumbing import bad_vertices, lattice, spinc_classes
from src.quadratic import GradingContext, chi_t
from src.upsilon import minimize_chi, upsilon

F = Fraction


def test_reduce_boundary_small_complex():
    """
    Two vertices joined late by an edge: one infinite bar and one bar of length 1.
    """
    barcode = reduce_boundary([F(0), F(1), F(2)], [0, 0, 1], [set(), set(), {0, 1}])
    assert barcode.bars == (Bar(0, F(0), None), Bar(0, F(1), F(1)))
    assert barcode.reduced().bars == (Bar(0, F(1), F(1)),)
    assert barcode.cut(F(3, 2)) == {(0, F(0), None): 1, (0, F(1), None): 1}


def test_zero_length_bars_dropped():
    barcode = reduce_boundary([F(0), F(0), F(0)], [0, 0, 1], [set(), set(), {0, 1}])
    assert barcode.bars == (Bar(0, F(0), None),)
    assert barcode.to_json() == {"0": [{"birth": "0", "length": "inf"}]}


def test_rank_mod2():
    assert rank_mod2([{1, 2}, {2, 3}, {1, 3}]) == 2
    assert rank_mod2([set(), {4}]) == 1


def test_prefix_ranks_mod2():
    """
    Ranks accumulate group by group; a dependent vector adds nothing.
    """
    assert prefix_ranks_mod2([[{1, 2}], [{2, 3}, {1, 3}], [{4}]]) == [1, 2, 3]
    assert prefix_ranks_mod2([]) == []


def test_cells_and_faces():
    assert cubecx.cell_count(3, 1) == 125
    assert cubecx.faces(((0, 0), (0, 1))) == [
        ((0, 0), (1,)), ((1, 0), (1,)), ((0, 0), (0,)), ((0, 1), (0,)),
    ]


def test_build_limits(rp3, monkeypatch, mock_config):
    _, lat = rp3
    spinc = spinc_classes(lat)[0]
    monkeypatch.delenv("PLUMBCALC_MAX_CELLS", raising=False)
    with pytest.raises(InvalidParams):
        cubecx.build(lat, spinc, F(0), -1)
    with pytest.raises(CapacityError):
        cubecx.build(lat, spinc, F(0), 10, max_cells=20)
    assert cubecx.max_cells_limit(mock_config) == 200000
    monkeypatch.setenv("PLUMBCALC_MAX_CELLS", "50")
    assert cubecx.max_cells_limit(mock_config) == 50


def test_weights_on_vertices_are_twice_chi(trefoil, trefoil_class):
    """
    w_t at a vertex is 2 chi_t, and the free bar is born at 2 min chi_t.
    """
    _, lat = trefoil
    t = F(1)
    complex_ = cubecx.build(lat, trefoil_class, t, 2)
    ctx = complex_.context

    for cell in complex_.cells:
        if not cell[1]:
            assert complex_.weight_t[cell] == 2 * chi_t(ctx, t, cell[0])
    barcode = cubecx.persistence(complex_)
    free = barcode.infinite()
    assert len(free) == 1 and free[0].degree == 0
    assert free[0].birth == 2 * minimize_chi(ctx, t).min_value
    assert cubecx.upsilon_from_barcode(barcode, ctx, t) == -1


@pytest.mark.parametrize("t", [F(0), F(1, 2), F(1)])
def test_homology_matches_minimizer(mock_config, trefoil, trefoil_class, t):
    """
    Upsilon read off the stabilized barcode equals the exact curve.
    """
    _, lat = trefoil
    engine = cubecx.CubeComplexEngine(mock_config)
    result = engine.homology(lat, trefoil_class, t)
    assert result.upsilon == upsilon(lat, trefoil_class)(t)
    assert len(result.barcode.infinite()) == 1


@pytest.mark.parametrize("t", [F(0), F(2, 3), F(2)])
def test_no_bad_vertices_no_torsion(mock_config, rp3, unknot, t):
    """
    Floer simple fixtures: one free bar and an empty reduced barcode.
    """
    engine = cubecx.CubeComplexEngine(mock_config)
    for _, lat in (rp3, unknot):
        for spinc in spinc_classes(lat):
            result = engine.homology(lat, spinc, t)
            assert result.reduced.bars == ()
            assert result.upsilon == upsilon(lat, spinc)(t)


def test_alexander_filtration_property(trefoil, trefoil_class):
    """
    A(face) - (w_k(cell) - w_k(face)) <= A(cell) on every face pair.
    """
    _, lat = trefoil
    complex_ = cubecx.build(lat, trefoil_class, F(1, 2), 1)
    for cell in complex_.cells:
        for face in cubecx.faces(cell):
            drop = complex_.weight_k[cell] - complex_.weight_k[face]
            assert cubecx.alexander(complex_, face) - drop <= cubecx.alexander(complex_, cell)


def test_sublevel_radius(rp3, trefoil, trefoil_class):
    _, lat = rp3
    ctx = GradingContext.build(lat, (0,))
    assert cubecx.sublevel_radius(ctx, F(0), F(2)) == 1
    assert cubecx.sublevel_radius(ctx, F(0), F(-1)) == 0
    _, tref = trefoil
    tctx = GradingContext.build(tref, trefoil_class.representative)
    radius = cubecx.sublevel_radius(tctx, F(1), F(1))
    assert radius >= 3


def test_missing_free_part():
    with pytest.raises(MissingFreePart):
        cubecx.upsilon_from_barcode(Barcode(()), None, F(0))


def test_small_box_is_grown(mock_config, trefoil, trefoil_class):
    """
    Starting from N = 0 still reaches the stable answer.
    """
    _, lat = trefoil
    result = cubecx.CubeComplexEngine(mock_config).homology(lat, trefoil_class, F(1), box=0)
    assert result.upsilon == -1
    assert result.box >= 0


def test_capacity_from_environment(monkeypatch, mock_config, trefoil, trefoil_class):
    _, lat = trefoil
    monkeypatch.setenv("PLUMBCALC_MAX_CELLS", "100")
    with pytest.raises(CapacityError):
        cubecx.CubeComplexEngine(mock_config).homology(lat, trefoil_class, F(1))


def test_non_numeric_capacity_rejected(monkeypatch, mock_config):
    monkeypatch.setenv("PLUMBCALC_MAX_CELLS", "abc")
    with pytest.raises(ConfigError):
        cubecx.max_cells_limit(mock_config)


def test_stabilize_stops_at_sublevel_radius(monkeypatch, rp3):
    """
    A start box already covering the sublevel set of the cutoff is built once.
    """
    _, lat = rp3
    spinc = spinc_classes(lat)[0]
    ctx = GradingContext.build(lat, spinc.representative)
    radius = cubecx.sublevel_radius(ctx, F(0), F(2))
    built = []
    original = cubecx.build

    def counting_build(*args, **kwargs):
        built.append(args[3])
        return original(*args, **kwargs)

    monkeypatch.setattr(cubecx, "build", counting_build)
    box, barcode = cubecx.stabilize(lat, spinc, F(0), radius, F(2))
    assert box == radius
    assert built == [radius]
    assert cubecx.upsilon_from_barcode(barcode, ctx, F(0)) == upsilon(lat, spinc)(F(0))


@pytest.mark.slow
def test_filtration_monotone_exhaustive(graphs):
    """
    weight_t(face) <= weight_t(cell) for every face of every cell, on each
    fixture with at most three vertices, all classes, N <= 3.
    """
    for name, graph in graphs.items():
        lat = lattice(graph)
        if lat.order > 3:
            continue
        for spinc in spinc_classes(lat):
            for box in (1, 2, 3):
                for t in (F(0), F(1, 3), F(1), F(2)):
                    complex_ = cubecx.build(lat, spinc, t, box)
                    members = set(complex_.cells)
                    for cell in complex_.cells:
                        for face in cubecx.faces(cell):
                            assert face in members, (name, cell, face)
                            assert complex_.weight_t[face] <= complex_.weight_t[cell], (name, t, cell, face)


@pytest.mark.slow
def test_barcode_on_fixtures_with_few_bad_vertices(graphs):
    """
    On every fixture with at most two bad vertices, over nine t values: the
    free bar gives the minimizer Upsilon, and no reduced bar born below the
    cutoff reaches degree n for n bad vertices (none at all when n = 0).
    """
    ts = [F(j, 4) for j in range(9)]
    for name, graph in graphs.items():
        bad = len(bad_vertices(graph))
        if bad > 2:
            continue
        lat = lattice(graph)
        for spinc in spinc_classes(lat):
            ctx = GradingContext.build(lat, spinc.representative)
            curve = upsilon(lat, spinc)
            for t in ts:
                cutoff = 2 * minimize_chi(ctx, t).min_value + 2
                radius = cubecx.sublevel_radius(ctx, t, cutoff)
                _, barcode = cubecx.stabilize(lat, spinc, t, max(radius, 1), cutoff)
                assert len(barcode.infinite()) == 1
                assert cubecx.upsilon_from_barcode(barcode, ctx, t) == curve(t), (name, spinc.index, t)
                below = Barcode.of(bar for bar in barcode.reduced().bars if bar.birth <= cutoff)
                assert below.max_degree() < max(bad, 1), (name, spinc.index, t)
                if bad == 0:
                    assert below.bars == (), (name, spinc.index, t)
