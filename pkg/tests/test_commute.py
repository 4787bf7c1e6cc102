import math

import numpy as np
import pytest

from helpers import grid_tracts
from tracteq.commute import (
    GROUPS,
    ODTable,
    TraversalTable,
    assign_groups,
    load_od,
    nearest_node,
    read_traversal,
    route_traversals,
    scale_by_drive_share,
    simulate,
    write_traversal,
)
from tracteq.errors import ValidationError
from tracteq.network import Edge, Graph, build_edge_tract_map, shortest_path


def line_world(n_tracts=3, share=0.5, mode="split"):
    """n tracts in a row, one node at each tract center, a street between
    neighbors. With split attribution each 1 km edge leaves 500 m in both of
    the tracts it connects."""
    ts = grid_tracts(1, n_tracts, attr_fn=lambda r, c: {
        "population": 1000.0, "commuters": 200.0, "group_share": share,
    })
    nodes = {f"N{i}": (i * 1000.0 + 500.0, 500.0) for i in range(n_tracts)}
    edges = [Edge(f"N{i}", f"N{i+1}", 1000.0, 10.0) for i in range(n_tracts - 1)]
    g = Graph(nodes, edges)
    em = build_edge_tract_map(g, ts, mode=mode)
    return ts, g, em


def test_od_from_rows_merges_and_sorts():
    od = ODTable.from_rows([("B", "A", 3), ("A", "B", 2), ("B", "A", 4)])
    assert od.rows == (("A", "B", 2), ("B", "A", 7))
    assert od.total_workers == 9


def test_od_rejects_negative():
    with pytest.raises(ValidationError):
        ODTable.from_rows([("A", "B", -1)])


def test_load_od_basic(tmp_path):
    p = tmp_path / "od.csv"
    p.write_text("home,work,count\nA,B,3\nB,A,5\n")
    od = load_od(str(p))
    assert od.rows == (("A", "B", 3), ("B", "A", 5))


def test_load_od_rejects_fractional_count(tmp_path):
    p = tmp_path / "od.csv"
    p.write_text("home,work,count\nA,B,3.5\n")
    with pytest.raises(ValidationError, match="integer"):
        load_od(str(p))


def test_load_od_rejects_negative(tmp_path):
    p = tmp_path / "od.csv"
    p.write_text("home,work,count\nA,B,-2\n")
    with pytest.raises(ValidationError, match="negative"):
        load_od(str(p))


def test_load_od_drops_unknown_tracts(tmp_path, caplog):
    ts, _, _ = line_world(2)
    p = tmp_path / "od.csv"
    p.write_text("home,work,count\nT000000,T000001,3\nT000000,ZZZ,4\n")
    with caplog.at_level("WARNING"):
        od = load_od(str(p), ts)
    assert od.rows == (("T000000", "T000001", 3),)
    assert "dropped 1" in caplog.text


def test_load_od_all_dropped_errors(tmp_path):
    ts, _, _ = line_world(2)
    p = tmp_path / "od.csv"
    p.write_text("home,work,count\nX,Y,3\n")
    with pytest.raises(ValidationError, match="no usable"):
        load_od(str(p), ts)


def test_assign_fractional_hand_case():
    ts, _, _ = line_world(2, share=0.3)
    od = ODTable.from_rows([("T000000", "T000001", 10)])
    a = assign_groups(od, ts, mode="fractional")
    w = a.weights[("T000000", "T000001")]
    assert w["white"] == 3.0
    assert w["non_white"] == 7.0


def test_assign_weights_always_sum_to_count():
    ts, _, _ = line_world(3, share=0.37)
    od = ODTable.from_rows([("T000000", "T000002", 13), ("T000001", "T000000", 7)])
    for mode in ("fractional", "bernoulli"):
        a = assign_groups(od, ts, mode=mode, seed=5)
        for (h, w), groups in a.weights.items():
            count = dict(((hh, ww), c) for hh, ww, c in od.rows)[(h, w)]
            assert math.fsum(groups.values()) == count


def test_assign_degenerate_share():
    ts, _, _ = line_world(2, share=1.0)
    od = ODTable.from_rows([("T000000", "T000001", 8)])
    for mode in ("fractional", "bernoulli"):
        a = assign_groups(od, ts, mode=mode, seed=1)
        w = a.weights[("T000000", "T000001")]
        assert w["white"] == 8.0
        assert w["non_white"] == 0.0


def test_assign_bernoulli_reproducible_and_order_free():
    ts, _, _ = line_world(4, share=0.5)
    rows = [("T000000", "T000003", 9), ("T000001", "T000002", 5),
            ("T000002", "T000000", 11)]
    od_sorted = ODTable.from_rows(rows)
    od_reversed = ODTable.from_rows(list(reversed(rows)))
    a = assign_groups(od_sorted, ts, mode="bernoulli", seed=42)
    b = assign_groups(od_reversed, ts, mode="bernoulli", seed=42)
    assert a.weights == b.weights
    c = assign_groups(od_sorted, ts, mode="bernoulli", seed=43)
    assert c.weights != a.weights  # different seed moves at least one pair


def test_assign_unknown_mode_and_missing_share():
    ts, _, _ = line_world(2)
    od = ODTable.from_rows([("T000000", "T000001", 3)])
    with pytest.raises(ValueError):
        assign_groups(od, ts, mode="coinflip")
    bare = grid_tracts(1, 2)
    with pytest.raises(ValidationError, match="group share"):
        assign_groups(od, bare, mode="fractional")


def test_scale_by_drive_share():
    ts, _, _ = line_world(2, share=0.3)
    od = ODTable.from_rows([("T000000", "T000001", 10)])
    a = assign_groups(od, ts, mode="fractional")
    scaled = scale_by_drive_share(a, {"T000000": 0.5})
    w = scaled.weights[("T000000", "T000001")]
    assert w["white"] == 1.5
    assert w["non_white"] == 3.5
    with pytest.raises(ValidationError, match="no drive share"):
        scale_by_drive_share(a, {})
    with pytest.raises(ValidationError, match="outside"):
        scale_by_drive_share(a, {"T000000": 1.2})


def test_nearest_node_smallest_id_tie():
    g = Graph({"B": (0.0, 0.0), "A": (2.0, 0.0)}, [Edge("A", "B", 2.0, 1.0)])
    assert nearest_node(g, (1.0, 0.0)) == "A"
    assert nearest_node(g, (1.9, 0.0)) == "A"
    assert nearest_node(g, (0.1, 0.0)) == "B"


def test_simulate_single_pair_hand_totals():
    # home T000000, work T000002; the 2 km route leaves 0.5 / 1.0 / 0.5 km
    # in the three tracts per unit weight
    ts, g, em = line_world(3, share=0.25)
    od = ODTable.from_rows([("T000000", "T000002", 4)])
    a = assign_groups(od, ts, mode="fractional")
    table = simulate(od, ts, g, em, a)  # weights: white 1.0, non_white 3.0
    for tid, km in (("T000000", 0.5), ("T000001", 1.0), ("T000002", 0.5)):
        assert table.D[tid]["white"] == pytest.approx(km)
        assert table.D[tid]["non_white"] == pytest.approx(3.0 * km)
    assert table.C["T000000"]["white"] == 1.0
    assert table.C["T000000"]["non_white"] == 3.0
    assert "T000002" not in table.C
    assert table.n_pairs == 1
    assert table.n_unreachable == 0


def test_simulate_exclude_home_drops_home_distance_only():
    ts, g, em = line_world(3, share=0.5)
    od = ODTable.from_rows([("T000000", "T000002", 2)])
    a = assign_groups(od, ts, mode="fractional")
    table = simulate(od, ts, g, em, a, exclude_home=True)
    assert "T000000" not in table.D
    assert table.D["T000001"]["white"] == pytest.approx(1.0)
    assert table.D["T000002"]["white"] == pytest.approx(0.5)
    assert table.C["T000000"]["white"] == 1.0  # commuters still live at home


def test_simulate_two_pairs_accumulate():
    ts, g, em = line_world(3, share=0.5)
    od = ODTable.from_rows([
        ("T000000", "T000002", 2),  # 2 km: 0.5 T0, 1.0 T1, 0.5 T2 per unit
        ("T000001", "T000002", 2),  # 1 km: 0.5 T1, 0.5 T2 per unit
    ])
    a = assign_groups(od, ts, mode="fractional")
    table = simulate(od, ts, g, em, a)  # white weight 1 on each pair
    assert table.D["T000000"]["white"] == pytest.approx(0.5)
    assert table.D["T000001"]["white"] == pytest.approx(1.0 + 0.5)
    assert table.D["T000002"]["white"] == pytest.approx(0.5 + 0.5)
    assert table.total_km() == pytest.approx(2.0 * 2 + 1.0 * 2)


def test_simulate_same_tract_pair_contributes_commuters_only():
    ts, g, em = line_world(2, share=0.5)
    od = ODTable.from_rows([("T000000", "T000000", 6)])
    a = assign_groups(od, ts, mode="fractional")
    table = simulate(od, ts, g, em, a)
    assert table.D == {}
    assert table.C["T000000"]["white"] == 3.0


def test_simulate_unreachable_pairs_skipped():
    ts = grid_tracts(1, 2, attr_fn=lambda r, c: {"group_share": 0.5})
    # two disconnected components under their own tracts
    g = Graph(
        {"A": (400.0, 500.0), "B": (600.0, 500.0),
         "C": (1400.0, 500.0), "D": (1600.0, 500.0)},
        [Edge("A", "B", 200.0, 10.0), Edge("C", "D", 200.0, 10.0)],
    )
    em = build_edge_tract_map(g, ts, mode="midpoint")
    od = ODTable.from_rows([("T000000", "T000001", 5), ("T000000", "T000000", 3)])
    a = assign_groups(od, ts, mode="fractional")
    table = simulate(od, ts, g, em, a)
    assert table.n_unreachable == 1
    assert table.D == {}  # cross pair unreachable; same-pair routes nowhere
    assert table.C["T000000"]["white"] == 1.5  # only the reachable pair counts


def test_simulate_workers_bitwise_identical(step_scenario):
    sc = step_scenario
    a = assign_groups(sc.od, sc.tracts, mode="fractional")
    t1 = simulate(sc.od, sc.tracts, sc.graph, sc.edge_map, a, workers=1)
    t8 = simulate(sc.od, sc.tracts, sc.graph, sc.edge_map, a, workers=8)
    assert t1.D == t8.D
    assert t1.C == t8.C
    assert t1.n_unreachable == t8.n_unreachable


def test_route_traversals_precompute_matches_inline(step_scenario):
    sc = step_scenario
    a = assign_groups(sc.od, sc.tracts, mode="fractional")
    trav, unreachable = route_traversals(sc.od, sc.tracts, sc.graph, sc.edge_map)
    direct = simulate(sc.od, sc.tracts, sc.graph, sc.edge_map, a)
    reused = simulate(sc.od, sc.tracts, sc.graph, sc.edge_map, a, traversals=trav)
    assert direct.D == reused.D
    assert direct.C == reused.C
    assert direct.n_unreachable == reused.n_unreachable == unreachable


def test_traversal_roundtrip_exact(tmp_path, step_scenario):
    sc = step_scenario
    a = assign_groups(sc.od, sc.tracts, mode="bernoulli", seed=9)
    table = simulate(sc.od, sc.tracts, sc.graph, sc.edge_map, a)
    path = tmp_path / "trav.csv"
    write_traversal(table, str(path), header_lines=["written by a test"])
    back = read_traversal(str(path))
    assert back.groups == GROUPS
    for tid in table.tract_ids():
        for g in GROUPS:
            assert back.D.get(tid, {}).get(g, 0.0) == table.D.get(tid, {}).get(g, 0.0)
            assert back.C.get(tid, {}).get(g, 0.0) == table.C.get(tid, {}).get(g, 0.0)


def test_read_traversal_requires_header(tmp_path):
    p = tmp_path / "bad.csv"
    p.write_text("tract,group,km\nA,white,1\n")
    with pytest.raises(ValidationError, match="header"):
        read_traversal(str(p))


def test_uniform_share_splits_distance_proportionally(step_scenario):
    sc = step_scenario
    uniform = grid_tracts(
        sc.spec.rows, sc.spec.cols, sc.spec.cell_size,
        attr_fn=lambda r, c: {"group_share": 0.37},
    )
    a = assign_groups(sc.od, uniform, mode="fractional")
    table = simulate(sc.od, uniform, sc.graph, sc.edge_map, a)
    for tid in table.tract_ids():
        d_total = table.D_total(tid)
        if d_total > 0:
            assert table.D[tid]["white"] / d_total == pytest.approx(0.37, abs=1e-12)
        c_total = table.C_total(tid)
        if c_total > 0:
            assert table.C[tid]["white"] / c_total == pytest.approx(0.37, abs=1e-12)
