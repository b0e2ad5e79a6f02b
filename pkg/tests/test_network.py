import pytest
from hypothesis import given
from hypothesis import strategies as st

from mixed_autonomy.network import Heading, NetworkSpec, Topology, build_grid


def test_two_by_one_layout():
    net = build_grid(NetworkSpec(Topology.TWO_WAY, 2, 1))
    assert len(net.intersections) == 2
    assert [r.heading for r in net.roads] == [Heading.EAST, Heading.EAST, Heading.NORTH]
    assert net.roads[2].junctions == (0, 1)
    assert net.entry_lanes == [0, 2, 4]
    assert net.exit_lanes == [1, 3, 6]
    # the middle vertical lane is the exit of junction 0 and the approach of junction 1
    assert net.intersections[0].exits[Heading.NORTH] == net.intersections[1].approaches[Heading.NORTH] == 5


def test_four_way_has_all_headings_and_perpendicular_conflicts():
    net = build_grid(NetworkSpec(Topology.FOUR_WAY, 1, 1))
    inter = net.intersections[0]
    assert set(inter.approaches) == set(Heading)
    assert inter.conflicts(Heading.EAST, Heading.NORTH)
    assert inter.conflicts(Heading.WEST, Heading.SOUTH)
    assert not inter.conflicts(Heading.EAST, Heading.WEST)
    assert not inter.conflicts(Heading.NORTH, Heading.SOUTH)


def test_route_from_entry_rejects_inner_lane():
    net = build_grid(NetworkSpec(Topology.TWO_WAY, 2, 1))
    assert net.route_from_entry(4) == [4, 5, 6]
    with pytest.raises(ValueError):
        net.route_from_entry(5)


@pytest.mark.parametrize("kw", [{"rows": 0}, {"cols": -1}, {"rows": 1.5}, {"lane_length_m": 0}, {"speed_limit_mps": -1}])
def test_spec_validation(kw):
    with pytest.raises(ValueError):
        NetworkSpec(**kw)


def test_clockwise_order():
    assert [Heading.EAST.clockwise(k) for k in range(4)] == [Heading.EAST, Heading.SOUTH, Heading.WEST, Heading.NORTH]
    assert Heading.NORTH.clockwise(1) is Heading.EAST


@given(
    topo=st.sampled_from(list(Topology)),
    rows=st.integers(1, 4),
    cols=st.integers(1, 4),
)
def test_grid_structure(topo, rows, cols):
    net = build_grid(NetworkSpec(topo, rows, cols))
    assert len(net.intersections) == rows * cols
    per_axis = 1 if topo is Topology.TWO_WAY else 2
    assert len(net.roads) == per_axis * (rows + cols)
    for road in net.roads:
        assert len(road.lanes) == len(road.junctions) + 1
        lanes = [net.lanes[i] for i in road.lanes]
        assert lanes[0].upstream is None and lanes[-1].downstream is None
        for a, b in zip(lanes, lanes[1:]):
            assert a.downstream == b.upstream is not None
        for lane in lanes:
            assert net.road_of(lane.id) is road
    for inter in net.intersections:
        assert len(inter.approaches) == 2 * per_axis
        for h, lane in inter.approaches.items():
            assert net.lanes[lane].downstream == inter.id and net.lanes[lane].heading is h
        for h in inter.approaches:
            for g in inter.approaches:
                assert inter.conflicts(h, g) == (h.horizontal != g.horizontal)
    assert len(net.entry_lanes) == len(net.exit_lanes) == len(net.roads)
