"""Grid networks of single-lane, through-only intersections.

A network is a set of straight roads. Each road is a chain of equal-length
lane segments separated by intersections; a horizontal road ``r`` crosses
every vertical road ``c`` at intersection ``(r, c)``. Row 0 is the southern
road and column 0 the western one.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field


class Topology(str, enum.Enum):
    TWO_WAY = "two_way"
    FOUR_WAY = "four_way"


class Heading(str, enum.Enum):
    EAST = "E"
    NORTH = "N"
    WEST = "W"
    SOUTH = "S"

    @property
    def horizontal(self) -> bool:
        return self in (Heading.EAST, Heading.WEST)

    @property
    def opposite(self) -> Heading:
        return _OPPOSITE[self]

    def clockwise(self, k: int) -> Heading:
        """Heading of the approach ``k`` positions clockwise around a junction.

        Approaches are ordered by the side they come from: west (Eastbound),
        north (Southbound), east (Westbound), south (Northbound).
        """
        i = _CLOCKWISE.index(self)
        return _CLOCKWISE[(i + k) % 4]


_OPPOSITE = {
    Heading.EAST: Heading.WEST,
    Heading.WEST: Heading.EAST,
    Heading.NORTH: Heading.SOUTH,
    Heading.SOUTH: Heading.NORTH,
}
_CLOCKWISE = (Heading.EAST, Heading.SOUTH, Heading.WEST, Heading.NORTH)


@dataclass(frozen=True)
class NetworkSpec:
    topology: Topology = Topology.TWO_WAY
    rows: int = 1
    cols: int = 1
    lane_length_m: float = 100.0
    speed_limit_mps: float = 13.0

    def __post_init__(self):
        object.__setattr__(self, "topology", Topology(self.topology))
        if int(self.rows) != self.rows or self.rows < 1:
            raise ValueError(f"rows must be a positive integer, got {self.rows!r}")
        if int(self.cols) != self.cols or self.cols < 1:
            raise ValueError(f"cols must be a positive integer, got {self.cols!r}")
        if not self.lane_length_m > 0:
            raise ValueError("lane_length_m must be positive")
        if not self.speed_limit_mps > 0:
            raise ValueError("speed_limit_mps must be positive")

    @property
    def key(self) -> str:
        """Short name such as ``two_way_2x1``."""
        return f"{self.topology.value}_{self.rows}x{self.cols}"


@dataclass(frozen=True)
class Lane:
    id: int
    name: str
    heading: Heading
    length_m: float
    upstream: int | None  # intersection id, None for a network entry
    downstream: int | None  # intersection id, None for a network exit
    road: int
    index: int  # segment index along the road


@dataclass(frozen=True)
class Intersection:
    id: int
    row: int
    col: int
    approaches: dict[Heading, int]
    exits: dict[Heading, int]
    conflict_pairs: frozenset[frozenset[Heading]]

    def conflicts(self, a: Heading, b: Heading) -> bool:
        return frozenset((a, b)) in self.conflict_pairs


@dataclass(frozen=True)
class Road:
    id: int
    heading: Heading
    lanes: tuple[int, ...]
    junctions: tuple[int, ...]  # intersection ids in travel order
    lane_length_m: float

    @property
    def length_m(self) -> float:
        return self.lane_length_m * len(self.lanes)

    def junction_position(self, k: int) -> float:
        """Distance from the road entry to its ``k``-th conflict point."""
        return self.lane_length_m * (k + 1)


@dataclass(frozen=True)
class Network:
    spec: NetworkSpec
    lanes: tuple[Lane, ...]
    roads: tuple[Road, ...]
    intersections: tuple[Intersection, ...]
    _grid: dict[tuple[int, int], int] = field(repr=False, compare=False)

    @property
    def entry_lanes(self) -> list[int]:
        return [lane.id for lane in self.lanes if lane.upstream is None]

    @property
    def exit_lanes(self) -> list[int]:
        return [lane.id for lane in self.lanes if lane.downstream is None]

    def intersection_at(self, row: int, col: int) -> Intersection:
        return self.intersections[self._grid[row, col]]

    def road_of(self, lane_id: int) -> Road:
        return self.roads[self.lanes[lane_id].road]

    def route_from_entry(self, entry_lane: int) -> list[int]:
        """Straight-through lane sequence from an entry lane to its exit."""
        lane = self.lanes[entry_lane]
        if lane.upstream is not None:
            raise ValueError(f"lane {lane.name} is not an entry lane")
        return list(self.roads[lane.road].lanes)


def _conflict_pairs(headings) -> frozenset[frozenset[Heading]]:
    return frozenset(
        frozenset((a, b))
        for a in headings
        for b in headings
        if a.horizontal and not b.horizontal
    )


def build_grid(spec: NetworkSpec) -> Network:
    """Lay out ``rows x cols`` intersections joined by through-only roads.

    Two-way networks carry one heading per road (Eastbound rows, Northbound
    columns); four-way networks carry both headings on every road.
    """
    R, C, L = spec.rows, spec.cols, spec.lane_length_m
    if spec.topology is Topology.TWO_WAY:
        h_headings, v_headings = (Heading.EAST,), (Heading.NORTH,)
    else:
        h_headings = (Heading.EAST, Heading.WEST)
        v_headings = (Heading.NORTH, Heading.SOUTH)

    grid = {(r, c): r * C + c for r in range(R) for c in range(C)}
    lanes: list[Lane] = []
    roads: list[Road] = []
    approaches: dict[int, dict[Heading, int]] = {i: {} for i in grid.values()}
    exits: dict[int, dict[Heading, int]] = {i: {} for i in grid.values()}

    def add_road(heading: Heading, idx: int, junctions: list[int]):
        road_id = len(roads)
        ids = []
        for seg in range(len(junctions) + 1):
            up = junctions[seg - 1] if seg > 0 else None
            down = junctions[seg] if seg < len(junctions) else None
            lane_id = len(lanes)
            lanes.append(Lane(lane_id, f"{heading.value}{idx}_{seg}", heading, L, up, down, road_id, seg))
            if down is not None:
                approaches[down][heading] = lane_id
            if up is not None:
                exits[up][heading] = lane_id
            ids.append(lane_id)
        roads.append(Road(road_id, heading, tuple(ids), tuple(junctions), L))

    for r in range(R):
        for h in h_headings:
            cols = range(C) if h is Heading.EAST else reversed(range(C))
            add_road(h, r, [grid[r, c] for c in cols])
    for c in range(C):
        for h in v_headings:
            rows = range(R) if h is Heading.NORTH else reversed(range(R))
            add_road(h, c, [grid[r, c] for r in rows])

    headings = h_headings + v_headings
    intersections = tuple(
        Intersection(i, r, c, dict(approaches[i]), dict(exits[i]), _conflict_pairs(headings))
        for (r, c), i in sorted(grid.items(), key=lambda kv: kv[1])
    )
    return Network(spec, tuple(lanes), tuple(roads), intersections, grid)
