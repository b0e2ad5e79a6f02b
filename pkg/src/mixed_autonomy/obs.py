"""Chain decomposition of approach lanes and the per-AV observation vector.

Layout (11 slots of normalized ``(speed, distance)``)::

    [ego, ego chain tail,
     lane1 half-chain tail, lane1 chain head, lane1 chain tail,
     lane2 ..., lane3 ...]

with lanes 1-3 taken clockwise from the ego approach. Missing vehicles and
absent approaches are padded with ``(0, 1)``: a stopped phantom at the far
end of the segment.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

N_SLOTS = 11
OBS_DIM = 2 * N_SLOTS
PAD = (0.0, 1.0)


@dataclass
class Chain:
    head: object
    followers: list = field(default_factory=list)

    @property
    def tail(self):
        return self.followers[-1] if self.followers else self.head

    @property
    def members(self) -> list:
        return [self.head, *self.followers]


@dataclass
class ChainDecomposition:
    half_chain: list
    chains: list[Chain]

    def flatten(self) -> list:
        out = list(self.half_chain)
        for c in self.chains:
            out.extend(c.members)
        return out


def decompose(vehicles, is_av=lambda v: v.is_av) -> ChainDecomposition:
    """Split a lane (nearest to the intersection first) into chains led by AVs."""
    half: list = []
    chains: list[Chain] = []
    for v in vehicles:
        if is_av(v):
            chains.append(Chain(v))
        elif chains:
            chains[-1].followers.append(v)
        else:
            half.append(v)
    return ChainDecomposition(half, chains)


def _features(sim, v) -> tuple[float, float]:
    return (v.speed / sim._vmax, sim.distance_to_intersection(v) / sim._L)


def _lane_slots(sim, queue) -> list[tuple[float, float]]:
    dec = decompose(queue)
    half_tail = _features(sim, dec.half_chain[-1]) if dec.half_chain else PAD
    if dec.chains:
        first = dec.chains[0]
        return [half_tail, _features(sim, first.head), _features(sim, first.tail)]
    return [half_tail, PAD, PAD]


def _build(sim, iid, heading, ego_chain: Chain, lane_cache: dict) -> np.ndarray:
    inter = sim.network.intersections[iid]
    slots = [_features(sim, ego_chain.head), _features(sim, ego_chain.tail)]
    for k in (1, 2, 3):
        h = heading.clockwise(k)
        if h not in inter.approaches:
            slots.extend([PAD, PAD, PAD])
            continue
        key = (iid, h)
        if key not in lane_cache:
            lane_cache[key] = _lane_slots(sim, sim.approach_queue(iid, h))
        slots.extend(lane_cache[key])
    return np.asarray(slots, dtype=np.float64).reshape(OBS_DIM)


def observe(sim, av_id: int) -> np.ndarray:
    """Observation of one controllable AV."""
    veh = sim.vehicles.get(av_id)
    loc = sim.locate(av_id) if veh is not None else None
    if veh is None or not veh.is_av or loc is None:
        raise ValueError(f"vehicle {av_id} is not a controllable AV")
    iid, heading, _ = loc
    dec = decompose(sim.approach_queue(iid, heading))
    chain = next(c for c in dec.chains if c.head is veh)
    return _build(sim, iid, heading, chain, {})


def observe_all(sim) -> tuple[list[int], np.ndarray]:
    """Observations of every controllable AV, ordered by vehicle id."""
    ids = sim.controllable_avs()
    if not ids:
        return [], np.zeros((0, OBS_DIM))
    chains = {}
    for (iid, h), q in sim._scan()[0].items():
        for c in decompose(q).chains:
            chains[c.head.id] = (iid, h, c)
    cache: dict = {}
    x = np.empty((len(ids), OBS_DIM))
    for row, vid in enumerate(ids):
        iid, h, c = chains[vid]
        x[row] = _build(sim, iid, h, c, cache)
    return ids, x
