"""Degenerate parallel-velocity sets and their tube geometry.

For a primitive lattice direction l0, the degenerate set L(l0) collects
the phase points whose disk velocities stay parallel to l0 for all
time.  Each disk of such an orbit is confined to a closed line on the
torus and drags an open tube of half-width r around it; the component
structure of the collision graph constrains how those tubes may
coincide, overlap, or must stay disjoint.  This module enumerates the
admissible directions (norm at most 1/(4r)), tests membership over a
finite horizon, audits the tube constraints, measures a surrogate
distance from the set, and checks the exceptional radius equalities
that make the tube packing degenerate.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .events import TrajectorySegment, simulate, symbolic_sequence
from .geometry import PhaseState, SystemParams, mass_norm
from .neutral import collision_graph

# A velocity field counts as parallel to l0 when the mass-metric norm
# of its perpendicular part stays below this.
PARALLEL_TOL = 1e-10

# Two tube center lines coincide below this offset distance; open tubes
# are disjoint when the offset distance clears 2r by at least this.
OFFSET_TOL = 1e-9

RADIUS_MATCH_TOL = 1e-12


@dataclass(frozen=True)
class LatticeDirection:
    """Primitive integer direction (a, b) with canonical sign.

    Canonical sign means a > 0, or a = 0 and b > 0, so no two distinct
    instances are parallel.
    """

    a: int
    b: int

    def __post_init__(self):
        if not (isinstance(self.a, int) and isinstance(self.b, int)):
            raise ValidationError("lattice direction needs integer entries")
        g = math.gcd(abs(self.a), abs(self.b))
        if g == 0:
            raise ValidationError("lattice direction must be nonzero")
        if g != 1:
            raise ValidationError(
                f"lattice direction ({self.a}, {self.b}) is not primitive; "
                f"reduce by gcd {g}")
        if not (self.a > 0 or (self.a == 0 and self.b > 0)):
            raise ValidationError(
                f"lattice direction ({self.a}, {self.b}) is not in canonical "
                "sign (a > 0, or a = 0 and b > 0)")

    @classmethod
    def from_vector(cls, l0) -> "LatticeDirection":
        """Coerce a pair of integers, flipping to the canonical sign."""
        if isinstance(l0, cls):
            return l0
        a, b = (int(round(float(c))) for c in l0)
        if not (math.isclose(a, float(l0[0])) and math.isclose(b, float(l0[1]))):
            raise ValidationError("lattice direction entries must be integers")
        if a < 0 or (a == 0 and b < 0):
            a, b = -a, -b
        return cls(a, b)

    @property
    def norm(self) -> float:
        return math.hypot(self.a, self.b)

    @property
    def norm_sq(self) -> int:
        return self.a * self.a + self.b * self.b

    @property
    def width(self) -> float:
        """Width of the torus across the tube direction: 1/norm."""
        return 1.0 / self.norm

    @property
    def vector(self) -> np.ndarray:
        return np.array([float(self.a), float(self.b)])

    def as_tuple(self) -> tuple[int, int]:
        return (self.a, self.b)


def admissible_directions(r: float) -> tuple[LatticeDirection, ...]:
    """All primitive directions with norm at most 1/(4r).

    Sorted by norm, ties broken lexicographically on (a, b).
    """
    if r <= 0.0:
        raise ValidationError("radius must be positive")
    bound = 1.0 / (4.0 * r)
    bound_sq = bound * bound
    amax = int(math.floor(bound))
    out = []
    for a in range(0, amax + 1):
        for b in range(-amax, amax + 1):
            if a == 0 and b <= 0:
                continue
            if math.gcd(a, abs(b)) != 1:
                continue
            if a * a + b * b <= bound_sq:
                out.append(LatticeDirection(a, b))
    out.sort(key=lambda l: (l.norm, l.a, l.b))
    return tuple(out)


def _perp_norms(v_blocks: np.ndarray, l: LatticeDirection,
                params: SystemParams) -> np.ndarray:
    """Mass-metric perpendicular speed for each leading axis entry.

    The parallel projection divides by the integer norm square before
    scaling back, so exactly parallel axis-aligned velocities give an
    exact zero.
    """
    lv = l.vector
    dots = v_blocks @ lv
    perp = v_blocks - dots[..., None] * (lv / l.norm_sq)
    sq = np.einsum("...nc,n->...", perp * perp, params.mass_array)
    return np.sqrt(sq)


def perpendicular_speed(state: PhaseState, l0, params: SystemParams) -> float:
    """Mass-metric norm of the velocity components orthogonal to l0."""
    l = LatticeDirection.from_vector(l0)
    v = np.asarray(state.v, dtype=float).reshape(params.n, 2)
    return float(_perp_norms(v[None], l, params)[0])


def _parallel_audit(state: PhaseState, l: LatticeDirection,
                    params: SystemParams,
                    horizon: float) -> tuple[bool, TrajectorySegment]:
    """Simulate the horizon and check parallelism at every velocity change."""
    traj = simulate(state, horizon, params)
    worst = perpendicular_speed(state, l, params)
    if traj.n_events:
        worst = max(worst, float(np.max(_perp_norms(traj.ev_v_post, l,
                                                    params))))
    worst = max(worst, perpendicular_speed(traj.final, l, params))
    return worst <= PARALLEL_TOL, traj


def in_L(state: PhaseState, l0, params: SystemParams, *,
         horizon: float = 100.0) -> bool:
    """Whether all velocities stay parallel to l0 across the horizon.

    Velocities only change at collisions, so the check samples the
    initial state, every post-collision snapshot, and the final state.
    """
    l = LatticeDirection.from_vector(l0)
    if perpendicular_speed(state, l, params) > PARALLEL_TOL:
        return False
    ok, _ = _parallel_audit(state, l, params, horizon)
    return ok


def _tube_offset(q_disk, l: LatticeDirection) -> float:
    """Perpendicular coset coordinate of the disk's line, in [0, width)."""
    c = (-l.b * float(q_disk[0]) + l.a * float(q_disk[1])) / l.norm
    return c % l.width


def _offset_distance(c1: float, c2: float, width: float) -> float:
    d = abs(c1 - c2) % width
    return min(d, width - d)


@dataclass(frozen=True)
class Tube:
    """Open tubular neighborhood of one disk's line on the torus."""

    disk: int
    direction: LatticeDirection
    offset: float
    half_width: float


@dataclass(frozen=True)
class TubeStructure:
    """Tube geometry and collision-component consistency verdicts.

    Same-component tubes must coincide; tubes of distinct components
    are forced disjoint when either component has two or more members;
    a pair of singleton components must have disjoint tubes or equal
    velocities.
    """

    direction: LatticeDirection
    width: float
    tubes: tuple[Tube, ...]
    components: tuple[tuple[int, ...], ...]
    coincide_ok: bool
    coincide_violations: tuple[tuple[int, int], ...]
    disjoint_ok: bool
    disjoint_violations: tuple[tuple[int, int], ...]
    singleton_ok: bool
    singleton_violations: tuple[tuple[int, int], ...]

    @property
    def k(self) -> int:
        return len(self.components)

    @property
    def all_ok(self) -> bool:
        return self.coincide_ok and self.disjoint_ok and self.singleton_ok

    def to_dict(self) -> dict:
        return {
            "direction": list(self.direction.as_tuple()),
            "width": self.width,
            "tubes": [{"disk": t.disk, "offset": t.offset,
                       "half_width": t.half_width} for t in self.tubes],
            "components": [list(c) for c in self.components],
            "coincide_ok": self.coincide_ok,
            "coincide_violations": [list(p) for p in self.coincide_violations],
            "disjoint_ok": self.disjoint_ok,
            "disjoint_violations": [list(p) for p in self.disjoint_violations],
            "singleton_ok": self.singleton_ok,
            "singleton_violations": [list(p)
                                     for p in self.singleton_violations],
        }


def _audit_tubes(state: PhaseState, l: LatticeDirection,
                 params: SystemParams,
                 traj: TrajectorySegment) -> TubeStructure:
    n = params.n
    comps = collision_graph(symbolic_sequence(traj), n).components
    label = {}
    for ci, members in enumerate(comps):
        for i in members:
            label[i] = ci
    q = np.asarray(state.q, dtype=float).reshape(n, 2)
    v = np.asarray(state.v, dtype=float).reshape(n, 2)
    offsets = [_tube_offset(q[i], l) for i in range(n)]
    tubes = tuple(Tube(disk=i, direction=l, offset=offsets[i],
                       half_width=params.radius) for i in range(n))
    two_r = 2.0 * params.radius
    coincide_bad, disjoint_bad, singleton_bad = [], [], []
    for i in range(n):
        for j in range(i + 1, n):
            d = _offset_distance(offsets[i], offsets[j], l.width)
            if label[i] == label[j]:
                if d > OFFSET_TOL:
                    coincide_bad.append((i, j))
                continue
            sizes = (len(comps[label[i]]), len(comps[label[j]]))
            disjoint = d >= two_r - OFFSET_TOL
            if max(sizes) >= 2:
                if not disjoint:
                    disjoint_bad.append((i, j))
            else:
                same_velocity = float(np.hypot(*(v[i] - v[j]))) <= PARALLEL_TOL
                if not (disjoint or same_velocity):
                    singleton_bad.append((i, j))
    return TubeStructure(
        direction=l, width=l.width, tubes=tubes, components=comps,
        coincide_ok=not coincide_bad,
        coincide_violations=tuple(coincide_bad),
        disjoint_ok=not disjoint_bad,
        disjoint_violations=tuple(disjoint_bad),
        singleton_ok=not singleton_bad,
        singleton_violations=tuple(singleton_bad))


def tube_structure(state: PhaseState, l0, params: SystemParams, *,
                   horizon: float = 100.0) -> TubeStructure:
    """Tubes, collision components over the horizon, and verdicts.

    Only proper (non-tangential) collisions feed the component
    partition.  Raises when the state is not parallel to l0 throughout
    the horizon, since tubes are only flow-invariant on the degenerate
    set.
    """
    l = LatticeDirection.from_vector(l0)
    ok, traj = _parallel_audit(state, l, params, horizon)
    if not ok:
        raise ValidationError(
            f"state is not in the degenerate set for direction "
            f"{l.as_tuple()}; tube structure is undefined")
    return _audit_tubes(state, l, params, traj)


def _surrogate(state: PhaseState, l: LatticeDirection, params: SystemParams,
               traj: TrajectorySegment) -> float:
    perp = perpendicular_speed(state, l, params)
    comps = collision_graph(symbolic_sequence(traj), params.n).components
    label = {}
    for ci, members in enumerate(comps):
        for i in members:
            label[i] = ci
    q = np.asarray(state.q, dtype=float).reshape(params.n, 2)
    offsets = [_tube_offset(q[i], l) for i in range(params.n)]
    two_r = 2.0 * params.radius
    overlap = 0.0
    for i in range(params.n):
        for j in range(i + 1, params.n):
            if label[i] == label[j]:
                continue
            if max(len(comps[label[i]]), len(comps[label[j]])) < 2:
                continue
            d = _offset_distance(offsets[i], offsets[j], l.width)
            overlap += max(0.0, two_r - d)
    return perp + overlap


def distance_to_L(state: PhaseState, l0, params: SystemParams, *,
                  horizon: float = 10.0) -> float:
    """Surrogate distance from the degenerate set for direction l0.

    Mass-metric norm of the perpendicular velocity components, plus the
    summed tube overlaps that the component structure forbids.  Zero
    exactly on members whose tubes pass the consistency checks.
    """
    l = LatticeDirection.from_vector(l0)
    traj = simulate(state, horizon, params)
    return _surrogate(state, l, params, traj)


@dataclass(frozen=True)
class RadiusFlags:
    """Exceptional radius equalities for one direction.

    length_matches lists group sizes h with 2rh equal to the direction
    norm (a group of h disks exactly fills the closed line); width
    matches list sizes k with 2rk equal to the torus width across the
    direction (k tubes exactly tile the torus).
    """

    direction: LatticeDirection
    radius: float
    norm: float
    width: float
    length_matches: tuple[int, ...]
    width_matches: tuple[int, ...]

    @property
    def degenerate(self) -> bool:
        return bool(self.length_matches or self.width_matches)

    def to_dict(self) -> dict:
        return {
            "direction": list(self.direction.as_tuple()),
            "radius": self.radius,
            "norm": self.norm,
            "width": self.width,
            "length_matches": list(self.length_matches),
            "width_matches": list(self.width_matches),
            "degenerate": self.degenerate,
        }


def degenerate_radius_check(params: SystemParams, l0, *,
                            max_group: int | None = None) -> RadiusFlags:
    """Flag group sizes whose diameter sum matches the tube geometry.

    Checks |2rh - norm| and |2rk - width| against a 1e-12 tolerance for
    h, k up to max_group (defaults to the disk count).
    """
    l = LatticeDirection.from_vector(l0)
    r = params.radius
    if max_group is None:
        max_group = params.n
    if max_group < 1:
        raise ValidationError("max_group must be at least 1")
    length_hits = tuple(h for h in range(1, max_group + 1)
                        if abs(2.0 * r * h - l.norm) <= RADIUS_MATCH_TOL)
    width_hits = tuple(k for k in range(1, max_group + 1)
                       if abs(2.0 * r * k - l.width) <= RADIUS_MATCH_TOL)
    return RadiusFlags(direction=l, radius=r, norm=l.norm, width=l.width,
                       length_matches=length_hits, width_matches=width_hits)


def degeneracy_report(state: PhaseState, params: SystemParams, *,
                      l0=None, horizon: float = 100.0,
                      max_group: int | None = None) -> dict:
    """JSON-ready degeneracy survey of a state.

    Covers the admissible directions for the configured radius (or the
    one given direction): membership verdict, surrogate distance,
    radius flags, and the tube audit for members.
    """
    directions = admissible_directions(params.radius)
    if l0 is not None:
        targets = [LatticeDirection.from_vector(l0)]
    else:
        targets = list(directions)
    entries = []
    for l in targets:
        ok, traj = _parallel_audit(state, l, params, horizon)
        entry = {
            "direction": list(l.as_tuple()),
            "member": ok,
            "distance": _surrogate(state, l, params, traj),
            "radius_flags": degenerate_radius_check(
                params, l, max_group=max_group).to_dict(),
        }
        if ok:
            entry["tubes"] = _audit_tubes(state, l, params, traj).to_dict()
        entries.append(entry)
    return {
        "radius": params.radius,
        "admissible_directions": [list(l.as_tuple()) for l in directions],
        "horizon": horizon,
        "entries": entries,
    }
