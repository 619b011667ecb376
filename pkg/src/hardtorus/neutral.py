"""Neutral spaces, advances, sufficiency, collision graphs, and the
two-parameter neutral translations.

A configuration direction W is neutral for a trajectory window [a, b]
when translating the configuration along W (to first order) leaves
every velocity of the window unchanged.  The neutral space always
contains the flow direction; a window whose neutral space is exactly
that line is called sufficient (hyperbolic).  The advance of a
collision measures how much its time shifts per unit of neutral
translation; advances are constant on connected components of the
collision graph, and on a connected graph equal advances force the
neutral vector to be parallel to the velocity.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (IllConditionedAdvanceError, PerturbationTooLargeError,
                     SingularSegmentError)
from .events import (TrajectorySegment, reverse_state, simulate,
                     symbolic_sequence)
from .geometry import (PhaseState, SystemParams, mass_inner, mass_norm,
                       reduced_space)
from .tangent import CollisionFrame, frame_for_event, transport_between

_EDGE_GUARD = 1e-6          # keep reference times away from collisions


def _check_window(traj: TrajectorySegment, a: float, b: float, t_ref: float):
    if traj.singular:
        raise SingularSegmentError("segment carries singular events")
    if not (0.0 <= a < b <= traj.t_end):
        raise ValueError(f"window [{a:g}, {b:g}] outside segment span")
    for name, t in (("a", a), ("b", b), ("t_ref", t_ref)):
        if traj.n_events and np.min(np.abs(traj.ev_t - t)) < _EDGE_GUARD:
            raise ValueError(f"{name} = {t:g} is too close to a collision moment")
    if not (a <= t_ref <= b):
        raise ValueError("t_ref must lie inside [a, b]")


@dataclass(frozen=True)
class NeutralSpaceResult:
    """Kernel of the velocity-variation map of a trajectory window.

    ``basis`` columns are mass-orthonormal vectors of Z attached at
    ``t_ref``; ``singular_values`` is the full profile the rank cut was
    made on (descending), ``threshold`` the cut value.  ``gap_ok`` is
    False when some singular value falls inside (threshold/10,
    threshold*10), which makes the dimension unreliable.
    ``validation_errors`` holds the worst finite-perturbation velocity
    deviation per basis vector (NaN when validation was skipped).
    """

    a: float
    b: float
    t_ref: float
    dimension: int
    basis: np.ndarray
    singular_values: np.ndarray
    threshold: float
    gap_ok: bool
    flow_residual: float
    validation_errors: np.ndarray

    @property
    def validated(self) -> bool:
        errs = self.validation_errors
        if errs.size == 0:
            return True
        return bool(not np.any(np.isnan(errs)) and np.all(errs <= 1e-8))


def _velocity_at(traj: TrajectorySegment, state: PhaseState, t_from: float,
                 t_to: float, params: SystemParams) -> np.ndarray:
    """Velocity a re-simulation reaches at t_to starting from ``state``
    placed at t_from; backward reach uses the velocity involution."""
    if t_to >= t_from:
        seg = simulate(state, t_to - t_from, params)
        return seg.final.v
    seg = simulate(reverse_state(state), t_from - t_to, params)
    return reverse_state(seg.final).v


def neutral_space(traj: TrajectorySegment, a: float, b: float, t_ref: float,
                  params: SystemParams, *, validate: bool = True,
                  perturbation: float = 1e-5) -> NeutralSpaceResult:
    """Neutral space of the window [a, b] attached at t_ref.

    First-order kernel: transport the basis (W, 0) of Z x {0} from
    t_ref to both window ends and cut the stacked velocity parts at
    singular values below rank_rel_tol times the largest.  Each kernel
    vector is then re-checked by a finite configuration shift of size
    ``perturbation``, re-simulating to both ends and measuring the
    velocity deviation (genuine neutral vectors stay below 1e-8).
    """
    _check_window(traj, a, b, t_ref)
    zb = reduced_space(params).basis
    d = zb.shape[1]
    mw = params.mass_weights
    rows = []
    for end in (a, b):
        xq, xv = transport_between(traj, zb.copy(), np.zeros_like(zb), t_ref, end)
        rows.append((zb.T * mw) @ xv)
    stacked = np.vstack(rows)
    svals = np.linalg.svd(stacked, compute_uv=False)
    _, _, vt = np.linalg.svd(stacked)
    smax = float(svals[0]) if svals.size else 0.0
    tol = params.tolerances.rank_rel_tol
    if smax <= 1e-14:
        threshold = 0.0
        kernel_coords = np.eye(d)
        gap_ok = True
    else:
        threshold = tol * smax
        rank = int((svals >= threshold).sum())
        kernel_coords = vt[rank:].T
        gap_ok = not np.any((svals > threshold / 10.0) & (svals < threshold * 10.0))
    basis = zb @ kernel_coords
    dim = basis.shape[1]

    v_ref = traj.state_at(t_ref).v.reshape(-1)
    vn = mass_norm(v_ref, params)
    coeff = (basis.T * mw) @ v_ref
    flow_residual = mass_norm(v_ref - basis @ coeff, params) / vn if dim else 1.0

    errors = np.full(dim, np.nan)
    if validate and dim:
        ref_state = traj.state_at(t_ref)
        va = traj.state_at(a).v
        vb = traj.state_at(b).v
        for k in range(dim):
            wq = basis[:, k].reshape(-1, 2)
            pert = PhaseState(q=(ref_state.q + perturbation * wq) % 1.0,
                              v=ref_state.v)
            worst = 0.0
            for end, v_end in ((a, va), (b, vb)):
                try:
                    v_new = _velocity_at(traj, pert, t_ref, end, params)
                except Exception:
                    worst = float("inf")
                    break
                worst = max(worst, mass_norm(v_new - v_end, params))
            errors[k] = worst
    return NeutralSpaceResult(
        a=a, b=b, t_ref=t_ref, dimension=dim, basis=basis,
        singular_values=svals, threshold=threshold, gap_ok=gap_ok,
        flow_residual=flow_residual, validation_errors=errors)


@dataclass(frozen=True)
class SufficiencyVerdict:
    verdict: str                     # sufficient | not_sufficient | undecidable
    result: NeutralSpaceResult


def is_sufficient(traj: TrajectorySegment, params: SystemParams,
                  a: float | None = None, b: float | None = None,
                  t_ref: float | None = None) -> SufficiencyVerdict:
    """Sufficient iff the neutral space is the flow line alone.

    Borderline rank cuts (singular values inside the gap guard) and
    failed finite-perturbation validation give ``undecidable``.
    """
    if a is None:
        a = 0.0
    if b is None:
        b = traj.t_end
        if traj.n_events and b - float(traj.ev_t[-1]) < _EDGE_GUARD:
            b = max(a + _EDGE_GUARD, 0.5 * (float(traj.ev_t[-1]) + b))
    if t_ref is None:
        t_ref = a
    res = neutral_space(traj, a, b, t_ref, params)
    if not res.gap_ok or not res.validated:
        return SufficiencyVerdict("undecidable", res)
    if res.dimension == 1:
        return SufficiencyVerdict("sufficient", res)
    if res.dimension == 0:
        return SufficiencyVerdict("undecidable", res)
    return SufficiencyVerdict("not_sufficient", res)


def _pre_collision_vector(traj: TrajectorySegment, W, k: int, t_ref: float):
    """Transport (W, 0) from t_ref to the incoming side of event k.

    transport_between lands on the outgoing side of an event time from
    either direction, so one inverse collision step exposes the
    incoming representation.
    """
    from .tangent import _apply_event_inverse
    w = np.asarray(W, dtype=float).reshape(-1)
    xq, xv = transport_between(traj, w.copy(), np.zeros_like(w), t_ref,
                               float(traj.ev_t[k]))
    return _apply_event_inverse(frame_for_event(traj, k), xq, xv)


def advance(traj: TrajectorySegment, W, k: int, params: SystemParams,
            *, t_ref: float = 0.0, method: str = "closed_form",
            eps: float = 1e-6) -> float:
    """Advance of collision k with respect to the neutral direction W.

    closed_form solves the proportionality of the pre-collision
    configuration variation difference against the relative velocity in
    least squares; finite_difference re-simulates from configurations
    shifted by +-eps*W and differences the collision time.
    """
    if traj.singular:
        raise SingularSegmentError("segment carries singular events")
    if not 0 <= k < traj.n_events:
        raise ValueError(f"event index {k} out of range")
    i, j = int(traj.ev_pair[k, 0]), int(traj.ev_pair[k, 1])
    dv_rel = (traj.ev_v_pre[k].reshape(-1, 2)[i]
              - traj.ev_v_pre[k].reshape(-1, 2)[j])
    nrm2 = float(dv_rel @ dv_rel)
    if nrm2 < 1e-8 ** 2:
        raise IllConditionedAdvanceError(
            f"relative velocity of pair ({i}, {j}) too small: "
            f"{math.sqrt(nrm2):.3g}")
    if method == "closed_form":
        xq, _ = _pre_collision_vector(traj, W, k, t_ref)
        dq_rel = xq.reshape(-1, 2)[i] - xq.reshape(-1, 2)[j]
        return float(dq_rel @ dv_rel) / nrm2
    if method == "finite_difference":
        if t_ref > float(traj.ev_t[k]):
            raise ValueError("finite-difference advance needs t_ref before the event")
        ref_state = traj.state_at(t_ref)
        w = np.asarray(W, dtype=float).reshape(-1, 2)
        n_before = int(np.searchsorted(traj.ev_t, t_ref))
        k_local = k - n_before
        t_k = float(traj.ev_t[k])
        horizon = t_k - t_ref
        horizon += 0.5 * (float(traj.ev_t[k + 1]) - t_k) if k + 1 < traj.n_events \
            else 0.5 * (traj.t_end - t_k)
        times = []
        for sgn in (+1.0, -1.0):
            pert = PhaseState(q=(ref_state.q + sgn * eps * w) % 1.0, v=ref_state.v)
            seg = simulate(pert, horizon, params)
            if seg.n_events <= k_local or \
                    tuple(seg.ev_pair[k_local]) != (i, j):
                raise IllConditionedAdvanceError(
                    "perturbed trajectory lost the collision; W is not "
                    "neutral enough for the finite-difference advance")
            times.append(t_ref + float(seg.ev_t[k_local]))
        return (times[1] - times[0]) / (2.0 * eps)
    raise ValueError(f"unknown method {method!r}")


@dataclass(frozen=True)
class CollisionGraph:
    """Collision graph of a symbolic sequence with component data."""

    n: int
    edges: tuple[tuple[int, int], ...]
    components: tuple[tuple[int, ...], ...]

    @property
    def k(self) -> int:
        return len(self.components)

    @property
    def connected(self) -> bool:
        return self.k == 1


def _union_find_components(n: int, edges) -> tuple[tuple[int, ...], ...]:
    parent = list(range(n))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for i, j in edges:
        ri, rj = find(i), find(j)
        if ri != rj:
            parent[max(ri, rj)] = min(ri, rj)
    groups: dict[int, list[int]] = {}
    for x in range(n):
        groups.setdefault(find(x), []).append(x)
    return tuple(tuple(sorted(g)) for g in
                 sorted(groups.values(), key=lambda g: g[0]))


def collision_graph(sigma, n: int) -> CollisionGraph:
    edges = tuple((min(i, j), max(i, j)) for i, j in sigma)
    return CollisionGraph(n=n, edges=edges,
                          components=_union_find_components(n, edges))


def richness_count(traj: TrajectorySegment) -> int:
    """Maximum number of consecutive disjoint windows with connected
    collision graphs, built greedily left to right (shortest windows)."""
    n = traj.params.n
    count = 0
    edges: list[tuple[int, int]] = []
    for pair in symbolic_sequence(traj):
        edges.append(pair)
        if len(_union_find_components(n, edges)) == 1:
            count += 1
            edges = []
    return count


@dataclass(frozen=True)
class ComponentStats:
    members: tuple[int, ...]
    total_mass: float
    avg_velocity: np.ndarray
    avg_displacement: np.ndarray | None


def component_stats(graph: CollisionGraph, state: PhaseState,
                    params: SystemParams, W=None) -> tuple[ComponentStats, ...]:
    """Per-component total mass, mass-averaged velocity, and (when a
    neutral vector is attached) mass-averaged displacement."""
    m = params.mass_array
    w = None if W is None else np.asarray(W, dtype=float).reshape(-1, 2)
    out = []
    for comp in graph.components:
        idx = list(comp)
        mass = float(m[idx].sum())
        vel = (m[idx, None] * state.v[idx]).sum(axis=0) / mass
        disp = None if w is None else (m[idx, None] * w[idx]).sum(axis=0) / mass
        out.append(ComponentStats(members=comp, total_mass=mass,
                                  avg_velocity=vel, avg_displacement=disp))
    return tuple(out)


@dataclass(frozen=True)
class AdvanceReport:
    advances: np.ndarray                 # per event, closed form
    components: tuple[tuple[int, ...], ...]
    component_of_event: np.ndarray
    component_spread: np.ndarray         # max advance difference inside each
    graph_connected: bool
    parallel_residual: float             # distance of W from the flow line


def advance_report(traj: TrajectorySegment, W, params: SystemParams,
                   *, t_ref: float = 0.0) -> AdvanceReport:
    """Advances of every collision, grouped by collision-graph component.

    Within one component all advances of a neutral W agree; when the
    whole graph is connected and they all agree, W can only be the flow
    direction, which ``parallel_residual`` quantifies.
    """
    graph = collision_graph(symbolic_sequence(traj), params.n)
    vertex_comp = {}
    for ci, comp in enumerate(graph.components):
        for vtx in comp:
            vertex_comp[vtx] = ci
    alphas = np.empty(traj.n_events)
    comp_of = np.empty(traj.n_events, dtype=int)
    for k in range(traj.n_events):
        alphas[k] = advance(traj, W, k, params, t_ref=t_ref)
        comp_of[k] = vertex_comp[int(traj.ev_pair[k, 0])]
    spread = np.zeros(len(graph.components))
    for ci in range(len(graph.components)):
        vals = alphas[comp_of == ci]
        if vals.size:
            spread[ci] = float(vals.max() - vals.min())
    w = np.asarray(W, dtype=float).reshape(-1)
    v = traj.state_at(t_ref).v.reshape(-1)
    coeff = mass_inner(w, v, params) / mass_inner(v, v, params)
    resid = mass_norm(w - coeff * v, params) / max(mass_norm(w, params), 1e-300)
    return AdvanceReport(advances=alphas, components=graph.components,
                         component_of_event=comp_of, component_spread=spread,
                         graph_connected=graph.connected,
                         parallel_residual=resid)


def neutral_translate(state: PhaseState, w0, tau1: float, tau2: float,
                      params: SystemParams, *, return_direction: bool = False):
    """Two-parameter neutral translation of a phase point.

    The configuration slides along w0 for length tau1; hitting the
    boundary reflects both the sliding direction and the velocity in
    the contact tangent plane, exactly the billiard transport of the
    direction field.  The velocity becomes (v + tau2*w)/sqrt(1+tau2^2),
    with w the (possibly reflected) translation direction, keeping the
    energy at one half exactly.
    """
    w = np.asarray(w0, dtype=float).reshape(-1)
    v = state.v.reshape(-1)
    if abs(mass_norm(w, params) - 1.0) > 1e-8:
        raise ValueError("w0 must be a unit vector in the mass metric")
    if abs(mass_inner(w, v, params)) > 1e-8:
        raise ValueError("w0 must be mass-orthogonal to the velocity")
    v_new = v.copy()
    if tau1 != 0.0:
        sgn = math.copysign(1.0, tau1)
        sweep = simulate(PhaseState(q=state.q, v=sgn * w.reshape(-1, 2)),
                         abs(tau1), params)
        if sweep.singular:
            raise PerturbationTooLargeError(
                "configuration sweep crosses a singular contact")
        for k in range(sweep.n_events):
            try:
                frame = frame_for_event(sweep, k)
            except Exception as exc:
                raise PerturbationTooLargeError(
                    f"sweep reflection ill-defined: {exc}") from exc
            v_new = frame.reflect(v_new)
        q_new = sweep.final.q
        w = sgn * sweep.final.v.reshape(-1)
    else:
        q_new = state.q
    scale = 1.0 / math.sqrt(1.0 + tau2 * tau2)
    out = PhaseState(q=q_new, v=scale * (v_new + tau2 * w).reshape(-1, 2))
    if return_direction:
        return out, w
    return out


def neutral_report(traj: TrajectorySegment, params: SystemParams,
                   *, a: float | None = None, b: float | None = None,
                   t_ref: float | None = None) -> dict:
    """JSON-ready summary: dimensions, singular values, sufficiency,
    per-collision advances of the neutral basis, components, richness."""
    verdict = is_sufficient(traj, params, a=a, b=b, t_ref=t_ref)
    res = verdict.result
    graph = collision_graph(symbolic_sequence(traj), params.n)
    advances = []
    if traj.n_events and res.dimension:
        for col in range(res.dimension):
            try:
                vals = [advance(traj, res.basis[:, col], k, params,
                                t_ref=res.t_ref)
                        for k in range(traj.n_events)]
            except IllConditionedAdvanceError:
                vals = None
            advances.append(vals)
    return {
        "window": {"a": res.a, "b": res.b, "t_ref": res.t_ref},
        "dimension": res.dimension,
        "singular_values": [float(s) for s in res.singular_values],
        "threshold": res.threshold,
        "gap_ok": res.gap_ok,
        "flow_residual": res.flow_residual,
        "verdict": verdict.verdict,
        "advances_per_basis_vector": advances,
        "components": [list(c) for c in graph.components],
        "richness": richness_count(traj),
        "n_events": traj.n_events,
    }
