"""Core model: N hard disks of arbitrary masses on the flat unit 2-torus.

Configuration space is the product of N copies of [0,1)^2 minus the
pairwise overlap cylinders; the kinetic-energy (mass) metric

    <u, w> = sum_i m_i <u_i, w_i>

is used for every inner product, norm, orthogonality and reflection in
the package.  Vectors over the disk system are held either as (N, 2)
arrays of per-disk blocks or flattened to length 2N in the order
(x_0, y_0, x_1, y_1, ...); helpers below accept both.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import FeasibilityError, ValidationError
from .rng import make_generator


@dataclass(frozen=True)
class Tolerances:
    """Numerical tolerances used across simulation and analysis."""

    collision_root_tol: float = 1e-12   # |distance - 2r| at a resolved contact
    tangency_tol: float = 1e-10        # cos(phi) at or below this is tangential
    double_event_tol: float = 1e-12    # events closer than this may be double
    rank_rel_tol: float = 1e-8         # relative singular-value cut for rank decisions


@dataclass(frozen=True)
class SystemParams:
    """Masses, common disk radius and tolerances of one disk system."""

    masses: tuple[float, ...]
    radius: float
    tolerances: Tolerances = field(default_factory=Tolerances)

    def __post_init__(self):
        object.__setattr__(self, "masses", tuple(float(m) for m in self.masses))
        object.__setattr__(self, "radius", float(self.radius))

    @property
    def n(self) -> int:
        return len(self.masses)

    @cached_property
    def mass_array(self) -> np.ndarray:
        a = np.array(self.masses, dtype=float)
        a.setflags(write=False)
        return a

    @cached_property
    def mass_weights(self) -> np.ndarray:
        """Per-coordinate weights for flattened vectors, length 2N."""
        w = np.repeat(self.mass_array, 2)
        w.setflags(write=False)
        return w

    @cached_property
    def total_mass(self) -> float:
        return float(self.mass_array.sum())


@dataclass(frozen=True)
class PhaseState:
    """Positions in [0,1)^2 and velocities of the N disks.

    Arrays are copied and frozen on construction; a state is a value,
    never mutated in place.
    """

    q: np.ndarray
    v: np.ndarray

    def __post_init__(self):
        q = np.array(self.q, dtype=float)
        v = np.array(self.v, dtype=float)
        if q.shape != v.shape or q.ndim != 2 or q.shape[1] != 2:
            raise ValueError(f"expected matching (N, 2) arrays, got {q.shape} and {v.shape}")
        q.setflags(write=False)
        v.setflags(write=False)
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "v", v)

    @property
    def n(self) -> int:
        return self.q.shape[0]


@dataclass(frozen=True)
class ValidationReport:
    status: str                 # "ok" | "warning"
    messages: tuple[str, ...] = ()

    @property
    def ok(self) -> bool:
        return self.status == "ok"


def _flat(u) -> np.ndarray:
    u = np.asarray(u, dtype=float)
    return u.reshape(-1) if u.ndim > 1 else u


def mass_inner(u, w, params: SystemParams) -> float:
    """Mass-metric inner product of two system vectors."""
    uf, wf = _flat(u), _flat(w)
    if uf.shape != wf.shape or uf.shape != (2 * params.n,):
        raise ValueError(
            f"expected two vectors of {2 * params.n} coordinates, "
            f"got {uf.shape} and {wf.shape}")
    return float(np.dot(params.mass_weights * uf, wf))


def mass_norm(u, params: SystemParams) -> float:
    return math.sqrt(max(mass_inner(u, u, params), 0.0))


def cylinder_radius(i: int, j: int, params: SystemParams) -> float:
    """Base-circle radius of the overlap cylinder of disks i and j."""
    if i == j:
        raise ValueError("cylinder requires two distinct disks")
    mi, mj = params.masses[i], params.masses[j]
    return 2.0 * params.radius * math.sqrt(mi * mj / (mi + mj))


def project_to_Z(u, params: SystemParams) -> np.ndarray:
    """Project onto the zero-total-momentum subspace Z.

    Subtracts the mass-weighted mean from every block; this is the
    mass-metric orthogonal projection.  Output has the shape of the
    input ((N,2) or flat 2N).
    """
    u = np.asarray(u, dtype=float)
    blocks = u.reshape(params.n, 2)
    mean = params.mass_array @ blocks / params.total_mass
    out = blocks - mean
    return out if u.ndim > 1 else out.reshape(-1)


def min_image(delta) -> tuple[np.ndarray, np.ndarray]:
    """Shortest representative of a position difference on the torus.

    Returns ``(delta + l, l)`` with integer l minimising the Euclidean
    norm; exact ties pick the lexicographically smallest l.
    """
    delta = np.asarray(delta, dtype=float)
    if delta.shape != (2,):
        raise ValueError(f"expected a 2-vector, got shape {delta.shape}")
    out = np.empty(2)
    lat = np.empty(2, dtype=int)
    for axis in range(2):
        d = delta[axis]
        k0 = -math.floor(d)
        best = min((abs(d + k), k) for k in (k0 - 1, k0, k0 + 1))
        lat[axis] = best[1]
        out[axis] = d + best[1]
    return out, lat


def torus_delta(qi, qj) -> tuple[np.ndarray, np.ndarray]:
    """Min-image difference qi - qj with its lattice offset."""
    return min_image(np.asarray(qi, dtype=float) - np.asarray(qj, dtype=float))


def pair_distance(state: PhaseState, i: int, j: int) -> float:
    d, _ = torus_delta(state.q[i], state.q[j])
    return float(np.hypot(d[0], d[1]))


def min_gap(state: PhaseState, params: SystemParams) -> tuple[float, tuple[int, int]]:
    """Smallest pairwise min-image distance and the pair attaining it."""
    best, pair = math.inf, (0, 1)
    for i in range(params.n):
        for j in range(i + 1, params.n):
            d = pair_distance(state, i, j)
            if d < best:
                best, pair = d, (i, j)
    return best, pair


def energy(state: PhaseState, params: SystemParams) -> float:
    return 0.5 * float(np.sum(params.mass_array[:, None] * state.v**2))


def momentum(state: PhaseState, params: SystemParams) -> np.ndarray:
    return params.mass_array @ state.v


def validate_params(params: SystemParams) -> ValidationReport:
    """Check masses and radius; density beyond one row is a warning only."""
    if params.n < 2:
        raise ValidationError(f"need at least 2 disks, got {params.n}")
    for k, m in enumerate(params.masses):
        if not (m > 0.0) or not math.isfinite(m):
            raise ValidationError(f"mass of disk {k} must be positive, got {m}")
    if not (params.radius > 0.0) or not math.isfinite(params.radius):
        raise ValidationError(f"radius must be positive, got {params.radius}")
    occupancy = params.n * 2.0 * params.radius
    if occupancy < 1.0:
        return ValidationReport("ok")
    return ValidationReport(
        "warning",
        (f"dense packing: N*2r = {occupancy:g} >= 1; "
         "states may be hard or impossible to sample",))


def validate_state(state: PhaseState, params: SystemParams,
                   *, require_shell: bool = True) -> None:
    """Raise ValidationError unless the state is admissible.

    Geometric admissibility (no overlap beyond the contact tolerance)
    is always enforced; ``require_shell`` additionally pins total
    momentum to 0 and kinetic energy to 1/2.
    """
    if state.n != params.n:
        raise ValidationError(f"state has {state.n} disks, params have {params.n}")
    if not np.all(np.isfinite(state.q)) or not np.all(np.isfinite(state.v)):
        raise ValidationError("non-finite phase coordinates")
    if np.any(state.q < 0.0) or np.any(state.q >= 1.0):
        raise ValidationError("positions must lie in [0,1)^2")
    gap, pair = min_gap(state, params)
    slack = 100.0 * params.tolerances.collision_root_tol
    if gap < 2.0 * params.radius - slack:
        raise ValidationError(
            f"disks {pair} overlap: distance {gap:.17g} < 2r = {2 * params.radius:.17g}")
    if require_shell:
        p = momentum(state, params)
        if np.max(np.abs(p)) > 1e-12:
            raise ValidationError(f"total momentum {p} not zero")
        e = energy(state, params)
        if abs(2.0 * e - 1.0) > 1e-12:
            raise ValidationError(f"kinetic energy {e:.17g} not 1/2")


def sample_state(seed: int, params: SystemParams, *, stream: int = 0,
                 max_tries: int = 10000) -> PhaseState:
    """Draw a reproducible admissible state on the standard shell.

    Positions are sampled by rejection until all min-image gaps clear
    2r; velocities are isotropic in the mass metric, projected to zero
    total momentum and rescaled to kinetic energy 1/2.  Distinct
    streams give independent draws for the same seed.
    """
    report = validate_params(params)
    rng = make_generator(seed, stream)
    two_r = 2.0 * params.radius
    for _ in range(max_tries):
        q = rng.random((params.n, 2))
        ok = True
        for i in range(params.n):
            for j in range(i + 1, params.n):
                d, _ = torus_delta(q[i], q[j])
                if np.hypot(d[0], d[1]) <= two_r:
                    ok = False
                    break
            if not ok:
                break
        if ok:
            break
    else:
        raise FeasibilityError(
            f"no admissible configuration in {max_tries} draws "
            f"(N = {params.n}, r = {params.radius:g}; status: {report.status})")
    while True:
        v = rng.standard_normal((params.n, 2)) / np.sqrt(params.mass_array)[:, None]
        v = project_to_Z(v, params)
        norm = math.sqrt(float(np.sum(params.mass_array[:, None] * v**2)))
        if norm > 1e-8:
            break
    return PhaseState(q, v / norm)


@dataclass(frozen=True)
class CylinderGeometry:
    """Overlap cylinder of one disk pair.

    ``base_basis`` spans the 2-dimensional base plane (relative motion
    of the pair, opposite momenta); ``generator_basis`` spans its
    mass-orthogonal complement, the subspace with the two disk centers
    equal.  Both are mass-orthonormal, columns in flattened order.
    """

    pair: tuple[int, int]
    base_radius: float
    base_basis: np.ndarray
    generator_basis: np.ndarray


def cylinder_geometry(i: int, j: int, params: SystemParams) -> CylinderGeometry:
    if not (0 <= i < params.n and 0 <= j < params.n) or i == j:
        raise ValueError(f"bad pair ({i}, {j}) for {params.n} disks")
    i, j = min(i, j), max(i, j)
    mi, mj = params.masses[i], params.masses[j]
    s = math.sqrt(1.0 / mi + 1.0 / mj)
    base = np.zeros((2 * params.n, 2))
    for axis in range(2):
        base[2 * i + axis, axis] = 1.0 / (mi * s)
        base[2 * j + axis, axis] = -1.0 / (mj * s)
    gen = _mass_orthonormal_complement(base, params)
    base.setflags(write=False)
    gen.setflags(write=False)
    return CylinderGeometry((i, j), cylinder_radius(i, j, params), base, gen)


@dataclass(frozen=True)
class ReducedSpace:
    """Zero-total-momentum subspace Z with a mass-orthonormal basis."""

    dimension: int
    basis: np.ndarray      # (2N, 2(N-1)), mass-orthonormal columns
    projector: np.ndarray  # (2N, 2N), mass-metric orthogonal projection


def reduced_space(params: SystemParams) -> ReducedSpace:
    n = params.n
    root_m = np.sqrt(params.mass_array)
    # Euclidean-orthonormal basis of the hyperplane orthogonal to sqrt(m)
    # in R^N; dividing rows by sqrt(m) makes it mass-orthonormal in the
    # original coordinates.
    a = np.eye(n) - np.outer(root_m, root_m) / float(root_m @ root_m)
    u, svals, _ = np.linalg.svd(a)
    cols = u[:, : n - 1] / root_m[:, None]
    basis = np.zeros((2 * n, 2 * (n - 1)))
    for k in range(n - 1):
        basis[0::2, 2 * k] = cols[:, k]
        basis[1::2, 2 * k + 1] = cols[:, k]
    mw = params.mass_weights
    projector = basis @ (basis.T * mw)
    basis.setflags(write=False)
    projector.setflags(write=False)
    return ReducedSpace(2 * (n - 1), basis, projector)


def _mass_orthonormal_complement(cols: np.ndarray, params: SystemParams,
                                 within: np.ndarray | None = None) -> np.ndarray:
    """Mass-orthonormal basis of the complement of span(cols).

    With ``within`` given (mass-orthonormal columns), the complement is
    taken inside that subspace instead of the full coordinate space.
    Scaling coordinates by sqrt(m) turns the mass metric Euclidean, so
    plain linear algebra applies in between.
    """
    scale = np.sqrt(params.mass_weights)
    cols_y = cols * scale[:, None]
    if within is None:
        coords = cols_y
        dim = 2 * params.n
    else:
        coords = (within * scale[:, None]).T @ cols_y
        dim = within.shape[1]
    u, svals, _ = np.linalg.svd(np.eye(dim) - _proj(coords))
    u = u[:, svals > 0.5]
    return u / scale[:, None] if within is None else within @ u


def _proj(cols: np.ndarray) -> np.ndarray:
    """Euclidean orthogonal projector onto span of the given columns."""
    if cols.size == 0:
        return np.zeros((cols.shape[0], cols.shape[0]))
    q, r = np.linalg.qr(cols)
    rank = int(np.sum(np.abs(np.diag(r)) > 1e-12 * max(1.0, np.abs(r).max())))
    q = q[:, :rank]
    return q @ q.T


def transverse_basis(v, params: SystemParams) -> np.ndarray:
    """Mass-orthonormal basis of {v}^perp inside Z, dimension 2(N-1)-1."""
    z = reduced_space(params)
    vf = _flat(v)
    nrm = mass_norm(vf, params)
    if nrm < 1e-14:
        raise ValueError("velocity direction is numerically zero")
    vhat = (vf / nrm)[:, None]
    return _mass_orthonormal_complement(vhat, params, within=z.basis)
