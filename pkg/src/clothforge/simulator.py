"""Position-based cloth dynamics and the deformation procedures.

The solver is classic position-based dynamics: semi-implicit Euler predicts
positions, a fixed number of Gauss-Seidel iterations project distance
constraints, then plane collision with position-level Coulomb-style friction,
and velocities are re-derived from the position change.  Constraint stiffness
k is applied per iteration as k' = 1 - (1 - k)^(1/iterations) so the total
effect after all iterations matches k independently of the iteration count.

Stretch constraints connect every mesh edge (1-ring pairs); bend resistance
uses distance constraints between vertices at graph distance exactly two
(2-ring pairs), which keeps the solver uniform and fast.

Everything returns new state; inputs are never mutated.  The inner loop is a
numba kernel compiled without fastmath, so results are bit-reproducible.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
from numba import njit
from scipy.spatial.transform import Rotation

from .errors import SimulationDiverged
from .geometry import ClothMesh, boundary_edges, triangle_areas, unique_edges

KIND_STRETCH = 0
KIND_BEND = 1

_FOLD_SPEED = 0.5  # m/s of the grasped vertex along its arc
_REST_EPS = 1e-12


@dataclass
class SimParams:
    gravity: tuple[float, float, float] = (0.0, 0.0, -9.81)
    dt: float = 1.0 / 60.0
    substeps: int = 4
    solver_iterations: int = 20
    stretch_stiffness: float = 1.0
    bend_stiffness: float = 0.1
    friction: float = 0.3
    drag: float = 0.05
    plane_height: float = 0.0
    contact_offset: float = 0.002

    def validate(self) -> None:
        if self.dt <= 0 or self.substeps < 1 or self.solver_iterations < 1:
            raise ValueError("dt, substeps and solver_iterations must be positive")
        for name in ("stretch_stiffness", "bend_stiffness"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must be in [0, 1], got {v}")
        if self.friction < 0 or self.drag < 0:
            raise ValueError("friction and drag must be non-negative")


@dataclass
class Constraint:
    i: int
    j: int
    rest_length: float
    stiffness: float
    kind: int  # KIND_STRETCH or KIND_BEND


@dataclass
class ConstraintSet:
    """Structure-of-arrays constraint storage, ordered deterministically:
    stretch constraints sorted by (i, j), then bend constraints likewise."""

    i: np.ndarray
    j: np.ndarray
    rest_length: np.ndarray
    stiffness: np.ndarray
    kind: np.ndarray

    def __len__(self) -> int:
        return int(self.i.shape[0])

    def __getitem__(self, idx: int) -> Constraint:
        return Constraint(
            int(self.i[idx]), int(self.j[idx]), float(self.rest_length[idx]),
            float(self.stiffness[idx]), int(self.kind[idx]),
        )


@dataclass
class SimState:
    positions: np.ndarray  # (V, 3)
    velocities: np.ndarray  # (V, 3)
    inverse_masses: np.ndarray  # (V,)
    constraints: ConstraintSet
    settled: bool = False

    def copy(self) -> "SimState":
        return SimState(
            self.positions.copy(), self.velocities.copy(),
            self.inverse_masses.copy(), self.constraints, self.settled,
        )

    def kinetic_energy(self) -> float:
        w = self.inverse_masses
        moving = w > 0
        v2 = (self.velocities[moving] ** 2).sum(axis=1)
        return float(0.5 * (v2 / w[moving]).sum())


@dataclass
class DeformConfig:
    drop_height: tuple[float, float] = (0.05, 0.25)
    tilt_max_deg: float = 30.0
    flat_probability: float = 0.15
    fold_probability: float = 0.4
    fold_arc_radius: tuple[float, float] = (0.05, 0.2)
    fold_arc_angle_deg: tuple[float, float] = (120.0, 200.0)
    flip_probability: float = 0.15
    grasp_boundary_probability: float = 0.7
    settle_ke: float = 1e-5
    settle_max_steps: int = 600
    areal_density: float = 0.2  # kg / m^2
    undeformed: bool = False  # force every sample to stay flat
    stretch_stiffness: tuple[float, float] = (0.7, 1.0)
    bend_stiffness: tuple[float, float] = (0.05, 0.5)
    friction: tuple[float, float] = (0.2, 0.8)
    drag: tuple[float, float] = (0.0, 0.3)


# ---------------------------------------------------------------------------
# construction


def _ring2_pairs(triangles: np.ndarray, num_vertices: int) -> np.ndarray:
    """Sorted unique vertex pairs at edge-graph distance exactly two."""
    edges = unique_edges(triangles)
    both = np.vstack([edges, edges[:, ::-1]])
    order = np.lexsort((both[:, 1], both[:, 0]))
    nbr = both[order, 1]
    deg = np.bincount(both[:, 0], minlength=num_vertices)
    offsets = np.concatenate([[0], np.cumsum(deg)])

    chunks = []
    for d in np.unique(deg):
        if d < 2:
            continue
        verts = np.nonzero(deg == d)[0]
        # neighbor lists of all degree-d vertices as one matrix
        idx = offsets[verts][:, None] + np.arange(d)[None, :]
        mat = nbr[idx]
        iu, ju = np.triu_indices(d, k=1)
        a = mat[:, iu].ravel()
        b = mat[:, ju].ravel()
        chunks.append(np.column_stack([np.minimum(a, b), np.maximum(a, b)]))
    if not chunks:
        return np.empty((0, 2), dtype=np.int64)
    pairs = np.vstack(chunks).astype(np.int64)
    big = num_vertices + 1
    keys = np.unique(pairs[:, 0] * big + pairs[:, 1])
    edge_keys = edges[:, 0].astype(np.int64) * big + edges[:, 1]
    keys = keys[~np.isin(keys, edge_keys)]
    return np.column_stack([keys // big, keys % big])


def build_constraints(mesh: ClothMesh, stretch_stiffness: float,
                      bend_stiffness: float) -> ConstraintSet:
    """Distance constraints from rest geometry: one per mesh edge plus one
    per 2-ring pair, rest lengths measured on the given vertices."""
    v = mesh.vertices
    stretch = unique_edges(mesh.triangles).astype(np.int64)
    bend = _ring2_pairs(mesh.triangles, mesh.num_vertices)
    pairs = np.vstack([stretch, bend])
    rest = np.linalg.norm(v[pairs[:, 0]] - v[pairs[:, 1]], axis=1)
    if (rest < _REST_EPS).any():
        raise ValueError("mesh has coincident constraint endpoints")
    stiffness = np.concatenate([
        np.full(stretch.shape[0], float(stretch_stiffness)),
        np.full(bend.shape[0], float(bend_stiffness)),
    ])
    kind = np.concatenate([
        np.full(stretch.shape[0], KIND_STRETCH, dtype=np.int8),
        np.full(bend.shape[0], KIND_BEND, dtype=np.int8),
    ])
    return ConstraintSet(
        i=np.ascontiguousarray(pairs[:, 0]),
        j=np.ascontiguousarray(pairs[:, 1]),
        rest_length=rest,
        stiffness=stiffness,
        kind=kind,
    )


def make_sim_state(mesh: ClothMesh, params: SimParams,
                   areal_density: float = 0.2) -> SimState:
    """Lumped-mass state: each triangle spreads a third of its rest area to
    each of its vertices."""
    params.validate()
    areas = triangle_areas(mesh.vertices, mesh.triangles)
    mass = areal_density * np.bincount(
        mesh.triangles.ravel(), weights=np.repeat(areas / 3.0, 3),
        minlength=mesh.num_vertices,
    )
    if (mass <= 0).any():
        raise ValueError("mesh has massless (unreferenced) vertices")
    return SimState(
        positions=mesh.vertices.copy(),
        velocities=np.zeros_like(mesh.vertices),
        inverse_masses=1.0 / mass,
        constraints=build_constraints(
            mesh, params.stretch_stiffness, params.bend_stiffness
        ),
    )


# ---------------------------------------------------------------------------
# solver


@njit(cache=True)
def _sim_frames(pos, vel, invm, ci, cj, rest, keff, gx, gy, gz, dt_sub,
                substeps, iters, drag, friction, plane_h, n_frames, ke_stop,
                ke_out):
    """Run up to n_frames of the solver in place, stopping early once the
    kinetic energy drops below ke_stop.  Returns (frames_run, finite)."""
    n = pos.shape[0]
    m = ci.shape[0]
    prev = np.empty((n, 3))
    damp = 1.0 - drag * dt_sub
    for f in range(n_frames):
        for _s in range(substeps):
            for i in range(n):
                prev[i, 0] = pos[i, 0]
                prev[i, 1] = pos[i, 1]
                prev[i, 2] = pos[i, 2]
                if invm[i] > 0.0:
                    vx = vel[i, 0] * damp + gx * dt_sub
                    vy = vel[i, 1] * damp + gy * dt_sub
                    vz = vel[i, 2] * damp + gz * dt_sub
                    vel[i, 0] = vx
                    vel[i, 1] = vy
                    vel[i, 2] = vz
                    pos[i, 0] += vx * dt_sub
                    pos[i, 1] += vy * dt_sub
                    pos[i, 2] += vz * dt_sub
            for _it in range(iters):
                for c in range(m):
                    a = ci[c]
                    b = cj[c]
                    wa = invm[a]
                    wb = invm[b]
                    wsum = wa + wb
                    if wsum <= 0.0:
                        continue
                    dx = pos[b, 0] - pos[a, 0]
                    dy = pos[b, 1] - pos[a, 1]
                    dz = pos[b, 2] - pos[a, 2]
                    d = np.sqrt(dx * dx + dy * dy + dz * dz)
                    if d < 1e-12:
                        continue
                    s = keff[c] * (d - rest[c]) / (wsum * d)
                    pos[a, 0] += wa * s * dx
                    pos[a, 1] += wa * s * dy
                    pos[a, 2] += wa * s * dz
                    pos[b, 0] -= wb * s * dx
                    pos[b, 1] -= wb * s * dy
                    pos[b, 2] -= wb * s * dz
            for i in range(n):
                if invm[i] > 0.0 and pos[i, 2] < plane_h:
                    pen = plane_h - pos[i, 2]
                    pos[i, 2] = plane_h
                    tx = pos[i, 0] - prev[i, 0]
                    ty = pos[i, 1] - prev[i, 1]
                    tl = np.sqrt(tx * tx + ty * ty)
                    if tl > 1e-12:
                        # static below mu * penetration, kinetic scaling above
                        if tl <= friction * pen:
                            scale = 1.0
                        else:
                            scale = friction * pen / tl
                        pos[i, 0] -= scale * tx
                        pos[i, 1] -= scale * ty
            for i in range(n):
                if invm[i] > 0.0:
                    vel[i, 0] = (pos[i, 0] - prev[i, 0]) / dt_sub
                    vel[i, 1] = (pos[i, 1] - prev[i, 1]) / dt_sub
                    vel[i, 2] = (pos[i, 2] - prev[i, 2]) / dt_sub
                else:
                    vel[i, 0] = 0.0
                    vel[i, 1] = 0.0
                    vel[i, 2] = 0.0
        ke = 0.0
        for i in range(n):
            if invm[i] > 0.0:
                v2 = vel[i, 0] ** 2 + vel[i, 1] ** 2 + vel[i, 2] ** 2
                ke += 0.5 * v2 / invm[i]
        ke_out[f] = ke
        if not np.isfinite(ke):
            return f + 1, False
        if ke < ke_stop:
            return f + 1, True
    return n_frames, True


def _effective_stiffness(stiffness: np.ndarray, iterations: int) -> np.ndarray:
    return 1.0 - (1.0 - stiffness) ** (1.0 / iterations)


def _run_frames(state: SimState, params: SimParams, n_frames: int,
                ke_stop: float = -1.0):
    """Advance a copy of the state; returns (new_state, ke_per_frame)."""
    out = state.copy()
    c = out.constraints
    keff = _effective_stiffness(c.stiffness, params.solver_iterations)
    ke = np.zeros(max(n_frames, 1))
    gx, gy, gz = params.gravity
    frames, finite = _sim_frames(
        out.positions, out.velocities, out.inverse_masses,
        c.i, c.j, c.rest_length, keff,
        float(gx), float(gy), float(gz), params.dt / params.substeps,
        params.substeps, params.solver_iterations,
        params.drag, params.friction, params.plane_height,
        n_frames, ke_stop, ke,
    )
    if not finite:
        raise SimulationDiverged(f"solver produced non-finite state at frame {frames}")
    return out, ke[:frames]


def step(state: SimState, params: SimParams) -> SimState:
    """One frame (dt) of simulation: substeps x (predict, solve, collide)."""
    params.validate()
    out, _ = _run_frames(state, params, 1)
    return out


def settle(state: SimState, params: SimParams, ke_threshold: float = 1e-5,
           max_steps: int = 600) -> SimState:
    """Step until kinetic energy falls below the threshold or the step budget
    runs out; ``settled`` on the result records which happened."""
    params.validate()
    out, ke = _run_frames(state, params, max_steps, ke_threshold)
    out.settled = bool(ke[-1] < ke_threshold)
    return out


# ---------------------------------------------------------------------------
# deformation procedures


def drop(mesh: ClothMesh, orientation: np.ndarray, cfg: DeformConfig,
         params: SimParams, rng: np.random.Generator) -> SimState:
    """Rotate the flat mesh, lift it to a sampled height above the plane and
    settle it under gravity.  Constraints keep the flat rest geometry."""
    state = make_sim_state(mesh, params, cfg.areal_density)
    r = np.asarray(orientation, dtype=np.float64)
    if r.shape != (3, 3):
        raise ValueError("orientation must be a 3x3 rotation matrix")
    centroid = state.positions.mean(axis=0)
    pos = (state.positions - centroid) @ r.T + centroid
    height = float(rng.uniform(*cfg.drop_height))
    lift = params.plane_height + params.contact_offset + height - pos[:, 2].min()
    pos[:, 2] += lift
    state.positions = pos
    return settle(state, params, cfg.settle_ke, cfg.settle_max_steps)


def fold(state: SimState, grasp_vertex: int, arc_radius: float,
         arc_angle: float, params: SimParams, ke_threshold: float = 1e-5,
         max_steps: int = 600) -> SimState:
    """Grasp one vertex, sweep it along a vertical circular arc toward the
    cloth's centroid, release, settle.

    The arc starts at the grasp point, its center sits ``arc_radius`` toward
    the centroid, and the grasped vertex is pinned (infinite mass) while it
    follows the arc at a fixed speed.
    """
    params.validate()
    if not 0 <= grasp_vertex < state.positions.shape[0]:
        raise ValueError(f"grasp vertex {grasp_vertex} out of range")
    if arc_radius <= 0.0:
        raise ValueError("arc radius must be positive")
    if arc_angle < 0.0:
        raise ValueError("arc angle must be non-negative")

    out = state.copy()
    out.settled = False
    start = out.positions[grasp_vertex].copy()
    toward = out.positions[:, :2].mean(axis=0) - start[:2]
    norm = np.linalg.norm(toward)
    d3 = np.array([1.0, 0.0, 0.0]) if norm < 1e-9 else np.array(
        [toward[0] / norm, toward[1] / norm, 0.0]
    )
    center = start + arc_radius * d3

    n_steps = int(np.ceil(arc_radius * arc_angle / _FOLD_SPEED / params.dt))
    if arc_angle > 0.0 and n_steps > 0:
        saved_w = out.inverse_masses[grasp_vertex]
        out.inverse_masses = out.inverse_masses.copy()
        out.inverse_masses[grasp_vertex] = 0.0
        out.velocities[grasp_vertex] = 0.0
        thetas = arc_angle * np.arange(1, n_steps + 1) / n_steps
        for theta in thetas:
            target = center + arc_radius * (
                -np.cos(theta) * d3 + np.sin(theta) * np.array([0.0, 0.0, 1.0])
            )
            out.positions[grasp_vertex] = target
            out, _ = _run_frames(out, params, 1)
        out.inverse_masses = out.inverse_masses.copy()
        out.inverse_masses[grasp_vertex] = saved_w
    return settle(out, params, ke_threshold, max_steps)


def flip(state: SimState, params: SimParams, axis=(1.0, 0.0, 0.0),
         lift: float = 0.05, ke_threshold: float = 1e-5,
         max_steps: int = 600) -> SimState:
    """Turn the cloth over: rigid 180-degree rotation about a horizontal axis
    through the centroid, re-dropped from a small lift and settled."""
    params.validate()
    a = np.asarray(axis, dtype=np.float64)
    a[2] = 0.0
    norm = np.linalg.norm(a)
    if norm < 1e-12:
        raise ValueError("flip axis must be horizontal and non-zero")
    a /= norm
    # rotation by pi about a unit axis, exactly: R = 2 a a^T - I
    r = 2.0 * np.outer(a, a) - np.eye(3)
    out = state.copy()
    centroid = out.positions.mean(axis=0)
    pos = (out.positions - centroid) @ r.T + centroid
    pos[:, 2] += params.plane_height + params.contact_offset + lift - pos[:, 2].min()
    out.positions = pos
    out.velocities = np.zeros_like(pos)
    return settle(out, params, ke_threshold, max_steps)


def sample_sim_params(cfg: DeformConfig, rng: np.random.Generator) -> SimParams:
    """Draw the per-sample physics parameters from the configured ranges."""
    return SimParams(
        stretch_stiffness=float(rng.uniform(*cfg.stretch_stiffness)),
        bend_stiffness=float(rng.uniform(*cfg.bend_stiffness)),
        friction=float(rng.uniform(*cfg.friction)),
        drag=float(rng.uniform(*cfg.drag)),
    )


def _sample_orientation(cfg: DeformConfig, rng: np.random.Generator) -> np.ndarray:
    yaw = rng.uniform(0.0, 2.0 * np.pi)
    tilt_axis_az = rng.uniform(0.0, 2.0 * np.pi)
    tilt = rng.uniform(0.0, np.deg2rad(cfg.tilt_max_deg))
    rz = Rotation.from_euler("z", yaw)
    axis = np.array([np.cos(tilt_axis_az), np.sin(tilt_axis_az), 0.0])
    rt = Rotation.from_rotvec(tilt * axis)
    return (rt * rz).as_matrix()


def deform_procedure(mesh: ClothMesh, cfg: DeformConfig,
                     rng: np.random.Generator) -> tuple[ClothMesh, SimParams]:
    """Full per-sample deformation: stays flat, or drops, optionally followed
    by a fold and/or a flip, per the configured probabilities.  Returns the
    deformed mesh (same topology, new vertex positions) and the physics
    parameters used."""
    params = sample_sim_params(cfg, rng)
    if cfg.undeformed or rng.uniform() < cfg.flat_probability:
        return mesh.copy(), params

    orientation = _sample_orientation(cfg, rng)
    state = drop(mesh, orientation, cfg, params, rng)

    if rng.uniform() < cfg.fold_probability:
        if rng.uniform() < cfg.grasp_boundary_probability:
            candidates = np.unique(boundary_edges(mesh.triangles))
        else:
            candidates = np.arange(mesh.num_vertices)
        grasp = int(candidates[rng.integers(candidates.shape[0])])
        radius = float(rng.uniform(*cfg.fold_arc_radius))
        angle = float(np.deg2rad(rng.uniform(*cfg.fold_arc_angle_deg)))
        state = fold(state, grasp, radius, angle, params,
                     cfg.settle_ke, cfg.settle_max_steps)

    if rng.uniform() < cfg.flip_probability:
        az = rng.uniform(0.0, 2.0 * np.pi)
        lift = float(rng.uniform(*cfg.drop_height))
        state = flip(state, params, (np.cos(az), np.sin(az), 0.0), lift,
                     cfg.settle_ke, cfg.settle_max_steps)

    return mesh.with_vertices(state.positions), params
