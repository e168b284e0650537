"""Finite-element solver for the hybrid phase-field fatigue model.

Linear triangles; displacement and damage are nodal, the history variable
``H``, the cumulated fatigue history ``alpha_bar`` and the endurance
history are stored per element (one-point quadrature).  Force-controlled
loading uses a traction of magnitude ``sigma`` on LOAD facets, ``u_x = 0``
on FIXED facets and one roller node with ``u_y = 0``.
"""

from __future__ import annotations

import enum
import json
import logging
import time
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.sparse.csgraph import connected_components

from ..mesh import Mesh, Plane, Tag
from .constitutive import fatigue_degradation_f2, shape_gradients, tensile_energy
from .material import LoadSpec, MaterialParams

logger = logging.getLogger(__name__)

#: Stiffness kept by fully broken material, relative to the intact value.
RESIDUAL_STIFFNESS = 1e-6
STAGGER_TOL = 1e-6
MAX_STAGGER_ITERS = 500
FAILURE_PHI = 0.95
DISPLACEMENT_FAILURE_RATIO = 10.0
#: Per-block cap on the fatigue-history increment, as a fraction of alpha_T.
DEFAULT_JUMP_TOL = 2e-3
NEAR_FAILURE_RATIO = 1.5
CHECKPOINT_VERSION = 1


class SolverError(RuntimeError):
    pass


class ConvergenceError(SolverError):
    def __init__(self, iterations: int, residual: float, cycle: int | None = None):
        self.iterations = iterations
        self.residual = residual
        self.cycle = cycle
        where = f" at cycle {cycle}" if cycle is not None else ""
        super().__init__(f"staggered scheme did not converge{where} after {iterations} "
                         f"iterations (last |dphi| = {residual:.3e})")


class Status(enum.Enum):
    FAILED = "FAILED"
    SURVIVED_CAP = "SURVIVED_CAP"


def _csr_pattern(rows: np.ndarray, cols: np.ndarray, n: int):
    """Sorted CSR structure plus the map from raw entries to CSR slots."""
    keys = rows.astype(np.int64) * n + cols
    uniq, inv = np.unique(keys, return_inverse=True)
    r, c = uniq // n, uniq % n
    indptr = np.zeros(n + 1, dtype=np.int64)
    np.add.at(indptr, r + 1, 1)
    return np.cumsum(indptr), c.astype(np.int64), inv, uniq.size


class Discretization:
    """Mesh-dependent operators shared by every solve on one specimen."""

    def __init__(self, mesh: Mesh, mat: MaterialParams, body_force=(0.0, 0.0)):
        self.mesh = mesh
        self.mat = mat
        el = mesh.elements
        self.n_nodes, self.n_elem = mesh.n_nodes, mesh.n_elements
        xy = mesh.nodes[el]
        self.grads, self.area = shape_gradients(xy)
        self.body_force = np.asarray(body_force, dtype=float)

        # elasticity ----------------------------------------------------
        plane = Plane(mat.plane)
        E, nu = mat.E, mat.nu
        if plane is Plane.PLANE_STRESS:
            D = E / (1 - nu**2) * np.array([[1, nu, 0], [nu, 1, 0], [0, 0, (1 - nu) / 2]])
        else:
            D = E / ((1 + nu) * (1 - 2 * nu)) * np.array(
                [[1 - nu, nu, 0], [nu, 1 - nu, 0], [0, 0, (1 - 2 * nu) / 2]])
        bx, by = self.grads[..., 0], self.grads[..., 1]
        B = np.zeros((self.n_elem, 3, 6))
        B[:, 0, 0::2] = bx
        B[:, 1, 1::2] = by
        B[:, 2, 0::2] = by
        B[:, 2, 1::2] = bx
        self.B = B
        self.Ke = np.einsum("eki,kl,elj->eij", B, D, B) * self.area[:, None, None]

        dofs = np.empty((self.n_elem, 6), dtype=np.int64)
        dofs[:, 0::2] = 2 * el
        dofs[:, 1::2] = 2 * el + 1
        self.dofs = dofs
        ndof = 2 * self.n_nodes
        self.free = self._free_dofs()
        remap = -np.ones(ndof, dtype=np.int64)
        remap[self.free] = np.arange(self.free.size)
        r = remap[np.repeat(dofs, 6, axis=1)].ravel()
        c = remap[np.tile(dofs, (1, 6))].ravel()
        keep = (r >= 0) & (c >= 0)
        self._u_keep = keep
        self._u_pattern = _csr_pattern(r[keep], c[keep], self.free.size)
        self.load_vector = self._traction_vector()
        if np.any(self.body_force):
            fb = np.zeros(ndof)
            for k in range(3):
                np.add.at(fb, 2 * el[:, k], self.area / 3 * self.body_force[0])
                np.add.at(fb, 2 * el[:, k] + 1, self.area / 3 * self.body_force[1])
            self.body_vector = fb
        else:
            self.body_vector = np.zeros(ndof)

        # damage ----------------------------------------------------------
        self.Le = np.einsum("eai,ebi->eab", self.grads, self.grads) * self.area[:, None, None]
        r = np.repeat(el, 3, axis=1).ravel()
        c = np.tile(el, (1, 3)).ravel()
        self._d_pattern = _csr_pattern(r, c, self.n_nodes)
        diag_keys = np.arange(self.n_nodes, dtype=np.int64) * (self.n_nodes + 1)
        indptr, indices, _, _ = self._d_pattern
        rows = np.repeat(np.arange(self.n_nodes), np.diff(indptr))
        slot_keys = rows * self.n_nodes + indices
        self._d_diag = np.searchsorted(slot_keys, diag_keys)

        self._lateral_arcs = self._find_lateral_arcs()
        self._elem_adj = self._element_adjacency()

    # boundary conditions ----------------------------------------------------
    def _free_dofs(self) -> np.ndarray:
        mesh = self.mesh
        fixed_nodes = mesh.tagged_nodes(Tag.FIXED)
        if fixed_nodes.size == 0:
            raise SolverError("no FIXED boundary: rigid-body translation along x is unconstrained")
        if fixed_nodes.size < 2:
            raise SolverError("FIXED boundary has a single node: rigid rotation is unconstrained")
        y = mesh.nodes[fixed_nodes, 1]
        roller = fixed_nodes[np.argmin(np.abs(y - np.median(y)))]
        self.roller_node = int(roller)
        is_fixed = np.zeros(2 * self.n_nodes, dtype=bool)
        is_fixed[2 * fixed_nodes] = True
        is_fixed[2 * roller + 1] = True
        return np.nonzero(~is_fixed)[0]

    def _facet_normals(self, facets: np.ndarray) -> np.ndarray:
        mesh = self.mesh
        p = mesh.nodes[facets]
        d = p[:, 1] - p[:, 0]
        n = np.column_stack([d[:, 1], -d[:, 0]])
        # orient away from the element owning the facet
        key = {}
        el = mesh.elements
        for e in range(el.shape[0]):
            for k in range(3):
                a, b = el[e, k], el[e, (k + 1) % 3]
                key[(min(a, b), max(a, b))] = el[e, (k + 2) % 3]
        third = np.array([key[(min(a, b), max(a, b))] for a, b in facets], dtype=np.int64)
        mid = p.mean(axis=1)
        flip = np.sum((mid - mesh.nodes[third]) * n, axis=1) < 0
        n[flip] *= -1
        return n  # length equals facet length

    def _traction_vector(self) -> np.ndarray:
        """Nodal forces of a unit normal traction on LOAD facets."""
        mesh = self.mesh
        f = np.zeros(2 * self.n_nodes)
        facets = mesh.facets[mesh.facet_tags == int(Tag.LOAD)]
        if facets.size == 0:
            raise SolverError("no LOAD boundary")
        n = self._facet_normals(facets)
        for k in (0, 1):
            np.add.at(f, 2 * facets[:, k], 0.5 * n[:, 0])
            np.add.at(f, 2 * facets[:, k] + 1, 0.5 * n[:, 1])
        self.load_nodes = np.unique(facets)
        self.load_normal = n.sum(axis=0) / np.linalg.norm(n.sum(axis=0))
        return f

    def _find_lateral_arcs(self) -> list[np.ndarray]:
        mesh = self.mesh
        mask = np.isin(mesh.facet_tags, [int(Tag.FREE), int(Tag.ROUGH)])
        facets = mesh.facets[mask]
        if facets.size == 0:
            return []
        nodes, inv = np.unique(facets, return_inverse=True)
        inv = inv.reshape(-1, 2)
        g = sp.coo_matrix((np.ones(len(inv)), (inv[:, 0], inv[:, 1])),
                          shape=(len(nodes), len(nodes)))
        ncomp, labels = connected_components(g, directed=False)
        return [nodes[labels == k] for k in range(ncomp)]

    def _element_adjacency(self) -> sp.csr_matrix:
        el = self.mesh.elements
        ne = el.shape[0]
        inc = sp.csr_matrix((np.ones(3 * ne), (np.repeat(np.arange(ne), 3), el.ravel())),
                            shape=(ne, self.n_nodes))
        return (inc @ inc.T).tocsr()

    # operators --------------------------------------------------------------
    def degradation(self, phi: np.ndarray) -> np.ndarray:
        """Element stiffness factor: g(phi) integrated exactly (edge midpoints)."""
        p = phi[self.mesh.elements]
        mids = 0.5 * (p + np.roll(p, -1, axis=1))
        return np.mean((1.0 - mids) ** 2, axis=1) + RESIDUAL_STIFFNESS

    def stiffness(self, g_elem: np.ndarray) -> sp.csr_matrix:
        indptr, indices, inv, nnz = self._u_pattern
        vals = (self.Ke * g_elem[:, None, None]).ravel()[self._u_keep]
        data = np.bincount(inv, weights=vals, minlength=nnz)
        n = self.free.size
        return sp.csr_matrix((data, indices, indptr), shape=(n, n))

    def element_strain(self, u: np.ndarray) -> np.ndarray:
        eps = np.einsum("eij,ej->ei", self.B, u[self.dofs])
        eps[:, 2] *= 0.5  # tensor shear
        return eps

    def tensile_energy(self, u: np.ndarray) -> np.ndarray:
        return tensile_energy(self.element_strain(u), self.mat)

    def damage_system(self, H: np.ndarray, f: np.ndarray):
        mat = self.mat
        indptr, indices, inv, nnz = self._d_pattern
        coef = 0.75 * mat.Gc * mat.ell * f
        data = np.bincount(inv, weights=(self.Le * coef[:, None, None]).ravel(), minlength=nnz)
        react = np.zeros(self.n_nodes)
        rhs = np.zeros(self.n_nodes)
        w = self.area / 3.0
        drive = 2.0 * H - 3.0 * mat.Gc * f / (8.0 * mat.ell)
        for k in range(3):
            np.add.at(react, self.mesh.elements[:, k], 2.0 * H * w)
            np.add.at(rhs, self.mesh.elements[:, k], drive * w)
        data[self._d_diag] += react
        A = sp.csr_matrix((data, indices, indptr), shape=(self.n_nodes, self.n_nodes))
        return A, rhs

    def load_displacement(self, u: np.ndarray) -> float:
        """Mean displacement of the loaded boundary along its normal."""
        uu = u.reshape(-1, 2)[self.load_nodes]
        return float(np.mean(uu @ self.load_normal))


def _solve_spd(A: sp.csr_matrix, b: np.ndarray, method: str = "direct",
               rtol: float = 1e-10) -> np.ndarray:
    if method == "direct":
        try:
            x = spla.splu(A.tocsc()).solve(b)
        except RuntimeError as exc:
            raise SolverError(f"sparse factorization failed: {exc}") from exc
    elif method == "cg":
        d = A.diagonal()
        if np.any(d <= 0):
            raise SolverError("non-positive diagonal in SPD system")
        M = sp.diags(1.0 / d)
        x, info = spla.cg(A, b, rtol=rtol * 1e-2, atol=0.0, M=M, maxiter=20 * A.shape[0])
        if info != 0:
            raise SolverError(f"conjugate gradient did not converge (info={info})")
    else:
        raise ValueError(f"unknown linear solver {method!r}")
    bn = np.linalg.norm(b)
    if bn > 0 and not np.all(np.isfinite(x)):
        raise SolverError("linear solve produced non-finite values")
    if bn > 0:
        res = np.linalg.norm(A @ x - b) / bn
        if res > max(rtol, 1e-6):  # degraded elements make the system ill-conditioned
            raise SolverError(f"linear solve residual {res:.2e} above {rtol:.0e}")
    return x


@dataclass
class SimState:
    """Evolving fields of one simulation.

    ``hist_amp`` is the running maximum of ``alpha_max (1-R)/2`` used by the
    endurance gate; ``rate_prev``/``dN_prev`` feed the two-step cycle jump.
    """

    mesh: Mesh
    u: np.ndarray
    phi: np.ndarray
    alpha_bar: np.ndarray
    H: np.ndarray
    cycle: int = 0
    hist_amp: np.ndarray | None = None
    rate_prev: np.ndarray | None = None
    dN_prev: int = 0
    ref_disp: float | None = None
    clamp_events: int = 0

    @classmethod
    def fresh(cls, mesh: Mesh, mat: MaterialParams) -> "SimState":
        ne = mesh.n_elements
        return cls(mesh, np.zeros(2 * mesh.n_nodes), np.zeros(mesh.n_nodes), np.zeros(ne),
                   np.full(ne, mat.H_min), hist_amp=np.zeros(ne))

    def copy(self) -> "SimState":
        cp = lambda a: None if a is None else a.copy()  # noqa: E731
        return SimState(self.mesh, self.u.copy(), self.phi.copy(), self.alpha_bar.copy(),
                        self.H.copy(), self.cycle, cp(self.hist_amp), cp(self.rate_prev),
                        self.dN_prev, self.ref_disp, self.clamp_events)


def solve_displacement(disc: Discretization, phi: np.ndarray, sigma: float,
                       method: str = "direct") -> np.ndarray:
    """Equilibrium under traction ``sigma`` with stiffness degraded by g(phi)."""
    K = disc.stiffness(disc.degradation(phi))
    rhs = (sigma * disc.load_vector + disc.body_vector)[disc.free]
    u = np.zeros(2 * disc.n_nodes)
    if np.any(rhs):
        u[disc.free] = _solve_spd(K, rhs, method)
    return u


def solve_damage(disc: Discretization, H: np.ndarray, f: np.ndarray,
                 phi_lower: np.ndarray | None = None, method: str = "direct"
                 ) -> tuple[np.ndarray, int]:
    """Damage field for fixed history ``H`` and fatigue degradation ``f``.

    Returns the clamped field and the number of clamped nodes.
    """
    A, rhs = disc.damage_system(H, f)
    phi = _solve_spd(A, rhs, method)
    lo = np.zeros_like(phi) if phi_lower is None else phi_lower
    clamped = int(np.count_nonzero((phi < lo - 1e-12) | (phi > 1.0)))
    return np.clip(np.maximum(phi, lo), 0.0, 1.0), clamped


@dataclass
class StepResult:
    u: np.ndarray
    phi: np.ndarray
    H: np.ndarray
    psi_plus: np.ndarray
    iterations: int
    broken: bool = False
    clamped: int = 0


def staggered_step(disc: Discretization, state: SimState, sigma: float,
                   tol: float = STAGGER_TOL, max_iters: int = MAX_STAGGER_ITERS,
                   failure_check=None, method: str = "direct") -> StepResult:
    """Alternate displacement and damage solves until ``max|dphi| < tol``.

    ``failure_check(u, phi)`` may stop the iteration early once the
    specimen has evidently lost its load-carrying capacity.
    """
    mat = disc.mat
    f = fatigue_degradation_f2(state.alpha_bar, mat.alpha_T)
    phi = state.phi.copy()
    clamped = 0
    dphi = np.inf
    for it in range(1, max_iters + 1):
        u = solve_displacement(disc, phi, sigma, method)
        psi = disc.tensile_energy(u)
        H = np.maximum(np.maximum(state.H, psi), mat.H_min)
        new, c = solve_damage(disc, H, f, state.phi, method)
        clamped += c
        dphi = float(np.max(np.abs(new - phi))) if new.size else 0.0
        phi = new
        if dphi < tol:
            return StepResult(u, phi, H, psi, it, False, clamped)
        if failure_check is not None and failure_check(u, phi):
            return StepResult(u, phi, H, psi, it, True, clamped)
    raise ConvergenceError(max_iters, dphi)


@dataclass
class FailureCheck:
    failed: bool
    trigger: str | None
    damaged_fraction: float


def detect_failure(disc: Discretization, phi: np.ndarray, u: np.ndarray | None = None,
                   ref_disp: float | None = None) -> FailureCheck:
    """Spanning band of broken elements, or runaway loaded-edge displacement."""
    phi_e = phi[disc.mesh.elements].mean(axis=1)
    broken = phi_e > FAILURE_PHI
    frac = float(np.mean(broken)) if broken.size else 0.0
    if u is not None and ref_disp is not None and ref_disp > 0:
        if disc.load_displacement(u) > DISPLACEMENT_FAILURE_RATIO * ref_disp:
            return FailureCheck(True, "displacement", frac)
    arcs = disc._lateral_arcs
    if broken.any() and len(arcs) >= 2:
        idx = np.nonzero(broken)[0]
        sub = disc._elem_adj[idx][:, idx]
        _, labels = connected_components(sub, directed=False)
        el = disc.mesh.elements[idx]
        touch = []
        for arc in arcs:
            on = np.isin(el, arc).any(axis=1)
            touch.append(set(labels[on].tolist()))
        for i in range(len(arcs)):
            for j in range(i + 1, len(arcs)):
                if touch[i] & touch[j]:
                    return FailureCheck(True, "spanning_band", frac)
    return FailureCheck(False, None, frac)


@dataclass
class CycleOutcome:
    status: Status
    n_cycles: int
    failure_diagnostic: float
    trigger: str | None = None
    blocks: int = 0
    history: list = field(default_factory=list)


def _element_phi(disc: Discretization, phi: np.ndarray) -> np.ndarray:
    return phi[disc.mesh.elements].mean(axis=1)


def run_cycles(disc: Discretization, state: SimState, load: LoadSpec,
               jump_tol: float = DEFAULT_JUMP_TOL, adaptive: bool = True,
               method: str = "direct", record_history: bool = False,
               checkpoint_path=None, checkpoint_every: int = 0) -> CycleOutcome:
    """Accumulate fatigue in cycle blocks until failure or ``cycle_cap``.

    Each block solves equilibrium once at the peak load and advances the
    fatigue history over ``dN`` cycles with a two-step explicit rule.  With
    ``adaptive`` the block length starts at ``cycle_jump``, is halved while
    the largest increment (over elements that have not exhausted their
    fracture energy) exceeds ``jump_tol * alpha_T``, may double back up to
    ``cycle_jump`` when increments are small, and drops to one cycle once
    the loaded-edge displacement exceeds 1.5 times its first-cycle value.
    ``adaptive=False`` uses a fixed block of ``cycle_jump`` cycles.
    """
    mat = disc.mat
    sigma = load.peak_stress
    cap = load.cycle_cap
    limit = jump_tol * mat.alpha_T
    if state.hist_amp is None:
        state.hist_amp = np.zeros(disc.n_elem)
    dN = load.cycle_jump
    hist = []
    blocks = 0

    def check(u, phi):
        return detect_failure(disc, phi, u, state.ref_disp).failed

    while state.cycle < cap:
        try:
            res = staggered_step(disc, state, sigma, failure_check=check, method=method)
        except ConvergenceError as exc:
            raise ConvergenceError(exc.iterations, exc.residual, state.cycle + 1) from None
        blocks += 1
        disp = disc.load_displacement(res.u)
        if state.ref_disp is None:
            state.ref_disp = disp
        fc = detect_failure(disc, res.phi, res.u, state.ref_disp)
        state.u, state.phi, state.H = res.u, res.phi, res.H
        state.clamp_events += res.clamped
        if res.broken or fc.failed:
            trig = fc.trigger or "displacement"
            return CycleOutcome(Status.FAILED, state.cycle + 1, fc.damaged_fraction, trig,
                                blocks, hist)

        g = (1.0 - _element_phi(disc, res.phi)) ** 2
        amp = g * res.psi_plus * (1.0 - load.R) / 2.0
        state.hist_amp = np.maximum(state.hist_amp, amp)
        rate = np.where(state.hist_amp >= mat.alpha_e, (amp / mat.alpha_n) ** mat.n_exp, 0.0)
        if not np.any(rate > 0):
            # nothing evolves any more: the state is stationary up to the cap
            state.cycle = cap
            break

        active = state.alpha_bar < mat.alpha_T
        near = disp > NEAR_FAILURE_RATIO * state.ref_disp
        if adaptive and near:
            dN = 1
        dN = max(1, min(dN, cap - state.cycle))

        def increment(n):
            # single cycles use the exact per-cycle update
            if n == 1 or state.rate_prev is None or state.dN_prev == 0:
                return n * rate
            slope = (rate - state.rate_prev) / state.dN_prev
            return np.maximum(n * rate + 0.5 * slope * n * n, 0.0)

        inc = increment(dN)
        if adaptive:
            while dN > 1 and np.max(inc[active], initial=0.0) > limit:
                dN = max(1, dN // 2)
                inc = increment(dN)
        state.alpha_bar = state.alpha_bar + inc
        state.rate_prev, state.dN_prev = rate, dN
        state.cycle += dN
        if record_history:
            hist.append((state.cycle, float(state.phi.max()), disp,
                         float(np.max(state.alpha_bar)) / mat.alpha_T))
        if checkpoint_path is not None and checkpoint_every and blocks % checkpoint_every == 0:
            save_checkpoint(state, checkpoint_path)
        if adaptive and not near:
            if np.max(inc[active], initial=0.0) < 0.5 * limit:
                dN = min(2 * dN, load.cycle_jump)
        elif not adaptive:
            dN = load.cycle_jump

    phi_e = _element_phi(disc, state.phi)
    return CycleOutcome(Status.SURVIVED_CAP, cap, float(np.mean(phi_e > FAILURE_PHI)),
                        None, blocks, hist)


@dataclass
class StaticResult:
    sigma_crit: float
    bracket: tuple[float, float]
    steps: int


def static_strength(disc: Discretization, sigma_max: float, n_steps: int = 50,
                    rel_tol: float = 1e-3, method: str = "direct") -> StaticResult:
    """Monotonic force-controlled ramp; returns the stress at which the
    specimen loses stability (broken band or runaway displacement).

    The coarse ramp brackets the instability, bisection refines it from the
    last stable state.
    """
    state = SimState.fresh(disc.mesh, disc.mat)
    levels = np.linspace(sigma_max / n_steps, sigma_max, n_steps)
    stable_sigma, stable = 0.0, state
    steps = 0
    compliance = None

    def unstable(st: SimState, s: float):
        nonlocal compliance, steps
        steps += 1

        def chk(u, phi):
            return detect_failure(disc, phi, u, compliance * s).failed

        if compliance is None:
            u0 = solve_displacement(disc, st.phi, 1.0, method)
            compliance = disc.load_displacement(u0)
        res = staggered_step(disc, st, s, failure_check=chk, method=method)
        fc = detect_failure(disc, res.phi, res.u, compliance * s)
        nxt = st.copy()
        nxt.u, nxt.phi, nxt.H = res.u, res.phi, res.H
        return res.broken or fc.failed, nxt

    hi = None
    for s in levels:
        bad, nxt = unstable(stable, s)
        if bad:
            hi = s
            break
        stable_sigma, stable = s, nxt
    if hi is None:
        raise SolverError(f"no instability up to sigma = {sigma_max}")
    lo = stable_sigma
    while hi - lo > rel_tol * hi:
        mid = 0.5 * (lo + hi)
        bad, nxt = unstable(stable, mid)
        if bad:
            hi = mid
        else:
            lo, stable = mid, nxt
    return StaticResult(0.5 * (lo + hi), (lo, hi), steps)


# checkpoints ---------------------------------------------------------------
def save_checkpoint(state: SimState, path) -> None:
    """NumPy ``.npz`` snapshot: cycle, u, phi, alpha_bar, H and the jump memory."""
    meta = {"version": CHECKPOINT_VERSION, "cycle": int(state.cycle),
            "dN_prev": int(state.dN_prev), "ref_disp": state.ref_disp,
            "clamp_events": int(state.clamp_events)}
    arrays = {"u": state.u, "phi": state.phi, "alpha_bar": state.alpha_bar, "H": state.H,
              "hist_amp": state.hist_amp if state.hist_amp is not None else np.zeros(0)}
    if state.rate_prev is not None:
        arrays["rate_prev"] = state.rate_prev
    with open(path, "wb") as fh:
        np.savez(fh, meta=np.array(json.dumps(meta)), **arrays)


def load_checkpoint(path, mesh: Mesh) -> SimState:
    with np.load(path, allow_pickle=False) as data:
        meta = json.loads(str(data["meta"]))
        if meta.get("version") != CHECKPOINT_VERSION:
            raise SolverError(f"unsupported checkpoint version {meta.get('version')}")
        st = SimState(mesh, data["u"].copy(), data["phi"].copy(), data["alpha_bar"].copy(),
                      data["H"].copy(), meta["cycle"],
                      data["hist_amp"].copy() if data["hist_amp"].size else None,
                      data["rate_prev"].copy() if "rate_prev" in data else None,
                      meta["dN_prev"], meta["ref_disp"], meta["clamp_events"])
    if st.phi.shape[0] != mesh.n_nodes or st.H.shape[0] != mesh.n_elements:
        raise SolverError("checkpoint does not match the mesh")
    return st


def simulate(mesh: Mesh, mat: MaterialParams, load: LoadSpec, **kw) -> CycleOutcome:
    """Fresh-state fatigue run on ``mesh``."""
    t0 = time.perf_counter()
    disc = Discretization(mesh, mat)
    out = run_cycles(disc, SimState.fresh(mesh, mat), load, **kw)
    logger.debug("simulate: %s after %d cycles (%d blocks, %.1f s)", out.status.value,
                 out.n_cycles, out.blocks, time.perf_counter() - t0)
    return out
