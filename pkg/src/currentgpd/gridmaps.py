"""Discretized mapping spaces: grid maps, sections, charts, classifiers.

A map from a compact 1-dimensional source (circle or interval) into a
manifold is sampled on a uniform grid.  Coherence (consecutive samples
closer than half the injectivity radius) is the grid proxy for continuity;
it guarantees unique geodesic interpolation and valid winding increments.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from . import ad
from .ad import Dual, value
from .errors import (BranchAmbiguity, CoherenceLost, GraphOutsideDomain,
                     NotDifferentiable, NotInDomainU, NotInThetaImage,
                     OutOfChart, OutsideNeighborhood)
from .linalg import rank_floor
from .localadd import LocalAddition
from .manifolds import (ChartedManifold, Point, SmoothMap, Tangent,
                        map_jacobian, merge_components, split_components,
                        tangent_from_ambient)
from .tolerances import DEFAULT

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class GridSpec:
    kind: str          # "circle" | "interval"
    n: int             # uniform samples
    ell: int = 1       # regularity order tracked by seminorms (0, 1, or 2)

    def __post_init__(self):
        if self.kind not in ("circle", "interval"):
            raise ValueError(f"unknown grid kind {self.kind!r}")
        if self.n < 8:
            raise ValueError("grids need at least 8 samples")
        if self.ell not in (0, 1, 2):
            raise ValueError("regularity order must be 0, 1, or 2")

    @property
    def closed(self):
        return self.kind == "circle"

    @property
    def spacing(self):
        if self.closed:
            return TWO_PI / self.n
        return 1.0 / (self.n - 1)

    def params(self):
        if self.closed:
            return TWO_PI * np.arange(self.n) / self.n
        return np.linspace(0.0, 1.0, self.n)


class GridMap:
    """A map from the grid into a manifold, stored as stacked ambient rows."""

    def __init__(self, grid: GridSpec, target: ChartedManifold, ambient,
                 delta_coh=None, check=True):
        self.grid = grid
        self.target = target
        self.ambient = np.asarray(ambient, dtype=float)
        if self.ambient.shape != (grid.n, target.ambient_dim):
            raise ValueError("ambient array has the wrong shape")
        self.delta_coh = target.coherence_bound() if delta_coh is None else delta_coh
        if check:
            self.check_coherence()
        self._points = None

    def check_coherence(self):
        if not np.isfinite(self.delta_coh):
            return
        steps = self.step_sizes()
        if steps.size and float(np.max(steps)) >= self.delta_coh:
            i = int(np.argmax(steps))
            raise CoherenceLost(
                f"step {float(np.max(steps)):.3f} at node {i} exceeds "
                f"coherence bound {self.delta_coh:.3f}")

    def step_sizes(self):
        a = self.ambient
        if self.grid.closed:
            b = np.roll(a, -1, axis=0)
            return np.asarray(self.target.geodesic_distance(a, b))
        return np.asarray(self.target.geodesic_distance(a[:-1], a[1:]))

    def point(self, i) -> Point:
        return self.target.point_from_ambient(self.ambient[i])

    @property
    def values(self):
        if self._points is None:
            self._points = tuple(self.point(i) for i in range(self.grid.n))
        return self._points

    def replace_ambient(self, ambient, check=True):
        return GridMap(self.grid, self.target, ambient,
                       delta_coh=self.delta_coh, check=check)

    def close_to(self, other, tol=DEFAULT.tol_chart):
        return float(np.max(self.target.distance(self.ambient, other.ambient))) < tol

    def __repr__(self):
        return (f"GridMap({self.grid.kind} n={self.grid.n} -> "
                f"{self.target.name})")


def constant_grid_map(grid, p: Point, delta_coh=None) -> GridMap:
    amb = np.tile(p.ambient, (grid.n, 1))
    return GridMap(grid, p.manifold, amb, delta_coh=delta_coh)


def circle_identity_loop(grid, circle) -> GridMap:
    th = grid.params()
    return GridMap(grid, circle, np.stack([np.cos(th), np.sin(th)], axis=-1))


def circle_winding_loop(grid, circle, k, phase=0.0) -> GridMap:
    th = k * grid.params() + phase
    n = max(1, abs(int(k)))
    return GridMap(grid, circle, np.stack([np.cos(th), np.sin(th)], axis=-1),
                   delta_coh=min(circle.coherence_bound() * n, math.pi - 1e-6))


def random_grid_map(grid, target, rng) -> GridMap:
    return GridMap(grid, target,
                   target.sample_path(grid.params(), rng, grid.closed))


class GridSection:
    """A section of the pulled-back tangent bundle along a grid map."""

    def __init__(self, base: GridMap, vel_ambient):
        self.base = base
        self.vel_ambient = np.asarray(vel_ambient, dtype=float)
        if self.vel_ambient.shape != base.ambient.shape:
            raise ValueError("velocity array has the wrong shape")

    def vector(self, i) -> Tangent:
        return tangent_from_ambient(self.base.target, self.base.ambient[i],
                                    self.vel_ambient[i])

    @property
    def vectors(self):
        return tuple(self.vector(i) for i in range(self.base.grid.n))

    def __repr__(self):
        return f"GridSection(over {self.base!r})"


def section_from_chart_coeffs(gm: GridMap, coeffs) -> GridSection:
    """Build a section from per-node chart velocities."""
    coeffs = np.asarray(coeffs, dtype=float)
    rows = []
    for i in range(gm.grid.n):
        p = gm.point(i)
        rows.append(Tangent(p, coeffs[i]).ambient_vel())
    return GridSection(gm, np.stack(rows))


def zero_section(gm: GridMap) -> GridSection:
    return GridSection(gm, np.zeros_like(gm.ambient))


def random_section(gm: GridMap, rng, scale=0.1) -> GridSection:
    d = gm.target.dim
    n = gm.grid.n
    x = gm.grid.params()
    coeffs = np.zeros((n, d))
    for j in range(d):
        c = rng.normal(size=3) * scale
        if gm.grid.closed:
            coeffs[:, j] = c[0] + c[1] * np.cos(x) + c[2] * np.sin(x)
        else:
            coeffs[:, j] = c[0] + c[1] * x + c[2] * x * x
    return section_from_chart_coeffs(gm, coeffs)


# ---------------------------------------------------------------------------
# seminorms and evaluation
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SeminormProfile:
    orders: tuple

    @property
    def order0(self):
        return self.orders[0]

    def __getitem__(self, j):
        return self.orders[j]


def _finite_difference(arr, h, order, closed):
    a = np.asarray(arr, dtype=float)
    if order == 0:
        return a
    if closed:
        fwd = np.roll(a, -1, axis=0)
        bwd = np.roll(a, 1, axis=0)
        if order == 1:
            return (fwd - bwd) / (2.0 * h)
        return (fwd - 2.0 * a + bwd) / (h * h)
    out = np.zeros_like(a)
    if order == 1:
        out[1:-1] = (a[2:] - a[:-2]) / (2.0 * h)
        out[0] = (a[1] - a[0]) / h
        out[-1] = (a[-1] - a[-2]) / h
        return out
    out[1:-1] = (a[2:] - 2.0 * a[1:-1] + a[:-2]) / (h * h)
    out[0] = out[1]
    out[-1] = out[-2]
    return out


def seminorm_distance(a: GridMap, b: GridMap) -> SeminormProfile:
    """Sup distances of ambient finite differences of orders 0..ell."""
    if a.grid != b.grid:
        raise ValueError("grid mismatch")
    h = a.grid.spacing
    entries = []
    for j in range(a.grid.ell + 1):
        if j == 0:
            entries.append(float(np.max(a.target.distance(a.ambient, b.ambient))))
        else:
            da = _finite_difference(a.ambient, h, j, a.grid.closed)
            db = _finite_difference(b.ambient, h, j, b.grid.closed)
            entries.append(float(np.max(np.linalg.norm(da - db, axis=-1))))
    return SeminormProfile(tuple(entries))


def evaluation(gamma: GridMap, i: int) -> Point:
    return gamma.point(int(i))


# ---------------------------------------------------------------------------
# push-forwards and superposition
# ---------------------------------------------------------------------------

def pushforward(f: SmoothMap, gamma: GridMap, delta_coh=None) -> GridMap:
    """Compose f with every node; coherence is re-checked on the image."""
    if f.domain is not None:
        for i in range(gamma.grid.n):
            if not f.in_domain(gamma.ambient[i]):
                raise OutOfChart(f"{f.name}: node {i} outside domain")
    out = f.apply_batch(gamma.ambient)
    return GridMap(gamma.grid, f.target, out, delta_coh=delta_coh)


@dataclass
class SuperpositionMap:
    """A map on (an open part of) source-parameter x manifold."""

    source: ChartedManifold
    target: ChartedManifold
    fn: object            # (x scalar/array, manifold comps) -> target comps
    domain: object = None  # (x float, ambient float array) -> bool
    name: str = "superposition"


def superposition(f: SuperpositionMap, gamma: GridMap) -> GridMap:
    """Node i gets f(x_i, gamma_i); the graph must stay inside f's domain."""
    xs = gamma.grid.params()
    if f.domain is not None:
        for i in range(gamma.grid.n):
            if not f.domain(float(xs[i]), gamma.ambient[i]):
                raise GraphOutsideDomain(i)
    out = merge_components(f.fn(xs, split_components(gamma.ambient)))
    return GridMap(gamma.grid, f.target, out)


def pushforward_tangent(f: SmoothMap, gamma: GridMap,
                        tau: GridSection) -> GridSection:
    """Nodewise tangent map, vectorized with array-coefficient duals."""
    if f.order < 1:
        raise NotDifferentiable(f"{f.name} is not declared C^1")
    if tau.base is not gamma and not tau.base.close_to(gamma):
        raise ValueError("section is not based over the given grid map")
    seeded = [Dual(p, v) for p, v in zip(split_components(gamma.ambient),
                                         split_components(tau.vel_ambient))]
    out = f.fn(seeded)
    vals = merge_components([o.re if isinstance(o, Dual) else o for o in out])
    eps = merge_components([o.ep if isinstance(o, Dual) else o * 0.0 for o in out])
    return GridSection(GridMap(gamma.grid, f.target, vals), eps)


# ---------------------------------------------------------------------------
# manifold charts for the mapping space
# ---------------------------------------------------------------------------

def chart_phi(sigma: LocalAddition, f: GridMap, tau: GridSection) -> GridMap:
    """The mapping-space chart: apply sigma to a section over f."""
    if tau.base is not f and not tau.base.close_to(f):
        raise ValueError("section must be based over f")
    for i in range(f.grid.n):
        if not sigma.domain_fn(f.ambient[i], tau.vel_ambient[i]):
            raise NotInDomainU(i)
    out = sigma.sigma_batch(f.ambient, tau.vel_ambient)
    return GridMap(f.grid, sigma.manifold, out)


def chart_phi_inverse(sigma: LocalAddition, f: GridMap, g: GridMap,
                      tol=DEFAULT.tol_theta) -> GridSection:
    """Inverse chart: recover the section with sigma(tau_i) = g_i."""
    m = sigma.manifold
    if sigma.closed_log is not None:
        vel = merge_components(sigma.closed_log(split_components(f.ambient),
                                                split_components(g.ambient)))
        res = m.distance(sigma.sigma_batch(f.ambient, vel), g.ambient)
        for i in range(f.grid.n):
            if not sigma.domain_fn(f.ambient[i], vel[i]):
                raise NotInThetaImage(f"node {i}: log outside domain")
            if float(res[i]) > tol:
                raise NotInThetaImage(f"node {i}: residual {float(res[i]):.2e}")
        return GridSection(f, vel)
    rows = []
    for i in range(f.grid.n):
        t = sigma.theta_inverse(f.point(i), g.point(i), tol=tol)
        rows.append(t.ambient_vel())
    return GridSection(f, np.stack(rows))


# ---------------------------------------------------------------------------
# rank classification of push-forwards
# ---------------------------------------------------------------------------

@dataclass
class PushforwardClassification:
    verdict: str
    dim_source: int
    dim_target: int
    node_ranks: list
    node_min_sv: list

    def per_node(self, i):
        return self.node_ranks[i], self.node_min_sv[i]


def classify_pushforward(f: SmoothMap, gamma: GridMap,
                         tol_rank=DEFAULT.tol_rank) -> PushforwardClassification:
    """Block classification: the lifted map inherits exactly the per-node ranks.

    The tangent map of the push-forward is block diagonal with one Jacobian
    of f per node, so the lifted verdict is the conjunction over blocks.
    """
    dm, dn = f.source.dim, f.target.dim
    ranks, min_svs = [], []
    sub = imm = True
    for i in range(gamma.grid.n):
        p = f.source.point_from_ambient(gamma.ambient[i])
        J, _ = map_jacobian(f, p)
        s = np.linalg.svd(J, compute_uv=False)
        thr = rank_floor(s, tol_rank)
        r = int(np.sum(s > thr))
        ranks.append(r)
        min_svs.append(float(s[-1]) if len(s) else 0.0)
        sub = sub and (r == dn)
        imm = imm and (r == dm)
    if sub and imm and dm == dn:
        verdict = "local_diffeo_on_trace"
    elif sub:
        verdict = "submersion_on_trace"
    elif imm:
        verdict = "immersion_on_trace"
    else:
        verdict = "neither"
    return PushforwardClassification(verdict, dm, dn, ranks, min_svs)


# ---------------------------------------------------------------------------
# local inversion of lifted local diffeomorphisms
# ---------------------------------------------------------------------------

def _preimage_newton(f, target: Point, seed: Point, tol, max_iter=50):
    m = f.source
    chart = m.charts[seed.chart_id]
    qc = target.manifold.charts[target.chart_id]
    q_target = [float(c) for c in target.coords]

    def residual(xc):
        return [a - b for a, b in zip(qc.fwd(f.fn(chart.inv(xc))), q_target)]

    x = [float(c) for c in seed.coords]
    from .linalg import linsolve
    from .errors import SingularNormalization
    for _ in range(max_iter):
        r = [value(c) for c in residual(x)]
        if max((abs(c) for c in r), default=0.0) < tol:
            return m.point_from_coords(seed.chart_id, np.asarray(x))
        J = ad.jacobian(residual, x)
        try:
            step = linsolve([list(row) for row in J], r)
        except SingularNormalization:
            return None
        x = [xi - si for xi, si in zip(x, step)]
        if max(abs(xi) for xi in x) > 1e8:
            return None
    return None


def local_diffeo_inverse(f: SmoothMap, gamma0: GridMap, eta: GridMap,
                         start: Point | None = None, patch_radius=None,
                         max_step=None, tol=DEFAULT.tol_theta) -> GridMap:
    """Invert the push-forward of a local diffeomorphism node by node.

    Branches are selected by proximity to the previous node's lift (node 0:
    to `start`, default gamma0's first value); a coherent lift must close up
    on circle grids.  Failures report the offending node.  A map may supply
    `preimage_branches(target_ambient, near_ambient) -> [ambient, ...]`;
    otherwise local preimages come from chart Newton iteration.
    """
    m = f.source
    n = eta.grid.n
    if max_step is None:
        sep = getattr(f, "branch_separation", None)
        if sep is not None:
            max_step = 0.5 * sep
        else:
            max_step = m.coherence_bound()
    ambiguity_gap = m.coherence_bound()
    if not np.isfinite(ambiguity_gap):
        ambiguity_gap = max_step
    prev = np.asarray(start.ambient if start is not None else gamma0.ambient[0],
                      dtype=float)
    rows = []
    for i in range(n):
        target_amb = eta.ambient[i]
        cand = []
        if f.preimage_branches is not None:
            cand = [np.atleast_1d(np.asarray(a, dtype=float))
                    for a in f.preimage_branches(target_amb, prev)]
        else:
            got = _preimage_newton(f, eta.point(i),
                                   m.point_from_ambient(prev), tol)
            if got is not None:
                cand.append(got.ambient)
        if not cand:
            raise OutsideNeighborhood(i, f"no local preimage at node {i}")
        dists = [float(m.geodesic_distance(c, prev)) for c in cand]
        order = np.argsort(dists)
        best = cand[int(order[0])]
        if len(order) > 1:
            second = cand[int(order[1])]
            gap = float(m.geodesic_distance(best, second))
            if gap < ambiguity_gap / 4.0 and dists[int(order[1])] < max_step:
                raise BranchAmbiguity(i)
        if np.isfinite(max_step) and dists[int(order[0])] > max_step and i > 0:
            raise OutsideNeighborhood(i)
        if patch_radius is not None:
            off = float(m.geodesic_distance(best, gamma0.ambient[i]))
            if off > patch_radius:
                raise OutsideNeighborhood(i)
        res = float(f.target.distance(
            merge_components(f.fn(split_components(best))), target_amb))
        if res > tol:
            raise OutsideNeighborhood(i, f"residual {res:.2e} at node {i}")
        rows.append(best)
        prev = best
    if eta.grid.closed:
        closure = float(m.geodesic_distance(rows[-1], rows[0]))
        if np.isfinite(max_step) and closure > max_step:
            raise OutsideNeighborhood(
                0, f"lift does not close up (gap {closure:.3f})")
    return GridMap(eta.grid, m, np.stack(rows),
                   delta_coh=max_step * (1.0 + 1e-9) if np.isfinite(max_step)
                   else None)


# ---------------------------------------------------------------------------
# winding numbers
# ---------------------------------------------------------------------------

def degree(loop: GridMap) -> int:
    """Winding number of a coherent loop into the circle."""
    if not loop.grid.closed:
        raise ValueError("degree needs a circle grid")
    a = loop.ambient
    th = np.arctan2(a[:, 1], a[:, 0])
    inc = np.diff(np.concatenate([th, th[:1]]))
    inc = np.mod(inc + math.pi, TWO_PI) - math.pi
    if float(np.max(np.abs(inc))) >= math.pi - 1e-9:
        raise CoherenceLost("angular step of half a turn or more")
    total = float(np.sum(inc)) / TWO_PI
    k = int(round(total))
    if abs(total - k) > 1e-6:
        raise CoherenceLost(f"winding sum {total} is not an integer")
    return k


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------

def gridmap_to_csv(gm: GridMap, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["index"] + [f"ambient_{i}" for i in range(gm.target.ambient_dim)])
        for i in range(gm.grid.n):
            w.writerow([i] + [f"{x:.17g}" for x in gm.ambient[i]])


def gridmap_from_csv(path, grid: GridSpec, target: ChartedManifold) -> GridMap:
    with open(path, newline="") as fh:
        r = csv.reader(fh)
        header = next(r)
        if header[:1] != ["index"]:
            raise ValueError("bad grid map header")
        rows = sorted((int(row[0]), [float(x) for x in row[1:]]) for row in r)
    amb = np.asarray([v for _, v in rows], dtype=float)
    return GridMap(grid, target, amb)


def gridmap_to_json(gm: GridMap) -> dict:
    return {
        "grid": {"kind": gm.grid.kind, "n": gm.grid.n, "ell": gm.grid.ell},
        "target": gm.target.name,
        "ambient": [[float(x) for x in row] for row in gm.ambient],
    }


def gridmap_from_json(data: dict, target: ChartedManifold) -> GridMap:
    g = data["grid"]
    grid = GridSpec(g["kind"], int(g["n"]), int(g.get("ell", 1)))
    return GridMap(grid, target, np.asarray(data["ambient"], dtype=float))
