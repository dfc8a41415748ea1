"""Lie groupoids over charted manifolds: catalog, axiom checks, classifiers.

A groupoid is stored as data: arrow and base manifolds, source/target maps,
multiplication on the composability set, inversion, and the unit embedding.
All structure maps run on single points, dual seeds, and stacked arrays.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import ad
from .ad import value
from .errors import NotComposable, SamplingFailure, Unsupported
from .manifolds import (ChartedManifold, DiscreteManifold, OpenSubManifold,
                        Point, ProductManifold, SmoothMap, map_jacobian,
                        merge_components, split_components)
from .catalog import Circle, Euclidean, Torus
from .localadd import (LieGroupOps, product_local_addition,
                       riemannian_local_addition, translation_group)
from .tolerances import DEFAULT


class LieGroupoid:
    def __init__(self, name, arrows, base, alpha, beta, mu_fn, iota, unit,
                 local_addition_G=None, local_addition_M=None):
        self.name = name
        self.arrows = arrows
        self.base = base
        self.alpha = alpha            # SmoothMap G -> M
        self.beta = beta              # SmoothMap G -> M
        self.mu_fn = mu_fn            # (g comps, h comps) -> arrow comps
        self.iota = iota              # SmoothMap G -> G
        self.unit = unit              # SmoothMap M -> G
        self.local_addition_G = local_addition_G
        self.local_addition_M = local_addition_M
        # hooks filled in by catalog constructors
        self.sample_arrows = None               # (rng, n) -> (n, ambG)
        self.sample_with_beta = None            # ((n, ambM), rng) -> (n, ambG)
        self.project_to_beta = None             # ((n, ambG), (n, ambM)) -> (n, ambG)
        self.sample_arrow_path = None           # (params, rng, closed) -> (nodes, ambG)
        self.sample_arrow_path_with_beta = None  # (target, rng, closed) -> (nodes, ambG)
        self.finite_group = None                # FiniteGroup for etale action groupoids

    # -- batched structure maps ----------------------------------------------
    def alpha_batch(self, g):
        return self.alpha.apply_batch(g)

    def beta_batch(self, g):
        return self.beta.apply_batch(g)

    def mu_batch(self, g, h):
        out = self.mu_fn(split_components(np.asarray(g, dtype=float)),
                         split_components(np.asarray(h, dtype=float)))
        return merge_components(out)

    def iota_batch(self, g):
        return self.iota.apply_batch(g)

    def unit_batch(self, x):
        return self.unit.apply_batch(x)

    def anchor_map(self) -> SmoothMap:
        mm = ProductManifold([self.base, self.base],
                             name=f"{self.base.name}^2")

        def fn(comps):
            return list(self.alpha.fn(comps)) + list(self.beta.fn(comps))

        return SmoothMap(self.arrows, mm, fn, name=f"anchor_{self.name}")

    def __repr__(self):
        return f"<LieGroupoid {self.name}: {self.arrows.name} over {self.base.name}>"


# ---------------------------------------------------------------------------
# pointwise operations
# ---------------------------------------------------------------------------

def compose(gpd: LieGroupoid, g: Point, h: Point,
            tol=DEFAULT.tol_chart) -> Point:
    """mu(g, h); defined when alpha(g) = beta(h) within tolerance."""
    ag = gpd.alpha.at(g).ambient
    bh = gpd.beta.at(h).ambient
    if float(gpd.base.distance(ag, bh)) >= tol:
        raise NotComposable(
            f"{gpd.name}: alpha(g) and beta(h) differ by "
            f"{float(gpd.base.distance(ag, bh)):.3e}")
    h_amb = h.ambient
    if gpd.project_to_beta is not None:
        h_amb = gpd.project_to_beta(h.ambient[None], ag[None])[0]
    out = gpd.mu_batch(g.ambient[None], h_amb[None])[0]
    return gpd.arrows.point_from_ambient(out)


def inverse(gpd: LieGroupoid, g: Point) -> Point:
    return gpd.iota.at(g)


def unit_at(gpd: LieGroupoid, x: Point) -> Point:
    return gpd.unit.at(x)


def anchor(gpd: LieGroupoid, g: Point):
    return gpd.alpha.at(g), gpd.beta.at(g)


# ---------------------------------------------------------------------------
# axiom checking
# ---------------------------------------------------------------------------

@dataclass
class AxiomReport:
    name: str
    n_samples: int
    seed: int
    violations: dict = field(default_factory=dict)

    @property
    def max_violation(self):
        return max(self.violations.values(), default=0.0)

    def passed(self, tol):
        return self.max_violation <= tol


def axiom_violations(gpd, g, h, k, xs):
    """Max groupoid-law residuals over stacked composable triples (g, h, k).

    Requires alpha(g)=beta(h) and alpha(h)=beta(k) to hold exactly on input.
    """
    dG = lambda a, b: float(np.max(gpd.arrows.distance(a, b)))
    dM = lambda a, b: float(np.max(gpd.base.distance(a, b)))
    gh = gpd.mu_batch(g, h)
    hk = gpd.mu_batch(h, k)
    viol = {}
    viol["associativity"] = dG(gpd.mu_batch(gh, k), gpd.mu_batch(g, hk))
    ug_left = gpd.unit_batch(gpd.beta_batch(g))
    ug_right = gpd.unit_batch(gpd.alpha_batch(g))
    viol["left_unit"] = dG(gpd.mu_batch(ug_left, g), g)
    viol["right_unit"] = dG(gpd.mu_batch(g, ug_right), g)
    ig = gpd.iota_batch(g)
    viol["left_inverse"] = dG(gpd.mu_batch(ig, g), ug_right)
    viol["right_inverse"] = dG(gpd.mu_batch(g, ig), ug_left)
    viol["alpha_of_mu"] = dM(gpd.alpha_batch(gh), gpd.alpha_batch(h))
    viol["beta_of_mu"] = dM(gpd.beta_batch(gh), gpd.beta_batch(g))
    u = gpd.unit_batch(xs)
    viol["alpha_of_unit"] = dM(gpd.alpha_batch(u), xs)
    viol["beta_of_unit"] = dM(gpd.beta_batch(u), xs)
    return viol


def sample_composable_triple(gpd, rng, n):
    if gpd.sample_arrows is None or gpd.sample_with_beta is None:
        raise SamplingFailure(f"{gpd.name}: no arrow samplers registered")
    g = gpd.sample_arrows(rng, n)
    h = gpd.sample_with_beta(gpd.alpha_batch(g), rng)
    k = gpd.sample_with_beta(gpd.alpha_batch(h), rng)
    return g, h, k


def check_axioms(gpd: LieGroupoid, n_samples=1000, seed=0) -> AxiomReport:
    rng = np.random.default_rng(seed)
    g, h, k = sample_composable_triple(gpd, rng, n_samples)
    xs = gpd.base.sample(rng, n_samples)
    report = AxiomReport(gpd.name, n_samples, seed)
    report.violations = axiom_violations(gpd, g, h, k, xs)
    return report


# ---------------------------------------------------------------------------
# classifiers
# ---------------------------------------------------------------------------

@dataclass
class ClassifyReport:
    verdict: bool
    note: str
    n_samples: int
    seed: int
    extreme: float
    witness: list | None = None


def classify_etale(gpd: LieGroupoid, n_samples=100, seed=0,
                   tol_rank=DEFAULT.tol_rank) -> ClassifyReport:
    """Source map is a local diffeomorphism: equal dims + invertible Jacobians."""
    if gpd.arrows.dim != gpd.base.dim:
        return ClassifyReport(False, "dim G != dim M", 0, seed,
                              float(gpd.arrows.dim - gpd.base.dim))
    rng = np.random.default_rng(seed)
    arrows = gpd.sample_arrows(rng, n_samples)
    worst = np.inf
    witness = None
    for amb in arrows:
        p = gpd.arrows.point_from_ambient(amb)
        J, _ = map_jacobian(gpd.alpha, p)
        s = np.linalg.svd(J, compute_uv=False)
        crit = float(s[-1] / max(s[0], 1.0)) if len(s) else 1.0
        if crit < worst:
            worst, witness = crit, list(map(float, amb))
    ok = worst > tol_rank
    return ClassifyReport(ok, "invertible on samples" if ok else
                          "singular source Jacobian", n_samples, seed, worst,
                          None if ok else witness)


def classify_locally_transitive(gpd: LieGroupoid, n_samples=100, seed=0,
                                tol_rank=DEFAULT.tol_rank) -> ClassifyReport:
    """Anchor (alpha, beta) has full row rank at the sampled arrows.

    Full surjectivity of the anchor cannot be certified by sampling; the
    verdict means "submersion at all sampled arrows".
    """
    need = 2 * gpd.base.dim
    if gpd.arrows.dim < need:
        return ClassifyReport(False, "anchor rank bounded by dim G", 0, seed,
                              float(gpd.arrows.dim - need))
    anchor_m = gpd.anchor_map()
    rng = np.random.default_rng(seed)
    arrows = gpd.sample_arrows(rng, n_samples)
    worst = np.inf
    witness = None
    for amb in arrows:
        p = gpd.arrows.point_from_ambient(amb)
        J, _ = map_jacobian(anchor_m, p)
        s = np.linalg.svd(J, compute_uv=False)
        crit = float(s[need - 1] / max(s[0], 1.0))
        if crit < worst:
            worst, witness = crit, list(map(float, amb))
    ok = worst > tol_rank
    return ClassifyReport(ok, "submersion on samples" if ok else
                          "anchor rank deficient", n_samples, seed, worst,
                          None if ok else witness)


# ---------------------------------------------------------------------------
# finite groups of diffeomorphisms
# ---------------------------------------------------------------------------

class AffineElement:
    """Affine map x -> A x + b on the ambient space of a Euclidean manifold."""

    def __init__(self, matrix, offset=None, label=""):
        self.matrix = np.asarray(matrix, dtype=float)
        self.offset = (np.zeros(self.matrix.shape[0]) if offset is None
                       else np.asarray(offset, dtype=float))
        self.label = label

    def act_comps(self, comps):
        A, b = self.matrix, self.offset
        out = []
        for i in range(A.shape[0]):
            acc = 0.0 + b[i]
            for j in range(A.shape[1]):
                if A[i, j] != 0.0:
                    acc = acc + A[i, j] * comps[j]
            out.append(acc)
        return out

    def act(self, amb):
        return np.asarray(amb, dtype=float) @ self.matrix.T + self.offset

    def compose(self, other):
        return AffineElement(self.matrix @ other.matrix,
                             self.matrix @ other.offset + self.offset,
                             f"{self.label}{other.label}")

    def same_as(self, other, tol=1e-9):
        return (np.abs(self.matrix - other.matrix).max() < tol
                and np.abs(self.offset - other.offset).max() < tol)


class FiniteGroup:
    """Finite group of affine diffeomorphisms with a precomputed table."""

    def __init__(self, elements):
        self.elements = list(elements)
        k = len(self.elements)
        self.table = np.zeros((k, k), dtype=int)
        self.inverse = np.zeros(k, dtype=int)
        ident = AffineElement(np.eye(self.elements[0].matrix.shape[0]))
        self.identity_index = next(
            i for i, e in enumerate(self.elements) if e.same_as(ident))
        for i, a in enumerate(self.elements):
            for j, b in enumerate(self.elements):
                c = a.compose(b)
                matches = [t for t, e in enumerate(self.elements) if e.same_as(c)]
                if len(matches) != 1:
                    raise Unsupported("element set is not closed under composition")
                self.table[i, j] = matches[0]
                if matches[0] == self.identity_index:
                    self.inverse[i] = j

    def __len__(self):
        return len(self.elements)


def cyclic_rotation_group(order) -> FiniteGroup:
    els = []
    for k in range(order):
        a = 2.0 * math.pi * k / order
        els.append(AffineElement([[math.cos(a), -math.sin(a)],
                                  [math.sin(a), math.cos(a)]], label=f"r{k}"))
    return FiniteGroup(els)


def reflection_group_1d() -> FiniteGroup:
    return FiniteGroup([AffineElement([[1.0]], label="e"),
                        AffineElement([[-1.0]], label="s")])


@dataclass
class IsotropyGroup:
    point: Point
    element_indices: list
    table: np.ndarray

    def __len__(self):
        return len(self.element_indices)


def isotropy_group(gpd: LieGroupoid, x: Point,
                   tol=DEFAULT.tol_chart) -> IsotropyGroup:
    """Elements fixing x, with the induced multiplication table."""
    grp = gpd.finite_group
    if grp is None:
        raise Unsupported(f"{gpd.name}: isotropy enumeration needs a finite group")
    idx = [i for i, e in enumerate(grp.elements)
           if float(np.max(np.abs(e.act(x.ambient) - x.ambient))) < tol]
    pos = {g: n for n, g in enumerate(idx)}
    table = np.asarray([[pos[int(grp.table[i, j])] for j in idx] for i in idx])
    return IsotropyGroup(x, idx, table)


# ---------------------------------------------------------------------------
# restriction
# ---------------------------------------------------------------------------

def restrict(gpd: LieGroupoid, omega, name=None) -> LieGroupoid:
    """Restriction to an open set: arrows with both endpoints inside omega.

    `omega` is a vectorized predicate on stacked base-ambient arrays.
    """
    base = OpenSubManifold(gpd.base, omega, name=f"{gpd.base.name}|omega")

    def arrow_pred(amb):
        amb = np.atleast_2d(np.asarray(amb, dtype=float))
        ok = np.logical_and(np.asarray(omega(gpd.alpha_batch(amb)), dtype=bool),
                            np.asarray(omega(gpd.beta_batch(amb)), dtype=bool))
        return ok

    arrows = OpenSubManifold(gpd.arrows, arrow_pred,
                             name=f"{gpd.arrows.name}|omega")
    out = LieGroupoid(name or f"{gpd.name}|omega", arrows, base,
                      SmoothMap(arrows, base, gpd.alpha.fn, name="alpha"),
                      SmoothMap(arrows, base, gpd.beta.fn, name="beta"),
                      gpd.mu_fn,
                      SmoothMap(arrows, arrows, gpd.iota.fn, name="iota"),
                      SmoothMap(base, arrows, gpd.unit.fn, name="unit"),
                      gpd.local_addition_G, gpd.local_addition_M)
    out.project_to_beta = gpd.project_to_beta
    out.finite_group = gpd.finite_group

    def sample_arrows(rng, n, max_rounds=200):
        rows = []
        for _ in range(max_rounds):
            cand = np.atleast_2d(gpd.sample_arrows(rng, n))
            keep = arrow_pred(cand)
            rows.extend(cand[keep])
            if len(rows) >= n:
                return np.stack(rows[:n])
        raise SamplingFailure(f"{out.name}: arrow sampling exhausted")

    def sample_with_beta(x, rng, max_rounds=200):
        x = np.atleast_2d(np.asarray(x, dtype=float))
        res = np.zeros((x.shape[0], gpd.arrows.ambient_dim))
        todo = np.ones(x.shape[0], dtype=bool)
        for _ in range(max_rounds):
            cand = np.atleast_2d(gpd.sample_with_beta(x[todo], rng))
            good = np.asarray(omega(gpd.alpha_batch(cand)), dtype=bool)
            ids = np.flatnonzero(todo)[good]
            res[ids] = cand[good]
            todo[np.flatnonzero(todo)[good]] = False
            if not todo.any():
                return res
        raise SamplingFailure(f"{out.name}: fiber sampling exhausted")

    out.sample_arrows = sample_arrows
    out.sample_with_beta = sample_with_beta
    return out


# ---------------------------------------------------------------------------
# catalog groupoids
# ---------------------------------------------------------------------------

def unit_groupoid(m: ChartedManifold, name=None) -> LieGroupoid:
    ident = lambda comps: list(comps)
    add = riemannian_local_addition(m)
    gpd = LieGroupoid(name or f"unit({m.name})", m, m,
                      SmoothMap(m, m, ident, name="alpha"),
                      SmoothMap(m, m, ident, name="beta"),
                      lambda g, h: list(g),
                      SmoothMap(m, m, ident, name="iota"),
                      SmoothMap(m, m, ident, name="unit"),
                      add, add)
    gpd.sample_arrows = lambda rng, n: m.sample(rng, n)
    gpd.sample_with_beta = lambda x, rng: np.asarray(x, dtype=float).copy()
    gpd.project_to_beta = lambda h, x: np.asarray(x, dtype=float).copy()
    gpd.sample_arrow_path = lambda params, rng, closed: m.sample_path(params, rng, closed)
    gpd.sample_arrow_path_with_beta = lambda tgt, rng, closed: np.asarray(tgt, dtype=float).copy()
    return gpd


def pair_groupoid(m: ChartedManifold, name=None) -> LieGroupoid:
    G = ProductManifold([m, m], name=f"{m.name}^2")
    am = m.ambient_dim

    def alpha_fn(comps):
        return list(comps[am:])

    def beta_fn(comps):
        return list(comps[:am])

    def mu_fn(g, h):
        return list(g[:am]) + list(h[am:])

    def iota_fn(comps):
        return list(comps[am:]) + list(comps[:am])

    def unit_fn(comps):
        return list(comps) + list(comps)

    add_m = riemannian_local_addition(m)
    add_g = product_local_addition(G, [add_m, add_m])
    gpd = LieGroupoid(name or f"pair({m.name})", G, m,
                      SmoothMap(G, m, alpha_fn, name="alpha"),
                      SmoothMap(G, m, beta_fn, name="beta"),
                      mu_fn,
                      SmoothMap(G, G, iota_fn, name="iota"),
                      SmoothMap(m, G, unit_fn, name="unit"),
                      add_g, add_m)
    gpd.sample_arrows = lambda rng, n: np.concatenate(
        [np.atleast_2d(m.sample(rng, n)), np.atleast_2d(m.sample(rng, n))], axis=-1)

    def sample_with_beta(x, rng):
        x = np.atleast_2d(np.asarray(x, dtype=float))
        return np.concatenate([x, np.atleast_2d(m.sample(rng, x.shape[0]))], axis=-1)

    gpd.sample_with_beta = sample_with_beta
    gpd.project_to_beta = lambda h, x: np.concatenate(
        [np.atleast_2d(np.asarray(x, dtype=float)),
         np.atleast_2d(np.asarray(h, dtype=float))[:, am:]], axis=-1)
    gpd.sample_arrow_path = lambda params, rng, closed: np.concatenate(
        [m.sample_path(params, rng, closed), m.sample_path(params, rng, closed)],
        axis=-1)
    gpd.sample_arrow_path_with_beta = lambda tgt, rng, closed: np.concatenate(
        [np.asarray(tgt, dtype=float),
         m.sample_path(_params_of(tgt), rng, closed)], axis=-1)
    return gpd


def _params_of(tgt):
    # helper for path samplers that only need the node count
    n = len(tgt)
    return np.linspace(0.0, 2.0 * math.pi, n, endpoint=False)


def lie_action_groupoid(group: LieGroupOps, act_fn, m: ChartedManifold,
                        name) -> LieGroupoid:
    """Action groupoid of a Lie group action: arrows (g, x) with target g.x."""
    Gm = group.manifold
    G = ProductManifold([Gm, m], name=f"{Gm.name}x{m.name}")
    ag = Gm.ambient_dim

    def alpha_fn(comps):
        return list(comps[ag:])

    def beta_fn(comps):
        return act_fn(list(comps[:ag]), list(comps[ag:]))

    def mu_fn(g, h):
        return group.mul(list(g[:ag]), list(h[:ag])) + list(h[ag:])

    def iota_fn(comps):
        g = list(comps[:ag])
        return group.invert(g) + act_fn(g, list(comps[ag:]))

    def unit_fn(comps):
        probe = comps[0] * 0.0
        return [probe + e for e in group.manifold.identity] + list(comps)

    add_m = riemannian_local_addition(m)
    add_g = product_local_addition(G, [riemannian_local_addition(Gm), add_m])
    gpd = LieGroupoid(name, G, m,
                      SmoothMap(G, m, alpha_fn, name="alpha"),
                      SmoothMap(G, m, beta_fn, name="beta"),
                      mu_fn,
                      SmoothMap(G, G, iota_fn, name="iota"),
                      SmoothMap(m, G, unit_fn, name="unit"),
                      add_g, add_m)
    gpd.sample_arrows = lambda rng, n: np.concatenate(
        [np.atleast_2d(Gm.sample(rng, n)), np.atleast_2d(m.sample(rng, n))], axis=-1)

    def act_batch(g, x):
        return merge_components(act_fn(split_components(np.asarray(g, dtype=float)),
                                       split_components(np.asarray(x, dtype=float))))

    def inv_batch(g):
        return merge_components(group.invert(
            split_components(np.asarray(g, dtype=float))))

    def sample_with_beta(x, rng):
        x = np.atleast_2d(np.asarray(x, dtype=float))
        g = np.atleast_2d(Gm.sample(rng, x.shape[0]))
        return np.concatenate([g, act_batch(inv_batch(g), x)], axis=-1)

    gpd.sample_with_beta = sample_with_beta
    gpd.project_to_beta = lambda h, x: np.concatenate(
        [np.atleast_2d(np.asarray(h, dtype=float))[:, :ag],
         act_batch(inv_batch(np.atleast_2d(np.asarray(h, dtype=float))[:, :ag]),
                   np.atleast_2d(np.asarray(x, dtype=float)))], axis=-1)

    def sample_arrow_path(params, rng, closed):
        return np.concatenate([Gm.sample_path(params, rng, closed),
                               m.sample_path(params, rng, closed)], axis=-1)

    def sample_arrow_path_with_beta(tgt, rng, closed):
        tgt = np.asarray(tgt, dtype=float)
        g = Gm.sample_path(_params_of(tgt), rng, closed)
        return np.concatenate([g, act_batch(inv_batch(g), tgt)], axis=-1)

    gpd.sample_arrow_path = sample_arrow_path
    gpd.sample_arrow_path_with_beta = sample_arrow_path_with_beta
    gpd.act_batch = act_batch
    gpd.group_ops = group
    return gpd


def rotation_action_groupoid() -> LieGroupoid:
    """The real line acting on the circle by rotations."""
    line = Euclidean(1, box=3.0)
    circle = Circle()

    def act_fn(g, x):
        c, s = ad.cos(g[0]), ad.sin(g[0])
        return [c * x[0] - s * x[1], s * x[0] + c * x[1]]

    return lie_action_groupoid(translation_group(line), act_fn, circle,
                               "rot-action(RxS1)")


def circle_bundle_groupoid() -> LieGroupoid:
    """The group bundle S1 x S1 over S1 (totally intransitive)."""
    circle = Circle()
    G = Torus()

    def alpha_fn(comps):
        return list(comps[:2])

    def mu_fn(g, h):
        z = list(g[:2])
        w = Circle.mul(list(g[2:]), list(h[2:]))
        return z + w

    def iota_fn(comps):
        return list(comps[:2]) + Circle.invert(list(comps[2:]))

    def unit_fn(comps):
        probe = comps[0] * 0.0
        return list(comps) + [probe + 1.0, probe]

    add_m = riemannian_local_addition(circle)
    add_g = riemannian_local_addition(G)
    gpd = LieGroupoid("circle-bundle(S1xS1)", G, circle,
                      SmoothMap(G, circle, alpha_fn, name="alpha"),
                      SmoothMap(G, circle, alpha_fn, name="beta"),
                      mu_fn,
                      SmoothMap(G, G, iota_fn, name="iota"),
                      SmoothMap(circle, G, unit_fn, name="unit"),
                      add_g, add_m)
    gpd.sample_arrows = lambda rng, n: np.concatenate(
        [np.atleast_2d(circle.sample(rng, n)), np.atleast_2d(circle.sample(rng, n))],
        axis=-1)

    def sample_with_beta(x, rng):
        x = np.atleast_2d(np.asarray(x, dtype=float))
        return np.concatenate([x, np.atleast_2d(circle.sample(rng, x.shape[0]))],
                              axis=-1)

    gpd.sample_with_beta = sample_with_beta
    gpd.project_to_beta = lambda h, x: np.concatenate(
        [np.atleast_2d(np.asarray(x, dtype=float)),
         np.atleast_2d(np.asarray(h, dtype=float))[:, 2:]], axis=-1)
    gpd.sample_arrow_path = lambda params, rng, closed: np.concatenate(
        [circle.sample_path(params, rng, closed),
         circle.sample_path(params, rng, closed)], axis=-1)
    gpd.sample_arrow_path_with_beta = lambda tgt, rng, closed: np.concatenate(
        [np.asarray(tgt, dtype=float),
         circle.sample_path(_params_of(tgt), rng, closed)], axis=-1)
    return gpd


def _indexed_action(elements, idx, mcomps):
    """Apply the idx-th affine element; idx is constant under differentiation."""
    iv = np.asarray(value(idx))
    if iv.ndim == 0:
        return elements[int(round(float(iv)))].act_comps(mcomps)
    out = None
    for k, el in enumerate(elements):
        w = (np.abs(iv - k) < 0.5).astype(float)
        term = [w * c for c in el.act_comps(mcomps)]
        out = term if out is None else [a + b for a, b in zip(out, term)]
    return out


def finite_action_groupoid(group: FiniteGroup, m: ChartedManifold,
                           name) -> LieGroupoid:
    """Action groupoid of a finite group of affine diffeomorphisms."""
    k = len(group)
    D = DiscreteManifold(k, name=f"{name}-elements")
    G = ProductManifold([D, m], name=f"{name}-arrows")
    tbl = group.table
    inv = group.inverse

    def alpha_fn(comps):
        return list(comps[1:])

    def beta_fn(comps):
        return _indexed_action(group.elements, comps[0], list(comps[1:]))

    def lookup(tab, i, j):
        iv = np.asarray(value(i))
        jv = np.asarray(value(j))
        if iv.ndim == 0 and jv.ndim == 0:
            return float(tab[int(round(float(iv))), int(round(float(jv)))])
        ii = np.rint(np.broadcast_to(iv, np.broadcast_shapes(iv.shape, jv.shape))).astype(int)
        jj = np.rint(np.broadcast_to(jv, ii.shape)).astype(int)
        return tab[ii, jj].astype(float)

    def mu_fn(g, h):
        return [lookup(tbl, g[0], h[0])] + list(h[1:])

    def iota_fn(comps):
        iv = np.asarray(value(comps[0]))
        if iv.ndim == 0:
            j = float(inv[int(round(float(iv)))])
        else:
            j = inv[np.rint(iv).astype(int)].astype(float)
        return [j] + _indexed_action(group.elements, comps[0], list(comps[1:]))

    def unit_fn(comps):
        probe = comps[0] * 0.0
        return [probe + float(group.identity_index)] + list(comps)

    add_m = riemannian_local_addition(m)
    add_g = product_local_addition(G, [riemannian_local_addition(D), add_m])
    gpd = LieGroupoid(name, G, m,
                      SmoothMap(G, m, alpha_fn, name="alpha"),
                      SmoothMap(G, m, beta_fn, name="beta"),
                      mu_fn,
                      SmoothMap(G, G, iota_fn, name="iota"),
                      SmoothMap(m, G, unit_fn, name="unit"),
                      add_g, add_m)
    gpd.finite_group = group

    def sample_arrows(rng, n):
        idx = rng.integers(k, size=(n, 1)).astype(float)
        return np.concatenate([idx, np.atleast_2d(m.sample(rng, n))], axis=-1)

    def act_indexed(idx, x):
        x = np.atleast_2d(np.asarray(x, dtype=float))
        out = np.zeros_like(x)
        ii = np.rint(np.asarray(idx, dtype=float).reshape(-1)).astype(int)
        for kk, el in enumerate(group.elements):
            mask = ii == kk
            if mask.any():
                out[mask] = el.act(x[mask])
        return out

    def sample_with_beta(x, rng):
        x = np.atleast_2d(np.asarray(x, dtype=float))
        idx = rng.integers(k, size=(x.shape[0], 1)).astype(float)
        minv = act_indexed(inv[idx.astype(int).reshape(-1)], x)
        return np.concatenate([idx, minv], axis=-1)

    gpd.sample_arrows = sample_arrows
    gpd.sample_with_beta = sample_with_beta
    gpd.project_to_beta = lambda h, x: np.concatenate(
        [np.atleast_2d(np.asarray(h, dtype=float))[:, :1],
         act_indexed(inv[np.rint(np.atleast_2d(np.asarray(h, dtype=float))[:, 0]).astype(int)],
                     np.atleast_2d(np.asarray(x, dtype=float)))], axis=-1)

    def sample_arrow_path(params, rng, closed):
        idx = np.full((len(params), 1), float(rng.integers(k)))
        return np.concatenate([idx, m.sample_path(params, rng, closed)], axis=-1)

    def sample_arrow_path_with_beta(tgt, rng, closed):
        tgt = np.asarray(tgt, dtype=float)
        kk = int(rng.integers(k))
        idx = np.full((len(tgt), 1), float(kk))
        minv = group.elements[int(inv[kk])].act(tgt)
        return np.concatenate([idx, minv], axis=-1)

    gpd.sample_arrow_path = sample_arrow_path
    gpd.sample_arrow_path_with_beta = sample_arrow_path_with_beta
    gpd.act_indexed = act_indexed
    return gpd


def group_groupoid(group: LieGroupOps, name=None) -> LieGroupoid:
    """A Lie group as a groupoid over the one-point base."""
    star = DiscreteManifold(1, name="point")
    Gm = group.manifold

    def const_fn(comps):
        return [comps[0] * 0.0]

    def unit_fn(comps):
        probe = comps[0] * 0.0
        return [probe + e for e in Gm.identity]

    gpd = LieGroupoid(name or f"group({group.name})", Gm, star,
                      SmoothMap(Gm, star, const_fn, name="alpha"),
                      SmoothMap(Gm, star, const_fn, name="beta"),
                      lambda g, h: group.mul(list(g), list(h)),
                      SmoothMap(Gm, Gm, lambda c: group.invert(list(c)), name="iota"),
                      SmoothMap(star, Gm, unit_fn, name="unit"),
                      riemannian_local_addition(Gm),
                      riemannian_local_addition(star))
    gpd.sample_arrows = lambda rng, n: Gm.sample(rng, n)
    gpd.sample_with_beta = lambda x, rng: np.atleast_2d(
        Gm.sample(rng, np.atleast_2d(x).shape[0]))
    gpd.sample_arrow_path = lambda params, rng, closed: Gm.sample_path(params, rng, closed)
    gpd.sample_arrow_path_with_beta = lambda tgt, rng, closed: Gm.sample_path(
        _params_of(tgt), rng, closed)
    return gpd


# ---------------------------------------------------------------------------
# the instance catalog
# ---------------------------------------------------------------------------

def z4_plane_groupoid():
    return finite_action_groupoid(cyclic_rotation_group(4), Euclidean(2),
                                  "z4-plane")


def z2_line_groupoid():
    return finite_action_groupoid(reflection_group_1d(), Euclidean(1),
                                  "z2-line")


def so3_loop_groupoid():
    from .catalog import RotationGroup
    from .localadd import so3_group
    return group_groupoid(so3_group(RotationGroup()), name="so3-group")


def so3_action_groupoid():
    """Rotations acting on 3-space by matrix multiplication."""
    from .catalog import RotationGroup
    from .localadd import so3_group

    def act_fn(g, x):
        return [g[0] * x[0] + g[1] * x[1] + g[2] * x[2],
                g[3] * x[0] + g[4] * x[1] + g[5] * x[2],
                g[6] * x[0] + g[7] * x[1] + g[8] * x[2]]

    return lie_action_groupoid(so3_group(RotationGroup()), act_fn,
                               Euclidean(3), "so3-action")


GROUPOIDS = {
    "unit-circle": lambda: unit_groupoid(Circle()),
    "pair-real1": lambda: pair_groupoid(Euclidean(1)),
    "pair-real2": lambda: pair_groupoid(Euclidean(2)),
    "rot-action": rotation_action_groupoid,
    "so3-action": so3_action_groupoid,
    "circle-bundle": circle_bundle_groupoid,
    "z4-plane": z4_plane_groupoid,
    "z2-line": z2_line_groupoid,
    "so3-group": so3_loop_groupoid,
}


def make_groupoid(name) -> LieGroupoid:
    if name not in GROUPOIDS:
        raise KeyError(f"unknown groupoid id {name!r}")
    return GROUPOIDS[name]()
