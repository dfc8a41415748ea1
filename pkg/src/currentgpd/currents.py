"""Groupoids of grid maps with pointwise operations, and their certificates.

Applying a groupoid's structure maps node by node turns grid maps into a
groupoid again.  This module builds that object for any catalog groupoid,
checks the lifted axioms, verifies the structural isomorphisms for pair and
action groupoids, and constructs the executable counterexample certificates
(transitivity obstruction, equicontinuity failure, finite fiber bounds).
"""

from __future__ import annotations

import math

import numpy as np

from .errors import NotComposable, SamplingFailure
from .gridmaps import (GridMap, GridSpec, circle_winding_loop,
                       constant_grid_map, degree, local_diffeo_inverse,
                       seminorm_distance)
from .groupoids import AxiomReport, LieGroupoid, axiom_violations, restrict
from .manifolds import map_jacobian
from .report import Certificate
from .tolerances import DEFAULT

TWO_PI = 2.0 * math.pi


class CurrentGroupoid:
    """Grid maps into a groupoid, composed node by node."""

    def __init__(self, base_gpd: LieGroupoid, grid: GridSpec):
        self.base_gpd = base_gpd
        self.grid = grid
        self.name = f"maps({grid.kind}{grid.n} -> {base_gpd.name})"

    # -- structure maps on grid maps -----------------------------------------
    def _wrap_obj(self, amb):
        return GridMap(self.grid, self.base_gpd.base, amb)

    def _wrap_arrow(self, amb):
        return GridMap(self.grid, self.base_gpd.arrows, amb)

    def alpha_star(self, a: GridMap) -> GridMap:
        return self._wrap_obj(self.base_gpd.alpha_batch(a.ambient))

    def beta_star(self, a: GridMap) -> GridMap:
        return self._wrap_obj(self.base_gpd.beta_batch(a.ambient))

    def mu_star(self, a: GridMap, b: GridMap,
                tol=DEFAULT.tol_chart) -> GridMap:
        """Nodewise composition; composability must hold at every node."""
        aa = self.base_gpd.alpha_batch(a.ambient)
        bb = self.base_gpd.beta_batch(b.ambient)
        gaps = np.asarray(self.base_gpd.base.distance(aa, bb))
        if float(np.max(gaps)) >= tol:
            raise NotComposable(
                f"{self.name}: endpoint gap {float(np.max(gaps)):.3e} "
                f"at node {int(np.argmax(gaps))}")
        b_amb = b.ambient
        if self.base_gpd.project_to_beta is not None:
            b_amb = self.base_gpd.project_to_beta(b_amb, aa)
        return self._wrap_arrow(self.base_gpd.mu_batch(a.ambient, b_amb))

    def iota_star(self, a: GridMap) -> GridMap:
        return self._wrap_arrow(self.base_gpd.iota_batch(a.ambient))

    def unit_star(self, obj: GridMap) -> GridMap:
        return self._wrap_arrow(self.base_gpd.unit_batch(obj.ambient))

    # -- sampling ---------------------------------------------------------------
    def sample_arrow(self, rng) -> GridMap:
        amb = self.base_gpd.sample_arrow_path(self.grid.params(), rng,
                                              self.grid.closed)
        return self._wrap_arrow(amb)

    def sample_with_beta(self, obj: GridMap, rng) -> GridMap:
        amb = self.base_gpd.sample_arrow_path_with_beta(obj.ambient, rng,
                                                        self.grid.closed)
        return self._wrap_arrow(amb)

    def sample_object(self, rng) -> GridMap:
        return self._wrap_obj(self.base_gpd.base.sample_path(
            self.grid.params(), rng, self.grid.closed))

    # -- lifted axiom suite -------------------------------------------------------
    def check_axioms(self, n_samples=1000, seed=0, chunk=250) -> AxiomReport:
        """Lifted axiom residuals over seeded composable grid-arrow samples.

        Samples are stacked into (chunk, nodes, ambient) arrays so all node
        and sample axes run through one vectorized structure-map call.
        """
        rng = np.random.default_rng(seed)
        gpd = self.base_gpd
        params = self.grid.params()
        closed = self.grid.closed
        worst = {}
        done = 0
        while done < n_samples:
            m = min(chunk, n_samples - done)
            g = np.stack([gpd.sample_arrow_path(params, rng, closed)
                          for _ in range(m)])
            ag = gpd.alpha_batch(g)
            h = np.stack([gpd.sample_arrow_path_with_beta(ag[i], rng, closed)
                          for i in range(m)])
            ah = gpd.alpha_batch(h)
            k = np.stack([gpd.sample_arrow_path_with_beta(ah[i], rng, closed)
                          for i in range(m)])
            xs = np.stack([gpd.base.sample_path(params, rng, closed)
                           for _ in range(m)])
            viol = axiom_violations(gpd, g, h, k, xs)
            for key, val in viol.items():
                worst[key] = max(worst.get(key, 0.0), val)
            done += m
        report = AxiomReport(self.name, n_samples, seed)
        report.violations = worst
        return report


def build_current(gpd: LieGroupoid, grid: GridSpec) -> CurrentGroupoid:
    if gpd.sample_arrow_path is None:
        raise SamplingFailure(f"{gpd.name}: no arrow path sampler registered")
    return CurrentGroupoid(gpd, grid)


# ---------------------------------------------------------------------------
# structural isomorphisms
# ---------------------------------------------------------------------------

def pair_iso(grid: GridSpec, m, n_samples=100, seed=0) -> float:
    """Grid maps into M x M versus pairs of grid maps into M.

    The reindexing bijection must commute with all five structure maps;
    returns the max residual over seeded samples.
    """
    from .groupoids import pair_groupoid
    gpd = pair_groupoid(m)
    cur = build_current(gpd, grid)
    am = m.ambient_dim
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n_samples):
        a = cur.sample_arrow(rng)
        b = cur.sample_with_beta(cur.alpha_star(a), rng)
        first = lambda gm: gm.ambient[:, :am]
        second = lambda gm: gm.ambient[:, am:]
        # source/target under reindexing
        worst = max(worst, float(np.max(np.abs(cur.alpha_star(a).ambient - second(a)))))
        worst = max(worst, float(np.max(np.abs(cur.beta_star(a).ambient - first(a)))))
        # multiplication: (f1, f2) . (f2, f3) = (f1, f3)
        mu = cur.mu_star(a, b)
        joined = np.concatenate([first(a), second(b)], axis=-1)
        worst = max(worst, float(np.max(np.abs(mu.ambient - joined))))
        # inversion and units
        worst = max(worst, float(np.max(np.abs(
            cur.iota_star(a).ambient
            - np.concatenate([second(a), first(a)], axis=-1)))))
        obj = cur.sample_object(rng)
        worst = max(worst, float(np.max(np.abs(
            cur.unit_star(obj).ambient
            - np.concatenate([obj.ambient, obj.ambient], axis=-1)))))
    return worst


def action_iso(grid: GridSpec, action_gpd: LieGroupoid, n_samples=100,
               seed=0) -> float:
    """Grid maps into G x M versus the action of G-valued on M-valued maps."""
    from .manifolds import merge_components, split_components
    if not hasattr(action_gpd, "act_batch"):
        raise SamplingFailure(f"{action_gpd.name} is not an action groupoid")
    cur = build_current(action_gpd, grid)
    ops = action_gpd.group_ops
    ag = ops.manifold.ambient_dim
    rng = np.random.default_rng(seed)
    worst = 0.0
    gm_part = lambda gm: gm.ambient[:, :ag]
    m_part = lambda gm: gm.ambient[:, ag:]
    for _ in range(n_samples):
        a = cur.sample_arrow(rng)
        b = cur.sample_with_beta(cur.alpha_star(a), rng)
        # source / target match the pointwise action picture
        worst = max(worst, float(np.max(np.abs(cur.alpha_star(a).ambient - m_part(a)))))
        worst = max(worst, float(np.max(np.abs(
            cur.beta_star(a).ambient
            - action_gpd.act_batch(gm_part(a), m_part(a))))))
        # multiplication: group parts multiply pointwise, base from the right
        mu = cur.mu_star(a, b)
        lifted_g = merge_components(ops.mul(split_components(gm_part(a)),
                                            split_components(gm_part(b))))
        lifted = np.concatenate([lifted_g, m_part(b)], axis=-1)
        worst = max(worst, float(np.max(np.abs(mu.ambient - lifted))))
    return worst


# ---------------------------------------------------------------------------
# restriction to open object sets
# ---------------------------------------------------------------------------

def members_all(gm: GridMap, omega) -> bool:
    """Membership in the space of maps with image inside omega."""
    return bool(np.all(omega(gm.ambient)))


def members_meets(gm: GridMap, omega) -> bool:
    """Membership in the set of maps whose image meets omega."""
    return bool(np.any(omega(gm.ambient)))


def restriction_subgroupoid(cur: CurrentGroupoid, omega) -> CurrentGroupoid:
    """Current groupoid of the restricted base groupoid.

    An arrow belongs iff both endpoint maps have image inside omega; this
    is the same set as the restriction of the current groupoid to the open
    set of maps with image in omega.
    """
    sub = restrict(cur.base_gpd, omega)
    out = CurrentGroupoid(sub, cur.grid)

    base_sampler = cur.base_gpd.sample_arrow_path
    with_beta = cur.base_gpd.sample_arrow_path_with_beta

    def sample_path(params, rng, closed, max_tries=5000):
        for _ in range(max_tries):
            amb = base_sampler(params, rng, closed)
            if (np.all(omega(cur.base_gpd.alpha_batch(amb)))
                    and np.all(omega(cur.base_gpd.beta_batch(amb)))):
                return amb
        raise SamplingFailure(f"{out.name}: path sampling exhausted")

    def sample_path_with_beta(tgt, rng, closed, max_tries=5000):
        for _ in range(max_tries):
            amb = with_beta(tgt, rng, closed)
            if np.all(omega(cur.base_gpd.alpha_batch(amb))):
                return amb
        raise SamplingFailure(f"{out.name}: fiber path sampling exhausted")

    sub.sample_arrow_path = sample_path
    sub.sample_arrow_path_with_beta = sample_path_with_beta
    return out


# ---------------------------------------------------------------------------
# certificates
# ---------------------------------------------------------------------------

def transitivity_obstruction(grid: GridSpec, target=None, n_branches=32,
                             seed=0, tol=DEFAULT.tol_theta) -> Certificate:
    """Solve, or obstruct, the anchor equation for the rotation action.

    For target loops (eta1, eta2) into the circle, an arrow (t, eta1) with
    pointwise rotation target eta2 requires a continuous angle t with
    e^{it} eta1 = eta2.  Solvability is exactly the vanishing of the winding
    number of eta2 / eta1; the winding mismatch is the certificate.
    """
    from .catalog import Circle, exp_cover
    circle = Circle()
    if target is None:
        eta1 = GridMap(grid, circle, np.stack(
            [np.cos(grid.params()), np.sin(grid.params())], axis=-1))
        eta2 = constant_grid_map(grid, circle.point_from_ambient([1.0, 0.0]))
    else:
        eta1, eta2 = target
    # w = eta2 * conj(eta1), nodewise on the unit circle
    a1, a2 = eta1.ambient, eta2.ambient
    w = np.stack([a1[:, 0] * a2[:, 0] + a1[:, 1] * a2[:, 1],
                  a1[:, 0] * a2[:, 1] - a1[:, 1] * a2[:, 0]], axis=-1)
    w_loop = GridMap(grid, circle, w, delta_coh=math.pi - 1e-9)
    required = degree(w_loop)
    inputs = {"grid": {"kind": grid.kind, "n": grid.n},
              "winding_eta1": degree(GridMap(grid, circle, a1,
                                             delta_coh=math.pi - 1e-9)),
              "winding_eta2": degree(GridMap(grid, circle, a2,
                                             delta_coh=math.pi - 1e-9))}
    if required == 0:
        # branch-following angle lift of w
        th = np.arctan2(w[:, 1], w[:, 0])
        inc = np.diff(th)
        inc = np.mod(inc + math.pi, TWO_PI) - math.pi
        t = np.concatenate([[th[0]], th[0] + np.cumsum(inc)])
        arrow = np.concatenate([t[:, None], a1], axis=-1)
        from .groupoids import rotation_action_groupoid
        gpd = rotation_action_groupoid()
        res_a = np.max(gpd.base.distance(gpd.alpha_batch(arrow), a1))
        res_b = np.max(gpd.base.distance(gpd.beta_batch(arrow), a2))
        residual = float(max(res_a, res_b))
        return Certificate(
            kind="anchor-solve",
            inputs=inputs,
            witness_data={"angle_path": t},
            verdict="solvable",
            max_residual=residual,
        )
    # obstructed: no continuous angle exists; confirm by exhaustive lifting
    cover = exp_cover(circle)
    line = cover.source
    gamma0 = GridMap(grid, line, np.zeros((grid.n, 1)))
    rng = np.random.default_rng(seed)
    failures = 0
    from .errors import OutsideNeighborhood, BranchAmbiguity
    for _ in range(n_branches):
        k = int(rng.integers(-8, 9))
        start = line.point_from_ambient([TWO_PI * k + rng.uniform(-0.1, 0.1)])
        try:
            local_diffeo_inverse(cover, gamma0, w_loop, start=start)
        except (OutsideNeighborhood, BranchAmbiguity):
            failures += 1
    return Certificate(
        kind="anchor-obstruction",
        inputs=inputs,
        witness_data={"required_winding": required, "achievable_winding": 0,
                      "lift_attempts": n_branches,
                      "lift_failures": failures},
        verdict="obstructed" if failures == n_branches else "inconclusive",
        max_residual=0.0,
    )


def properness_failure_witness(grid: GridSpec, k_max=8,
                               windings=(1, 2, 4, 8)) -> Certificate:
    """Equicontinuity failure in one anchor fiber of the circle bundle.

    The winding-k loops in the fiber over a constant object have first-order
    seminorms growing linearly in k and stay order-0 separated, so no
    subsequence converges in the grid C^1 distance.
    """
    from .groupoids import circle_bundle_groupoid
    gpd = circle_bundle_groupoid()
    circle = gpd.base
    eta = constant_grid_map(grid, circle.point_from_ambient([1.0, 0.0]))
    unit_arrow = GridMap(grid, gpd.arrows, np.concatenate(
        [eta.ambient, eta.ambient], axis=-1))
    windings = [k for k in windings if k <= k_max]
    family = {}
    anchor_residual = 0.0
    for k in windings:
        wk = circle_winding_loop(grid, circle, k)
        arrow = GridMap(grid, gpd.arrows,
                        np.concatenate([eta.ambient, wk.ambient], axis=-1),
                        delta_coh=wk.delta_coh)
        res = max(
            float(np.max(circle.distance(gpd.alpha_batch(arrow.ambient),
                                         eta.ambient))),
            float(np.max(circle.distance(gpd.beta_batch(arrow.ambient),
                                         eta.ambient))))
        anchor_residual = max(anchor_residual, res)
        prof = seminorm_distance(arrow, unit_arrow)
        family[k] = {"order1_seminorm": prof[1] if grid.ell >= 1 else None,
                     "anchor_residual": res}
    pair_min = np.inf
    for i, k in enumerate(windings):
        for j in windings[i + 1:]:
            wk = circle_winding_loop(grid, circle, k)
            wj = circle_winding_loop(grid, circle, j)
            d0 = float(np.max(circle.distance(wk.ambient, wj.ambient)))
            pair_min = min(pair_min, d0)
    growth_ok = all(
        abs(family[k]["order1_seminorm"] - k) <= 0.05 * k for k in windings
    ) if grid.ell >= 1 else False
    verdict = ("unbounded-derivatives"
               if growth_ok and pair_min >= 1.0 and anchor_residual < 1e-12
               else "inconclusive")
    return Certificate(
        kind="properness-failure",
        inputs={"grid": {"kind": grid.kind, "n": grid.n}, "k_max": k_max},
        witness_data={"family": family, "pairwise_order0_min": pair_min},
        verdict=verdict,
        max_residual=anchor_residual,
    )


def proper_etale_fiber_bound(gpd: LieGroupoid, grid: GridSpec, n_pairs=200,
                             seed=0, tol=DEFAULT.tol_chart) -> Certificate:
    """Finite lift counts over object pairs for a finite action groupoid.

    A grid arrow over a connected grid is a constant group element together
    with its source map, so at most |Gamma| arrows lie over any object pair;
    they are enumerated and matched against the target at orbit level, and
    exactly against the target for the anchor fiber itself.
    """
    grp = gpd.finite_group
    if grp is None:
        raise SamplingFailure(f"{gpd.name}: needs a finite structure group")
    rng = np.random.default_rng(seed)
    m = gpd.base
    counts = []
    exact_counts = []
    worst_res = 0.0
    for trial in range(n_pairs):
        src = m.sample_path(grid.params(), rng, grid.closed)
        rho = int(rng.integers(len(grp)))
        if trial % 5 == 4:
            tgt = m.sample_path(grid.params(), rng, grid.closed)  # other orbit
        else:
            tgt = grp.elements[rho].act(src)
        lifts = []
        exact = []
        for gi, el in enumerate(grp.elements):
            img = el.act(src)
            orbit_gap = np.min(np.stack(
                [np.max(np.abs(e.act(img) - tgt), axis=-1)
                 for e in grp.elements]), axis=0)
            if float(np.max(orbit_gap)) < tol:
                lifts.append(gi)
                worst_res = max(worst_res, float(np.max(orbit_gap)))
            if float(np.max(np.abs(img - tgt))) < tol:
                exact.append(gi)
        counts.append(len(lifts))
        exact_counts.append(len(exact))
    counts = np.asarray(counts)
    exact_counts = np.asarray(exact_counts)
    verdict = "bounded" if int(counts.max(initial=0)) <= len(grp) else "violated"
    return Certificate(
        kind="finite-fiber-bound",
        inputs={"groupoid": gpd.name, "grid": {"kind": grid.kind, "n": grid.n},
                "group_order": len(grp), "n_pairs": n_pairs},
        witness_data={
            "max_lifts": int(counts.max(initial=0)),
            "min_lifts": int(counts.min(initial=0)),
            "n_empty": int(np.sum(counts == 0)),
            "n_full": int(np.sum(counts == len(grp))),
            "max_exact_matches": int(exact_counts.max(initial=0)),
        },
        verdict=verdict,
        max_residual=worst_res,
    )


def current_etale_nodes(gpd: LieGroupoid, grid: GridSpec, n_arrows=200,
                        seed=0, tol_rank=DEFAULT.tol_rank):
    """Per-node invertibility of the source Jacobian along sampled arrows."""
    rng = np.random.default_rng(seed)
    worst = np.inf
    for _ in range(n_arrows):
        amb = gpd.sample_arrow_path(grid.params(), rng, grid.closed)
        for i in range(grid.n):
            p = gpd.arrows.point_from_ambient(amb[i])
            J, _ = map_jacobian(gpd.alpha, p)
            s = np.linalg.svd(J, compute_uv=False)
            worst = min(worst, float(s[-1] / max(s[0], 1.0)))
    return worst > tol_rank, worst


def current_anchor_rank_nodes(gpd: LieGroupoid, grid: GridSpec, n_arrows=50,
                              seed=0, tol_rank=DEFAULT.tol_rank):
    """Per-node full row rank of the anchor Jacobian along sampled arrows."""
    anchor_m = gpd.anchor_map()
    need = 2 * gpd.base.dim
    rng = np.random.default_rng(seed)
    worst = np.inf
    for _ in range(n_arrows):
        amb = gpd.sample_arrow_path(grid.params(), rng, grid.closed)
        for i in range(grid.n):
            p = gpd.arrows.point_from_ambient(amb[i])
            J, _ = map_jacobian(anchor_m, p)
            s = np.linalg.svd(J, compute_uv=False)
            worst = min(worst, float(s[need - 1] / max(s[0], 1.0)))
    return worst > tol_rank, worst
