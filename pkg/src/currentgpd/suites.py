"""Named verification suites: the library's checkable claims as a registry.

Each suite runs one family of checks at fixed tolerances and returns
machine-readable records.  Counterexample suites pass when the obstruction
is confirmed ("obstructed-as-expected").
"""

from __future__ import annotations

import hashlib
import math
import time
from dataclasses import dataclass, field

import numpy as np

from . import ad
from .algebroids import (algebroid_of_groupoid, current_bracket_two_ways,
                         sign_convention_check, vector_field_bracket)
from .catalog import (Circle, Euclidean, RotationGroup, Sphere, Torus,
                      catalog_maps, exp_cover)
from .currents import (build_current, current_etale_nodes, pair_iso,
                       action_iso, proper_etale_fiber_bound,
                       properness_failure_witness, transitivity_obstruction)
from .errors import BranchAmbiguity, OutsideNeighborhood
from .gridmaps import (GridMap, GridSpec, circle_identity_loop,
                       classify_pushforward, constant_grid_map,
                       local_diffeo_inverse, pushforward, pushforward_tangent,
                       random_grid_map, random_section, seminorm_distance)
from .groupoids import GROUPOIDS, check_axioms, make_groupoid
from .localadd import (LocalAddition, fiber_derivative, normalize,
                       riemannian_local_addition, tangent_local_addition)
from .manifolds import (SecondTangent, SmoothMap, Tangent, canonical_flip,
                        merge_components, second_tangent_projection,
                        tangent_map)
from .orbifolds import (OrbitSpacePath, atlas_connectivity_negative_test,
                        lift_projection_residual, local_action_form,
                        path_lift)
from .report import CheckRecord
from .tolerances import DEFAULT, Tolerances


def derived_seed(*parts) -> int:
    """Stable across runs and platforms; hash() is salted, so not used."""
    text = ":".join(str(p) for p in parts)
    digest = hashlib.sha256(text.encode()).digest()
    return int.from_bytes(digest[:8], "big") % (2 ** 63 - 1)


@dataclass
class SuiteContext:
    seed: int
    grid: GridSpec = field(default_factory=lambda: GridSpec("circle", 64, 1))
    tol: Tolerances = DEFAULT
    instances: list = field(default_factory=lambda: list(GROUPOIDS))
    samples: dict = field(default_factory=dict)

    def rng(self, suite, *batch):
        return np.random.default_rng(derived_seed(self.seed, suite, *batch))

    def seed_for(self, suite, *batch):
        return derived_seed(self.seed, suite, *batch)

    def count(self, suite, default):
        return int(self.samples.get(suite, default))


def _record(name, anchor, status, residual, n, seed, details=None, certs=None):
    return CheckRecord(check_name=name, paper_anchor=anchor, status=status,
                       max_residual=float(residual), n_samples=int(n),
                       seed=int(seed), details=details or {},
                       certificates=certs or [])


# ---------------------------------------------------------------------------
# suite implementations
# ---------------------------------------------------------------------------

def suite_groupoid_axioms(ctx: SuiteContext):
    records = []
    for name in ctx.instances:
        seed = ctx.seed_for("groupoid-axioms", name)
        n = ctx.count("groupoid-axioms", 1000)
        rep = check_axioms(make_groupoid(name), n_samples=n, seed=seed)
        status = "pass" if rep.passed(ctx.tol.tol_chart) else "fail"
        records.append(_record(f"groupoid-axioms/{name}", "groupoid definition",
                               status, rep.max_violation, 1000, seed,
                               details=rep.violations))
    return records


def suite_current_groupoid_axioms(ctx: SuiteContext):
    records = []
    for name in ctx.instances:
        gpd = make_groupoid(name)
        for n in (8, 64, 256):
            seed = ctx.seed_for("current-groupoid-axioms", name, n)
            cur = build_current(gpd, GridSpec("circle", n, ctx.grid.ell))
            rep = cur.check_axioms(
                n_samples=ctx.count("current-groupoid-axioms", 1000),
                seed=seed)
            status = "pass" if rep.passed(ctx.tol.tol_chart) else "fail"
            records.append(_record(f"current-groupoid-axioms/{name}/n{n}",
                                   "Theorem A", status, rep.max_violation,
                                   1000, seed, details=rep.violations))
    return records


def suite_flip_identities(ctx: SuiteContext):
    rng = ctx.rng("flip-identities")
    manifolds = [Circle(), Euclidean(2), Sphere(), RotationGroup()]
    worst_proj = 0.0
    exact = True
    n_total = 0
    for m in manifolds:
        vecs = 1000 // len(manifolds)
        for _ in range(vecs):
            p = m.point_from_ambient(m.sample(rng))
            s = SecondTangent(m, p.chart_id, np.asarray(p.coords),
                              rng.normal(size=m.dim), rng.normal(size=m.dim),
                              rng.normal(size=m.dim))
            ss = canonical_flip(canonical_flip(s))
            exact = exact and all(
                np.array_equal(a, b) for a, b in zip(s.tuple4(), ss.tuple4()))
            # bundle projection = (tangent of the projection) after the flip
            tm = m.tangent_bundle()
            proj = SmoothMap(tm, m, lambda c, k=m.ambient_dim: list(c[:k]),
                             name="bundle-projection")
            fl = canonical_flip(s)
            base = tm.point_from_coords(fl.chart_id,
                                        np.concatenate([fl.x, fl.y]))
            t = Tangent(base, np.concatenate([fl.z, fl.w]))
            lhs = second_tangent_projection(s)
            rhs = tangent_map(proj, t, target_chart=s.chart_id)
            worst_proj = max(worst_proj,
                             float(np.max(np.abs(lhs.vel - rhs.vel))),
                             float(m.distance(lhs.base.ambient,
                                              rhs.base.ambient)))
            n_total += 1
    status = "pass" if exact and worst_proj <= 1e-12 else "fail"
    return [_record("flip-identities", "canonical flip", status, worst_proj,
                    n_total, ctx.seed_for("flip-identities"),
                    details={"involution_exact": exact})]


def _catalog_additions():
    out = {}
    for m in [Euclidean(2), Circle(), Sphere(), Torus(), RotationGroup()]:
        out[m.name] = (m, riemannian_local_addition(m))
    return out


def suite_local_addition(ctx: SuiteContext):
    records = []
    adds = _catalog_additions()
    seed = ctx.seed_for("local-addition")
    rng = np.random.default_rng(seed)
    worst_round = 0.0
    worst_zero = 0.0
    for name, (m, add) in adds.items():
        for _ in range(100):
            p = m.point_from_ambient(m.sample(rng))
            xi = rng.normal(size=m.dim) * 0.4
            t = Tangent(p, xi)
            if not add.contains(t):
                continue
            q = add.sigma(t)
            back = add.theta_inverse(p, q, tol=ctx.tol.tol_theta)
            worst_round = max(worst_round, float(np.max(np.abs(back.vel - xi)))
                              if m.dim else 0.0)
            z = add.sigma(Tangent(p, np.zeros(m.dim)))
            worst_zero = max(worst_zero, float(m.distance(z.ambient, p.ambient)))
    status = "pass" if max(worst_round, worst_zero) <= ctx.tol.tol_theta else "fail"
    records.append(_record("local-addition/round-trip", "local addition",
                           status, max(worst_round, worst_zero), 500, seed))

    # normalization, including a deliberately scaled input
    circle = Circle()
    base = riemannian_local_addition(circle)
    scaled = LocalAddition(
        circle,
        lambda comps: base.sigma_fn(list(comps[:2]) + [2.0 * c for c in comps[2:]]),
        base.domain_fn, normalized=False, fiber_radius=base.fiber_radius / 2,
        name="scaled")
    worst_norm = 0.0
    for add in [normalize(scaled), normalize(base)]:
        for _ in range(100):
            p = circle.point_from_ambient(circle.sample(rng))
            D = fiber_derivative(add, p, h=ctx.tol.h_fd)
            worst_norm = max(worst_norm,
                             float(np.max(np.abs(D - np.eye(circle.dim)))))
    status = "pass" if worst_norm <= 1e-6 else "fail"
    records.append(_record("local-addition/normalization", "local addition",
                           status, worst_norm, 200, seed))

    # tangent lift: zero tangents map to their foot point
    worst_lift = 0.0
    for name in ("circle", "real2"):
        m, add = adds[name]
        lifted = tangent_local_addition(add)
        tm = m.tangent_bundle()
        for _ in range(50):
            v = tm.point_from_ambient(tm.sample(rng))
            z = lifted.sigma(Tangent(v, np.zeros(tm.dim)))
            worst_lift = max(worst_lift, float(tm.distance(z.ambient, v.ambient)))
    status = "pass" if worst_lift <= ctx.tol.tol_theta else "fail"
    records.append(_record("local-addition/tangent-lift", "local addition",
                           status, worst_lift, 100, seed))
    return records


def suite_tangent_diagram(ctx: SuiteContext):
    """Derivative of the push-forward = nodewise tangent map."""
    maps = catalog_maps()
    chosen = ["circle-square", "circle-rotate", "exp-cover"]
    seed = ctx.seed_for("tangent-diagram")
    rng = np.random.default_rng(seed)
    grid = ctx.grid
    worst = 0.0
    reps = ctx.count("tangent-diagram", 50)
    for name in chosen:
        f = maps[name]
        add = riemannian_local_addition(f.source)
        for _ in range(reps):
            gamma = random_grid_map(grid, f.source, rng)
            tau = random_section(gamma, rng, scale=0.2)
            direct = pushforward_tangent(f, gamma, tau)
            # derivative of t -> f(sigma(t tau)) at 0, one dual pass per node
            base_c = [ad.Dual(c, 0.0 * c) for c in
                      np.moveaxis(gamma.ambient, -1, 0)]
            vel_c = [ad.Dual(0.0 * c, c) for c in
                     np.moveaxis(tau.vel_ambient, -1, 0)]
            out = f.fn(add.sigma_fn(base_c + vel_c))
            eps = merge_components([o.ep for o in out])
            worst = max(worst, float(np.max(np.abs(eps - direct.vel_ambient))))
    status = "pass" if worst <= ctx.tol.tol_fd else "fail"
    return [_record("tangent-diagram", "tangent identification", status,
                    worst, 150, seed)]


def suite_pushforward_classifiers(ctx: SuiteContext):
    maps = catalog_maps()
    expected = {
        "plane-projection": "submersion_on_trace",
        "line-inclusion": "immersion_on_trace",
        "exp-cover": "local_diffeo_on_trace",
        "circle-constant": "neither",
    }
    seed = ctx.seed_for("pushforward-classifiers")
    rng = np.random.default_rng(seed)
    grid = GridSpec("circle", 16, ctx.grid.ell)
    records = []
    reps = ctx.count("pushforward-classifiers", 100)
    for name, want in expected.items():
        f = maps[name]
        ok = True
        for _ in range(reps):
            gamma = random_grid_map(grid, f.source, rng)
            got = classify_pushforward(f, gamma, tol_rank=ctx.tol.tol_rank)
            ok = ok and got.verdict == want
        records.append(_record(f"pushforward-classifiers/{name}",
                               "Theorem E", "pass" if ok else "fail",
                               0.0, 100, seed, details={"expected": want}))
    return records


def suite_local_inverse(ctx: SuiteContext):
    f = exp_cover()
    line = f.source
    grid = ctx.grid
    seed = ctx.seed_for("local-inverse")
    rng = np.random.default_rng(seed)
    worst = 0.0
    x = grid.params()
    gamma0 = GridMap(grid, line, np.zeros((grid.n, 1)))
    for _ in range(ctx.count("local-inverse", 100)):
        amp = rng.uniform(0.1, 0.8)
        ph = rng.uniform(0, 2 * math.pi)
        off = rng.uniform(-3, 3)
        truth = GridMap(grid, line, (off + amp * np.sin(x + ph))[:, None])
        eta = pushforward(f, truth)
        start = line.point_from_ambient([off + amp * math.sin(ph)])
        got = local_diffeo_inverse(f, gamma0, eta, start=start,
                                   tol=ctx.tol.tol_theta)
        back = pushforward(f, got)
        worst = max(worst,
                    float(np.max(seminorm_distance(back, eta).order0)),
                    float(np.max(np.abs(got.ambient - truth.ambient))))
    rec_ok = worst <= ctx.tol.tol_theta
    # the winding-1 target admits no lift from any starting branch
    idloop = circle_identity_loop(grid, f.target)
    rejections = 0
    for k in range(32):
        start = line.point_from_ambient([2 * math.pi * (k - 16)])
        try:
            local_diffeo_inverse(f, gamma0, idloop, start=start)
        except (OutsideNeighborhood, BranchAmbiguity):
            rejections += 1
    status = "pass" if rec_ok and rejections == 32 else "fail"
    return [_record("local-inverse", "Theorem E(c)", status, worst, 132, seed,
                    details={"rejections": rejections})]


def suite_not_tra_certificate(ctx: SuiteContext):
    records = []
    circle = Circle()
    seed = ctx.seed_for("not-tra-certificate")
    # solvable targets invert with tiny residual
    worst = 0.0
    for theta in (0.0, 0.7, -1.2):
        grid = GridSpec("circle", 64, ctx.grid.ell)
        cert = transitivity_obstruction(grid, target=(
            constant_grid_map(grid, circle.point_at_angle(0.0)),
            constant_grid_map(grid, circle.point_at_angle(theta))))
        worst = max(worst, cert.max_residual)
        if cert.verdict != "solvable":
            return [_record("not-tra-certificate", "winding obstruction",
                            "fail", worst, 3, seed)]
    certs = []
    stable = True
    # exhaustive branch confirmation at the base grid; refinements re-check
    # the degree obstruction with spot lifting
    for n, n_branches in ((64, 32), (256, 2), (1024, 2)):
        cert = transitivity_obstruction(GridSpec("circle", n, ctx.grid.ell),
                                        seed=seed, n_branches=n_branches)
        certs.append(cert)
        stable = stable and cert.verdict == "obstructed" \
            and cert.witness_data["required_winding"] == -1
    status = "obstructed-as-expected" if stable and worst <= ctx.tol.tol_theta \
        else "fail"
    records.append(_record("not-tra-certificate", "winding obstruction",
                           status, worst, 3 + 3, seed, certs=certs))
    return records


def suite_not_proper_certificate(ctx: SuiteContext):
    seed = ctx.seed_for("not-proper-certificate")
    grid = GridSpec("circle", max(ctx.grid.n, 256), max(ctx.grid.ell, 1))
    cert = properness_failure_witness(grid)
    ok = cert.verdict == "unbounded-derivatives"
    return [_record("not-proper-certificate", "properness counterexample",
                    "obstructed-as-expected" if ok else "fail",
                    cert.max_residual, 4, seed, certs=[cert])]


def suite_proper_etale_lifting(ctx: SuiteContext):
    gpd = make_groupoid("z4-plane")
    seed = ctx.seed_for("proper-etale-lifting")
    n_arrows = ctx.count("proper-etale-lifting", 200)
    ok_nodes, worst = current_etale_nodes(gpd, ctx.grid, n_arrows=n_arrows,
                                          seed=seed,
                                          tol_rank=ctx.tol.tol_rank)
    cert = proper_etale_fiber_bound(gpd, ctx.grid, n_pairs=n_arrows,
                                    seed=seed, tol=ctx.tol.tol_chart)
    bounded = cert.verdict == "bounded"
    full = (cert.witness_data["n_full"] + cert.witness_data["n_empty"]
            == n_arrows)
    status = "pass" if ok_nodes and bounded and full else "fail"
    return [_record("proper-etale-lifting", "Theorem C", status,
                    cert.max_residual, 400, seed,
                    details={"min_source_jacobian": worst,
                             "max_lifts": cert.witness_data["max_lifts"]},
                    certs=[cert])]


def suite_theorem_d(ctx: SuiteContext):
    records = []
    grid = GridSpec("circle", 8, ctx.grid.ell)
    for name in ("pair-real2", "rot-action"):
        gpd = make_groupoid(name)
        alg = algebroid_of_groupoid(gpd)
        seed = ctx.seed_for("theorem-D-pointwise-bracket", name)
        rng = np.random.default_rng(seed)
        worst = 0.0
        for _ in range(ctx.count("theorem-D-pointwise-bracket", 50)):
            base = random_grid_map(grid, gpd.base, rng)
            X = alg.random_polynomial_section(rng, "X")
            Y = alg.random_polynomial_section(rng, "Y")
            worst = max(worst, current_bracket_two_ways(gpd, grid, X, Y, base))
        status = "pass" if worst <= ctx.tol.tol_bracket else "fail"
        records.append(_record(f"theorem-D-pointwise-bracket/{name}",
                               "Theorem D", status, worst, 50, seed))
    return records


def suite_algebroid_laws(ctx: SuiteContext):
    records = []
    seed = ctx.seed_for("algebroid-laws")
    rng = np.random.default_rng(seed)
    for name in ("pair-real2", "rot-action"):
        gpd = make_groupoid(name)
        alg = algebroid_of_groupoid(gpd)
        anti = jac = leib = morph = 0.0
        for _ in range(10):
            X = alg.random_polynomial_section(rng, "X")
            Y = alg.random_polynomial_section(rng, "Y")
            Z = alg.random_polynomial_section(rng, "Z")
            xs = [gpd.base.sample(rng) for _ in range(3)]
            XY = alg.bracket(X, Y)
            for x in xs:
                a = merge_components(XY.vector_fn(list(x)))
                b = merge_components(alg.bracket(Y, X).vector_fn(list(x)))
                anti = max(anti, float(np.max(np.abs(a + b))))
                s = (merge_components(
                        alg.bracket(X, alg.bracket(Y, Z)).vector_fn(list(x)))
                     + merge_components(
                        alg.bracket(Z, XY).vector_fn(list(x)))
                     + merge_components(
                        alg.bracket(Y, alg.bracket(Z, X)).vector_fn(list(x))))
                jac = max(jac, float(np.max(np.abs(s))))
                # Leibniz in the second argument with a polynomial function
                fscal = lambda xc: 0.5 + xc[0] * xc[0] - 0.25 * xc[1]
                fY = Y.times_function(fscal)
                lhs = merge_components(alg.bracket(X, fY).vector_fn(list(x)))
                aXf = ad.jvp(lambda c: [fscal(c)], list(x),
                             [value for value in
                              merge_components(alg.anchor_vector(X, list(x)))])[1][0]
                rhs = (fscal(list(x)) * merge_components(XY.vector_fn(list(x)))
                       + aXf * merge_components(Y.vector_fn(list(x))))
                leib = max(leib, float(np.max(np.abs(lhs - rhs))))
                # anchor is a morphism into vector fields
                aXY = merge_components(alg.anchor_vector(XY, list(x)))
                vf = vector_field_bracket(
                    gpd.base,
                    lambda c: alg.anchor_vector(X, list(c)),
                    lambda c: alg.anchor_vector(Y, list(c)))
                morph = max(morph, float(np.max(np.abs(
                    aXY - merge_components(vf(list(x)))))))
        worst = max(anti, jac, leib, morph)
        status = "pass" if worst <= ctx.tol.tol_bracket else "fail"
        records.append(_record(f"algebroid-laws/{name}",
                               "algebroid definition", status, worst, 30,
                               seed, details={"antisymmetry": anti,
                                              "jacobi": jac,
                                              "leibniz": leib,
                                              "anchor_morphism": morph}))
    # the group-as-groupoid bracket sign, measured not assumed
    from .localadd import so3_group
    sgn = sign_convention_check(so3_group(RotationGroup()), seed=seed)
    records.append(_record("algebroid-laws/sign-convention", "bracket sign",
                           "pass" if sgn.consistent else "fail", 0.0, 4, seed,
                           details={"sign": sgn.sign, "note": sgn.note}))
    return records


def suite_local_action_form(ctx: SuiteContext):
    gpd = make_groupoid("z4-plane")
    seed = ctx.seed_for("local-action-form")
    x = gpd.base.point_from_ambient([0.0, 0.0])
    form = local_action_form(gpd, x, n_check=500, seed=seed)
    worst = max(form.action_law_residual, form.phi_bijectivity_residual,
                form.phi_multiplicativity_residual)
    ok = worst <= 1e-9 and len(form.isotropy) == 4
    z2 = make_groupoid("z2-line")
    form2 = local_action_form(z2, z2.base.point_from_ambient([0.0]),
                              n_check=500, seed=seed)
    ok = ok and len(form2.isotropy) == 2
    return [_record("local-action-form", "local action form",
                    "pass" if ok else "fail", worst, 1000, seed,
                    details={"radius": form.radius,
                             "halvings": form.halvings,
                             "isotropy_order": len(form.isotropy)})]


def suite_path_lifting(ctx: SuiteContext):
    gpd = make_groupoid("z4-plane")
    grp = gpd.finite_group
    seed = ctx.seed_for("path-lifting")
    rng = np.random.default_rng(seed)
    grid = GridSpec("interval", max(16, ctx.grid.n // 4))
    worst = 0.0
    equein = 0.0
    for _ in range(ctx.count("path-lifting", 100)):
        # fixed-point-free path: radius bounded away from the origin
        t = grid.params()
        r = 1.0 + 0.3 * np.sin(2 * math.pi * t * rng.uniform(0.5, 1.5))
        a = rng.uniform(0, 2 * math.pi) + 0.9 * np.sin(
            2 * math.pi * t + rng.uniform(0, 6))
        pts = np.stack([r * np.cos(a), r * np.sin(a)], axis=-1)
        reps = pts.copy()
        for i in range(grid.n):
            reps[i] = grp.elements[int(rng.integers(4))].act(reps[i])
        path = OrbitSpacePath(grid, reps, grp)
        start = gpd.base.point_from_ambient(pts[0])
        lift = path_lift(gpd, path, start)
        worst = max(worst, lift_projection_residual(gpd, path, lift))
        g = grp.elements[int(rng.integers(1, 4))]
        start2 = gpd.base.point_from_ambient(g.act(pts[0]))
        lift2 = path_lift(gpd, path, start2)
        equein = max(equein, float(np.max(np.abs(lift2.ambient
                                                 - g.act(lift.ambient)))))
    ok = worst <= ctx.tol.tol_theta and equein <= 1e-12
    cert64 = atlas_connectivity_negative_test(GridSpec("circle", 64))
    cert256 = atlas_connectivity_negative_test(GridSpec("circle", 256))
    stable = cert64.verdict == cert256.verdict == "obstructed"
    return [_record("path-lifting", "path lifting",
                    "pass" if ok and stable else "fail", worst, 200, seed,
                    details={"equivariance": equein},
                    certs=[cert64, cert256])]


def suite_atlas_negative(ctx: SuiteContext):
    seed = ctx.seed_for("atlas-negative")
    certs = [atlas_connectivity_negative_test(GridSpec("circle", n))
             for n in (64, 256)]
    ok = all(c.verdict == "obstructed" for c in certs)
    return [_record("atlas-negative", "atlas obstruction",
                    "obstructed-as-expected" if ok else "fail", 0.0, 2, seed,
                    certs=certs)]


def suite_pair_action_iso(ctx: SuiteContext):
    seed = ctx.seed_for("pair-action-iso")
    grid = GridSpec("circle", 16, ctx.grid.ell)
    r1 = pair_iso(grid, Circle(), n_samples=100, seed=seed)
    r2 = action_iso(grid, make_groupoid("rot-action"), n_samples=100,
                    seed=seed)
    worst = max(r1, r2)
    return [_record("pair-action-iso", "structural isomorphisms",
                    "pass" if worst <= 1e-10 else "fail", worst, 200, seed,
                    details={"pair": r1, "action": r2})]


def suite_embedding(ctx: SuiteContext):
    """Push-forward of the circle embedding: injective, with exact retraction."""
    maps = catalog_maps()
    e = maps["circle-embed"]
    seed = ctx.seed_for("embedding")
    rng = np.random.default_rng(seed)
    grid = ctx.grid
    worst = 0.0
    injective = True
    prev = None
    for _ in range(100):
        gamma = random_grid_map(grid, e.source, rng)
        img = pushforward(e, gamma, delta_coh=np.inf)
        # retraction onto the unit circle recovers the input
        norm = np.linalg.norm(img.ambient, axis=-1, keepdims=True)
        back = img.ambient / norm
        worst = max(worst, float(np.max(e.source.distance(back, gamma.ambient))))
        if prev is not None:
            same_in = float(np.max(e.source.distance(gamma.ambient,
                                                     prev[0].ambient))) < 1e-12
            same_out = float(np.max(np.abs(img.ambient
                                           - prev[1].ambient))) < 1e-12
            if same_out and not same_in:
                injective = False
        prev = (gamma, img)
    ok = worst <= ctx.tol.tol_theta and injective
    return [_record("embedding", "Theorem F", "pass" if ok else "fail",
                    worst, 100, seed)]


SUITES = {
    "groupoid-axioms": ("groupoid definition", suite_groupoid_axioms),
    "current-groupoid-axioms": ("Theorem A", suite_current_groupoid_axioms),
    "flip-identities": ("canonical flip", suite_flip_identities),
    "local-addition": ("local addition", suite_local_addition),
    "tangent-diagram": ("tangent identification", suite_tangent_diagram),
    "pushforward-classifiers": ("Theorem E", suite_pushforward_classifiers),
    "local-inverse": ("Theorem E(c)", suite_local_inverse),
    "not-tra-certificate": ("winding obstruction", suite_not_tra_certificate),
    "not-proper-certificate": ("properness counterexample",
                               suite_not_proper_certificate),
    "proper-etale-lifting": ("Theorem C", suite_proper_etale_lifting),
    "theorem-D-pointwise-bracket": ("Theorem D", suite_theorem_d),
    "algebroid-laws": ("algebroid definition", suite_algebroid_laws),
    "local-action-form": ("local action form", suite_local_action_form),
    "path-lifting": ("path lifting", suite_path_lifting),
    "atlas-negative": ("atlas obstruction", suite_atlas_negative),
    "pair-action-iso": ("structural isomorphisms", suite_pair_action_iso),
    "embedding": ("Theorem F", suite_embedding),
}


def run_suite(suite_id: str, ctx: SuiteContext):
    from .errors import UnknownSuite
    if suite_id not in SUITES:
        raise UnknownSuite(f"no suite registered under {suite_id!r}")
    _, fn = SUITES[suite_id]
    t0 = time.perf_counter()
    records = fn(ctx)
    elapsed = (time.perf_counter() - t0) * 1000.0
    for r in records:
        r.wall_time_ms = elapsed / max(len(records), 1)
    return records
