"""Named verification checks with formula anchors.

Every check certifies one identity; the anchor field states that identity
as a formula so reports are self-describing. A check runner receives a
context with the scenario payload, resolved sample points, numeric
tolerances and two deterministic random streams: builders derive the
scenario's objects from the scenario seed (so every check sees the same
manifold or chart), while probe vectors come from a per-check stream.
Pass/fail is uniform: max_residual <= tolerance, with indicator residuals
(0 or 1) for verdict-match and control checks.
"""
from __future__ import annotations

from dataclasses import dataclass
from types import SimpleNamespace
from typing import Callable

import numpy as np

from .config import Tolerances
from .cxlinalg import complexify_vector, realify_vector
from .distribution import (
    DistributionChart,
    PolynomialMatrixMap,
    frame_bracket_oracle,
    is_foliation,
    isotropy_test,
    random_polynomial_chart,
    torsion_at,
    torsion_via_frames,
)
from .errors import SchemaError
from .fields import (
    AlmostComplexField,
    CallableMatrixField,
    TorusChart,
    TrigPolyField,
    nijenhuis_direct,
    nijenhuis_fd_oracle,
    verify_tensoriality,
)
from .induced import (
    CRPolyMap,
    GraphEmbedding,
    VariationData,
    dbar_f,
    dbar_f_fiber_coords,
    induced_jf,
    nijenhuis_via_torsion,
    random_crpoly,
    variation_djf,
    variation_fd_oracle,
)
from .lvmb import (
    LvmbData,
    check_condition_i,
    check_condition_i_polygon,
    check_condition_ii,
    exchange_closure,
    killing_fields,
)
from .rng import SplitMix64
from .universal import (
    ChartFrame,
    PointwiseACManifold,
    build_fiber,
    dbar_embedding,
    default_torus_embedding,
    dimension_symplectic,
    dimension_universal,
    induced_structure_at,
    induced_structure_field,
    isotropy_subspace,
    plucker_reality_certificate,
    symplectic_pointwise_model,
    random_compatible_symplectic,
    universal_chart,
    versality_check,
    versality_rank_from_parts,
)


@dataclass(frozen=True)
class CheckResult:
    max_residual: float
    samples_checked: int


@dataclass(frozen=True)
class CheckContext:
    payload: dict
    tol: Tolerances
    seed: int
    rng: SplitMix64
    samples: np.ndarray | None
    sample_cap: int | None

    def points(self, default_counts):
        if self.samples is not None:
            pts = self.samples
        else:
            pts = TorusChart(len(default_counts)).grid(default_counts)
        if self.sample_cap is not None:
            pts = pts[: self.sample_cap]
        return pts

    def count(self, default: int) -> int:
        if self.sample_cap is not None:
            return max(1, min(default, self.sample_cap))
        return default


@dataclass(frozen=True)
class Check:
    name: str
    kind: str
    anchor: str
    tolerance: float
    runner: Callable[[CheckContext], CheckResult]
    opt_in: bool = False


REGISTRY: dict[str, Check] = {}


def register(name: str, kind: str, anchor: str, tolerance: float,
             opt_in: bool = False):
    if not anchor:
        raise SchemaError("checks must carry a formula anchor")

    def deco(fn):
        REGISTRY[name] = Check(name, kind, anchor, tolerance, fn, opt_in)
        return fn

    return deco


def checks_for(kind: str, names=None) -> list[Check]:
    """Checks of one kind in registration order; explicit names may pull
    in opt-in checks and subselect."""
    if names is not None:
        out = []
        for name in names:
            if name not in REGISTRY:
                raise SchemaError(f"unknown check {name!r}")
            check = REGISTRY[name]
            if check.kind != kind:
                raise SchemaError(f"check {name!r} does not apply to kind {kind!r}")
            out.append(check)
        return out
    return [c for c in REGISTRY.values() if c.kind == kind and not c.opt_in]


def all_checks() -> list[Check]:
    return list(REGISTRY.values())


# ---------------------------------------------------------------------------
# payload builders (derive everything from the scenario seed)
# ---------------------------------------------------------------------------

def build_structure(payload: dict, n: int, seed: int) -> AlmostComplexField:
    spec = payload.get("structure", {"standard": True})
    if "standard" in spec:
        return AlmostComplexField.standard(n)
    if "conjugation" in spec:
        conf = spec["conjugation"]
        rng = SplitMix64(seed)
        a = TrigPolyField.random(
            2 * n, (2 * n, 2 * n), rng,
            max_degree=int(conf.get("degree", 2)),
            n_terms=int(conf.get("terms", 3)),
            amplitude=float(conf.get("amplitude", 1.0)),
        )
        return AlmostComplexField.conjugated(a, float(conf["epsilon"]))
    if "trig" in spec:
        return AlmostComplexField(TorusChart(2 * n),
                                  TrigPolyField.from_json_dict(spec["trig"]))
    raise SchemaError("unknown structure specification")


def build_manifold(payload: dict, seed: int) -> PointwiseACManifold:
    n = int(payload["n"])
    k = int(payload.get("k", 4 * n))
    emb_spec = payload.get("embedding", {"default_torus": True})
    if "default_torus" in emb_spec:
        g = default_torus_embedding(n)
    elif "trig" in emb_spec:
        g = TrigPolyField.from_json_dict(emb_spec["trig"])
    else:
        raise SchemaError("unknown embedding specification")
    return PointwiseACManifold(n, k, g, build_structure(payload, n, seed))


def build_graph_scenario(rng: SplitMix64, n: int = 1, big_n: int = 3,
                         amplitude: float = 0.8):
    """Random normalized chart + graph embedding + variation data; the
    chart constant is shifted so a(F(base)) = 0. Constant terms keep the
    variation fields nonzero at the base point."""
    chart = random_polynomial_chart(n, big_n, rng, amplitude=amplitude)
    g = random_crpoly(big_n - n, 1, n, rng, degree=2, amplitude=0.4)
    emb = GraphEmbedding(n, big_n, g)
    shift = chart.a_value(emb.f_value(emb.base))
    chart = DistributionChart(n, big_n, chart.amap.shift_constant(-shift))
    eta = random_crpoly(big_n - n, 1, n, rng, degree=2, amplitude=0.5)
    eta = eta + CRPolyMap.constant(n, rng.complex_matrix(big_n - n, 1, 0.4))
    v = random_crpoly(n, 1, n, rng, degree=2, amplitude=0.5)
    v = v + CRPolyMap.constant(n, rng.complex_matrix(n, 1, 0.4))
    return chart, emb, VariationData(eta, v)


def _graph_params(ctx: CheckContext):
    """Per-instance (n, N, amplitude) for random graph scenarios; absent
    payload entries vary the dimensions draw by draw within n <= 2,
    N <= 6."""
    n = ctx.payload.get("n")
    big_n = ctx.payload.get("N")
    if n is None:
        n = ctx.rng.integer(1, 2)
    else:
        n = int(n)
    if big_n is None:
        big_n = n + ctx.rng.integer(2, 6 - n)
    else:
        big_n = int(big_n)
    return n, big_n, float(ctx.payload.get("amplitude", 0.8))


def _local_structure(emb: GraphEmbedding, chart: DistributionChart):
    """Induced structure as a pointwise field on the realified chart."""
    n = emb.n

    def fn(x):
        return induced_jf(emb, chart, complexify_vector(x),
                          require_normalized=False)

    field = CallableMatrixField(2 * n, (2 * n, 2 * n), fn, h=1e-5)
    return SimpleNamespace(value=field.value, field=field)


def _relative(diff: float, scale: float) -> float:
    return diff / max(scale, 1e-12)


# ---------------------------------------------------------------------------
# universal checks
# ---------------------------------------------------------------------------

@register(
    "universal_dimension_tables", "universal",
    "dim Z(n,k) = 2k + 2(k^2 + n(k-n)); dim Zs(n,b,k) = 2bk(2bk+1) + 2n(2bk-n)",
    0.0,
)
def _check_dimension_tables(ctx: CheckContext) -> CheckResult:
    worst = 0
    table = {(1, 4): 46, (2, 8): 168, (1, 2): 14}
    for (n, k), expect in table.items():
        worst = max(worst, abs(dimension_universal(n, k) - expect))
    for n in (1, 2, 3):
        worst = max(worst, abs(dimension_universal(n, 4 * n) - (38 * n * n + 8 * n)))
    sym = {(1, 1, 3): 52, (1, 2, 3): 178, (2, 1, 5): 142}
    for (n, b, k), expect in sym.items():
        worst = max(worst, abs(dimension_symplectic(n, b, k) - expect))
    return CheckResult(float(worst), len(table) + 3 + len(sym))


@register(
    "universal_reconstruction", "universal",
    "J_f(x) = J_X(x) through the quotient T_z/(S' (+) Sigma'') at the built 5-tuple",
    1e-8,
)
def _check_reconstruction(ctx: CheckContext) -> CheckResult:
    m = build_manifold(ctx.payload, ctx.seed)
    pts = ctx.points(default_counts=[10] * (2 * m.n))
    worst = 0.0
    for x in pts:
        jf = induced_structure_at(x, m, ctx.tol)
        worst = max(worst, float(np.max(np.abs(jf - m.j.value(x)))))
    return CheckResult(worst, int(len(pts)))


@register(
    "universal_fiber_reality", "universal",
    "S'' = conj(S'), Sigma'' = conj(Sigma'), |sum p_I^2| / sum |p_I|^2 = 1",
    1e-9,
)
def _check_fiber_reality(ctx: CheckContext) -> CheckResult:
    m = build_manifold(ctx.payload, ctx.seed)
    pts = ctx.points(default_counts=[6] * (2 * m.n))
    wedge_cap = int(ctx.payload.get("reality_samples", 5))
    worst = 0.0
    for i, x in enumerate(pts):
        point = build_fiber(x, m, ctx.tol)
        point.validate(ctx.tol)
        if i < wedge_cap:
            worst = max(worst, 1.0 - plucker_reality_certificate(point, ctx.tol))
    return CheckResult(worst, int(len(pts)))


@register(
    "universal_versality", "universal",
    "rank_R dbar f = 2n and rank_R (u -> theta(dbar f ., u)) = 2n^2",
    1e-8,
)
def _check_versality(ctx: CheckContext) -> CheckResult:
    m = build_manifold(ctx.payload, ctx.seed)
    explicit = ctx.payload.get("versality_samples")
    if explicit is not None:
        pts = np.asarray(explicit, dtype=float)
    else:
        pts = ctx.points(default_counts=[3] * (2 * m.n))[:3]
    worst = 0.0
    for x in pts:
        rep = versality_check(x, m, tol=ctx.tol)
        worst = max(worst, float(rep["fiber_membership_residual"]))
        worst = max(worst, float(abs(rep["surj_rank"] - rep["target_rank"])))
        if not rep["inj"]:
            worst = max(worst, 1.0)
        if rep["sv_gap"] < 1e-6:
            worst = max(worst, 1.0)
    return CheckResult(worst, int(len(pts)))


@register(
    "universal_isotropy", "universal",
    "integrable J: theta(dbar f u, dbar f v) = 0 on the image subspace",
    1e-9, opt_in=True,
)
def _check_isotropy(ctx: CheckContext) -> CheckResult:
    m = build_manifold(ctx.payload, ctx.seed)
    pts = ctx.points(default_counts=[3] * (2 * m.n))[: ctx.count(3)]
    worst = 0.0
    for x in pts:
        point = build_fiber(x, m, ctx.tol)
        frame = ChartFrame(point, tol=ctx.tol)
        chart = universal_chart(point, tol=ctx.tol)
        jf = induced_structure_at(x, m, ctx.tol)
        dbar, _ = dbar_embedding(x, m, frame, jf, ctx.tol)
        sub = isotropy_subspace(dbar, chart.big_n, ctx.tol)
        ok, pairing = isotropy_test(torsion_at(chart, tol=ctx.tol), sub, m.n, ctx.tol)
        worst = max(worst, pairing if ok else max(pairing, 1.0))
    return CheckResult(worst, int(len(pts)))


@register(
    "universal_nijenhuis_flat", "universal",
    "constant J: N_{J_f} = 0 for the induced field",
    1e-8, opt_in=True,
)
def _check_nijenhuis_flat(ctx: CheckContext) -> CheckResult:
    m = build_manifold(ctx.payload, ctx.seed)
    jf_field = induced_structure_field(m, ctx.tol)
    probes = ctx.count(int(ctx.payload.get("probes", 5)))
    worst = 0.0
    for _ in range(probes):
        x = ctx.rng.reals(2 * m.n, 0.0, 2.0 * np.pi)
        zeta = ctx.rng.reals(2 * m.n)
        eta = ctx.rng.reals(2 * m.n)
        val = nijenhuis_direct(jf_field, x, zeta, eta)
        worst = max(worst, float(np.max(np.abs(val))))
    return CheckResult(worst, probes)


# ---------------------------------------------------------------------------
# induced / torsion checks
# ---------------------------------------------------------------------------

def _random_chart_draws(ctx: CheckContext, count: int):
    for _ in range(count):
        n = ctx.rng.integer(1, 2)
        big_n = n + ctx.rng.integer(2, 6 - n)
        yield random_polynomial_chart(n, big_n, ctx.rng, amplitude=0.8)


@register(
    "torsion_double_entry", "induced",
    "theta_ijk = (d_j a_ik - d_k a_ij)/2 agrees with FD frame brackets",
    1e-6,
)
def _check_torsion_double_entry(ctx: CheckContext) -> CheckResult:
    count = ctx.count(int(ctx.payload.get("charts", 10)))
    worst = 0.0
    for chart in _random_chart_draws(ctx, count):
        direct = torsion_at(chart, tol=ctx.tol)
        oracle = frame_bracket_oracle(chart)
        scale = max(direct.norm(), oracle.norm())
        worst = max(worst, _relative(
            float(np.max(np.abs(direct.theta - oracle.theta))), scale))
    return CheckResult(worst, count)


@register(
    "torsion_antisymmetry", "induced",
    "theta(., u, v) = -theta(., v, u) bitwise",
    0.0,
)
def _check_torsion_antisymmetry(ctx: CheckContext) -> CheckResult:
    count = ctx.count(int(ctx.payload.get("charts", 10)))
    worst = 0.0
    for chart in _random_chart_draws(ctx, count):
        theta = torsion_at(chart, tol=ctx.tol).theta
        worst = max(worst, float(np.max(
            np.abs(theta + np.transpose(theta, (0, 2, 1))), initial=0.0)))
    return CheckResult(worst, count)


@register(
    "nijenhuis_identity", "induced",
    "N_{J_f}(u, v) = 4 theta(dbar_f u, dbar_f v)",
    1e-4,
)
def _check_nijenhuis_identity(ctx: CheckContext) -> CheckResult:
    instances = ctx.count(int(ctx.payload.get("instances", 5)))
    pairs = int(ctx.payload.get("pairs", 25))
    worst = 0.0
    for _ in range(instances):
        chart, emb, _ = build_graph_scenario(ctx.rng, *_graph_params(ctx))
        struct = _local_structure(emb, chart)
        zp = emb.base
        x = realify_vector(zp)
        for _ in range(pairs):
            zeta = ctx.rng.reals(2 * emb.n)
            eta = ctx.rng.reals(2 * emb.n)
            via_theta = nijenhuis_via_torsion(emb, chart, zp, zeta, eta, ctx.tol)
            direct = nijenhuis_direct(struct, x, zeta, eta)
            scale = max(1.0, float(np.max(np.abs(direct))))
            worst = max(worst, _relative(
                float(np.max(np.abs(via_theta - direct))), scale))
    return CheckResult(worst, instances * pairs)


@register(
    "variation_formula", "induced",
    "dJ_f/dt = 2 J_f (f_*^{-1} theta(dbar f ., eta) + dbar_{J_f} v), FD ratio in [8,12]",
    1e-3,
)
def _check_variation_formula(ctx: CheckContext) -> CheckResult:
    instances = ctx.count(int(ctx.payload.get("instances", 3)))
    worst = 0.0
    for _ in range(instances):
        chart, emb, var = build_graph_scenario(ctx.rng, *_graph_params(ctx))
        zp = emb.base
        closed = variation_djf(emb, chart, var, zp, ctx.tol)
        errs = {}
        for t in (1e-3, 1e-4):
            fd = variation_fd_oracle(emb, chart, var, zp, t, ctx.tol)
            errs[t] = float(np.max(np.abs(fd - closed)))
        ratio = errs[1e-3] / max(errs[1e-4], 1e-15)
        # linear convergence: a decade of t divides the error by ~10;
        # the terminal (finest-step) error is the certified residual
        worst = max(worst, errs[1e-4])
        if not 8.0 <= ratio <= 12.0:
            worst = max(worst, 1.0)
    return CheckResult(worst, instances * 2)


@register(
    "variation_anticommutation", "induced",
    "J_f dJ_f + dJ_f J_f = 0 (derivative of J^2 = -Id)",
    1e-9,
)
def _check_variation_anticommutation(ctx: CheckContext) -> CheckResult:
    instances = ctx.count(int(ctx.payload.get("instances", 3)))
    worst = 0.0
    for _ in range(instances):
        chart, emb, var = build_graph_scenario(ctx.rng, *_graph_params(ctx))
        zp = emb.base
        jf = induced_jf(emb, chart, zp, ctx.tol)
        djf = variation_djf(emb, chart, var, zp, ctx.tol)
        worst = max(worst, float(np.max(np.abs(jf @ djf + djf @ jf))))
    return CheckResult(worst, instances)


@register(
    "foliation_rank_control", "induced",
    "theta = 0 (foliation) forces rank(u -> theta(dbar f ., u)) = 0",
    1e-6,
)
def _check_foliation_rank(ctx: CheckContext) -> CheckResult:
    # a = z1^2 (1, i/2): constant direction times one scalar, so the
    # frame brackets cancel exactly and the plane field integrates
    amap = PolynomialMatrixMap(3, 1, 2, {
        (0, 0): {(2, 0, 0): 1.0},
        (0, 1): {(2, 0, 0): 0.5j},
    })
    chart = DistributionChart(1, 3, amap)
    samples = [np.zeros(3, dtype=complex), np.array([0.2, 0.1j, -0.1 + 0.05j])]
    ok, torsion_worst = is_foliation(chart, samples, ctx.tol)
    worst = torsion_worst if ok else max(torsion_worst, 1.0)
    theta = torsion_at(chart, tol=ctx.tol)
    etas = ctx.rng.complex_matrix(2, 2, 1.0)
    rep = versality_rank_from_parts(theta, etas, rank_rtol=ctx.tol.rank_rtol)
    worst = max(worst, float(rep["surj_rank"]))
    return CheckResult(worst, len(samples))


@register(
    "pseudoholomorphic_rank_control", "induced",
    "dbar f = 0 (holomorphic graph) forces rank(u -> theta(dbar f ., u)) = 0",
    1e-8,
)
def _check_pseudoholomorphic_rank(ctx: CheckContext) -> CheckResult:
    n, big_n = 1, 3
    chart = random_polynomial_chart(n, big_n, ctx.rng, amplitude=0.8)
    # z-only monomials: the graph is a complex submanifold, so the
    # conjugate-linear differential vanishes identically
    entries = {}
    for i in range(big_n - n):
        cell = {}
        for p in (1, 2):
            coeff = complex(ctx.rng.uniform(-1, 1), ctx.rng.uniform(-1, 1)) * 0.4
            cell[((p,), (0,))] = coeff
        entries[(i, 0)] = cell
    g = CRPolyMap(n, big_n - n, 1, entries)
    emb = GraphEmbedding(n, big_n, g)
    shift = chart.a_value(emb.f_value(emb.base))
    chart = DistributionChart(n, big_n, chart.amap.shift_constant(-shift))
    zp = emb.base
    jf = induced_jf(emb, chart, zp, ctx.tol)
    etas, _ = dbar_f_fiber_coords(emb, chart, zp, jf, ctx.tol)
    worst = float(np.max(np.abs(dbar_f(emb, chart, zp, jf, ctx.tol))))
    theta = torsion_via_frames(chart, emb.f_value(zp))
    rep = versality_rank_from_parts(theta, etas, rank_rtol=ctx.tol.rank_rtol)
    # roundoff makes etas tiny but nonzero; count rank against the scale
    # the pairing would have for unit-size etas, not its own top value
    sv = rep["singular_values"]
    floor = max(float(theta.norm()), 1e-12)
    rank = int(np.sum(sv > ctx.tol.rank_rtol * floor))
    worst = max(worst, float(rank))
    return CheckResult(worst, 1)


# ---------------------------------------------------------------------------
# lvmb checks
# ---------------------------------------------------------------------------

def _lvmb_data(ctx: CheckContext) -> LvmbData:
    return LvmbData.from_json_dict(ctx.payload["data"])


@register(
    "lvmb_condition_i", "lvmb",
    "all pairs J1, J2 in E: int conv{l_j : J1} meets int conv{l_j : J2} (LP margin >= 1e-9)",
    0.5,
)
def _check_lvmb_condition_i(ctx: CheckContext) -> CheckResult:
    data = _lvmb_data(ctx)
    rep = check_condition_i(data, ctx.tol)
    expect = ctx.payload.get("expect", {}).get("condition_i")
    worst = 0.0
    if expect is not None and rep["ok"] != bool(expect):
        worst = 1.0
    if data.m == 1:
        poly = check_condition_i_polygon(data)
        for a, b in zip(rep["pairs"], poly["pairs"]):
            if a["overlap"] != b["overlap"]:
                worst = max(worst, 1.0)
    return CheckResult(worst, len(rep["pairs"]))


@register(
    "lvmb_condition_ii", "lvmb",
    "all J in E, k in 0..N: exists k' in J with (J \\ k') + k in E",
    0.5,
)
def _check_lvmb_condition_ii(ctx: CheckContext) -> CheckResult:
    data = _lvmb_data(ctx)
    rep = check_condition_ii(data)
    expect = ctx.payload.get("expect", {})
    worst = 0.0
    if "condition_ii" in expect and rep["ok"] != bool(expect["condition_ii"]):
        worst = 1.0
    if "counterexample" in expect and rep["counterexample"] != expect["counterexample"]:
        worst = 1.0
    return CheckResult(worst, len(data.family) * (data.big_n + 1))


@register(
    "lvmb_killing_brackets", "lvmb",
    "[zeta_j, zeta_l] = 0 for zeta_j = sum_k lam_jk z_k d/dz_k",
    1e-8,
)
def _check_lvmb_killing(ctx: CheckContext) -> CheckResult:
    data = _lvmb_data(ctx)
    kf = killing_fields(data)
    worst = 0.0
    checked = 0
    for j in range(data.m):
        for l in range(j, data.m):
            worst = max(worst, kf.bracket_exact(j, l))
            for _ in range(5):
                z = ctx.rng.complex_matrix(data.big_n + 1, 1, 1.0)[:, 0]
                worst = max(worst, float(np.max(np.abs(kf.bracket_fd(j, l, z)))))
                checked += 1
    return CheckResult(worst, checked)


@register(
    "lvmb_exchange_closure", "lvmb",
    "the single-exchange closure of E satisfies the exchange condition",
    0.5,
)
def _check_lvmb_closure(ctx: CheckContext) -> CheckResult:
    data = _lvmb_data(ctx)
    closed = exchange_closure(data)
    rep = check_condition_ii(closed)
    return CheckResult(0.0 if rep["ok"] else 1.0, len(closed.family))


# ---------------------------------------------------------------------------
# symplectic checks
# ---------------------------------------------------------------------------

def _symplectic_reports(ctx: CheckContext):
    omega = np.array([[0.0, 1.0], [-1.0, 0.0]])
    j0 = np.array([[0.0, -1.0], [1.0, 0.0]])
    gamma = np.block([
        [np.zeros((2, 2)), np.eye(2)],
        [-np.eye(2), np.zeros((2, 2))],
    ])
    embed = np.zeros((4, 2))
    embed[0, 0] = 1.0
    embed[2, 1] = 1.0
    reports = [symplectic_pointwise_model(
        omega, j0, {"gamma": gamma, "embed": embed}, ctx.tol)]
    draws = ctx.count(int(ctx.payload.get("draws", 3)))
    for trial in range(draws):
        n = 1 + trial % 2
        om, jx, gam, emb = random_compatible_symplectic(ctx.rng, n, 1 + trial % 2)
        reports.append(symplectic_pointwise_model(
            om, jx, {"gamma": gam, "embed": emb}, ctx.tol))
    return reports


@register(
    "symplectic_compatibility", "symplectic",
    "Jt^T Gt Jt = Gt and Jt^2 = -Id for Gt = (gamma (+) -gamma)/2",
    1e-10,
)
def _check_symplectic_compat(ctx: CheckContext) -> CheckResult:
    reports = _symplectic_reports(ctx)
    worst = max(max(r["max_residual_compatibility"], r["jsq_residual"])
                for r in reports)
    return CheckResult(float(worst), len(reports))


@register(
    "symplectic_pullback", "symplectic",
    "G*^T Gt G* = omega on the doubled diagonal embedding",
    1e-10,
)
def _check_symplectic_pullback(ctx: CheckContext) -> CheckResult:
    reports = _symplectic_reports(ctx)
    worst = max(r["max_residual_pullback"] for r in reports)
    return CheckResult(float(worst), len(reports))


@register(
    "symplectic_sign_flip_control", "symplectic",
    "the sign-flipped doubling (gamma (+) +gamma)/2 violates compatibility",
    0.5,
)
def _check_symplectic_control(ctx: CheckContext) -> CheckResult:
    reports = _symplectic_reports(ctx)
    min_swap = min(r["swap_residual"] for r in reports)
    return CheckResult(0.0 if min_swap > 1e-2 else 1.0, len(reports))


# ---------------------------------------------------------------------------
# fields checks
# ---------------------------------------------------------------------------

@register(
    "structure_squares_to_minus_id", "fields",
    "J(x)^2 = -Id pointwise",
    1e-9,
)
def _check_structure_squares(ctx: CheckContext) -> CheckResult:
    n = int(ctx.payload.get("n", 1))
    j = build_structure(ctx.payload, n, ctx.seed)
    pts = ctx.points(default_counts=[8] * (2 * n))
    eye = np.eye(2 * n)
    worst = 0.0
    for x in pts:
        jm = j.value(x)
        worst = max(worst, float(np.max(np.abs(jm @ jm + eye))))
    return CheckResult(worst, int(len(pts)))


@register(
    "nijenhuis_two_routes", "fields",
    "four-bracket N_J from exact partials = FD Lie-bracket evaluation",
    1e-6,
)
def _check_nijenhuis_two_routes(ctx: CheckContext) -> CheckResult:
    n = int(ctx.payload.get("n", 1))
    j = build_structure(ctx.payload, n, ctx.seed)
    probes = ctx.count(int(ctx.payload.get("probes", 10)))
    worst = 0.0
    for _ in range(probes):
        x = ctx.rng.reals(2 * n, 0.0, 2.0 * np.pi)
        zeta = ctx.rng.reals(2 * n)
        eta = ctx.rng.reals(2 * n)
        direct = nijenhuis_direct(j, x, zeta, eta)
        oracle = nijenhuis_fd_oracle(j, x, zeta, eta)
        scale = max(1.0, float(np.max(np.abs(direct))))
        worst = max(worst, _relative(float(np.max(np.abs(direct - oracle))), scale))
    return CheckResult(worst, probes)


@register(
    "nijenhuis_tensoriality", "fields",
    "N_J(phi u, psi v) = phi psi N_J(u, v) at the base point",
    1e-9,
)
def _check_tensoriality(ctx: CheckContext) -> CheckResult:
    n = int(ctx.payload.get("n", 1))
    j = build_structure(ctx.payload, n, ctx.seed)
    probes = ctx.count(int(ctx.payload.get("probes", 3)))
    d = 2 * n
    worst = 0.0
    for _ in range(probes):
        x = ctx.rng.reals(d, 0.0, 2.0 * np.pi)

        def modulator(axis, amp):
            freq = tuple(1 if i == axis else 0 for i in range(d))
            raw = TrigPolyField(d, (1, 1), {
                freq: (np.array([[amp]]), np.array([[0.0]]))
            })
            offset = 1.0 - raw.value(x)[0, 0]
            return raw + TrigPolyField.constant(d, np.array([[offset]]))

        phi = modulator(0, 0.7)
        psi = modulator(d - 1, 0.4)
        zeta = ctx.rng.reals(d)
        eta = ctx.rng.reals(d)
        _, _, dev = verify_tensoriality(j, x, zeta, eta, phi, psi)
        worst = max(worst, float(dev))
    return CheckResult(worst, probes)
