"""Induced structures on graphs, their variation, and Nijenhuis identity.

Every closed form here is checked against an independent route: the
quotient construction for J_F, deformed-graph finite differences for the
variation, and the four-bracket Nijenhuis evaluation on the realified
chart for the torsion identity.
"""
from types import SimpleNamespace

import numpy as np
import pytest

from acs_verify.cxlinalg import complexify_vector, realify_vector, standard_structure
from acs_verify.distribution import (
    DistributionChart,
    PolynomialMatrixMap,
    random_polynomial_chart,
)
from acs_verify.errors import NotNormalized, NotTransverse
from acs_verify.fields import CallableMatrixField, nijenhuis_direct
from acs_verify.induced import (
    CRPolyMap,
    GraphEmbedding,
    VariationData,
    compose_graph,
    dbar_f,
    dbar_f_fiber_coords,
    deformed_embedding,
    embedding_from_json,
    embedding_to_json,
    induced_jf,
    induced_jf_quotient,
    nijenhuis_via_torsion,
    pullback_quotient,
    random_crpoly,
    transversality_report,
    variation_djf,
    variation_fd_oracle,
)
from acs_verify.rng import SplitMix64


def poly_chart(n, big_n, assignments):
    entries = {}
    for (i, j), (powers, coeff) in assignments.items():
        entries[(i, j)] = {tuple(powers): coeff}
    return DistributionChart(n, big_n, PolynomialMatrixMap(big_n, n, big_n - n, entries))


def column(n_vars, assignments):
    """CRPolyMap column: assignments[i] = list of (pz, pzb, coeff)."""
    entries = {}
    for i, terms in assignments.items():
        cell = {}
        for pz, pzb, coeff in terms:
            cell[(tuple(pz), tuple(pzb))] = coeff
        entries[(i, 0)] = cell
    rows = max(assignments) + 1 if assignments else 1
    return CRPolyMap(n_vars, rows, 1, entries)


def graph_with(n, big_n, assignments):
    g = column(n, assignments) if assignments else CRPolyMap.constant(
        n, np.zeros((big_n - n, 1))
    )
    if g.rows != big_n - n:
        g = CRPolyMap(n, big_n - n, 1, g.entries)
    return GraphEmbedding(n, big_n, g)


def test_crpoly_calculus():
    # scalar map z^2 conj(z): dz -> 2 z conj(z), dzbar -> z^2
    f = CRPolyMap(1, 1, 1, {(0, 0): {((2,), (1,)): 1.0}})
    z = np.array([0.4 + 0.3j])
    assert abs(f.value(z)[0, 0] - z[0] ** 2 * z[0].conj()) < 1e-15
    assert abs(f.holo_partial(0).value(z)[0, 0] - 2 * z[0] * z[0].conj()) < 1e-15
    assert abs(f.anti_partial(0).value(z)[0, 0] - z[0] ** 2) < 1e-15
    conj = f.conjugate()
    assert abs(conj.value(z)[0, 0] - (z[0] ** 2 * z[0].conj()).conjugate()) < 1e-15


def test_crpoly_matmul_matches_numeric_product():
    rng = SplitMix64(71)
    a = random_crpoly(2, 3, 2, rng)
    b = random_crpoly(3, 2, 2, rng)
    prod = a.matmul(b)
    for _ in range(4):
        z = 0.5 * rng.complex_vector(2)
        assert np.max(np.abs(prod.value(z) - a.value(z) @ b.value(z))) < 1e-12


def test_compose_graph_exact():
    rng = SplitMix64(73)
    chart = random_polynomial_chart(1, 3, rng)
    g = random_crpoly(2, 1, 1, rng, degree=2)
    pulled = compose_graph(chart.amap, g)
    for _ in range(5):
        zp = 0.3 * rng.complex_vector(1)
        direct = chart.amap.value(np.concatenate([zp, g.value_vector(zp)]))
        assert np.max(np.abs(pulled.value(zp) - direct)) < 1e-13


def test_jf_zero_chart_is_standard():
    emb = graph_with(1, 3, {0: [((0,), (1,), 0.4)], 1: [((2,), (0,), 0.3)]})
    chart = poly_chart(1, 3, {})
    for zp in [np.zeros(1), np.array([0.2 - 0.1j])]:
        jf = induced_jf(emb, chart, zp)
        assert np.max(np.abs(jf - standard_structure(1))) < 1e-12
        assert np.max(np.abs(induced_jf_quotient(emb, chart, zp) - jf)) < 1e-12


def test_jf_constant_graph_is_standard():
    # dbar g = 0 kills the correction even over a twisted chart
    emb = graph_with(1, 3, {})
    chart = poly_chart(1, 3, {(0, 0): ((0, 0, 1), 1.0)})
    zp = np.array([0.25 + 0.2j])
    jf = induced_jf(emb, chart, zp)
    assert np.max(np.abs(jf - standard_structure(1))) < 1e-12


def test_jf_literal_example_double_entry():
    # g = (0.3 conj z', 0) keeps a(F) = 0 along the graph: J_F stays i
    chart = poly_chart(1, 3, {(0, 0): ((0, 0, 1), 1.0)})
    emb = graph_with(1, 3, {0: [((0,), (1,), 0.3)]})
    zp = np.array([0.2 + 0.1j])
    jf = induced_jf(emb, chart, zp)
    assert np.max(np.abs(jf - induced_jf_quotient(emb, chart, zp))) < 1e-8
    assert np.max(np.abs(jf - standard_structure(1))) < 1e-12

    # mixing the components makes the correction term bite
    emb2 = graph_with(1, 3, {0: [((0,), (1,), 0.3)], 1: [((0,), (1,), 0.2)]})
    jf2 = induced_jf(emb2, chart, zp)
    assert np.max(np.abs(jf2 - standard_structure(1))) > 1e-3
    assert np.max(np.abs(jf2 - induced_jf_quotient(emb2, chart, zp))) < 1e-10
    assert np.max(np.abs(jf2 @ jf2 + np.eye(2))) < 1e-10
    # at the centered base point the structure is standard again
    assert np.max(np.abs(induced_jf(emb2, chart, np.zeros(1))
                         - standard_structure(1))) < 1e-12


def test_jf_double_entry_random_scenarios():
    rng = SplitMix64(83)
    for _ in range(3):
        n = rng.integer(1, 2)
        big_n = rng.integer(n + 1, 5)
        chart = random_polynomial_chart(n, big_n, rng, amplitude=0.5)
        g = random_crpoly(big_n - n, 1, n, rng, degree=2, amplitude=0.3)
        emb = GraphEmbedding(n, big_n, g)
        base_val = chart.a_value(emb.f_value(emb.base))
        if np.max(np.abs(base_val)) > 1e-9:
            # normalization depends on g(0); re-anchor the chart exactly
            chart = DistributionChart(
                n, big_n, chart.amap.shift_constant(-base_val)
            )
        for _ in range(3):
            zp = 0.1 * rng.complex_vector(n)
            jf = induced_jf(emb, chart, zp)
            assert np.max(np.abs(jf - induced_jf_quotient(emb, chart, zp))) < 1e-8
            assert np.max(np.abs(jf @ jf + np.eye(2 * n))) < 1e-8


def test_not_normalized_guard():
    chart = poly_chart(1, 3, {(0, 0): ((0, 0, 0), 0.5)})
    emb = graph_with(1, 3, {})
    with pytest.raises(NotNormalized):
        induced_jf(emb, chart, np.zeros(1))


def test_dbar_f_holomorphic_graph_vanishes():
    chart = poly_chart(1, 3, {(0, 0): ((0, 0, 1), 1.0)})
    emb = graph_with(1, 3, {0: [((2,), (0,), 0.4)], 1: [((1,), (0,), -0.2j)]})
    for zp in [np.zeros(1), np.array([0.2 - 0.15j])]:
        mat = dbar_f(emb, chart, zp)
        assert np.max(np.abs(mat)) < 1e-12


def test_dbar_f_antiholomorphic_rank_and_value():
    chart = poly_chart(1, 3, {(0, 0): ((0, 0, 1), 1.0)})
    emb = graph_with(1, 3, {0: [((0,), (1,), 0.3)], 1: [((0,), (1,), 0.2)]})
    mat = dbar_f(emb, chart, np.zeros(1))
    assert np.linalg.matrix_rank(mat, tol=1e-10) == 2
    # at the base point dbar F(zeta) = (0, dbar g(zeta))
    for r in range(2):
        zeta = complexify_vector(np.eye(2)[:, r])
        expected = realify_vector(
            np.concatenate([[0.0], emb.dbar_g_matrix(np.zeros(1)) @ zeta.conj()])
        )
        assert np.max(np.abs(mat[:, r] - expected)) < 1e-12


def test_dbar_image_in_fiber_seed13():
    rng = SplitMix64(13)
    chart = random_polynomial_chart(2, 5, rng, amplitude=0.6)
    g = random_crpoly(3, 1, 2, rng, degree=2, amplitude=0.4)
    emb = GraphEmbedding(2, 5, g)
    shift = chart.a_value(emb.f_value(emb.base))
    chart = DistributionChart(2, 5, chart.amap.shift_constant(-shift))
    for _ in range(5):
        zp = 0.1 * rng.complex_vector(2)
        _, residual = dbar_f_fiber_coords(emb, chart, zp)
        assert residual < 1e-8


def scenario_seed(seed, n=1, big_n=3):
    # constant terms keep eta and v nonzero at the base point, where the
    # closed-form variation lives; random_crpoly alone vanishes there
    rng = SplitMix64(seed)
    chart = random_polynomial_chart(n, big_n, rng, amplitude=0.8)
    g = random_crpoly(big_n - n, 1, n, rng, degree=2, amplitude=0.4)
    emb = GraphEmbedding(n, big_n, g)
    shift = chart.a_value(emb.f_value(emb.base))
    chart = DistributionChart(n, big_n, chart.amap.shift_constant(-shift))
    eta = random_crpoly(big_n - n, 1, n, rng, degree=2, amplitude=0.5)
    eta = eta + CRPolyMap.constant(n, rng.complex_matrix(big_n - n, 1, 0.4))
    v = random_crpoly(n, 1, n, rng, degree=2, amplitude=0.5)
    v = v + CRPolyMap.constant(n, rng.complex_matrix(n, 1, 0.4))
    return chart, emb, VariationData(eta, v), rng


def test_variation_zero_data_is_zero():
    chart = poly_chart(1, 3, {})
    emb = graph_with(1, 3, {0: [((0,), (1,), 0.4)]})
    eta = column(1, {0: [((1,), (0,), 0.3)], 1: [((0,), (1,), 0.2)]})
    v = CRPolyMap.constant(1, np.zeros((1, 1)))
    djf = variation_djf(emb, chart, VariationData(eta, v), np.zeros(1))
    assert np.max(np.abs(djf)) < 1e-13
    fd = variation_fd_oracle(emb, chart, VariationData(eta, v), np.zeros(1), 1e-3)
    assert np.max(np.abs(fd)) < 1e-9


def test_variation_reparametrization_only():
    chart, emb, var, _ = scenario_seed(59)
    zero_eta = CRPolyMap.constant(1, np.zeros((2, 1)))
    var_v = VariationData(zero_eta, var.v)
    zp = emb.base
    closed = variation_djf(emb, chart, var_v, zp)
    jf = induced_jf(emb, chart, zp)
    assert np.max(np.abs(jf @ closed + closed @ jf)) < 1e-9
    errs = {}
    for t in (1e-3, 1e-4):
        fd = variation_fd_oracle(emb, chart, var_v, zp, t)
        errs[t] = np.max(np.abs(fd - closed))
    assert errs[1e-3] < 1e-3
    assert 7.0 < errs[1e-3] / errs[1e-4] < 13.0


def test_variation_full_seed17():
    chart, emb, var, _ = scenario_seed(17)
    zp = emb.base
    closed = variation_djf(emb, chart, var, zp)
    jf = induced_jf(emb, chart, zp)
    assert np.max(np.abs(jf @ closed + closed @ jf)) < 1e-9
    errs = []
    steps = (1e-3, 1e-4)
    for t in steps:
        fd = variation_fd_oracle(emb, chart, var, zp, t)
        errs.append(np.max(np.abs(fd - closed)))
    assert errs[0] < 1e-3
    slope = (np.log10(errs[0]) - np.log10(errs[1])) / (
        np.log10(steps[0]) - np.log10(steps[1])
    )
    assert slope > 0.9, f"convergence slope {slope:.3f}"


def test_variation_transport_term_is_load_bearing():
    # drop the -J dJ_f(v)/2 transport piece from the conjugate-linear
    # operator and the closed form stops matching the finite difference
    chart = DistributionChart(1, 3, PolynomialMatrixMap(3, 1, 2, {
        (0, 0): {(1, 0, 0): 0.7, (0, 1, 0): 0.3},
        (0, 1): {(0, 0, 1): 0.4j, (2, 0, 0): 0.2},
    }))
    g = column(1, {0: [((0,), (1,), 0.5), ((2,), (0,), 0.3)],
                   1: [((0,), (1,), -0.2j), ((1,), (1,), 0.25)]})
    emb = GraphEmbedding(1, 3, g)
    eta = column(1, {0: [((0,), (0,), 0.3 - 0.2j), ((1,), (0,), 0.15)],
                     1: [((0,), (0,), 0.1 + 0.4j)]})
    v = column(1, {0: [((0,), (0,), 0.25 + 0.15j), ((0,), (1,), 0.2)]})
    var = VariationData(eta, v)
    zp = emb.base
    closed = variation_djf(emb, chart, var, zp)
    # reconstruct the transport piece and strip it off
    jf = induced_jf(emb, chart, zp)
    pg = emb._pg.value(zp)
    qg = emb._qg.value(zp)
    jac = chart.a_jacobian(emb.f_value(zp))
    v0 = v.value_vector(zp)
    df_v0 = np.concatenate([v0, pg @ v0 + qg @ v0.conj()])
    da_v0 = np.einsum("icb,b->ic", jac, df_v0)
    djf_v = np.zeros((2, 2))
    for r in range(2):
        zeta = complexify_vector(np.eye(2)[:, r])
        djf_v[:, r] = -2.0 * pullback_quotient(
            emb, chart, zp, 1j * (da_v0 @ (qg @ zeta.conj()))
        )
    without_transport = closed - 2.0 * jf @ (-0.5 * jf @ djf_v)
    assert np.max(np.abs(djf_v)) > 0.05
    errs = []
    for t in (1e-3, 1e-4):
        fd = variation_fd_oracle(emb, chart, var, zp, t)
        errs.append(np.max(np.abs(fd - closed)))
        # truncated operator misses by an amount that does not shrink
        assert np.max(np.abs(fd - without_transport)) > 0.01
    assert errs[0] < 1e-3
    assert 7.0 < errs[0] / errs[1] < 13.0


def local_structure(emb, chart):
    """Duck-typed field x -> J_F for the realified chart, FD partials."""
    n = emb.n

    def fn(x):
        return induced_jf(
            emb, chart, complexify_vector(x), require_normalized=False
        )

    field = CallableMatrixField(2 * n, (2 * n, 2 * n), fn, h=1e-5)
    return SimpleNamespace(value=field.value, field=field)


def test_nijenhuis_identity_seed19():
    chart, emb, _, rng = scenario_seed(19)
    struct = local_structure(emb, chart)
    for zp in [np.array([0.0 + 0.0j]), np.array([0.08 - 0.05j])]:
        x = realify_vector(zp)
        for _ in range(12):
            zeta = rng.reals(2)
            eta = rng.reals(2)
            via_theta = nijenhuis_via_torsion(emb, chart, zp, zeta, eta)
            direct = nijenhuis_direct(struct, x, zeta, eta)
            scale = max(1.0, float(np.max(np.abs(direct))))
            assert np.max(np.abs(via_theta - direct)) / scale < 1e-4


def test_nijenhuis_vanishes_for_integrable_cases():
    rng = SplitMix64(61)
    # holomorphic graph: dbar f = 0, so both routes must return zero
    chart = poly_chart(1, 3, {(0, 0): ((0, 0, 1), 1.0)})
    emb = graph_with(1, 3, {0: [((2,), (0,), 0.4)]})
    zp = np.array([0.1 + 0.1j])
    out = nijenhuis_via_torsion(emb, chart, zp, rng.reals(2), rng.reals(2))
    assert np.max(np.abs(out)) < 1e-12

    # constant-direction foliation: theta = 0 but J_F is a nonconstant
    # field; its direct Nijenhuis tensor must vanish too
    foliation = poly_chart(
        1, 3, {(0, 0): ((2, 0, 0), 1.0), (0, 1): ((2, 0, 0), 0.5j)}
    )
    emb2 = graph_with(1, 3, {0: [((0,), (1,), 0.3)], 1: [((0,), (1,), 0.2)]})
    out2 = nijenhuis_via_torsion(emb2, foliation, zp, rng.reals(2), rng.reals(2))
    assert np.max(np.abs(out2)) < 1e-12
    struct = local_structure(emb2, foliation)
    direct = nijenhuis_direct(struct, realify_vector(zp), rng.reals(2), rng.reals(2))
    assert np.max(np.abs(direct)) < 1e-6


def test_transversality_report():
    # clean split: horizontal graph against vertical fiber
    emb = graph_with(1, 2, {})
    chart = poly_chart(1, 2, {})
    report = transversality_report(emb, chart, [np.zeros(1), np.array([0.2j])])
    assert report["all_transverse"]
    assert abs(report["min_sigma"] - 1.0) < 1e-12

    # constructed tangency: a = 4 z_1 with g = conj(z') degenerates at 0.25
    chart2 = poly_chart(1, 2, {(0, 0): ((1, 0), 4.0)})
    emb2 = graph_with(1, 2, {0: [((0,), (1,), 1.0)]})
    report2 = transversality_report(
        emb2, chart2, [np.zeros(1), np.array([0.25 + 0j])]
    )
    assert report2["per_point"][0]["transverse"]
    assert not report2["per_point"][1]["transverse"]
    assert not report2["all_transverse"]
    with pytest.raises(NotTransverse):
        induced_jf(emb2, chart2, np.array([0.25 + 0j]), require_normalized=False)


def test_deformed_embedding_at_zero_t_is_identity():
    chart, emb, var, rng = scenario_seed(67)
    emb0, vtilde = deformed_embedding(emb, chart, var, 0.0)
    zp = 0.1 * rng.complex_vector(1)
    assert np.max(np.abs(emb0.g.value(zp) - emb.g.value(zp))) < 1e-15
    # vtilde = v + a(F) eta, and a(F(base)) = 0 by normalization
    assert np.max(np.abs(
        vtilde.value_vector(emb.base) - var.v.value_vector(emb.base)
    )) < 1e-12


def test_embedding_serialization_roundtrip():
    rng = SplitMix64(79)
    g = random_crpoly(2, 1, 1, rng, degree=2)
    emb = GraphEmbedding(1, 3, g, base=np.array([0.1 - 0.05j]))
    data = embedding_to_json(emb)
    clone = embedding_from_json(data)
    zp = np.array([0.2 + 0.1j])
    assert np.array_equal(clone.f_value(zp), emb.f_value(zp))
    assert embedding_to_json(clone) == data
