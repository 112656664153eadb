"""Structures induced on graph submanifolds transverse to a distribution.

A submanifold M = {z'' = g(z')} of chart C^N meets a codimension-n
distribution D transversally; the quotient identification T M = T Z / D
then drags multiplication by i back to an almost complex structure J_F
on the z'-chart. This module computes J_F two independent ways, the
conjugate-linear differential dbar f, the first variation of J_f under a
deformation of the embedding, and the Nijenhuis tensor of J_F through
the torsion of D.

g and all deformation data are polynomials in (z', conj z'), so every
derivative used by the closed-form routes is exact; the finite
difference oracles re-run the geometric construction on deformed data
and never reuse the closed forms.
"""
from __future__ import annotations

import numpy as np

from .config import DEFAULT, Tolerances
from .cxlinalg import complexify_vector, realify_basis, realify_vector, standard_structure
from .distribution import (
    DistributionChart,
    PolynomialMatrixMap,
    TorsionTensor,
    torsion_via_frames,
)
from .errors import (
    DimensionMismatch,
    NotNormalized,
    NotTransverse,
    ShapeMismatch,
)
from .rng import SplitMix64


# ---------------------------------------------------------------------------
# polynomials in (z, conj z)
# ---------------------------------------------------------------------------

def _term_mult(p: dict, q: dict) -> dict:
    out: dict = {}
    for (pa, pb), pc in p.items():
        for (qa, qb), qc in q.items():
            key = (
                tuple(x + y for x, y in zip(pa, qa)),
                tuple(x + y for x, y in zip(pb, qb)),
            )
            out[key] = out.get(key, 0j) + pc * qc
    return out


class CRPolyMap:
    """Matrix of polynomials in z and conj(z) over C^n.

    entries[(i, j)] maps a pair (z-powers, conj-powers) to a complex
    coefficient. Closed under +, scalar multiple, matrix product,
    conjugation and the Wirtinger derivatives, all of which are exact.
    """

    def __init__(self, n_vars: int, rows: int, cols: int, entries: dict):
        self.n_vars = int(n_vars)
        self.rows = int(rows)
        self.cols = int(cols)
        self.entries: dict = {}
        for (i, j), terms in entries.items():
            if not (0 <= i < rows and 0 <= j < cols):
                raise ShapeMismatch(f"entry index ({i}, {j}) out of range")
            cell = self.entries.setdefault((i, j), {})
            for (za, zb), coeff in terms.items():
                if len(za) != n_vars or len(zb) != n_vars:
                    raise DimensionMismatch("exponent length must equal n_vars")
                key = (tuple(int(p) for p in za), tuple(int(p) for p in zb))
                val = cell.get(key, 0j) + complex(coeff)
                if val == 0:
                    cell.pop(key, None)
                else:
                    cell[key] = val

    @classmethod
    def constant(cls, n_vars: int, array) -> "CRPolyMap":
        array = np.atleast_2d(np.asarray(array, dtype=complex))
        zero = (tuple([0] * n_vars), tuple([0] * n_vars))
        entries = {}
        for i in range(array.shape[0]):
            for j in range(array.shape[1]):
                if array[i, j] != 0:
                    entries[(i, j)] = {zero: array[i, j]}
        return cls(n_vars, array.shape[0], array.shape[1], entries)

    def value(self, z) -> np.ndarray:
        z = np.asarray(z, dtype=complex).reshape(-1)
        zc = z.conj()
        out = np.zeros((self.rows, self.cols), dtype=complex)
        for (i, j), terms in self.entries.items():
            acc = 0j
            for (za, zb), coeff in terms.items():
                term = coeff
                for var, p in enumerate(za):
                    if p:
                        term *= z[var] ** p
                for var, p in enumerate(zb):
                    if p:
                        term *= zc[var] ** p
                acc += term
            out[i, j] = acc
        return out

    def value_vector(self, z) -> np.ndarray:
        if self.cols != 1:
            raise ShapeMismatch("value_vector needs a column map")
        return self.value(z)[:, 0]

    def conjugate(self) -> "CRPolyMap":
        entries = {}
        for key, terms in self.entries.items():
            entries[key] = {(zb, za): c.conjugate() for (za, zb), c in terms.items()}
        return CRPolyMap(self.n_vars, self.rows, self.cols, entries)

    def holo_partial(self, var: int) -> "CRPolyMap":
        entries: dict = {}
        for key, terms in self.entries.items():
            cell: dict = {}
            for (za, zb), coeff in terms.items():
                if za[var] == 0:
                    continue
                na = list(za)
                na[var] -= 1
                k = (tuple(na), zb)
                cell[k] = cell.get(k, 0j) + coeff * za[var]
            if cell:
                entries[key] = cell
        return CRPolyMap(self.n_vars, self.rows, self.cols, entries)

    def anti_partial(self, var: int) -> "CRPolyMap":
        entries: dict = {}
        for key, terms in self.entries.items():
            cell: dict = {}
            for (za, zb), coeff in terms.items():
                if zb[var] == 0:
                    continue
                nb = list(zb)
                nb[var] -= 1
                k = (za, tuple(nb))
                cell[k] = cell.get(k, 0j) + coeff * zb[var]
            if cell:
                entries[key] = cell
        return CRPolyMap(self.n_vars, self.rows, self.cols, entries)

    def holo_jacobian_map(self) -> "CRPolyMap":
        """For a column map, the (rows x n_vars) matrix of dz derivatives."""
        if self.cols != 1:
            raise ShapeMismatch("jacobian map needs a column map")
        entries: dict = {}
        for var in range(self.n_vars):
            part = self.holo_partial(var)
            for (i, _), terms in part.entries.items():
                entries[(i, var)] = dict(terms)
        return CRPolyMap(self.n_vars, self.rows, self.n_vars, entries)

    def anti_jacobian_map(self) -> "CRPolyMap":
        if self.cols != 1:
            raise ShapeMismatch("jacobian map needs a column map")
        entries: dict = {}
        for var in range(self.n_vars):
            part = self.anti_partial(var)
            for (i, _), terms in part.entries.items():
                entries[(i, var)] = dict(terms)
        return CRPolyMap(self.n_vars, self.rows, self.n_vars, entries)

    def __add__(self, other: "CRPolyMap") -> "CRPolyMap":
        if (self.rows, self.cols) != (other.rows, other.cols):
            raise ShapeMismatch("shapes differ")
        entries = {k: dict(v) for k, v in self.entries.items()}
        for key, terms in other.entries.items():
            cell = entries.setdefault(key, {})
            for t, c in terms.items():
                cell[t] = cell.get(t, 0j) + c
        return CRPolyMap(self.n_vars, self.rows, self.cols, entries)

    def scale(self, c) -> "CRPolyMap":
        entries = {
            key: {t: complex(c) * v for t, v in terms.items()}
            for key, terms in self.entries.items()
        }
        return CRPolyMap(self.n_vars, self.rows, self.cols, entries)

    def __sub__(self, other: "CRPolyMap") -> "CRPolyMap":
        return self + other.scale(-1.0)

    def matmul(self, other: "CRPolyMap") -> "CRPolyMap":
        if self.cols != other.rows:
            raise ShapeMismatch("inner dimensions differ")
        entries: dict = {}
        for (i, j), left in self.entries.items():
            for k in range(other.cols):
                right = other.entries.get((j, k))
                if not right:
                    continue
                cell = entries.setdefault((i, k), {})
                for t, c in _term_mult(left, right).items():
                    val = cell.get(t, 0j) + c
                    if val == 0:
                        cell.pop(t, None)
                    else:
                        cell[t] = val
        return CRPolyMap(self.n_vars, self.rows, other.cols, entries)

    def to_json_terms(self) -> list:
        out = []
        for (i, j) in sorted(self.entries):
            for (za, zb) in sorted(self.entries[(i, j)]):
                c = self.entries[(i, j)][(za, zb)]
                out.append(
                    {
                        "i": i,
                        "j": j,
                        "pz": list(za),
                        "pzb": list(zb),
                        "coeff": [c.real, c.imag],
                    }
                )
        return out

    @classmethod
    def from_json_terms(cls, n_vars, rows, cols, terms) -> "CRPolyMap":
        entries: dict = {}
        for t in terms:
            cell = entries.setdefault((int(t["i"]), int(t["j"])), {})
            key = (tuple(int(p) for p in t["pz"]), tuple(int(p) for p in t["pzb"]))
            cell[key] = cell.get(key, 0j) + complex(t["coeff"][0], t["coeff"][1])
        return cls(n_vars, rows, cols, entries)


def compose_graph(poly: PolynomialMatrixMap, g: CRPolyMap) -> CRPolyMap:
    """Exact pullback of a holomorphic polynomial map through z = (w, g(w)).

    poly lives on C^N with N = n + rows(g); the result is a CRPolyMap on
    C^n because g may involve conj(w).
    """
    n = g.n_vars
    m = g.rows
    if poly.n_vars != n + m:
        raise DimensionMismatch("variable counts do not match the graph split")
    zero = (tuple([0] * n), tuple([0] * n))
    g_scalar = [g.entries.get((l, 0), {}) for l in range(m)]
    entries: dict = {}
    for (i, j), mono in poly.entries.items():
        cell = entries.setdefault((i, j), {})
        for powers, coeff in mono.items():
            base = (tuple(powers[:n]), tuple([0] * n))
            prod = {base: complex(coeff)}
            for l in range(m):
                for _ in range(powers[n + l]):
                    prod = _term_mult(prod, g_scalar[l])
            for key, val in prod.items():
                acc = cell.get(key, 0j) + val
                if acc == 0:
                    cell.pop(key, None)
                else:
                    cell[key] = acc
    return CRPolyMap(n, poly.rows, poly.cols, entries)


def random_crpoly(
    rows: int,
    cols: int,
    n_vars: int,
    rng: SplitMix64,
    degree: int = 2,
    terms_per_entry: int = 2,
    amplitude: float = 1.0,
) -> CRPolyMap:
    entries: dict = {}
    for i in range(rows):
        for j in range(cols):
            cell: dict = {}
            for _ in range(terms_per_entry):
                deg = rng.integer(1, degree)
                za, zb = [0] * n_vars, [0] * n_vars
                for _ in range(deg):
                    if rng.integer(0, 1):
                        za[rng.integer(0, n_vars - 1)] += 1
                    else:
                        zb[rng.integer(0, n_vars - 1)] += 1
                key = (tuple(za), tuple(zb))
                coeff = complex(rng.uniform(-1, 1), rng.uniform(-1, 1)) * amplitude
                cell[key] = cell.get(key, 0j) + coeff
            entries[(i, j)] = cell
    return CRPolyMap(n_vars, rows, cols, entries)


def _real_linear(p: np.ndarray, q: np.ndarray) -> np.ndarray:
    """Realified matrix of the map zeta -> P zeta + Q conj(zeta)."""
    p = np.asarray(p, dtype=complex)
    q = np.asarray(q, dtype=complex)
    return np.block(
        [
            [(p + q).real, -(p - q).imag],
            [(p + q).imag, (p - q).real],
        ]
    )


# ---------------------------------------------------------------------------
# graph embeddings
# ---------------------------------------------------------------------------

class GraphEmbedding:
    """M = {z'' = g(z')} with g a CRPolyMap column of height N - n."""

    def __init__(self, n: int, big_n: int, g: CRPolyMap, base=None):
        if g.rows != big_n - n or g.cols != 1 or g.n_vars != n:
            raise ShapeMismatch("g must map C^n to C^{N-n}")
        self.n = n
        self.big_n = big_n
        self.g = g
        self.base = (
            np.zeros(n, dtype=complex)
            if base is None
            else np.asarray(base, dtype=complex).reshape(-1)
        )
        if self.base.shape[0] != n:
            raise DimensionMismatch("base point must live in C^n")
        self._pg = g.holo_jacobian_map()
        self._qg = g.anti_jacobian_map()

    def f_value(self, zp) -> np.ndarray:
        zp = np.asarray(zp, dtype=complex).reshape(-1)
        return np.concatenate([zp, self.g.value_vector(zp)])

    def df_real(self, zp) -> np.ndarray:
        """Realified differential of F = (id, g), shape (2N, 2n)."""
        pg = self._pg.value(zp)
        qg = self._qg.value(zp)
        eye = np.eye(self.n, dtype=complex)
        zero = np.zeros((self.n, self.n), dtype=complex)
        p = np.concatenate([eye, pg], axis=0)
        q = np.concatenate([zero, qg], axis=0)
        return _real_linear(p, q)

    def dbar_g_matrix(self, zp) -> np.ndarray:
        """Conjugate-linear part of dg: maps zeta to Q(z') conj(zeta)."""
        return self._qg.value(zp)


def fiber_real_basis(chart: DistributionChart, z) -> np.ndarray:
    a = chart.a_value(z)
    cols = np.concatenate(
        [a, np.eye(chart.fiber_dim, dtype=complex)], axis=0
    )
    return realify_basis(cols)


def _joint_solve(emb: GraphEmbedding, chart: DistributionChart, zp, rhs,
                 tol: Tolerances):
    """Solve [dF | fiber-basis] x = rhs; first 2n rows of x are the chart
    component of the projection along the fiber."""
    df = emb.df_real(zp)
    fiber = fiber_real_basis(chart, emb.f_value(zp))
    joint = np.concatenate([df, fiber], axis=1)
    s = np.linalg.svd(joint, compute_uv=False)
    if s[-1] <= tol.rank_rtol * s[0]:
        raise NotTransverse(
            f"graph and fiber fail to span the chart (sigma_min={s[-1]:.3e})"
        )
    return np.linalg.solve(joint, rhs)


def _check_normalized(emb: GraphEmbedding, chart: DistributionChart,
                      tol: Tolerances, zp=None):
    if zp is None:
        zp = emb.base
    a0 = chart.a_value(emb.f_value(zp))
    if np.max(np.abs(a0), initial=0.0) > 1e3 * tol.alg_atol:
        raise NotNormalized("chart is not centered on the embedded point")


def induced_jf(
    emb: GraphEmbedding,
    chart: DistributionChart,
    zp,
    tol: Tolerances = DEFAULT,
    require_normalized: bool = True,
) -> np.ndarray:
    """Induced structure on the z'-chart, closed form.

    J_F zeta = i zeta - 2 dF^{-1} pi(i a(F) dbar-g(zeta), 0) with pi the
    projection to TM along the fiber; returns the realified 2n x 2n
    matrix. The correction term vanishes at the centered base point.
    """
    if require_normalized:
        _check_normalized(emb, chart, tol)
    zp = np.asarray(zp, dtype=complex).reshape(-1)
    n = emb.n
    a = chart.a_value(emb.f_value(zp))
    q = emb.dbar_g_matrix(zp)
    rhs = np.zeros((2 * emb.big_n, 2 * n))
    for r in range(2 * n):
        zeta = complexify_vector(np.eye(2 * n)[:, r])
        head = 1j * (a @ (q @ zeta.conj()))
        rhs[:, r] = realify_vector(np.concatenate([head, np.zeros(emb.big_n - n)]))
    alpha = _joint_solve(emb, chart, zp, rhs, tol)[: 2 * n, :]
    return standard_structure(n) - 2.0 * alpha


def induced_jf_quotient(
    emb: GraphEmbedding,
    chart: DistributionChart,
    zp,
    tol: Tolerances = DEFAULT,
) -> np.ndarray:
    """Independent route: push dF(zeta) through multiplication by i in the
    quotient by the fiber and solve back. Shares no algebra with the
    closed form beyond the joint solve."""
    zp = np.asarray(zp, dtype=complex).reshape(-1)
    df = emb.df_real(zp)
    rhs = standard_structure(emb.big_n) @ df
    return _joint_solve(emb, chart, zp, rhs, tol)[: 2 * emb.n, :]


def dbar_f(
    emb: GraphEmbedding,
    chart: DistributionChart,
    zp,
    jf: np.ndarray | None = None,
    tol: Tolerances = DEFAULT,
) -> np.ndarray:
    """Conjugate-linear differential (2N x 2n, realified).

    dbar f = (dF + J_Z dF J_f) / 2; its image lies in the fiber of the
    distribution.
    """
    if jf is None:
        jf = induced_jf_quotient(emb, chart, zp, tol)
    df = emb.df_real(zp)
    return 0.5 * (df + standard_structure(emb.big_n) @ df @ jf)


def dbar_f_fiber_coords(
    emb: GraphEmbedding,
    chart: DistributionChart,
    zp,
    jf: np.ndarray | None = None,
    tol: Tolerances = DEFAULT,
) -> tuple[np.ndarray, float]:
    """dbar f expressed in the frame coordinates of the fiber.

    Returns (eta_matrix, residual): eta_matrix[:, r] are the complex
    frame coefficients of dbar f applied to the r-th realified basis
    vector, and residual measures how far the image sticks out of the
    fiber (zero in exact arithmetic).
    """
    mat = dbar_f(emb, chart, zp, jf, tol)
    a = chart.a_value(emb.f_value(zp))
    n, m = emb.n, chart.fiber_dim
    etas = np.zeros((m, 2 * n), dtype=complex)
    residual = 0.0
    for r in range(2 * n):
        vec = complexify_vector(mat[:, r])
        eta = vec[n:]
        etas[:, r] = eta
        residual = max(
            residual, float(np.max(np.abs(vec[:n] - a @ eta), initial=0.0))
        )
    return etas, residual


def pullback_quotient(
    emb: GraphEmbedding,
    chart: DistributionChart,
    zp,
    q_repr: np.ndarray,
    tol: Tolerances = DEFAULT,
) -> np.ndarray:
    """Chart vector xi with dF(xi) = (q, 0) mod fiber (realified output)."""
    n = emb.n
    rhs = realify_vector(
        np.concatenate([np.asarray(q_repr, dtype=complex).reshape(-1),
                        np.zeros(emb.big_n - n)])
    )
    return _joint_solve(emb, chart, zp, rhs, tol)[: 2 * n]


# ---------------------------------------------------------------------------
# variation of the induced structure
# ---------------------------------------------------------------------------

class VariationData:
    """Deformation w = u + f_* v of a graph embedding.

    eta is the fiber-frame coefficient field of the distribution part u,
    so u(z') = (a(F(z')) eta(z'), eta(z')); v is a chart vector field.
    """

    def __init__(self, eta: CRPolyMap, v: CRPolyMap):
        if eta.cols != 1 or v.cols != 1:
            raise ShapeMismatch("eta and v must be column maps")
        if eta.n_vars != v.n_vars:
            raise DimensionMismatch("eta and v live over different charts")
        self.eta = eta
        self.v = v


def variation_djf(
    emb: GraphEmbedding,
    chart: DistributionChart,
    var: VariationData,
    zp,
    tol: Tolerances = DEFAULT,
) -> np.ndarray:
    """Closed-form first variation dJ_f(w), realified 2n x 2n.

    dJ_f(w) = 2 J_f ( f_*^{-1} theta(dbar f ., u) + dbar_{J_f} v ).

    dbar_{J_f} is the genuine conjugate-linear half of the covariant
    derivative on vector fields: on top of (Dv + J Dv J) / 2 it carries
    the transport term -(1/2) J dJ_f(v), without which 2 J dbar v would
    miss the spatial drift of J_f along v. The point must be normalized
    (a(F(zp)) = 0); the transport term is closed-form only there.
    """
    zp = np.asarray(zp, dtype=complex).reshape(-1)
    _check_normalized(emb, chart, tol, zp)
    n = emb.n
    jf = induced_jf(emb, chart, zp, tol)
    etas, _ = dbar_f_fiber_coords(emb, chart, zp, jf, tol)
    theta = torsion_via_frames(chart, emb.f_value(zp))
    eta_u = var.eta.value_vector(zp)
    term1 = np.zeros((2 * n, 2 * n))
    for r in range(2 * n):
        q_repr = theta.apply(etas[:, r], eta_u)
        term1[:, r] = pullback_quotient(emb, chart, zp, q_repr, tol)
    dv = _real_linear(var.v.holo_jacobian_map().value(zp),
                      var.v.anti_jacobian_map().value(zp))
    # spatial derivative of the J_f field along v, columnwise on basis
    # vectors: dJ_f(w) zeta = -2 dF^{-1} pi ( i (da(z0) dF w) dbar g zeta )
    pg = emb._pg.value(zp)
    qg = emb._qg.value(zp)
    jac = chart.a_jacobian(emb.f_value(zp))
    v0 = var.v.value_vector(zp)
    df_v0 = np.concatenate([v0, pg @ v0 + qg @ v0.conj()])
    da_v0 = np.einsum("icb,b->ic", jac, df_v0)
    djf_v = np.zeros((2 * n, 2 * n))
    for r in range(2 * n):
        zeta = complexify_vector(np.eye(2 * n)[:, r])
        q_repr = 1j * (da_v0 @ (qg @ zeta.conj()))
        djf_v[:, r] = -2.0 * pullback_quotient(emb, chart, zp, q_repr, tol)
    dbar_v = 0.5 * (dv + jf @ dv @ jf) - 0.5 * jf @ djf_v
    return 2.0 * jf @ (term1 + dbar_v)


def deformed_embedding(
    emb: GraphEmbedding,
    chart: DistributionChart,
    var: VariationData,
    t: float,
) -> tuple[GraphEmbedding, CRPolyMap]:
    """Exact data of the deformed graph at parameter t.

    Returns (embedding with g_t = g + t(eta - dg . a(F) eta), vtilde)
    where vtilde = v + a(F) eta is the chart flow that re-graphs the
    moved submanifold over z'.
    """
    if not isinstance(chart.amap, PolynomialMatrixMap):
        raise ShapeMismatch("deformations need a polynomial chart")
    a_on_graph = compose_graph(chart.amap, emb.g)
    a_eta = a_on_graph.matmul(var.eta)
    dg_a_eta = emb.g.holo_jacobian_map().matmul(a_eta) + \
        emb.g.anti_jacobian_map().matmul(a_eta.conjugate())
    g_t = emb.g + (var.eta - dg_a_eta).scale(t)
    vtilde = var.v + a_eta
    return GraphEmbedding(emb.n, emb.big_n, g_t, base=emb.base), vtilde


def variation_fd_oracle(
    emb: GraphEmbedding,
    chart: DistributionChart,
    var: VariationData,
    zp,
    t: float,
    tol: Tolerances = DEFAULT,
) -> np.ndarray:
    """Finite-difference variation (J_{f_t}(x) - J_f(x)) / t.

    Re-runs the induced-structure construction on the deformed graph and
    pulls back along the re-graphing flow phi_t = id + t vtilde; uses no
    torsion and no closed-form variation algebra.
    """
    zp = np.asarray(zp, dtype=complex).reshape(-1)
    emb_t, vtilde = deformed_embedding(emb, chart, var, t)
    moved = zp + t * vtilde.value_vector(zp)
    d_vtilde = _real_linear(vtilde.holo_jacobian_map().value(zp),
                            vtilde.anti_jacobian_map().value(zp))
    dphi = np.eye(2 * emb.n) + t * d_vtilde
    # quotient route only: the moved point is not normalized for the chart
    j_moved = induced_jf_quotient(emb_t, chart, moved, tol)
    j_t = np.linalg.solve(dphi, j_moved @ dphi)
    j_0 = induced_jf_quotient(emb, chart, zp, tol)
    return (j_t - j_0) / t


# ---------------------------------------------------------------------------
# Nijenhuis tensor through the torsion
# ---------------------------------------------------------------------------

def nijenhuis_via_torsion(
    emb: GraphEmbedding,
    chart: DistributionChart,
    zp,
    zeta_r: np.ndarray,
    eta_r: np.ndarray,
    tol: Tolerances = DEFAULT,
) -> np.ndarray:
    """N_{J_f}(zeta, eta) = 4 theta(dbar f . zeta, dbar f . eta), pulled
    back to the chart; realified 2n-vector."""
    zp = np.asarray(zp, dtype=complex).reshape(-1)
    jf = induced_jf(emb, chart, zp, tol, require_normalized=False)
    etas, _ = dbar_f_fiber_coords(emb, chart, zp, jf, tol)
    theta = torsion_via_frames(chart, emb.f_value(zp))
    eta_1 = etas @ np.asarray(zeta_r, dtype=float).reshape(-1)
    eta_2 = etas @ np.asarray(eta_r, dtype=float).reshape(-1)
    q_repr = 4.0 * theta.apply(eta_1, eta_2)
    return pullback_quotient(emb, chart, zp, q_repr, tol)


def transversality_report(
    emb: GraphEmbedding,
    chart: DistributionChart,
    sample_points,
    tol: Tolerances = DEFAULT,
) -> dict:
    """Per-point transversality of the graph against the fiber."""
    per_point = []
    min_sigma = np.inf
    for idx, zp in enumerate(sample_points):
        zp = np.asarray(zp, dtype=complex).reshape(-1)
        df = emb.df_real(zp)
        fiber = fiber_real_basis(chart, emb.f_value(zp))
        q_m = np.linalg.qr(df)[0]
        q_d = np.linalg.qr(fiber)[0]
        s = np.linalg.svd(np.concatenate([q_m, q_d], axis=1), compute_uv=False)
        sigma = float(s[-1])
        ok = bool(sigma > tol.rank_rtol * s[0])
        per_point.append({"index": idx, "transverse": ok, "sigma_min": sigma})
        min_sigma = min(min_sigma, sigma)
    return {
        "per_point": per_point,
        "min_sigma": float(min_sigma),
        "all_transverse": all(p["transverse"] for p in per_point),
    }


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------

def embedding_to_json(emb: GraphEmbedding) -> dict:
    return {
        "n": emb.n,
        "N": emb.big_n,
        "base": [[z.real, z.imag] for z in emb.base],
        "g": emb.g.to_json_terms(),
    }


def embedding_from_json(data: dict) -> GraphEmbedding:
    n = int(data["n"])
    big_n = int(data["N"])
    g = CRPolyMap.from_json_terms(n, big_n - n, 1, data["g"])
    base = [complex(p[0], p[1]) for p in data.get("base", [[0.0, 0.0]] * n)]
    return GraphEmbedding(n, big_n, g, base=base)


def variation_to_json(var: VariationData) -> dict:
    return {"eta": var.eta.to_json_terms(), "v": var.v.to_json_terms()}


def variation_from_json(data: dict, n: int, m: int) -> VariationData:
    eta = CRPolyMap.from_json_terms(n, m, 1, data["eta"])
    v = CRPolyMap.from_json_terms(n, n, 1, data["v"])
    return VariationData(eta, v)
