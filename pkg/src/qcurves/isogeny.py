"""Isogenies mu: E -> E' given by rational maps, their differential
pullback scalar, reductions mod primes, and the isogeny graph.

An isogeny is stored as x |-> g(x), y |-> y*h(x) + k(x).  Verification is
an exact identity in the function field K(x)[y]/(curve equation); the
pullback scalar alpha falls out of the same computation, as the constant
ratio g'(x) (2y + a1 x + a3) / (2(yh+k) + a1' g + a3').
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from fractions import Fraction
from heapq import heappop, heappush

from .curve import CurveModel, primes_above, reduce_curve, tate_local, trace_of_frobenius
from .ecfinite import CurveFq
from .kpoly import Poly, RationalFunc, k_rational_roots
from .modpoly import SUPPORTED_ELLS, UnsupportedEll, phi_eval_poly
from .qfield import FieldElement, PrimeIdeal, QuadraticField, reduce_mod, residue_field


class NotAnIsogeny(ValueError):
    pass


class DegreeMismatch(ValueError):
    pass


class NonConstantRatio(ValueError):
    pass


class SquareDegreeCase(ValueError):
    """m is a perfect square: the curve is isogenous to one over Q and the
    L-function factors through quadratic twists instead."""


class NonIntegralMap(ValueError):
    pass


class GraphTooLarge(ValueError):
    pass


@dataclass
class IsogenyMap:
    source: CurveModel
    target: CurveModel
    x_map: RationalFunc
    y_h: RationalFunc
    y_k: RationalFunc

    @property
    def degree(self) -> int:
        return max(self.x_map.num.deg, self.x_map.den.deg)

    def conjugate(self) -> "IsogenyMap":
        def conj_rf(r: RationalFunc) -> RationalFunc:
            return RationalFunc(
                Poly([c.conj() for c in r.num.c]),
                Poly([c.conj() for c in r.den.c]),
                reduce=False,
            )

        return IsogenyMap(
            self.source.conjugate(),
            self.target.conjugate(),
            conj_rf(self.x_map),
            conj_rf(self.y_h),
            conj_rf(self.y_k),
        )

    def negate(self) -> "IsogenyMap":
        """[-1] o mu."""
        K = self.source.field
        t = self.target
        one = RationalFunc(Poly([K.one]), Poly([K.one]))
        a1g = RationalFunc(Poly([t.a1]), Poly([K.one])) * self.x_map
        a3c = RationalFunc(Poly([t.a3]), Poly([K.one]))
        return IsogenyMap(
            self.source,
            t,
            self.x_map,
            RationalFunc(-self.y_h.num, self.y_h.den, reduce=False),
            -(self.y_k + a1g + a3c),
        )


def identity_isogeny(E: CurveModel) -> IsogenyMap:
    K = E.field
    one = Poly([K.one])
    x = Poly([K.zero, K.one])
    return IsogenyMap(E, E, RationalFunc(x, one), RationalFunc(one, one), RationalFunc(Poly([]), one))


def urst_isogeny(E: CurveModel, urst) -> IsogenyMap:
    """The isomorphism E -> transform(E, u, r, s, t) as an IsogenyMap."""
    from .curve import transform

    K = E.field
    u, r, s, t = (v if isinstance(v, FieldElement) else K(v) for v in urst)
    target = transform(E, u, r, s, t)
    one = Poly([K.one])
    iu2, iu3 = (u * u).inverse(), (u**3).inverse()
    g = RationalFunc(Poly([-r * iu2, iu2]), one)
    h = RationalFunc(Poly([iu3]), one)
    k = RationalFunc(Poly([(s * r - t) * iu3, -s * iu3]), one)
    return IsogenyMap(E, target, g, h, k)


def compose(second: IsogenyMap, first: IsogenyMap) -> IsogenyMap:
    """second o first (apply ``first``, then ``second``)."""
    g1, h1, k1 = first.x_map, first.y_h, first.y_k
    g2, h2, k2 = second.x_map, second.y_h, second.y_k
    h2g = h2.compose(g1)
    return IsogenyMap(
        first.source,
        second.target,
        g2.compose(g1),
        h1 * h2g,
        k1 * h2g + k2.compose(g1),
    )


# -- function-field arithmetic: elements A(x) + B(x) y on the source curve


def _ff_mul(E: CurveModel, u, v):
    """(A1 + B1 y)(A2 + B2 y) with y^2 = S - (a1 x + a3) y on E."""
    A1, B1 = u
    A2, B2 = v
    K = E.field
    S = RationalFunc(E.rhs_poly(), Poly([K.one]))
    lin = RationalFunc(Poly([E.a3, E.a1]), Poly([K.one]))
    A = A1 * A2 + B1 * B2 * S
    B = A1 * B2 + B1 * A2 - B1 * B2 * lin
    return (A, B)


def _check_isogeny_identity(mu: IsogenyMap) -> None:
    """Exact check that (g, yh+k) lands on the target curve equation."""
    E, T = mu.source, mu.target
    K = E.field
    one = Poly([K.one])

    def const(c):
        return RationalFunc(Poly([c]), one, reduce=False)

    zero_rf = RationalFunc(Poly([]), one, reduce=False)
    g = (mu.x_map, zero_rf)
    Y = (mu.y_k, mu.y_h)  # k(x) + h(x) y
    g2 = _ff_mul(E, g, g)
    g3 = _ff_mul(E, g2, g)
    Y2 = _ff_mul(E, Y, Y)
    a1XY = _ff_mul(E, (const(T.a1) * mu.x_map, zero_rf), Y)
    a3Y = (const(T.a3) * Y[0], const(T.a3) * Y[1])
    lhsA = Y2[0] + a1XY[0] + a3Y[0]
    lhsB = Y2[1] + a1XY[1] + a3Y[1]
    rhsA = g3[0] + const(T.a2) * g2[0] + const(T.a4) * mu.x_map + const(T.a6)
    rhsB = g3[1] + const(T.a2) * g2[1]
    if lhsA != rhsA or lhsB != rhsB:
        raise NotAnIsogeny("maps do not satisfy the target curve equation")


@dataclass(frozen=True)
class SignedDegree:
    m: int


def verify_isogeny(mu: IsogenyMap, rng: random.Random | None = None) -> SignedDegree:
    """Check the curve identity and compute the signed degree m."""
    if not mu.source.disc or not mu.target.disc:
        raise NotAnIsogeny("singular source or target")
    _check_isogeny_identity(mu)
    deg = mu.degree
    if deg < 1:
        raise DegreeMismatch("constant x-map")
    if deg == 1 and mu.x_map.den.deg == 0:
        pass  # isomorphism
    sign = _degree_sign(mu, rng or random.Random(0x51173))
    return SignedDegree(sign * deg)


def _degree_sign(mu: IsogenyMap, rng: random.Random) -> int:
    """Sign of m with conj(mu) o mu = [m], from reductions at split primes."""
    E = mu.source
    K = E.field
    nu_mu = mu.conjugate()  # conj(E) -> E... here: target.conj() = E
    deg = mu.degree
    from .qfield import kronecker, split_prime
    from sympy import isprime

    tried = 0
    p = 100
    while tried < 25:
        p = _next_split_good(E, mu, p)
        P = split_prime(K, p)[0]
        k = residue_field(P)
        try:
            Ek = reduce_curve(E, P, k)
            Tk = reduce_curve(mu.target, P, k)
            muk = reduce_isogeny(mu, P)
            numuk = reduce_isogeny(nu_mu, P)
        except (NonIntegralMap, Exception):
            tried += 1
            continue
        if not Ek.is_smooth() or not Tk.is_smooth():
            tried += 1
            continue
        for _ in range(5):
            Q = Ek.random_point_raw(rng)
            img = _eval_isogeny(numuk, Tk, _eval_isogeny(muk, Ek, Q, k), k)
            if img is _EVAL_FAIL:
                continue
            plus = Ek.mul(deg, Q)
            minus = Ek.neg(plus)
            if plus == minus:
                continue  # point killed by 2*deg, resample
            if img == plus:
                return 1
            if img == minus:
                return -1
            raise NotAnIsogeny("conj(mu) o mu is not multiplication by +-deg")
        tried += 1
    raise NotAnIsogeny("could not determine the sign of the degree")


def _next_split_good(E: CurveModel, mu: IsogenyMap, after: int):
    from sympy import nextprime

    from .qfield import kronecker

    p = after
    while True:
        p = int(nextprime(p))
        if kronecker(E.field.disc, p) != 1:
            continue
        return p


_EVAL_FAIL = object()


def _eval_isogeny(maps, Ek: CurveFq, P, k):
    """Evaluate reduced maps at an affine point; _EVAL_FAIL on poles."""
    if P is None or maps is _EVAL_FAIL:
        return _EVAL_FAIL if maps is _EVAL_FAIL else None
    gx_num, gx_den, h_num, h_den, k_num, k_den = maps
    x, y = P
    from .kpoly import _fq_eval

    den = _fq_eval(k, gx_den, x)
    if k.is_zero(den):
        return None  # pole: the point maps to infinity
    X = k.div(_fq_eval(k, gx_num, x), den)
    hd = _fq_eval(k, h_den, x)
    kd = _fq_eval(k, k_den, x)
    if k.is_zero(hd) or k.is_zero(kd):
        return _EVAL_FAIL
    Y = k.add(
        k.mul(y, k.div(_fq_eval(k, h_num, x), hd)),
        k.div(_fq_eval(k, k_num, x), kd),
    )
    return (X, Y)


def reduce_isogeny(mu: IsogenyMap, P: PrimeIdeal):
    """Reduced coefficient vectors of the maps mod P.

    Each rational function is scaled by a power of a uniformizer so its
    coefficients are P-integral with at least one unit; raises
    NonIntegralMap if the denominator then reduces to zero.
    """
    k = residue_field(P)

    def red_rf(r: RationalFunc):
        from .qfield import uniformizer, valuation

        coeffs = list(r.num.c) + list(r.den.c)
        vmin = min(valuation(c, P) for c in coeffs if c)
        pi = uniformizer(P)
        scale = pi ** (-vmin) if vmin else None
        num, den = r.num, r.den
        if scale is not None:
            num, den = num * scale, den * scale
        rn = [reduce_mod(c, P, k) for c in num.c]
        rd = [reduce_mod(c, P, k) for c in den.c]
        from .kpoly import fq_trim

        rn, rd = fq_trim(rn), fq_trim(rd)
        if not rd:
            raise NonIntegralMap(f"denominator vanishes mod {P}")
        return rn, rd

    gx_num, gx_den = red_rf(mu.x_map)
    h_num, h_den = red_rf(mu.y_h)
    k_num, k_den = red_rf(mu.y_k)
    return (gx_num, gx_den, h_num, h_den, k_num, k_den)


def pullback_scalar(mu: IsogenyMap) -> FieldElement:
    """alpha with mu^*(omega_target) = alpha * omega_source."""
    E, T = mu.source, mu.target
    K = E.field
    one = Poly([K.one])

    def const(c):
        return RationalFunc(Poly([c]), one, reduce=False)

    g = mu.x_map
    gprime = RationalFunc(
        g.num.derivative() * g.den - g.num * g.den.derivative(), g.den * g.den
    )
    # numerator: g'(x) * (a1 x + a3) + g'(x) * 2 y  = C + D y
    C = gprime * RationalFunc(Poly([E.a3, E.a1]), one)
    D = gprime * const(K(2))
    # denominator: (2k + a1' g + a3') + 2h y = A + B y
    A = const(K(2)) * mu.y_k + const(T.a1) * g + const(T.a3)
    B = const(K(2)) * mu.y_h
    if not B:
        raise NonConstantRatio("degenerate y-map")
    alpha_rf = D / B
    if not alpha_rf.is_constant():
        raise NonConstantRatio("differential ratio is not constant")
    alpha = alpha_rf.constant_value()
    if A * const(alpha) != C:
        raise NonConstantRatio("differential ratio inconsistent between components")
    m = verify_isogeny(mu).m
    if alpha.norm() != m:
        raise NonConstantRatio(f"norm(alpha) = {alpha.norm()} != m = {m}")
    _, q = alpha.disc_coords()
    if q == 0:
        raise SquareDegreeCase(
            "alpha is rational, so m is a perfect square; "
            "factor L through the quadratic twist over Q instead"
        )
    return alpha


# ---------------------------------------------------------------------------
# isogeny graph


@dataclass
class IsogenyGraph:
    vertices: list[FieldElement]  # j-invariants; vertex 0 is j(E)
    edges: list[tuple[int, int, int]]  # (i, j, ell)
    s_values: list[int]  # minimal path degree per conjugate-pair class
    s_lcm: int
    s_max: int
    s_gcd: int
    warnings: list[str] = field(default_factory=list)


def isogeny_graph(
    E: CurveModel,
    ell_set=(2, 3, 5, 7, 11, 13),
    max_vertices: int = 64,
    trace_check: bool = True,
) -> IsogenyGraph:
    """Breadth-first closure of j(E) under the Phi_ell root maps."""
    for ell in ell_set:
        if ell not in SUPPORTED_ELLS:
            raise UnsupportedEll(f"ell={ell}")
    K = E.field
    j0 = E.j
    verts = [j0]
    index = {_jkey(j0): 0}
    edges = set()
    warnings = []
    frontier = [0]
    while frontier:
        new_frontier = []
        for vi in frontier:
            jv = verts[vi]
            for ell in sorted(ell_set):
                for root in k_rational_roots(phi_eval_poly(ell, jv, K), K):
                    key = _jkey(root)
                    if key not in index:
                        if len(verts) >= max_vertices:
                            raise GraphTooLarge(f"more than {max_vertices} vertices")
                        if trace_check and not _twist_compatible(E, root, warnings):
                            continue
                        index[key] = len(verts)
                        verts.append(root)
                        new_frontier.append(index[key])
                    wi = index[key]
                    if wi != vi:
                        edges.add((min(vi, wi), max(vi, wi), ell))
        frontier = new_frontier
    # minimal product of edge labels from each vertex to vertex 0 (Dijkstra)
    INF = float("inf")
    dist = [INF] * len(verts)
    dist[0] = 1
    heap = [(1, 0)]
    adj = {}
    for a, b, ell in edges:
        adj.setdefault(a, []).append((b, ell))
        adj.setdefault(b, []).append((a, ell))
    while heap:
        d, v = heappop(heap)
        if d > dist[v]:
            continue
        for w, ell in adj.get(v, ()):
            nd = d * ell
            if nd < dist[w]:
                dist[w] = nd
                heappush(heap, (nd, w))
    if any(d == INF for d in dist):
        warnings.append("graph is not connected; unreachable vertices ignored")
    # conjugate pairing: each class contributes min over the pair
    conj_index = {}
    for i, jv in enumerate(verts):
        conj_index[i] = index.get(_jkey(jv.conj()))
    s_values = []
    seen = set()
    for i in range(len(verts)):
        if i in seen:
            continue
        ci = conj_index[i]
        pair = {i} if ci is None else {i, ci}
        if ci is None:
            warnings.append(f"conjugate of vertex {i} missing from the graph")
        seen |= pair
        ds = [int(dist[v]) for v in pair if dist[v] != INF]
        if ds:
            s_values.append(min(ds))
    s_lcm = math.lcm(*s_values)
    s_gcd = math.gcd(*s_values)
    return IsogenyGraph(
        verts, sorted(edges), s_values, s_lcm, max(s_values), s_gcd, warnings
    )


def _jkey(j: FieldElement):
    return (j.x, j.y)


def _twist_compatible(E: CurveModel, jnew: FieldElement, warnings: list) -> bool:
    """Trace match at one auxiliary good prime, up to quadratic twist.

    Advisory: a vertex is dropped only when a model with the new j-invariant
    provably has traces incompatible with E at a good split prime.
    """
    try:
        K = E.field
        if jnew == 0 or jnew == 1728:
            return True
        from .curve import make_curve
        from .qfield import split_prime

        c = jnew / (K(1728) - jnew)
        E2 = make_curve(K, [K.zero, K.zero, K.zero, 3 * c, 2 * c])
        from sympy import nextprime

        from .qfield import kronecker

        p = 300
        for _ in range(30):
            p = int(nextprime(p))
            if kronecker(K.disc, p) != 1:
                continue
            P = split_prime(K, p)[0]
            try:
                E1k = reduce_curve(E, P)
                E2k = reduce_curve(E2, P)
                if not E1k.is_smooth() or not E2k.is_smooth():
                    continue
                t1 = E1k.k.order + 1 - E1k.order()
                t2 = E2k.k.order + 1 - E2k.order()
                if t1 != t2 and t1 != -t2:
                    warnings.append(
                        f"dropped Phi-adjacent j with incompatible trace at {p}"
                    )
                    return False
                return True
            except Exception:
                continue
        return True
    except Exception:
        return True
