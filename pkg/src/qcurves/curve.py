"""Weierstrass models over K: invariants, Tate's algorithm, conductor,
point counting on reductions, and exact torsion.

Tate's algorithm follows the classical eleven-step loop and works at every
residue characteristic (the ramified primes above 2 and 3 exercise the
subtle steps).  Conductor exponents come from the Kodaira type via the
Ogg-Saito formula f = v(disc_min) + 1 - m.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

from sympy import factorint, primerange

from .ecfinite import BadReduction, CurveFq, NoSuitablePoint
from .kpoly import Poly, _fq_eval, _fq_exactdiv, fq_polygcd, fq_roots, fq_trim
from .qfield import (
    FieldElement,
    PrimeIdeal,
    QuadraticField,
    ResidueField,
    kronecker,
    reduce_mod,
    residue_field,
    split_prime,
    sqrt_in_K,
    uniformizer,
    valuation,
)


class SingularModel(ValueError):
    pass


class NotGaloisStableConductor(ValueError):
    pass


@dataclass(frozen=True)
class CurveModel:
    """[a1, a2, a3, a4, a6] over K."""

    field: QuadraticField
    a1: FieldElement
    a2: FieldElement
    a3: FieldElement
    a4: FieldElement
    a6: FieldElement

    @property
    def ainvs(self):
        return (self.a1, self.a2, self.a3, self.a4, self.a6)

    def __repr__(self):
        return f"Curve[{self.a1};{self.a2};{self.a3};{self.a4};{self.a6}]"

    @property
    def b2(self):
        return self.a1 * self.a1 + 4 * self.a2

    @property
    def b4(self):
        return 2 * self.a4 + self.a1 * self.a3

    @property
    def b6(self):
        return self.a3 * self.a3 + 4 * self.a6

    @property
    def b8(self):
        return (
            self.a1 * self.a1 * self.a6
            + 4 * self.a2 * self.a6
            - self.a1 * self.a3 * self.a4
            + self.a2 * self.a3 * self.a3
            - self.a4 * self.a4
        )

    @property
    def c4(self):
        return self.b2 * self.b2 - 24 * self.b4

    @property
    def c6(self):
        return -(self.b2**3) + 36 * self.b2 * self.b4 - 216 * self.b6

    @property
    def disc(self):
        b2, b4, b6, b8 = self.b2, self.b4, self.b6, self.b8
        return -b2 * b2 * b8 - 8 * b4**3 - 27 * b6 * b6 + 9 * b2 * b4 * b6

    @property
    def j(self):
        if not self.disc:
            raise SingularModel("j-invariant of a singular model")
        return self.c4**3 / self.disc

    def conjugate(self) -> "CurveModel":
        return CurveModel(self.field, *[a.conj() for a in self.ainvs])

    def rhs_poly(self) -> Poly:
        K = self.field
        return Poly([self.a6, self.a4, self.a2, K.one])


def make_curve(K: QuadraticField, ainvs) -> CurveModel:
    from .qfield import elem_from_pair

    a = [elem_from_pair(K, v) for v in ainvs]
    E = CurveModel(K, *a)
    if not E.disc:
        raise SingularModel("discriminant is zero")
    return E


def invariants(E: CurveModel):
    """(b2, b4, b6, b8, c4, c6, disc, j); raises SingularModel on disc = 0."""
    if not E.disc:
        raise SingularModel("discriminant is zero")
    assert E.c4**3 - E.c6**2 == 1728 * E.disc
    return (E.b2, E.b4, E.b6, E.b8, E.c4, E.c6, E.disc, E.j)


def transform(E: CurveModel, u, r, s, t) -> CurveModel:
    """Model in the coordinates x = u^2 x' + r, y = u^3 y' + s u^2 x' + t."""
    K = E.field
    u, r, s, t = (v if isinstance(v, FieldElement) else K(v) for v in (u, r, s, t))
    a1, a2, a3, a4, a6 = E.ainvs
    iu = u.inverse()
    a1p = (a1 + 2 * s) * iu
    a2p = (a2 - s * a1 + 3 * r - s * s) * iu**2
    a3p = (a3 + r * a1 + 2 * t) * iu**3
    a4p = (a4 - s * a3 + 2 * r * a2 - (t + r * s) * a1 + 3 * r * r - 2 * s * t) * iu**4
    a6p = (a6 + r * a4 + r * r * a2 + r**3 - t * a3 - t * t - r * t * a1) * iu**6
    return CurveModel(K, a1p, a2p, a3p, a4p, a6p)


def compose_urst(first, second):
    """Transformation equivalent to applying ``first`` then ``second``."""
    u1, r1, s1, t1 = first
    u2, r2, s2, t2 = second
    return (
        u1 * u2,
        u1 * u1 * r2 + r1,
        u1 * s2 + s1,
        u1**3 * t2 + u1 * u1 * s1 * r2 + t1,
    )


def reduce_curve(E: CurveModel, P: PrimeIdeal, k: ResidueField | None = None) -> CurveFq:
    if k is None:
        k = residue_field(P)
    return CurveFq(k, tuple(reduce_mod(a, P, k) for a in E.ainvs))


# ---------------------------------------------------------------------------
# Tate's algorithm


@dataclass
class LocalData:
    prime: PrimeIdeal
    min_model: CurveModel
    urst: tuple  # input model -> min_model coordinates
    reduction: str  # good | split_mult | nonsplit_mult | additive
    kodaira: str
    v_disc_min: int
    cond_exp: int
    tamagawa: int

    @property
    def lfactor_c(self) -> int:
        """c_P entering the bad-prime L-factor: 1, -1 or 0."""
        return {"split_mult": 1, "nonsplit_mult": -1, "additive": 0, "good": None}[
            self.reduction
        ]


_KODAIRA_COMPONENTS = {
    "I0": 1,
    "II": 1,
    "III": 2,
    "IV": 3,
    "I0*": 5,
    "IV*": 7,
    "III*": 8,
    "II*": 9,
}


def _components(kodaira: str) -> int:
    if kodaira in _KODAIRA_COMPONENTS:
        return _KODAIRA_COMPONENTS[kodaira]
    if kodaira.endswith("*"):
        return 5 + int(kodaira[1:-1])
    return int(kodaira[1:])  # In


def tate_local(E: CurveModel, P: PrimeIdeal) -> LocalData:
    """Minimal model, reduction type, conductor exponent and Tamagawa
    number at P, by Tate's algorithm."""
    K = E.field
    k = residue_field(P)
    pi = uniformizer(P)

    def v(e) -> int:
        return 10**9 if not e else valuation(e, P)

    def red(e):
        return reduce_mod(e, P, k)

    def lift(t) -> FieldElement:
        a, b = t
        if P.splitting == "split" or P.splitting == "ramified":
            return K(a)
        if P.p == 2:
            return K(a) + K(b) * K.omega
        return K(a, b)

    def kroots(coeffs):
        return fq_roots(k, fq_trim(list(coeffs)))

    urst = (K.one, K.zero, K.zero, K.zero)

    def apply(u, r, s, t):
        nonlocal E, urst
        E = transform(E, u, r, s, t)
        urst = compose_urst(urst, (u, r, s, t))

    # integral model at P
    m = 0
    for i, a in zip((1, 2, 3, 4, 6), E.ainvs):
        if a and v(a) < 0:
            m = max(m, (-v(a) + i - 1) // i)
    if m > 0:
        apply(pi ** (-m), 0, 0, 0)

    while True:
        n = v(E.disc)
        if n == 0:
            return LocalData(P, E, urst, "good", "I0", 0, 0, 1)

        # Step 2: move the singular point to (0, 0)
        Ered = reduce_curve(E, P, k)
        x0, y0 = Ered.singular_point()
        apply(1, lift(x0), 0, lift(y0))
        assert v(E.a3) >= 1 and v(E.a4) >= 1 and v(E.a6) >= 1, "translation failed"

        if v(E.c4) == 0:
            # multiplicative: type In
            kind = reduce_curve(E, P, k).reduction_kind()
            assert kind in ("split_mult", "nonsplit_mult")
            c = n if kind == "split_mult" else (2 if n % 2 == 0 else 1)
            return LocalData(P, E, urst, kind, f"I{n}", n, 1, c)

        if v(E.a6) < 2:
            return LocalData(P, E, urst, "additive", "II", n, n + 1 - 1, 1)
        if v(E.b8) < 3:
            return LocalData(P, E, urst, "additive", "III", n, n + 1 - 2, 2)
        if v(E.b6) < 3:
            # type IV: Y^2 + (a3/pi) Y - a6/pi^2
            a31, a62 = red(E.a3 / pi), red(E.a6 / pi / pi)
            c = 3 if kroots([k.neg(a62), a31, k.one]) else 1
            return LocalData(P, E, urst, "additive", "IV", n, n + 1 - 3, c)

        # Step 6 preparation: pi | a1, a2; pi^2 | a3, a4; pi^3 | a6
        if P.p == 2:
            s0 = lift(k.sqrt(red(E.a2)))
            apply(1, 0, s0, 0)
            t0 = pi * lift(k.sqrt(red(E.a6 / pi / pi)))
            apply(1, 0, 0, t0)
        else:
            apply(1, 0, -E.a1 / 2, 0)
            apply(1, 0, 0, -E.a3 / 2)
        assert v(E.a1) >= 1 and v(E.a2) >= 1, (v(E.a1), v(E.a2))
        assert v(E.a3) >= 2 and v(E.a4) >= 2 and v(E.a6) >= 3

        # P(T) = T^3 + a2,1 T^2 + a4,2 T + a6,3 over k
        a21, a42, a63 = red(E.a2 / pi), red(E.a4 / pi / pi), red(E.a6 / pi**3)
        cubic = [a63, a42, a21, k.one]
        deriv = fq_trim([a42, k.smul(2, a21), k.make(3)])
        g = fq_polygcd(k, cubic, deriv)

        if len(g) == 1:
            # distinct roots: I0*
            c = 1 + len(kroots(cubic))
            return LocalData(P, E, urst, "additive", "I0*", n, n + 1 - 5, c)

        # repeated root beta; gcd degree alone cannot separate double from
        # triple in small characteristic, so divide out explicitly
        beta = kroots(g if deriv else cubic)[0]
        rem = cubic
        mult = 0
        while rem and _fq_eval(k, rem, beta) == k.zero:
            rem = _fq_exactdiv(k, list(rem), [k.neg(beta), k.one])
            mult += 1

        if mult == 2:
            # double root beta (and a distinct simple root)
            apply(1, pi * lift(beta), 0, 0)
            # In* loop; invariants: v(a2) = 1, v(a3) >= 2, v(a4) >= 3, v(a6) >= 4
            assert v(E.a2) == 1 and v(E.a4) >= 3 and v(E.a6) >= 4
            ix, iy = 3, 3
            mx, my = pi * pi, pi * pi
            while True:
                a2t, a3t = E.a2 / pi, E.a3 / my
                a4t, a6t = E.a4 / (pi * mx), E.a6 / (mx * my)
                if v(a3t * a3t + 4 * a6t) == 0:
                    # Y^2 + a3t Y - a6t separable
                    c = 4 if kroots([k.neg(red(a6t)), red(a3t), k.one]) else 2
                    break
                if P.p == 2:
                    t0 = my * lift(k.sqrt(red(a6t)))
                else:
                    t0 = my * lift(red(-a3t / 2))
                apply(1, 0, 0, t0)
                my, iy = my * pi, iy + 1
                a2t, a4t = E.a2 / pi, E.a4 / (pi * mx)
                a6t = E.a6 / (mx * my)
                if v(a4t * a4t - 4 * a2t * a6t) == 0:
                    # a2t X^2 + a4t X + a6t separable
                    c = 4 if kroots([red(a6t), red(a4t), red(a2t)]) else 2
                    break
                if P.p == 2:
                    r0 = mx * lift(k.sqrt(red(a6t / a2t)))
                else:
                    r0 = mx * lift(red(-a4t / (2 * a2t)))
                apply(1, r0, 0, 0)
                mx, ix = mx * pi, ix + 1
            nstar = ix + iy - 5
            kod = f"I{nstar}*"
            return LocalData(
                P, E, urst, "additive", kod, n, n + 1 - (5 + nstar), c
            )

        # triple root
        assert mult == 3
        apply(1, pi * lift(beta), 0, 0)
        assert v(E.a2) >= 2 and v(E.a4) >= 3 and v(E.a6) >= 4

        # Y^2 + a3,2 Y - a6,4
        a32, a64 = red(E.a3 / pi / pi), red(E.a6 / pi**4)
        disc_q = k.add(k.mul(a32, a32), k.smul(4, a64))
        separable = (not k.is_zero(a32)) if P.p == 2 else (not k.is_zero(disc_q))
        if separable:
            c = 3 if kroots([k.neg(a64), a32, k.one]) else 1
            return LocalData(P, E, urst, "additive", "IV*", n, n + 1 - 7, c)

        if P.p == 2:
            t0 = pi * pi * lift(k.sqrt(a64))
        else:
            t0 = pi * pi * lift(red(-(E.a3 / pi / pi) / 2))
        apply(1, 0, 0, t0)
        assert v(E.a3) >= 3 and v(E.a6) >= 5

        if v(E.a4) < 4:
            return LocalData(P, E, urst, "additive", "III*", n, n + 1 - 8, 2)
        if v(E.a6) < 6:
            return LocalData(P, E, urst, "additive", "II*", n, n + 1 - 9, 1)

        # not minimal: rescale and restart
        apply(pi, 0, 0, 0)


def bad_rational_primes(E: CurveModel):
    """Rational primes where the model could be singular or non-minimal."""
    nd = E.disc.norm()
    ps = set(factorint(abs(nd.numerator)).keys())
    ps |= set(factorint(nd.denominator).keys())
    for a in E.ainvs:
        ps |= set(factorint(a.denominator()).keys())
    return sorted(ps)


def primes_above(K: QuadraticField, p: int):
    P = split_prime(K, p)
    return list(P) if isinstance(P, tuple) else [P]


def local_data_map(E: CurveModel, ps=None) -> dict:
    """Tate data at every prime above the given (default: bad) rational primes."""
    out = {}
    for p in ps if ps is not None else bad_rational_primes(E):
        for P in primes_above(E.field, p):
            out[P] = tate_local(E, P)
    return out


def conductor(E: CurveModel) -> int:
    """n with conductor ideal (n); raises NotGaloisStableConductor."""
    n = 1
    for p in bad_rational_primes(E):
        Ps = primes_above(E.field, p)
        fs = [tate_local(E, P).cond_exp for P in Ps]
        if len(fs) == 2:
            if fs[0] != fs[1]:
                raise NotGaloisStableConductor(
                    f"conjugate primes over {p} have exponents {fs}"
                )
            n *= p ** fs[0]
        elif Ps[0].splitting == "inert":
            n *= p ** fs[0]
        else:  # ramified
            if fs[0] % 2 != 0:
                raise NotGaloisStableConductor(
                    f"odd exponent {fs[0]} at ramified prime {p}"
                )
            n *= p ** (fs[0] // 2)
    return n


# ---------------------------------------------------------------------------
# point counting interface


def count_points(E_red: CurveFq) -> int:
    """#E(k) for a good reduction; Hasse-checked."""
    if not E_red.is_smooth():
        raise BadReduction("count_points requires good reduction")
    N = E_red.order()
    q = E_red.k.order
    assert (q + 1 - N) ** 2 <= 4 * q, "Hasse bound violated"
    return N


def good_local_curve(E: CurveModel, P: PrimeIdeal) -> CurveFq:
    """Reduction of a P-minimal model of E; requires good reduction at P."""
    ld = tate_local(E, P)
    if ld.reduction != "good":
        raise BadReduction(f"bad reduction at {P}")
    return reduce_curve(ld.min_model, P)


def trace_of_frobenius(E: CurveModel, P: PrimeIdeal) -> int:
    Ek = good_local_curve(E, P)
    return Ek.k.order + 1 - count_points(Ek)


def random_point(E_red: CurveFq, avoid_orders: int, rng: random.Random):
    """Smooth-locus point with order coprime to avoid_orders."""
    return E_red.random_smooth_point_coprime(avoid_orders, rng)


# ---------------------------------------------------------------------------
# division polynomials and torsion


def short_model(E: CurveModel):
    """(A, B, shift) with y^2 = x^3 + A x + B and x_short = x + b2/12."""
    A = -E.c4 / 48
    B = -E.c6 / 864
    return A, B, E.b2 / 12


def division_polys(E: CurveModel, nmax: int) -> list[Poly]:
    """D[n] on the short model: psi_n = D[n] (n odd), psi_n = 2y D[n] (n even)."""
    K = E.field
    A, B, _ = short_model(E)
    x = Poly([K.zero, K.one])
    one = Poly([K.one])
    w = 4 * (x**3 + A * x + Poly([B]))  # (2y)^2
    D = [Poly([]), one, one]
    D.append(3 * x**4 + 6 * A * x * x + 12 * B * x - Poly([A * A]))
    D.append(
        2
        * (
            x**6
            + 5 * A * x**4
            + 20 * B * x**3
            - 5 * A * A * x * x
            - 4 * A * B * x
            - Poly([8 * B * B + A**3])
        )
    )
    for n in range(5, nmax + 1):
        m = n // 2
        if n % 2:
            if m % 2 == 0:
                D.append(w * w * D[m + 2] * D[m] ** 3 - D[m - 1] * D[m + 1] ** 3)
            else:
                D.append(D[m + 2] * D[m] ** 3 - w * w * D[m - 1] * D[m + 1] ** 3)
        else:
            D.append(D[m] * (D[m + 2] * D[m - 1] ** 2 - D[m - 2] * D[m + 1] ** 2))
    return D


def _points_with_x(E: CurveModel, x: FieldElement):
    """K-rational points of E with the given x-coordinate."""
    K = E.field
    b = E.a1 * x + E.a3
    c = x**3 + E.a2 * x * x + E.a4 * x + E.a6
    disc = b * b + 4 * c
    s = sqrt_in_K(disc)
    if s is None:
        return []
    y1 = (s - b) / 2
    y2 = (-s - b) / 2
    return [(x, y1)] if y1 == y2 else [(x, y1), (x, y2)]


@dataclass
class TorsionInfo:
    order: int
    structure: tuple[int, int] | None = None


def _torsion_gcd_bound(E: CurveModel, nprimes: int = 12) -> int:
    bad = set(bad_rational_primes(E))
    K = E.field
    g = 0
    used = 0
    for p in primerange(3, 10000):
        if used >= nprimes or g == 1:
            break
        if p in bad or kronecker(K.disc, p) == 0:
            continue
        for P in primes_above(K, p):
            if P.norm() > 50000:
                continue
            g = math.gcd(g, count_points(reduce_curve(E, P)))
            used += 1
            break
    return g


def _ell_power_torsion_points(E: CurveModel, ell: int, k: int, D: list[Poly]):
    """K-points of order exactly ell^k (list of (x, y))."""
    K = E.field
    _, _, shift = short_model(E)
    n = ell**k
    if n == 2:
        f2 = Poly([E.b6, 2 * E.b4, E.b2, K(4)])
        return [pt for x in _kroots_cached(f2, K) for pt in _points_with_x(E, x)]
    if k == 1:
        fpoly = D[n]
    else:
        fpoly, rem = D[n].divmod(D[n // ell])
        assert not rem, "primitive division polynomial division failed"
    pts = []
    for xs in _kroots_cached(fpoly, K):
        x = xs - shift  # back to the original model
        pts.extend(_points_with_x(E, x))
    return pts


_root_cache: dict = {}


def _kroots_cached(f: Poly, K):
    from .kpoly import k_rational_roots

    key = (K.d, f.c)
    if key not in _root_cache:
        _root_cache[key] = k_rational_roots(f, K)
    return _root_cache[key]


def torsion_order(E: CurveModel) -> TorsionInfo:
    """Exact |E(K)_tors|: gcd bound over good primes, then division
    polynomial search over K for each surviving prime power."""
    bound = _torsion_gcd_bound(E)
    if bound == 1:
        return TorsionInfo(1, (1, 1))
    total = 1
    n2 = 1
    noncyclic = 1
    for ell, e in sorted(factorint(bound).items()):
        if ell > 13:
            # no such torsion prime over a quadratic field (Kamienny)
            continue
        # torsion over quadratic fields is bounded; never need beyond order 18
        e = min(e, {2: 4, 3: 2}.get(ell, 1))
        D = division_polys(E, max(ell**e, 4))
        count = 1
        kmax = 0
        for kk in range(1, e + 1):
            pts = _ell_power_torsion_points(E, ell, kk, D)
            if not pts:
                break
            count += len(pts)
            kmax = kk
        total *= count
        n2 *= ell**kmax
        noncyclic *= count // (ell**kmax)
    return TorsionInfo(total, (noncyclic, n2))
