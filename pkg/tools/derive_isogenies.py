#!/usr/bin/env python3
"""Derive explicit prime-degree isogeny maps for fixture curves whose maps
are not available in a directly usable form, from the rational kernel.

This is a fixture-generation aid, not part of the library: the library only
consumes isogenies as rational maps (or a pullback scalar).  The derived
maps are verified exactly by the library before being printed.

Method: the kernel x-polynomial of a K-rational 2- or 3-isogeny is linear,
so the kernel x-coordinate lies in K and the quotient-curve x-map is

    X = x + t/(x - x0) + u/(x - x0)^2

with the classical t, u attached to the kernel point.  The y-map follows
from the normalization mu^*(dX/(2Y+A1X+A3)) = dx/(2y+a1x+a3):

    Y = (g'(x) (2y + a1 x + a3) - A1 g(x) - A3) / 2.

The final map is the composition with the isomorphism to the conjugate
model, sign-fixed to a prescribed pullback scalar.
"""

import sys
from fractions import Fraction

sys.path.insert(0, "src")

from qcurves.curve import CurveModel, make_curve, transform
from qcurves.isogeny import IsogenyMap, compose, pullback_scalar, urst_isogeny, verify_isogeny
from qcurves.kpoly import Poly, RationalFunc, k_rational_roots
from qcurves.qfield import make_field, sqrt_in_K


def velu_prime_isogeny(E: CurveModel, x0, ell: int) -> IsogenyMap:
    """Quotient by the rational subgroup with kernel x-coordinate x0."""
    K = E.field
    one = Poly([K.one])
    if ell == 2:
        y0 = -(E.a1 * x0 + E.a3) / 2
        t = 3 * x0 * x0 + 2 * E.a2 * x0 + E.a4 - E.a1 * y0
        u = K.zero
    elif ell == 3:
        t = 6 * x0 * x0 + E.b2 * x0 + E.b4
        u = 4 * x0**3 + E.b2 * x0 * x0 + 2 * E.b4 * x0 + E.b6
    else:
        raise ValueError("only degree 2 and 3 kernels supported here")
    w = u + x0 * t
    target = CurveModel(
        K, E.a1, E.a2, E.a3, E.a4 - 5 * t, E.a6 - E.b2 * t - 7 * w
    )
    lin = Poly([-x0, K.one])
    g = RationalFunc(
        Poly([K.zero, K.one]) * lin * lin + Poly([t]) * lin + Poly([u]), lin * lin
    )
    gp = RationalFunc(
        g.num.derivative() * g.den - g.num * g.den.derivative(), g.den * g.den
    )
    a1x_a3 = RationalFunc(Poly([E.a3, E.a1]), one)
    A1g = RationalFunc(Poly([target.a1]), one) * g
    A3c = RationalFunc(Poly([target.a3]), one)
    h = gp
    kmap = (gp * a1x_a3 - A1g - A3c) * RationalFunc(Poly([K(Fraction(1, 2))]), one)
    return IsogenyMap(E, target, g, h, kmap)


def isomorphism_urst(E1: CurveModel, E2: CurveModel):
    """(u, r, s, t) with transform(E1, u, r, s, t) == E2, or None."""
    K = E1.field
    if not E1.c4 or not E1.c6:
        raise ValueError("j = 0 or 1728 not handled")
    u2 = (E1.c6 * E2.c4) / (E2.c6 * E1.c4)
    u = sqrt_in_K(u2)
    if u is None:
        return None
    for uu in (u, -u):
        s = (uu * E2.a1 - E1.a1) / 2
        r = (uu * uu * E2.a2 - E1.a2 + s * E1.a1 + s * s) / 3
        t = (uu**3 * E2.a3 - E1.a3 - r * E1.a1) / 2
        if transform(E1, uu, r, s, t) == E2:
            return (uu, r, s, t)
    return None


def derive(E: CurveModel, ell: int, alpha_target):
    """Composite isogeny E -> conj(E) of degree ell with the given pullback."""
    K = E.field
    if ell == 2:
        ker_poly = Poly([E.b6, 2 * E.b4, E.b2, K(4)])
    else:
        ker_poly = Poly(
            [E.b8, 3 * E.b6, 3 * E.b4, E.b2, K(3)]
        )  # psi_3 on the general model
    roots = k_rational_roots(ker_poly, K)
    nE = E.conjugate()
    for x0 in roots:
        phi = velu_prime_isogeny(E, x0, ell)
        urst = isomorphism_urst(phi.target, nE)
        if urst is None:
            continue
        mu = compose(urst_isogeny(phi.target, urst), phi)
        alpha = pullback_scalar(mu)
        if alpha == -alpha_target:
            mu = mu.negate()
            alpha = pullback_scalar(mu)
        if alpha == alpha_target:
            assert verify_isogeny(mu).m == int(alpha.norm())
            return mu
    raise RuntimeError("no kernel produced the required isogeny")


def dump(mu: IsogenyMap):
    def poly_strs(p: Poly):
        return [[str(c.x), str(c.y)] for c in p.c]

    print("  x_num:", poly_strs(mu.x_map.num))
    print("  x_den:", poly_strs(mu.x_map.den))
    print("  h_num:", poly_strs(mu.y_h.num))
    print("  h_den:", poly_strs(mu.y_h.den))
    print("  k_num:", poly_strs(mu.y_k.num))
    print("  k_den:", poly_strs(mu.y_k.den))


if __name__ == "__main__":
    F = Fraction

    # curve with a 3-isogeny to its conjugate over Q(sqrt(109))
    K109 = make_field(109)
    half = F(1, 2)
    E5 = make_curve(
        K109,
        [
            K109(half, half),
            K109(F(3, 2), -half),
            K109(half, half),
            K109(-223070, -21370),
            K109(F(-2727437331, 2), F(-261241129, 2)),
        ],
    )
    alpha5 = K109(F(-73, 2), F(-7, 2))
    mu5 = derive(E5, 3, alpha5)
    print("degree-3 isogeny over Q(sqrt109): alpha =", pullback_scalar(mu5))
    dump(mu5)

    # cross-check derivation for the degree-2 case over Q(sqrt(34))
    K34 = make_field(34)
    E3 = make_curve(
        K34, [[0, 0], [0, 0], [0, 0], ["365568", "62730"], ["-111410656", "-19106640"]]
    )
    alpha3 = K34(-6, -1)
    mu3 = derive(E3, 2, alpha3)
    print("degree-2 isogeny over Q(sqrt34): alpha =", pullback_scalar(mu3))
    dump(mu3)


# ---------------------------------------------------------------------------
# generic odd-degree kernels: the kernel x-polynomial is found by factoring
# the division polynomial modulo a split prime, Hensel-lifting a factor of
# the right degree at both conjugate primes, and reconstructing in K.

import math
import random

from qcurves.curve import division_polys, short_model
from qcurves.kpoly import (_fq_deriv, _split_prime_stream, _lift_root_mod_pk,
                           _rational_reconstruct, fq_polygcd, fq_polymod,
                           fq_polymul, fq_polypowmod, fq_trim, poly_content_scale,
                           reduce_poly_mod)
from qcurves.qfield import residue_field, split_prime


def fq_factor(k, f, rng):
    """Full factorization into monic irreducibles over F_p (degree 1 field)."""
    f = list(f)
    inv = k.inv(f[-1])
    f = [k.mul(c, inv) for c in f]
    out = []
    # distinct-degree
    d = 1
    xq = [(0, 0), k.one]
    rem = f
    while len(rem) - 1 >= 2 * d:
        xq = fq_polypowmod(k, xq, k.order, rem)
        sub = list(xq)
        while len(sub) < 2:
            sub.append((0, 0))
        sub[1] = k.sub(sub[1], k.one)
        g = fq_polygcd(k, rem, fq_trim(sub))
        if len(g) > 1:
            out.extend(_edf(k, g, d, rng))
            rem = _exact_div(k, rem, g)
            xq = fq_polymod(k, xq, rem)
        d += 1
    if len(rem) > 1:
        out.append(rem)
    return out


def _exact_div(k, f, g):
    from qcurves.kpoly import _fq_exactdiv

    return _fq_exactdiv(k, list(f), list(g))


def _edf(k, f, d, rng):
    """Split a product of distinct degree-d irreducibles."""
    n = len(f) - 1
    if n == d:
        return [f]
    q = k.order
    while True:
        h = [k.make(rng.randrange(q)) for _ in range(n)] + [k.one]
        e = (q**d - 1) // 2
        hp = fq_polypowmod(k, h, e, f)
        hp = list(hp)
        if hp:
            hp[0] = k.sub(hp[0], k.one)
        g = fq_polygcd(k, f, fq_trim(hp))
        if 0 < len(g) - 1 < n:
            return _edf(k, g, d, rng) + _edf(k, _exact_div(k, f, g), d, rng)


def hensel_lift_factor(fv, g0, p, target_mod):
    """Linear Hensel lift of a monic factor g0 of the monic fv mod p."""

    def pmul(a, b, mod):
        if not a or not b:
            return []
        out = [0] * (len(a) + len(b) - 1)
        for i, x in enumerate(a):
            if x:
                for j, y in enumerate(b):
                    out[i + j] = (out[i + j] + x * y) % mod
        return out

    def ptrim(a):
        while a and a[-1] == 0:
            a.pop()
        return a

    def pdivmod(a, b, mod):
        a = [x % mod for x in a]
        db = len(b) - 1
        inv = pow(b[-1], -1, mod)
        q = [0] * max(0, len(a) - db)
        for i in range(len(a) - 1, db - 1, -1):
            t = a[i] * inv % mod
            if t:
                q[i - db] = t
                for j in range(db + 1):
                    a[i - db + j] = (a[i - db + j] - t * b[j]) % mod
        return q, ptrim(a[:db])

    def psub(a, b, mod):
        out = [0] * max(len(a), len(b))
        for i, x in enumerate(a):
            out[i] = x % mod
        for i, x in enumerate(b):
            out[i] = (out[i] - x) % mod
        return ptrim(out)

    def pgcdext(a, b, mod):
        r0, r1 = ptrim([x % mod for x in a]), ptrim([x % mod for x in b])
        s0, s1 = [1], []
        t0, t1 = [], [1]
        while r1:
            q, r = pdivmod(r0, r1, mod)
            r0, r1 = r1, r
            s0, s1 = s1, psub(s0, pmul(q, s1, mod), mod)
            t0, t1 = t1, psub(t0, pmul(q, t1, mod), mod)
        inv = pow(r0[-1], -1, mod)
        return [x * inv % mod for x in s0], [x * inv % mod for x in t0]

    g = ptrim([x % p for x in g0])
    h, rem = pdivmod([x % p for x in fv], g, p)
    assert not rem, "g0 does not divide f mod p"
    s, t = pgcdext(g, h, p)  # s*g + t*h = 1 mod p
    modk = p
    while modk < target_mod:
        nxt = modk * p
        diff = [(x - y) % nxt for x, y in zip(
            [c % nxt for c in fv] + [0] * max(0, len(pmul(g, h, nxt)) - len(fv)),
            pmul(g, h, nxt) + [0] * max(0, len(fv) - len(pmul(g, h, nxt))),
        )]
        e = [(x // modk) % p for x in diff]
        _, dg = pdivmod(pmul(t, e, p), g, p)
        num = psub(e, pmul(h, dg, p), p)
        dh, r2 = pdivmod(num, g, p)
        assert not r2, "Hensel step failed"
        g = [(x + modk * (dg[i] if i < len(dg) else 0)) % nxt for i, x in enumerate(g)]
        h = [(x + modk * (dh[i] if i < len(dh) else 0)) % nxt for i, x in enumerate(h)]
        modk = nxt
    return g


def kernel_poly_via_lifting(E, ell, rng=None, max_bits=1600):
    """Monic degree-(ell-1)/2 kernel polynomial in K[x] of a K-rational
    ell-isogeny, or None."""
    rng = rng or random.Random(20170418)
    K = E.field
    d = (ell - 1) // 2
    D = division_polys(E, max(ell, 4))
    A, B, shift = short_model(E)
    from qcurves.kpoly import Poly

    psi = D[ell]  # on the short model
    # back to original coordinates: x_short = x + shift
    psi_orig = psi.compose(Poly([shift, K.one]))
    f = poly_content_scale(psi_orig)
    lead_norm = int(f.c[-1].norm())
    for p in _split_prime_stream(K):
        if lead_norm % p == 0:
            continue
        P1, P2 = split_prime(K, p)
        k = residue_field(P1)
        try:
            f1 = reduce_poly_mod(f, P1, k)
            f2 = reduce_poly_mod(f, P2, k)
        except Exception:
            continue
        if len(f1) - 1 != f.deg or len(fq_polygcd(k, f1, _fq_deriv(k, f1))) > 1:
            continue
        fac1 = fq_factor(k, f1, rng)
        fac2 = fq_factor(k, f2, rng)
        cands1 = _degree_d_products(k, fac1, d)
        cands2 = _degree_d_products(k, fac2, d)
        if not cands1 or not cands2:
            return None
        return _reconstruct_factor(E, f, d, p, P1, P2, k, cands1, cands2, max_bits)
    return None


def _degree_d_products(k, factors, d):
    from itertools import combinations

    out = []
    idx = range(len(factors))
    for r in range(1, d + 1):
        for combo in combinations(idx, r):
            degs = sum(len(factors[i]) - 1 for i in combo)
            if degs == d:
                prod = [k.one]
                for i in combo:
                    prod = fq_polymul(k, prod, factors[i])
                out.append(prod)
    return out


def _reconstruct_factor(E, f, d, p, P1, P2, k, cands1, cands2, max_bits):
    from qcurves.kpoly import Poly

    K = E.field
    coeffs = [(int(a), int(b)) for a, b in (v.omega_coords() for v in f.c)]
    lead_inv_mod = None
    bits = 192
    while bits <= max_bits:
        k_exp = max(2, int(bits * math.log(2) / math.log(p)) + 1)
        mod = p**k_exp
        w1 = _lift_root_mod_pk(K, P1, k_exp)
        w2 = _lift_root_mod_pk(K, P2, k_exp)
        fv1 = [(a + b * w1) % mod for a, b in coeffs]
        fv2 = [(a + b * w2) % mod for a, b in coeffs]
        linv1 = pow(fv1[-1], -1, mod)
        linv2 = pow(fv2[-1], -1, mod)
        fv1m = [c * linv1 % mod for c in fv1]
        fv2m = [c * linv2 % mod for c in fv2]
        lifted1 = [hensel_lift_factor(fv1m, [c[0] for c in g], p, mod) for g in cands1]
        lifted2 = [hensel_lift_factor(fv2m, [c[0] for c in g], p, mod) for g in cands2]
        dw_inv = pow((w1 - w2) % mod, -1, mod)
        for g1 in lifted1:
            for g2 in lifted2:
                if len(g1) != len(g2):
                    continue
                cand = []
                ok = True
                for c1, c2 in zip(g1, g2):
                    v = (c1 - c2) * dw_inv % mod
                    u = (c1 - v * w1) % mod
                    ur = _rational_reconstruct(u, mod)
                    vr = _rational_reconstruct(v, mod)
                    if ur is None or vr is None:
                        ok = False
                        break
                    cand.append(K.from_omega_coords(ur, vr))
                if not ok:
                    continue
                Dpoly = Poly(cand)
                quot, rem = f.divmod(Dpoly)
                if not rem:
                    return Dpoly
        bits *= 2
    return None


def velu_from_kernel_poly(E, Dpoly):
    """Normalized quotient isogeny from a monic odd-degree kernel polynomial.

    Uses Sum P(x_i)/(x - x_i) = (P D' mod D)/D to stay in K[x] even when
    the individual kernel x-coordinates generate an extension field.
    """
    from qcurves.kpoly import Poly, RationalFunc

    K = E.field
    one = Poly([K.one])
    b2, b4, b6 = E.b2, E.b4, E.b6
    x = Poly([K.zero, K.one])
    tpol = 6 * x * x + b2 * x + Poly([b4])
    upol = 4 * x**3 + b2 * x * x + 2 * b4 * x + Poly([b6])
    Dp = Dpoly.derivative()
    # power sums of the kernel roots via Newton from the coefficients
    dd = Dpoly.deg
    esym = [Dpoly.c[dd - i] * ((-1) ** i) for i in range(dd + 1)]  # e_0..e_dd
    psums = [K(dd)]
    for k in range(1, 4):
        acc = K.zero
        for i in range(1, k):
            acc = acc + ((-1) ** (i - 1)) * esym[i] * psums[k - i] if i <= dd else acc
        term = ((-1) ** (k - 1)) * K(k) * esym[k] if k <= dd else K.zero
        psums.append(acc + term)
    p1, p2, p3 = psums[1], psums[2], psums[3]
    t_sum = 6 * p2 + b2 * p1 + K(dd) * b4
    w_sum = 4 * p3 + b2 * p2 + 2 * b4 * p1 + K(dd) * b6 + (
        6 * p3 + b2 * p2 + b4 * p1
    )
    # w = sum(u_i + x_i t_i); x*t(x) = 6x^3 + b2 x^2 + b4 x
    target = CurveModel(K, E.a1, E.a2, E.a3, E.a4 - 5 * t_sum, E.a6 - b2 * t_sum - 7 * w_sum)
    T = (tpol * Dp) % Dpoly
    U = (upol * Dp) % Dpoly
    g = RationalFunc(
        x * Dpoly * Dpoly + T * Dpoly + (U * Dp - U.derivative() * Dpoly),
        Dpoly * Dpoly,
    )
    gp = RationalFunc(
        g.num.derivative() * g.den - g.num * g.den.derivative(), g.den * g.den
    )
    a1x_a3 = RationalFunc(Poly([E.a3, E.a1]), one)
    A1g = RationalFunc(Poly([target.a1]), one) * g
    A3c = RationalFunc(Poly([target.a3]), one)
    kmap = (gp * a1x_a3 - A1g - A3c) * RationalFunc(Poly([K(Fraction(1, 2))]), one)
    return IsogenyMap(E, target, g, gp, kmap)


def derive_via_kernel_poly(E, ell, alpha_target):
    Dpoly = kernel_poly_via_lifting(E, ell)
    assert Dpoly is not None, "no rational kernel polynomial found"
    phi = velu_from_kernel_poly(E, Dpoly)
    nE = E.conjugate()
    urst = isomorphism_urst(phi.target, nE)
    assert urst is not None, "quotient not isomorphic to the conjugate curve"
    mu = compose(urst_isogeny(phi.target, urst), phi)
    alpha = pullback_scalar(mu)
    if alpha == -alpha_target:
        mu = mu.negate()
        alpha = pullback_scalar(mu)
    assert alpha == alpha_target, (alpha, alpha_target)
    assert verify_isogeny(mu).m == int(alpha.norm())
    return mu
