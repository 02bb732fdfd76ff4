"""Dense polynomials and rational functions over K, plus root finding.

Root finding in K avoids any general factorization machinery: roots are
located modulo a well-chosen split prime, Hensel lifted, recombined across
the two conjugate primes and rationally reconstructed, then verified
exactly.  A prime at which the reduction has no root certifies that no
K-rational root exists.
"""

from __future__ import annotations

import math
from fractions import Fraction
from itertools import count

from .qfield import (
    FieldElement,
    PrimeIdeal,
    QuadraticField,
    ResidueField,
    _lift_root_mod_pk,
    kronecker,
    reduce_mod,
    residue_field,
    split_prime,
)


class Poly:
    """Dense univariate polynomial; coefficients are any field type
    supporting +,-,*,/ (FieldElement or Fraction)."""

    __slots__ = ("c",)

    def __init__(self, coeffs):
        c = list(coeffs)
        while c and not c[-1]:
            c.pop()
        self.c = tuple(c)

    @property
    def deg(self):
        return len(self.c) - 1  # deg(0) = -1

    def __bool__(self):
        return bool(self.c)

    def __eq__(self, other):
        return isinstance(other, Poly) and self.c == other.c

    def __hash__(self):
        return hash(self.c)

    def __repr__(self):
        return "Poly" + repr(list(self.c))

    def __add__(self, other):
        a, b = self.c, other.c
        if len(a) < len(b):
            a, b = b, a
        out = list(a)
        for i, v in enumerate(b):
            out[i] = out[i] + v
        return Poly(out)

    def __neg__(self):
        return Poly([-v for v in self.c])

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, other):
        if not isinstance(other, Poly):
            return Poly([v * other for v in self.c])
        a, b = self.c, other.c
        if not a or not b:
            return Poly([])
        out = [a[0] * b[0] * 0] * (len(a) + len(b) - 1)
        for i, u in enumerate(a):
            if not u:
                continue
            for j, v in enumerate(b):
                out[i + j] = out[i + j] + u * v
        return Poly(out)

    __rmul__ = __mul__

    def __pow__(self, n):
        result = Poly([self.c[-1] / self.c[-1]]) if self.c else Poly([1])
        base = self
        while n:
            if n & 1:
                result = result * base
            base = base * base
            n >>= 1
        return result

    def divmod(self, other):
        if not other:
            raise ZeroDivisionError("poly division by zero")
        num = list(self.c)
        den = other.c
        inv = 1 / den[-1]
        q = [num[0] * 0] * max(0, len(num) - len(den) + 1)
        for i in range(len(num) - len(den), -1, -1):
            t = num[i + len(den) - 1] * inv
            q[i] = t
            if t:
                for j, v in enumerate(den):
                    num[i + j] = num[i + j] - t * v
        return Poly(q), Poly(num[: len(den) - 1])

    def __mod__(self, other):
        return self.divmod(other)[1]

    def __floordiv__(self, other):
        return self.divmod(other)[0]

    def monic(self):
        if not self:
            return self
        inv = 1 / self.c[-1]
        return Poly([v * inv for v in self.c])

    def derivative(self):
        return Poly([self.c[i] * i for i in range(1, len(self.c))])

    def __call__(self, x):
        acc = None
        for v in reversed(self.c):
            acc = v if acc is None else acc * x + v
        if acc is None:
            return x * 0
        return acc

    def compose(self, other: "Poly") -> "Poly":
        acc = Poly([])
        for v in reversed(self.c):
            acc = acc * other + Poly([v])
        return acc

    def shift(self, k: int) -> "Poly":
        """Multiply by x^k."""
        if not self:
            return self
        zero = self.c[0] * 0
        return Poly([zero] * k + list(self.c))


def poly_gcd(a: Poly, b: Poly) -> Poly:
    while b:
        a, b = b, a % b
    return a.monic() if a else a


def poly_content_scale(f: Poly):
    """Scale f over K (or Q) so coefficients are integral; returns new poly."""
    den = 1
    for v in f.c:
        if isinstance(v, FieldElement):
            den = math.lcm(den, v.denominator())
        else:
            den = math.lcm(den, Fraction(v).denominator)
    return f * den


# ---------------------------------------------------------------------------
# rational functions


class RationalFunc:
    """num/den over K, normalized: gcd removed, den monic."""

    __slots__ = ("num", "den")

    def __init__(self, num: Poly, den: Poly, reduce=True):
        if not den:
            raise ZeroDivisionError("rational function with zero denominator")
        if reduce and num:
            g = poly_gcd(num, den)
            if g.deg > 0:
                num, den = num // g, den // g
        if den:
            inv = 1 / den.c[-1]
            num, den = num * inv, den * inv
        self.num = num
        self.den = den

    def __add__(self, other):
        return RationalFunc(
            self.num * other.den + other.num * self.den, self.den * other.den
        )

    def __sub__(self, other):
        return RationalFunc(
            self.num * other.den - other.num * self.den, self.den * other.den
        )

    def __mul__(self, other):
        return RationalFunc(self.num * other.num, self.den * other.den)

    def __truediv__(self, other):
        if not other.num:
            raise ZeroDivisionError
        return RationalFunc(self.num * other.den, self.den * other.num)

    def __neg__(self):
        return RationalFunc(-self.num, self.den, reduce=False)

    def __eq__(self, other):
        return self.num * other.den == other.num * self.den

    def __bool__(self):
        return bool(self.num)

    def is_constant(self):
        return self.num.deg <= 0 and self.den.deg <= 0

    def constant_value(self):
        assert self.is_constant()
        if not self.num:
            return self.den.c[0] * 0
        return self.num.c[0] / self.den.c[0]

    def compose(self, g: "RationalFunc") -> "RationalFunc":
        """self(g(x))."""
        k = max(self.num.deg, self.den.deg)
        one = self.den.c[-1] / self.den.c[-1]
        pow_gn, pow_gd = [Poly([one])], [Poly([one])]
        for _ in range(k):
            pow_gn.append(pow_gn[-1] * g.num)
            pow_gd.append(pow_gd[-1] * g.den)
        num_acc, den_acc = Poly([]), Poly([])
        for i, v in enumerate(self.num.c):
            if v:
                num_acc = num_acc + Poly([v]) * pow_gn[i] * pow_gd[k - i]
        for i, v in enumerate(self.den.c):
            if v:
                den_acc = den_acc + Poly([v]) * pow_gn[i] * pow_gd[k - i]
        return RationalFunc(num_acc, den_acc)


# ---------------------------------------------------------------------------
# polynomial arithmetic over residue fields (coefficients are field tuples)


def fq_trim(f):
    while f and f[-1] == (0, 0):
        f.pop()
    return f


def fq_polymul(k: ResidueField, f, g):
    if not f or not g:
        return []
    out = [(0, 0)] * (len(f) + len(g) - 1)
    for i, u in enumerate(f):
        if u == (0, 0):
            continue
        for j, v in enumerate(g):
            out[i + j] = k.add(out[i + j], k.mul(u, v))
    return fq_trim(out)


def fq_polymod(k: ResidueField, f, g):
    f = list(f)
    dg = len(g) - 1
    inv = k.inv(g[-1])
    while len(f) - 1 >= dg and f:
        t = k.mul(f[-1], inv)
        off = len(f) - 1 - dg
        for j, v in enumerate(g):
            f[off + j] = k.sub(f[off + j], k.mul(t, v))
        fq_trim(f)
    return f


def fq_polygcd(k: ResidueField, f, g):
    f, g = fq_trim(list(f)), fq_trim(list(g))
    while g:
        f, g = g, fq_polymod(k, f, g)
    if f:
        inv = k.inv(f[-1])
        f = [k.mul(v, inv) for v in f]
    return f


def fq_polypowmod(k: ResidueField, base, n: int, mod):
    result = [k.one]
    base = fq_polymod(k, base, mod)
    while n:
        if n & 1:
            result = fq_polymod(k, fq_polymul(k, result, base), mod)
        base = fq_polymod(k, fq_polymul(k, base, base), mod)
        n >>= 1
    return result


def fq_roots(k: ResidueField, f, rng=None) -> list:
    """Roots in k of a polynomial over k (with multiplicity discarded)."""
    f = fq_trim(list(f))
    if not f:
        raise ValueError("zero polynomial")
    if len(f) == 1:
        return []
    q = k.order
    if q <= 4096:
        # brute force scan
        return [x for x in k.elements() if _fq_eval(k, f, x) == (0, 0)]
    # f <- gcd(f, x^q - x): product of distinct linear factors
    xq = fq_polypowmod(k, [(0, 0), k.one], q, f)
    xq_minus_x = fq_trim([k.sub(xq[i] if i < len(xq) else (0, 0), k.one if i == 1 else (0, 0)) for i in range(max(len(xq), 2))])
    lin = fq_polygcd(k, f, xq_minus_x)
    if len(lin) <= 1:
        return []
    import random as _random

    rng = rng or _random.Random(0xC0FFEE)
    roots = []
    _cz_split(k, lin, roots, rng)
    return roots


def _fq_eval(k: ResidueField, f, x):
    acc = (0, 0)
    for v in reversed(f):
        acc = k.add(k.mul(acc, x), v)
    return acc


def _cz_split(k: ResidueField, f, roots, rng):
    """Equal-degree (degree 1) splitting; f = product of distinct linears."""
    if len(f) == 2:
        # monic linear: x + c
        inv = k.inv(f[1])
        roots.append(k.neg(k.mul(f[0], inv)))
        return
    q = k.order
    while True:
        a = k.make(rng.randrange(q), rng.randrange(q) if k.degree == 2 else 0)
        # gcd(f, (x+a)^((q-1)/2) - 1)
        h = fq_polypowmod(k, [a, k.one], (q - 1) // 2, f)
        h = list(h)
        if h:
            h[0] = k.sub(h[0], k.one)
        else:
            h = [k.neg(k.one)]
        fq_trim(h)
        g = fq_polygcd(k, f, h)
        if 0 < len(g) - 1 < len(f) - 1:
            _cz_split(k, g, roots, rng)
            _cz_split(k, [v for v in _fq_exactdiv(k, f, g)], roots, rng)
            return


def _fq_exactdiv(k: ResidueField, f, g):
    f = list(f)
    dg = len(g) - 1
    inv = k.inv(g[-1])
    out = [(0, 0)] * (len(f) - dg)
    while len(f) - 1 >= dg and f:
        t = k.mul(f[-1], inv)
        off = len(f) - 1 - dg
        out[off] = t
        for j, v in enumerate(g):
            f[off + j] = k.sub(f[off + j], k.mul(t, v))
        fq_trim(f)
    return fq_trim(out)


# ---------------------------------------------------------------------------
# roots of K[x] polynomials that lie in K


def reduce_poly_mod(f: Poly, P: PrimeIdeal, k: ResidueField):
    return fq_trim([reduce_mod(v, P, k) for v in f.c])


def k_rational_roots(f: Poly, K: QuadraticField, max_bits: int = 2400) -> list[FieldElement]:
    """All roots of f in K, found by lifting mod a split prime.

    Exact: returned roots are verified; an empty list is certified by a
    prime at which the reduction has no root, or by exhausting the lift
    precision (heights beyond ~max_bits bits of numerator are out of
    reach, which no input in this problem domain approaches).
    """
    if f.deg <= 0:
        return []
    f = poly_content_scale(f)
    lead_norm = int(f.c[-1].norm() if isinstance(f.c[-1], FieldElement) else f.c[-1])
    rejected = 0
    squarefreed = False
    stream = _split_prime_stream(K)
    while True:
        p = next(stream)
        if lead_norm % p == 0:
            continue
        P1, P2 = split_prime(K, p)
        k = residue_field(P1)
        try:
            f1 = reduce_poly_mod(f, P1, k)
            f2 = reduce_poly_mod(f, P2, k)
        except Exception:
            continue
        if len(f1) - 1 != f.deg or len(f2) - 1 != f.deg:
            continue
        # a squarefree reduction certifies f squarefree and keeps Newton regular
        if len(fq_polygcd(k, f1, _fq_deriv(k, f1))) > 1:
            rejected += 1
            if rejected >= 8 and not squarefreed:
                # f itself has repeated roots: strip them once (costly path)
                g = poly_gcd(f, f.derivative())
                if g.deg > 0:
                    f = f // g
                    f = poly_content_scale(f)
                    lead_norm = int(f.c[-1].norm())
                squarefreed = True
            continue
        r1 = [t[0] for t in fq_roots(k, f1)]
        r2 = [t[0] for t in fq_roots(k, f2)]
        if not r1 or not r2:
            return []  # certified: a K-root would reduce mod both primes
        return _lift_and_reconstruct(f, K, p, P1, P2, r1, r2, max_bits)


def _fq_deriv(k: ResidueField, f):
    return fq_trim([k.smul(i, f[i]) for i in range(1, len(f))])


def _split_prime_stream(K: QuadraticField):
    from sympy import isprime

    for p in count(5):
        if p % 2 and isprime(p) and kronecker(K.disc, p) == 1:
            yield p


def _lift_and_reconstruct(f, K, p, P1, P2, r1, r2, max_bits):
    # integer coefficient vectors of f at each prime, on demand per modulus
    coeffs = [v.omega_coords() for v in f.c]  # (a, b) integer Fractions
    coeffs = [(int(a), int(b)) for a, b in coeffs]

    def coeff_vec(w, mod):
        return [(a + b * w) % mod for a, b in coeffs]

    # independent check prime for cheap candidate filtering
    stream = _split_prime_stream(K)
    while True:
        pchk = next(stream)
        if pchk == p:
            continue
        Pc = split_prime(K, pchk)[0]
        wc = _lift_root_mod_pk(K, Pc, 1)
        fvc = coeff_vec(wc, pchk)
        if fvc[-1] % pchk:
            break

    def plausible(ur, vr, mod_unused):
        if ur.denominator % pchk == 0 or vr.denominator % pchk == 0:
            return True  # cannot test, fall through to exact check
        x = (
            ur.numerator * pow(ur.denominator, -1, pchk)
            + vr.numerator * pow(vr.denominator, -1, pchk) * wc
        ) % pchk
        return _int_poly_eval(fvc, x, pchk) == 0

    bits = 128
    roots = []
    seen = set()
    nmodular = len(r1)
    while bits <= max_bits:
        k_exp = max(2, int(bits * math.log(2) / math.log(p)) + 1)
        mod = p**k_exp
        w1 = _lift_root_mod_pk(K, P1, k_exp)
        w2 = _lift_root_mod_pk(K, P2, k_exp)
        fv1 = coeff_vec(w1, mod)
        fv2 = coeff_vec(w2, mod)
        lifted1 = [_newton_lift(fv1, r, p, mod) for r in r1]
        lifted2 = [_newton_lift(fv2, r, p, mod) for r in r2]
        dw = (w1 - w2) % mod
        dw_inv = pow(dw, -1, mod)  # invertible: p is unramified
        for s1 in lifted1:
            for s2 in lifted2:
                v = (s1 - s2) * dw_inv % mod
                u = (s1 - v * w1) % mod
                ur = _rational_reconstruct(u, mod)
                vr = _rational_reconstruct(v, mod)
                if ur is None or vr is None:
                    continue
                if not plausible(ur, vr, mod):
                    continue
                cand = K.from_omega_coords(ur, vr)
                if cand in seen:
                    continue
                if not f(cand):
                    seen.add(cand)
                    roots.append(cand)
        if len(roots) >= nmodular:
            break
        bits *= 2
    return roots


def _newton_lift(fv, r, p, mod):
    """Lift a simple root r of fv mod p to mod (a power of p)."""
    cur = p
    while cur < mod:
        cur = min(cur * cur, mod)
        fr = _int_poly_eval(fv, r, cur)
        fpr = _int_poly_deriv_eval(fv, r, cur)
        r = (r - fr * pow(fpr, -1, cur)) % cur
    return r


def _int_poly_eval(fv, x, mod):
    acc = 0
    for v in reversed(fv):
        acc = (acc * x + v) % mod
    return acc


def _int_poly_deriv_eval(fv, x, mod):
    acc = 0
    for i in range(len(fv) - 1, 0, -1):
        acc = (acc * x + i * fv[i]) % mod
    return acc


def _rational_reconstruct(a: int, m: int):
    """Balanced rational reconstruction of a mod m; None if not found."""
    a %= m
    if a == 0:
        return Fraction(0)
    bound = math.isqrt(m // 2)
    r0, r1 = m, a
    s0, s1 = 0, 1
    while r1 > bound:
        qq = r0 // r1
        r0, r1 = r1, r0 - qq * r1
        s0, s1 = s1, s0 - qq * s1
    if r1 == 0 or abs(s1) > bound or math.gcd(r1, abs(s1)) != 1:
        return None
    return Fraction(r1, s1) if s1 > 0 else Fraction(-r1, -s1)
