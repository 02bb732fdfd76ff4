"""Weierstrass curves over small finite fields: group law and counting.

Points are (x, y) pairs of field tuples, None is the point at infinity.
The chord-tangent formulas are used unchanged on the smooth locus of a
singular cubic (multiplicative or additive reduction), which is all the
sign-determination tests need.
"""

from __future__ import annotations

import math
import random

from sympy import factorint

from .qfield import ResidueField

NAIVE_LIMIT = 10**4  # point counting: enumerate below, BSGS above


class BadReduction(ValueError):
    pass


class NoSuitablePoint(RuntimeError):
    pass


class CurveFq:
    """y^2 + a1 xy + a3 y = x^3 + a2 x^2 + a4 x + a6 over a ResidueField."""

    def __init__(self, k: ResidueField, a_invariants):
        self.k = k
        self.a1, self.a2, self.a3, self.a4, self.a6 = a_invariants
        kf = k
        a1, a2, a3, a4, a6 = a_invariants
        b2 = kf.add(kf.mul(a1, a1), kf.smul(4, a2))
        b4 = kf.add(kf.smul(2, a4), kf.mul(a1, a3))
        b6 = kf.add(kf.mul(a3, a3), kf.smul(4, a6))
        b8 = kf.sub(
            kf.add(
                kf.add(kf.mul(kf.mul(a1, a1), a6), kf.smul(4, kf.mul(a2, a6))),
                kf.add(kf.mul(a2, kf.mul(a3, a3)), kf.neg(kf.mul(a1, kf.mul(a3, a4)))),
            ),
            kf.mul(a4, a4),
        )
        self.b2, self.b4, self.b6, self.b8 = b2, b4, b6, b8
        c4 = kf.sub(kf.mul(b2, b2), kf.smul(24, b4))
        c6 = kf.add(
            kf.sub(kf.smul(36, kf.mul(b2, b4)), kf.mul(kf.mul(b2, b2), b2)),
            kf.neg(kf.smul(216, b6)),
        )
        self.c4, self.c6 = c4, c6
        disc = kf.sub(
            kf.add(
                kf.neg(kf.mul(kf.mul(b2, b2), b8)),
                kf.sub(kf.neg(kf.smul(8, kf.pow(b4, 3))), kf.smul(27, kf.mul(b6, b6))),
            ),
            kf.neg(kf.smul(9, kf.mul(b2, kf.mul(b4, b6)))),
        )
        self.disc = disc
        self._order = None
        self._sing = None

    # -- basic point operations -------------------------------------------

    def is_smooth(self):
        return not self.k.is_zero(self.disc)

    def rhs(self, x):
        k = self.k
        return k.add(
            k.add(k.mul(k.mul(x, x), x), k.mul(self.a2, k.mul(x, x))),
            k.add(k.mul(self.a4, x), self.a6),
        )

    def on_curve(self, P):
        if P is None:
            return True
        k = self.k
        x, y = P
        lhs = k.add(
            k.mul(y, y), k.add(k.mul(self.a1, k.mul(x, y)), k.mul(self.a3, y))
        )
        return lhs == self.rhs(x)

    def neg(self, P):
        if P is None:
            return None
        k = self.k
        x, y = P
        return (x, k.neg(k.add(y, k.add(k.mul(self.a1, x), self.a3))))

    def add(self, P, Q):
        if P is None:
            return Q
        if Q is None:
            return P
        k = self.k
        x1, y1 = P
        x2, y2 = Q
        if x1 == x2:
            if y2 == k.neg(k.add(y1, k.add(k.mul(self.a1, x1), self.a3))):
                return None
            # tangent
            num = k.add(
                k.sub(
                    k.add(k.smul(3, k.mul(x1, x1)), k.smul(2, k.mul(self.a2, x1))),
                    k.mul(self.a1, y1),
                ),
                self.a4,
            )
            den = k.add(k.smul(2, y1), k.add(k.mul(self.a1, x1), self.a3))
            lam = k.div(num, den)
        else:
            lam = k.div(k.sub(y2, y1), k.sub(x2, x1))
        nu = k.sub(y1, k.mul(lam, x1))
        x3 = k.sub(
            k.sub(k.add(k.mul(lam, lam), k.mul(self.a1, lam)), self.a2),
            k.add(x1, x2),
        )
        y3 = k.neg(k.add(k.add(k.mul(k.add(lam, self.a1), x3), nu), self.a3))
        return (x3, y3)

    def mul(self, n: int, P):
        if n < 0:
            return self.mul(-n, self.neg(P))
        R = None
        while n:
            if n & 1:
                R = self.add(R, P)
            P = self.add(P, P)
            n >>= 1
        return R

    # -- singular curves ----------------------------------------------------

    def singular_point(self):
        """The unique singular point of a singular Weierstrass cubic."""
        if self._sing is not None:
            return self._sing
        k = self.k
        assert not self.is_smooth()
        if k.p != 2:
            # y0 = -(a1 x0 + a3)/2 with x0 a multiple root of the 2-division cubic
            f = [self.b6, k.smul(2, self.b4), self.b2, k.make(4)]
            fp = [k.smul(2, self.b4), k.smul(2, self.b2), k.make(12)]
            from .kpoly import fq_polygcd

            g = fq_polygcd(k, f, fp)
            if len(g) == 2:
                x0 = k.neg(g[0])
            else:
                # triple root: roots of quadratic gcd coincide
                from .kpoly import fq_roots

                rts = fq_roots(k, g)
                x0 = rts[0]
            inv2 = k.inv(k.make(2))
            y0 = k.neg(k.mul(k.add(k.mul(self.a1, x0), self.a3), inv2))
        else:
            if not k.is_zero(self.a1):
                x0 = k.div(self.a3, self.a1)
                y0 = k.div(k.add(k.mul(x0, x0), self.a4), self.a1)
            else:
                # char 2, a1 = 0: x0^2 = a4, then y0^2 = rhs(x0)
                x0 = self.k.sqrt(self.a4)
                y0 = self.k.sqrt(self.rhs(x0))
        self._sing = (x0, y0)
        return self._sing

    def reduction_kind(self):
        """'good' | 'split_mult' | 'nonsplit_mult' | 'additive'."""
        if self.is_smooth():
            return "good"
        k = self.k
        x0, y0 = self.singular_point()
        # tangent cone at the singular point: Y^2 + a1' XY - a2' X^2
        E2 = self.shift(x0, y0)
        a1s, a2s = E2.a1, E2.a2
        # node iff T^2 + a1s T - a2s has distinct roots; cusp iff double root
        if k.p == 2:
            distinct = not k.is_zero(a1s)
        else:
            disc = k.add(k.mul(a1s, a1s), k.smul(4, a2s))
            distinct = not k.is_zero(disc)
        if not distinct:
            return "additive"
        # split iff the tangent quadratic has roots in k
        from .kpoly import fq_roots

        rts = fq_roots(k, [k.neg(a2s), a1s, k.one])
        return "split_mult" if rts else "nonsplit_mult"

    def shift(self, x0, y0):
        """Curve in coordinates centered at (x0, y0) (r = x0, t = y0)."""
        k = self.k
        a1, a2, a3, a4, a6 = self.a1, self.a2, self.a3, self.a4, self.a6
        r, t = x0, y0
        a1p = a1
        a2p = k.add(a2, k.smul(3, r))
        a3p = k.add(a3, k.add(k.mul(a1, r), k.smul(2, t)))
        # a4' = a4 + 2 a2 r + 3 r^2 - a1 t   (s = 0)
        a4p = k.sub(
            k.add(a4, k.add(k.smul(2, k.mul(a2, r)), k.smul(3, k.mul(r, r)))),
            k.mul(a1, t),
        )
        a6p = k.sub(
            k.add(
                a6,
                k.add(
                    k.mul(r, a4),
                    k.add(k.mul(k.mul(r, r), a2), k.mul(r, k.mul(r, r))),
                ),
            ),
            k.add(k.mul(t, a3), k.add(k.mul(t, t), k.mul(r, k.mul(t, a1)))),
        )
        return CurveFq(k, (a1p, a2p, a3p, a4p, a6p))

    def smooth_order(self):
        """Order of the group of nonsingular points."""
        kind = self.reduction_kind()
        q = self.k.order
        if kind == "good":
            return self.order()
        return {"split_mult": q - 1, "nonsplit_mult": q + 1, "additive": q}[kind]

    # -- point sampling -----------------------------------------------------

    def random_point_raw(self, rng: random.Random, smooth_only=False):
        k = self.k
        q = k.order
        sing = None if self.is_smooth() else self.singular_point()
        for _ in range(64 * (int(math.log2(q)) + 2)):
            if k.degree == 1:
                x = k.make(rng.randrange(q))
            else:
                x = k.make(rng.randrange(k.p), rng.randrange(k.p))
            ys = self.lift_x(x)
            if not ys:
                continue
            y = ys[rng.randrange(len(ys))]
            if smooth_only and sing == (x, y):
                continue
            return (x, y)
        raise NoSuitablePoint("no affine point found")

    def lift_x(self, x):
        """All y with (x, y) on the curve."""
        k = self.k
        b = k.add(k.mul(self.a1, x), self.a3)  # y^2 + b y - rhs = 0
        c = self.rhs(x)
        if k.p == 2:
            return [y for y in k.elements() if self.on_curve((x, y))]
        disc = k.add(k.mul(b, b), k.smul(4, c))
        s = k.sqrt(disc)
        if s is None:
            return []
        inv2 = k.inv(k.make(2))
        y1 = k.mul(k.sub(s, b), inv2)
        y2 = k.mul(k.sub(k.neg(s), b), inv2)
        return [y1] if y1 == y2 else [y1, y2]

    def points(self):
        """All affine points; only sensible for tiny fields."""
        return [
            (x, y)
            for x in self.k.elements()
            for y in self.k.elements()
            if self.on_curve((x, y))
        ]

    # -- order computation ----------------------------------------------------

    def order(self, rng=None):
        if self._order is None:
            if not self.is_smooth():
                raise BadReduction("point counting on a singular curve")
            q = self.k.order
            if q <= NAIVE_LIMIT:
                self._order = self._order_naive()
            else:
                self._order = self._order_bsgs(rng or random.Random(0x5EED))
        return self._order

    def trace(self):
        return self.k.order + 1 - self.order()

    def _order_naive(self):
        k = self.k
        if k.p == 2:
            return len(self.points()) + 1
        count = k.order + 1
        half = (k.order - 1) // 2
        for x in k.elements():
            b = k.add(k.mul(self.a1, x), self.a3)
            disc = k.add(k.mul(b, b), k.smul(4, self.rhs(x)))
            if k.is_zero(disc):
                continue
            u = k.pow(disc, half)
            count += 1 if u == k.one else -1
        return count

    def _point_order_multiple(self, P):
        """Some n > 0 in the Hasse window with nP = O, via baby-step giant-step."""
        q = self.k.order
        s = math.isqrt(q)
        lo, hi = q + 1 - 2 * s - 1, q + 1 + 2 * s + 1
        m = math.isqrt(hi - lo) + 1
        baby = {}
        R = P
        for j in range(1, m + 1):
            if R is None:
                return j
            baby.setdefault(R, j)
            R = self.add(R, P)
        mP = self.mul(m, P)
        G = self.mul(lo, P)
        hits = []
        for i in range(m + 2):
            base = lo + i * m
            if G is None:
                hits.append(base)
            else:
                j = baby.get(G)
                if j is not None:
                    hits.append(base - j)
                j = baby.get(self.neg(G))
                if j is not None:
                    hits.append(base + j)
            G = self.add(G, mP)
        for n in sorted(set(hits)):
            if n > 0 and self.mul(n, P) is None:
                return n
        raise RuntimeError("BSGS failed to locate the point order")

    def point_order(self, P):
        n = self._point_order_multiple(P)
        for ell in factorint(n):
            while n % ell == 0 and self.mul(n // ell, P) is None:
                n //= ell
        return n

    def _hasse_candidates(self, lcm_orders):
        q = self.k.order
        s = math.isqrt(q)
        lo, hi = q + 1 - 2 * s, q + 1 + 2 * s
        first = (lo + lcm_orders - 1) // lcm_orders * lcm_orders
        return list(range(first, hi + 1, lcm_orders))

    def _order_bsgs(self, rng):
        q = self.k.order
        lcm_orders = 1
        for _ in range(10):
            P = self.random_point_raw(rng)
            lcm_orders = math.lcm(lcm_orders, self.point_order(P))
            cands = self._hasse_candidates(lcm_orders)
            if len(cands) == 1:
                return cands[0]
        # combine with the quadratic twist: |E| + |E^tw| = 2q + 2
        tw = self.quadratic_twist(rng)
        lcm_tw = 1
        for _ in range(10):
            P = tw.random_point_raw(rng)
            lcm_tw = math.lcm(lcm_tw, tw.point_order(P))
            cands = [
                n
                for n in self._hasse_candidates(lcm_orders)
                if (2 * q + 2 - n) % lcm_tw == 0
            ]
            if len(cands) == 1:
                return cands[0]
        raise RuntimeError(f"group order ambiguous over F_{q}")

    def quadratic_twist(self, rng):
        """A quadratic twist (char != 2), via y^2 = x^3 + ... short form."""
        k = self.k
        assert k.p != 2
        # complete the square: y^2 = x^3 + (b2/4) x^2 + (b4/2) x + b6/4
        inv4 = k.inv(k.make(4))
        A2 = k.mul(self.b2, inv4)
        A4 = k.mul(self.b4, k.inv(k.make(2)))
        A6 = k.mul(self.b6, inv4)
        u = k.one
        while k.is_zero(u) or k.is_square(u):
            if k.degree == 1:
                u = k.make(rng.randrange(1, k.order))
            else:
                u = k.make(rng.randrange(k.p), rng.randrange(k.p))
        return CurveFq(
            k,
            (
                k.zero,
                k.mul(u, A2),
                k.zero,
                k.mul(k.mul(u, u), A4),
                k.mul(k.mul(k.mul(u, u), u), A6),
            ),
        )

    def random_smooth_point_coprime(self, avoid: int, rng: random.Random):
        """Smooth-locus point whose order is coprime to ``avoid``.

        Multiplies random points by the avoid-part of the group order, per
        the bounded-retry contract; raises NoSuitablePoint if the coprime
        part of the group is trivial.
        """
        N = self.smooth_order()
        n1 = 1
        rem = N
        if avoid > 1:
            for ell in factorint(avoid):
                while rem % ell == 0:
                    rem //= ell
                    n1 *= ell
        if rem == 1:
            raise NoSuitablePoint(
                f"all smooth points have order dividing {avoid}-smooth part"
            )
        for _ in range(64):
            P = self.random_point_raw(rng, smooth_only=True)
            Q = self.mul(n1, P)
            if Q is not None:
                return Q
        raise NoSuitablePoint("no point of coprime order found in 64 trials")
