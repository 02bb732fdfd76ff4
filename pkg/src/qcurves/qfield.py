"""Exact arithmetic in a quadratic number field K = Q(sqrt(d)).

Field elements are stored on the basis (1, sqrt(d)) with rational
coordinates.  Integrality, prime splitting, residue fields and valuations
are all derived from the integral basis (1, w) where w = (1+sqrt(d))/2
when d = 1 mod 4 and w = sqrt(d) otherwise.

Only ideal *norms* are ever needed downstream (denominator ideals and the
Weierstrass ideal enter the final bound through their norms alone), so no
general fractional-ideal arithmetic is implemented.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

from sympy import factorint


class QFieldError(ValueError):
    """Base for all input errors raised by this module."""


class NonSquarefree(QFieldError):
    pass


class DegenerateD(QFieldError):
    pass


class NotPIntegral(QFieldError):
    """Element has the prime in its denominator."""


class ZeroElement(QFieldError):
    pass


def is_squarefree(n: int) -> bool:
    n = abs(n)
    if n == 0:
        return False
    return all(e == 1 for e in factorint(n).values())


def kronecker(a: int, n: int) -> int:
    """Kronecker symbol (a|n), defined for all integers n."""
    if n == 0:
        return 1 if a in (1, -1) else 0
    sign = 1
    if n < 0:
        n = -n
        if a < 0:
            sign = -1
    # strip factors of 2 from n
    while n % 2 == 0:
        n //= 2
        if a % 2 == 0:
            return 0
        if a % 8 in (3, 5):
            sign = -sign
    a %= n
    # Jacobi symbol by reciprocity
    while a != 0:
        while a % 2 == 0:
            a //= 2
            if n % 8 in (3, 5):
                sign = -sign
        if a % 4 == 3 and n % 4 == 3:
            sign = -sign
        a, n = n % a, a
    return sign if n == 1 else 0


@dataclass(frozen=True)
class QuadraticField:
    """The field Q(sqrt(d)) for a squarefree d != 0, 1."""

    d: int
    disc: int
    signature: str  # "real" | "imaginary"

    def __repr__(self):
        return f"Q(sqrt({self.d}))"

    def __call__(self, x, y=0) -> "FieldElement":
        return FieldElement(self, Fraction(x), Fraction(y))

    @property
    def zero(self):
        return self(0)

    @property
    def one(self):
        return self(1)

    @property
    def sqrt_d(self):
        return self(0, 1)

    @property
    def omega(self) -> "FieldElement":
        """Generator of the maximal order over Z."""
        if self.d % 4 == 1:
            return FieldElement(self, Fraction(1, 2), Fraction(1, 2))
        return self.sqrt_d

    def sqrt_disc(self) -> "FieldElement":
        """sqrt(disc) as an element: sqrt(d) or 2*sqrt(d)."""
        return self(0, 1) if self.d % 4 == 1 else self(0, 2)

    def from_omega_coords(self, a, b) -> "FieldElement":
        return self(a) + self.omega * self(b)


def make_field(d: int) -> QuadraticField:
    if d in (0, 1):
        raise DegenerateD(f"d={d} does not define a quadratic field")
    if not is_squarefree(d):
        raise NonSquarefree(f"d={d} is not squarefree")
    disc = d if d % 4 == 1 else 4 * d
    return QuadraticField(d, disc, "real" if d > 0 else "imaginary")


@dataclass(frozen=True)
class FieldElement:
    """x + y*sqrt(d) with exact rational x, y."""

    field: QuadraticField
    x: Fraction
    y: Fraction

    def _coerce(self, other):
        if isinstance(other, FieldElement):
            if other.field is not self.field and other.field != self.field:
                raise QFieldError("mixed fields")
            return other
        if isinstance(other, (int, Fraction)):
            return FieldElement(self.field, Fraction(other), Fraction(0))
        return NotImplemented

    def __add__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return FieldElement(self.field, self.x + o.x, self.y + o.y)

    __radd__ = __add__

    def __neg__(self):
        return FieldElement(self.field, -self.x, -self.y)

    def __sub__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return FieldElement(self.field, self.x - o.x, self.y - o.y)

    def __rsub__(self, other):
        return -(self - other)

    def __mul__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        d = self.field.d
        return FieldElement(
            self.field,
            self.x * o.x + d * self.y * o.y,
            self.x * o.y + self.y * o.x,
        )

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return self * o.inverse()

    def __rtruediv__(self, other):
        return self._coerce(other) * self.inverse()

    def __pow__(self, n: int):
        if n < 0:
            return self.inverse() ** (-n)
        result = self.field.one
        base = self
        while n:
            if n & 1:
                result = result * base
            base = base * base
            n >>= 1
        return result

    def __eq__(self, other):
        if isinstance(other, (int, Fraction)):
            return self.y == 0 and self.x == other
        if isinstance(other, FieldElement):
            return self.field == other.field and self.x == other.x and self.y == other.y
        return NotImplemented

    def __hash__(self):
        return hash((self.field.d, self.x, self.y))

    def __bool__(self):
        return bool(self.x) or bool(self.y)

    def __repr__(self):
        if not self.y:
            return str(self.x)
        return f"({self.x}+{self.y}*sqrt({self.field.d}))"

    def conj(self) -> "FieldElement":
        return FieldElement(self.field, self.x, -self.y)

    def norm(self) -> Fraction:
        return self.x * self.x - self.field.d * self.y * self.y

    def trace(self) -> Fraction:
        return 2 * self.x

    def inverse(self) -> "FieldElement":
        n = self.norm()
        if n == 0:
            raise ZeroDivisionError("division by zero in K")
        return FieldElement(self.field, self.x / n, -self.y / n)

    def is_rational(self) -> bool:
        return self.y == 0

    def is_integral(self) -> bool:
        t, n = self.trace(), self.norm()
        return t.denominator == 1 and n.denominator == 1

    def omega_coords(self) -> tuple[Fraction, Fraction]:
        """(a, b) with self = a + b*w on the integral basis."""
        if self.field.d % 4 == 1:
            return self.x - self.y, 2 * self.y
        return self.x, self.y

    def denominator(self) -> int:
        """Least n >= 1 with n*self in the maximal order."""
        a, b = self.omega_coords()
        return math.lcm(a.denominator, b.denominator)

    def disc_coords(self) -> tuple[Fraction, Fraction]:
        """(p, q) with self = p + q*sqrt(disc)."""
        if self.field.d % 4 == 1:
            return self.x, self.y
        return self.x, self.y / 2


def elem_from_pair(K: QuadraticField, pair) -> FieldElement:
    """Parse ["u","v"] or "u+v*sqrt(d)" into an element of K."""
    if isinstance(pair, FieldElement):
        return pair
    if isinstance(pair, str):
        return _parse_elem_string(K, pair)
    if isinstance(pair, (list, tuple)) and len(pair) == 2:
        return K(Fraction(str(pair[0])), Fraction(str(pair[1])))
    if isinstance(pair, (int, Fraction)):
        return K(pair)
    raise QFieldError(f"cannot parse field element from {pair!r}")


def _parse_elem_string(K: QuadraticField, s: str) -> FieldElement:
    s = s.replace(" ", "")
    token = f"sqrt({K.d})"
    if token not in s:
        return K(Fraction(s))
    head, _, _ = s.partition(token)
    # forms: "u+v*sqrt(d)", "v*sqrt(d)", "-sqrt(d)", "u-sqrt(d)"
    if head.endswith("*"):
        head = head[:-1]
    u = Fraction(0)
    v_str = head
    for i in range(len(head) - 1, 0, -1):
        if head[i] in "+-" and head[i - 1] not in "+-*/":
            u = Fraction(head[:i])
            v_str = head[i:]
            break
    if v_str in ("", "+"):
        v = Fraction(1)
    elif v_str == "-":
        v = Fraction(-1)
    else:
        v = Fraction(v_str)
    return K(u, v)


# ---------------------------------------------------------------------------
# primes and residue fields


@dataclass(frozen=True)
class PrimeIdeal:
    """A prime of K above the rational prime p.

    For split p the two conjugate primes are distinguished by ``root``, a
    fixed residue mod p: the prime is (p, w - root) on the integral basis.
    For inert and ramified primes no extra data is needed.
    """

    field: QuadraticField
    p: int
    splitting: str  # "split" | "inert" | "ramified"
    root: int | None = None  # image of w in F_p, split case only

    @property
    def residue_degree(self) -> int:
        return 2 if self.splitting == "inert" else 1

    @property
    def ramification(self) -> int:
        return 2 if self.splitting == "ramified" else 1

    def norm(self) -> int:
        return self.p**self.residue_degree

    def conjugate(self) -> "PrimeIdeal":
        if self.splitting != "split":
            return self
        K = self.field
        # w + conj(w) = trace(w)
        tr = int(K.omega.trace())
        return PrimeIdeal(K, self.p, "split", (tr - self.root) % self.p)

    def __repr__(self):
        if self.splitting == "split":
            return f"({self.p}, w-{self.root})"
        return f"({self.p})" if self.splitting == "inert" else f"(sqrt, {self.p})"


def split_prime(K: QuadraticField, p: int):
    """Classify p in K; returns a PrimeIdeal, or a conjugate pair if split."""
    chi = kronecker(K.disc, p)
    if chi == 0:
        return PrimeIdeal(K, p, "ramified")
    if chi == -1:
        return PrimeIdeal(K, p, "inert")
    # split: roots of the minimal polynomial of w mod p
    if K.d % 4 == 1:
        # w^2 - w + (1-d)/4
        c = (1 - K.d) // 4
        roots = [r for r in _quad_roots_modp(1, -1, c, p)]
    else:
        roots = [r for r in _quad_roots_modp(1, 0, -K.d, p)]
    roots = sorted(set(roots))
    assert len(roots) == 2, (K.d, p, roots)
    P1 = PrimeIdeal(K, p, "split", roots[0])
    return (P1, P1.conjugate())


def _quad_roots_modp(a, b, c, p):
    """Roots of a*t^2+b*t+c mod p (p prime), brute force for p=2."""
    if p == 2:
        return [t for t in (0, 1) if (a * t * t + b * t + c) % 2 == 0]
    ainv = pow(a, -1, p)
    b, c = b * ainv % p, c * ainv % p
    disc = (b * b - 4 * c) % p
    s = sqrt_mod(disc, p)
    if s is None:
        return []
    inv2 = pow(2, -1, p)
    return [((-b + s) * inv2) % p, ((-b - s) * inv2) % p]


def sqrt_mod(a: int, p: int) -> int | None:
    """Tonelli-Shanks square root mod an odd prime (or p=2)."""
    a %= p
    if p == 2 or a == 0:
        return a
    if pow(a, (p - 1) // 2, p) != 1:
        return None
    if p % 4 == 3:
        return pow(a, (p + 1) // 4, p)
    # write p-1 = q*2^s
    q, s = p - 1, 0
    while q % 2 == 0:
        q //= 2
        s += 1
    z = 2
    while pow(z, (p - 1) // 2, p) != p - 1:
        z += 1
    m, c, t, r = s, pow(z, q, p), pow(a, q, p), pow(a, (q + 1) // 2, p)
    while t != 1:
        t2, i = t, 0
        while t2 != 1:
            t2 = t2 * t2 % p
            i += 1
        b = pow(c, 1 << (m - i - 1), p)
        m, c = i, b * b % p
        t, r = t * c % p, r * b % p
    return r


class ResidueField:
    """F_p or F_{p^2} = F_p[t]/(t^2 - A t - B), elements are int pairs.

    Elements are plain tuples (a, b) meaning a + b*t; this keeps the curve
    arithmetic free of per-element object overhead.  For degree one fields
    b is always 0.
    """

    def __init__(self, p: int, A: int = 0, B: int = 0, degree: int = 1):
        self.p = p
        self.degree = degree
        self.A = A % p
        self.B = B % p
        self.order = p**degree
        self.zero = (0, 0)
        self.one = (1, 0)
        if degree == 2:
            # t^p, cached for Frobenius
            self._tp = self.pow((0, 1), p)

    def __repr__(self):
        return f"F_{self.order}"

    def __eq__(self, other):
        return (
            isinstance(other, ResidueField)
            and (self.p, self.degree, self.A, self.B)
            == (other.p, other.degree, other.A, other.B)
        )

    def __hash__(self):
        return hash((self.p, self.degree, self.A, self.B))

    def make(self, a: int, b: int = 0):
        return (a % self.p, b % self.p)

    def from_fraction(self, q: Fraction):
        den = q.denominator % self.p
        if den == 0:
            raise NotPIntegral(f"{q} not integral at {self.p}")
        return ((q.numerator % self.p) * pow(den, -1, self.p) % self.p, 0)

    def add(self, u, v):
        p = self.p
        return ((u[0] + v[0]) % p, (u[1] + v[1]) % p)

    def sub(self, u, v):
        p = self.p
        return ((u[0] - v[0]) % p, (u[1] - v[1]) % p)

    def neg(self, u):
        p = self.p
        return (-u[0] % p, -u[1] % p)

    def mul(self, u, v):
        p = self.p
        a, b = u
        c, e = v
        if b == 0 and e == 0:
            return (a * c % p, 0)
        # (a+bt)(c+et) = ac + (ae+bc) t + be t^2,  t^2 = A t + B
        be = b * e
        return ((a * c + be * self.B) % p, (a * e + b * c + be * self.A) % p)

    def smul(self, n: int, u):
        p = self.p
        return (n * u[0] % p, n * u[1] % p)

    def sqr(self, u):
        return self.mul(u, u)

    def inv(self, u):
        p = self.p
        a, b = u
        if b == 0:
            if a == 0:
                raise ZeroDivisionError("residue field inverse of 0")
            return (pow(a, -1, p), 0)
        # (a+bt)^-1 via norm to F_p: (a+bt)(a+Ab-bt)= a^2+Aab-B b^2
        n = (a * a + self.A * a * b - self.B * b * b) % p
        ninv = pow(n, -1, p)
        return ((a + self.A * b) * ninv % p, -b * ninv % p)

    def div(self, u, v):
        return self.mul(u, self.inv(v))

    def pow(self, u, n: int):
        if n < 0:
            u, n = self.inv(u), -n
        result = self.one
        while n:
            if n & 1:
                result = self.mul(result, u)
            u = self.sqr(u)
            n >>= 1
        return result

    def frobenius(self, u):
        """x -> x^p, the nontrivial automorphism when degree = 2."""
        if self.degree == 1:
            return u
        a, b = u
        return self.add((a, 0), self.mul((b, 0), self._tp))

    def is_zero(self, u):
        return u[0] == 0 and u[1] == 0

    def elements(self):
        if self.degree == 1:
            for a in range(self.p):
                yield (a, 0)
        else:
            for a in range(self.p):
                for b in range(self.p):
                    yield (a, b)

    def is_square(self, u):
        if self.is_zero(u):
            return True
        if self.p == 2:
            return True  # squaring is bijective in char 2
        return self.pow(u, (self.order - 1) // 2) == self.one

    def sqrt(self, u):
        """A square root of u, or None.  Generic Tonelli-Shanks."""
        if self.is_zero(u):
            return self.zero
        if self.p == 2:
            # x -> x^2 is the Frobenius; invert by powering
            return self.pow(u, self.order // 2)
        q = self.order
        if not self.is_square(u):
            return None
        if q % 4 == 3:
            return self.pow(u, (q + 1) // 4)
        # Tonelli-Shanks in F_q
        m, s = q - 1, 0
        while m % 2 == 0:
            m //= 2
            s += 1
        z = self._nonsquare()
        c, t, r = self.pow(z, m), self.pow(u, m), self.pow(u, (m + 1) // 2)
        while t != self.one:
            t2, i = t, 0
            while t2 != self.one:
                t2 = self.sqr(t2)
                i += 1
            b = self.pow(c, 1 << (s - i - 1))
            s, c = i, self.sqr(b)
            t, r = self.mul(t, c), self.mul(r, b)
        return r

    def _nonsquare(self):
        if self.degree == 1:
            z = 2
            while pow(z, (self.p - 1) // 2, self.p) == 1:
                z += 1
            return (z, 0)
        for u in self.elements():
            if not self.is_zero(u) and not self.is_square(u):
                return u
        raise RuntimeError("no nonsquare found")


def residue_field(P: PrimeIdeal) -> ResidueField:
    K, p = P.field, P.p
    if P.splitting == "inert":
        if p == 2:
            # d = 5 mod 8; w has minimal poly t^2 - t + (1-d)/4
            return ResidueField(2, A=1, B=-((1 - K.d) // 4), degree=2)
        return ResidueField(p, A=0, B=K.d % p, degree=2)
    return ResidueField(p, degree=1)


def reduce_mod(e: FieldElement, P: PrimeIdeal, k: ResidueField | None = None):
    """Image of e in the residue field at P.

    Raises NotPIntegral when P divides the denominator of e (an element can
    be P-integral with p in its denominator only at a split prime; that
    case is repaired by clearing the conjugate prime).
    """
    if k is None:
        k = residue_field(P)
    K, p = P.field, P.p
    if not e:
        return k.zero
    n = e.denominator()
    if n % p == 0:
        if P.splitting != "split":
            raise NotPIntegral(f"{e} is not integral at {P}")
        # multiply by tau = w - r', a unit at P lying in the conjugate prime
        t = _vp(n, p)
        tau = K.omega - K(P.conjugate().root)
        e2 = e * tau**t
        if e2.denominator() % p == 0:
            raise NotPIntegral(f"{e} is not integral at {P}")
        red_tau = reduce_mod(tau, P, k)
        return k.mul(reduce_mod(e2, P, k), k.pow(k.inv(red_tau), t))
    a, b = e.omega_coords()  # e = a + b*w
    if P.splitting == "split":
        return k.add(k.from_fraction(a), k.mul(k.from_fraction(b), (P.root, 0)))
    if P.splitting == "inert":
        if p == 2:
            # w -> t
            return k.add(k.from_fraction(a), k.mul(k.from_fraction(b), (0, 1)))
        # sqrt(d) -> t with t^2 = d
        return k.add(k.from_fraction(e.x), k.mul(k.from_fraction(e.y), (0, 1)))
    # ramified: sqrt(d) -> 0 if p | d, else (p = 2, d = 3 mod 4) sqrt(d) -> 1
    img_sqrt = (0, 0) if K.d % p == 0 else (1, 0)
    return k.add(k.from_fraction(e.x), k.mul(k.from_fraction(e.y), img_sqrt))


def _lift_root_mod_pk(K: QuadraticField, P: PrimeIdeal, k: int) -> int:
    """Hensel lift of the split root: image of w mod p^k."""
    p = P.p
    if K.d % 4 == 1:
        poly = (1, -1, (1 - K.d) // 4)  # t^2 - t + (1-d)/4
    else:
        poly = (1, 0, -K.d)
    r = P.root
    mod = p
    if p == 2:
        # Hensel with f'(r) possibly even: lift bit by bit, 2 splits only
        # for d = 1 mod 8 where f = t^2 - t + c, f'(r) = 2r-1 odd: regular.
        pass
    a, b, c = poly
    while mod < p**k:
        mod *= p
        fr = (a * r * r + b * r + c) % mod
        fpr = (2 * a * r + b) % mod
        r = (r - fr * pow(fpr, -1, mod)) % mod
    return r % (p**k)


def valuation(e: FieldElement, P: PrimeIdeal) -> int:
    """P-adic valuation of e (can be negative); raises on e = 0."""
    if not e:
        raise ZeroElement("valuation of 0")
    K, p = P.field, P.p
    D = e.denominator()
    f = e * D  # integral
    shift = _vp(D, p) * P.ramification
    a, b = f.omega_coords()
    A, B = int(a), int(b)
    if P.splitting == "inert":
        return min(_vp(A, p), _vp(B, p)) - shift
    if P.splitting == "ramified":
        return _vp(int(abs(f.norm())), p) - shift
    # split: v = max k with A + B*r_k = 0 mod p^k, capped by v_p(norm)
    cap = _vp(int(abs(f.norm())), p)
    v = 0
    while v < cap:
        r = _lift_root_mod_pk(K, P, v + 1)
        if (A + B * r) % p ** (v + 1) != 0:
            break
        v += 1
    return v - shift


def _vp(n: int, p: int) -> int:
    n = int(n)
    if n == 0:
        return 10**9  # stands in for +infinity; callers never mix with it
    v = 0
    while n % p == 0:
        n //= p
        v += 1
    return v


def uniformizer(P: PrimeIdeal) -> FieldElement:
    """Element of valuation exactly 1 at P."""
    K = P.field
    if P.splitting != "ramified":
        return K(P.p)
    if K.d % P.p == 0:
        return K.sqrt_d
    # p = 2, d = 3 mod 4
    return K(1, 1)


def denominator_ideal_norm(alpha: FieldElement) -> Fraction:
    """N(D_alpha) for D_alpha = {x in O_K : x*alpha in O_K}.

    Computed as the index of the kernel lattice of multiplication by alpha
    acting on the integral basis, so no prime factorization is needed.
    """
    if not alpha:
        raise ZeroElement("denominator ideal of 0")
    K = alpha.field
    # matrix of multiplication by alpha on basis (1, w)
    w = K.omega
    col1 = alpha  # alpha * 1
    col2 = alpha * w
    a11, a21 = col1.omega_coords()
    a12, a22 = col2.omega_coords()
    n = math.lcm(
        a11.denominator, a21.denominator, a12.denominator, a22.denominator
    )
    if n == 1:
        return Fraction(1)
    A = [
        [int(a11 * n), int(a12 * n)],
        [int(a21 * n), int(a22 * n)],
    ]
    det = A[0][0] * A[1][1] - A[0][1] * A[1][0]
    s1 = math.gcd(math.gcd(A[0][0], A[0][1]), math.gcd(A[1][0], A[1][1]))
    s2 = abs(det) // s1 if s1 else 0
    # index of {z : Az = 0 mod n} in Z^2
    ker = math.gcd(s1, n) * math.gcd(s2, n)
    return Fraction(n * n, ker)


def sqrt_in_K(w: FieldElement) -> FieldElement | None:
    """A square root of w in K, if one exists (exact)."""
    K = w.field
    if not w:
        return K.zero
    # (x + y sqrt(d))^2 = w  =>  x^2 + d y^2 = wx, 2xy = wy
    wx, wy = w.x, w.y
    if wy == 0:
        # either rational sqrt or pure sqrt(d) multiple
        r = _frac_sqrt(wx)
        if r is not None:
            return K(r)
        r = _frac_sqrt(wx / K.d)
        if r is not None:
            return K(0, r)
        return None
    # x != 0, y = wy/(2x); x^2 + d*wy^2/(4x^2) = wx
    # 4 x^4 - 4 wx x^2 + d wy^2 = 0
    disc = wx * wx - K.d * wy * wy  # = norm(w)
    s = _frac_sqrt(disc)
    if s is None:
        return None
    for sign in (1, -1):
        x2 = (wx + sign * s) / 2
        if x2 > 0:
            x = _frac_sqrt(x2)
            if x is not None and x != 0:
                return K(x, wy / (2 * x))
    return None


def _frac_sqrt(q: Fraction) -> Fraction | None:
    if q < 0:
        return None
    rn = math.isqrt(q.numerator)
    rd = math.isqrt(q.denominator)
    if rn * rn == q.numerator and rd * rd == q.denominator:
        return Fraction(rn, rd)
    return None
