"""Level, nebentypus and Fourier coefficients of the newform attached to a
quadratic Q-curve with an isogeny to its conjugate.

Coefficients live in F = Q(sqrt(m)) and are stored as (u, v) pairs of
Fractions meaning u + v*sqrt(m).  The inert/ramified sign tests follow the
Frobenius-vs-reduced-isogeny point tests; in alpha-only mode those signs
are left ambiguous and both global conjugate branches are carried.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from fractions import Fraction

from sympy import factorint, primerange

from .curve import (
    CurveModel,
    LocalData,
    bad_rational_primes,
    conductor,
    count_points,
    primes_above,
    reduce_curve,
    tate_local,
    transform,
)

_nonminimal_cache: dict = {}


def _needs_tate(E: CurveModel, p: int) -> bool:
    key = id(E)
    if key not in _nonminimal_cache:
        _nonminimal_cache[key] = set(bad_rational_primes(E))
    return p in _nonminimal_cache[key]


def _good_trace(E: CurveModel, P) -> int:
    """Trace of Frobenius at a good prime, minimizing the model only when
    the global model might not be minimal there."""
    if _needs_tate(E, P.p):
        ld = tate_local(E, P)
        if ld.reduction != "good":
            raise InvalidQCurve(f"expected good reduction at {P}")
        Ek = reduce_curve(ld.min_model, P)
    else:
        Ek = reduce_curve(E, P)
    return Ek.k.order + 1 - count_points(Ek)
from .ecfinite import NoSuitablePoint
from .isogeny import IsogenyMap, compose, reduce_isogeny, urst_isogeny, _eval_isogeny, _EVAL_FAIL
from .qfield import FieldElement, kronecker, residue_field, split_prime


class TraceMismatch(ValueError):
    pass


class NotASquareTimesM(ValueError):
    pass


class NotASquareInF(ValueError):
    pass


class MissingPrimeCoefficient(KeyError):
    pass


class InvalidQCurve(ValueError):
    pass


# -- elements of F = Q(sqrt m), as (u, v) Fraction pairs


def cf_add(a, b):
    return (a[0] + b[0], a[1] + b[1])


def cf_sub(a, b):
    return (a[0] - b[0], a[1] - b[1])


def cf_mul(m, a, b):
    return (a[0] * b[0] + m * a[1] * b[1], a[0] * b[1] + a[1] * b[0])


def cf_smul(c, a):
    return (c * a[0], c * a[1])


def cf_conj(a):
    return (a[0], -a[1])


CF_ZERO = (Fraction(0), Fraction(0))
CF_ONE = (Fraction(1), Fraction(0))


def cf_from_int(n):
    return (Fraction(n), Fraction(0))


@dataclass(frozen=True)
class CoefField:
    m: int

    def __post_init__(self):
        r = math.isqrt(abs(self.m))
        if self.m == 0 or (self.m > 0 and r * r == self.m):
            raise InvalidQCurve(f"m = {self.m} is a perfect square")


@dataclass(frozen=True)
class CharacterSpec:
    modulus: int
    kind: str  # "trivial" | "quadratic_from_K"
    disc: int  # Delta_K, used in the quadratic case

    def value(self, n: int) -> int:
        if math.gcd(n, self.modulus) != 1:
            return 0
        if self.kind == "trivial":
            return 1
        return kronecker(self.disc, n)


@dataclass
class NewformData:
    level: int
    character: CharacterSpec
    coef_field: CoefField
    ap: dict  # p -> (u, v)
    ambiguous: set = field(default_factory=set)

    @property
    def m(self):
        return self.coef_field.m

    def conjugate(self) -> "NewformData":
        return NewformData(
            self.level,
            self.character,
            self.coef_field,
            {p: cf_conj(a) for p, a in self.ap.items()},
            set(self.ambiguous),
        )

    def branches(self):
        """The computed branch, plus its global conjugate when any sign is
        ambiguous (alpha-only mode)."""
        if self.ambiguous:
            return (self, self.conjugate())
        return (self,)

    def eps(self, p: int) -> int:
        return self.character.value(p)

    def expand(self, nmax: int) -> list:
        """[a_0(unused), a_1, ..., a_nmax] by Hecke multiplicativity."""
        m = self.m
        a = [None] * (nmax + 1)
        if nmax >= 1:
            a[1] = CF_ONE
        for p in primerange(2, nmax + 1):
            if p not in self.ap:
                raise MissingPrimeCoefficient(f"a_{p} not computed")
            ap = self.ap[p]
            e = self.eps(p)
            q = p
            prev, cur = CF_ONE, ap
            while q <= nmax:
                a[q] = cur
                prev, cur = cur, cf_sub(
                    cf_mul(m, ap, cur), cf_smul(Fraction(e * p), prev)
                )
                q *= p
        for n in range(2, nmax + 1):
            if a[n] is None:
                fac = factorint(n)
                acc = CF_ONE
                for p, e in fac.items():
                    acc = cf_mul(m, acc, a[p**e])
                a[n] = acc
        return a

    def embed(self, a, ctx):
        """Complex value of a = (u, v) under the fixed embedding sqrt(m) ->
        positive real (m > 0) or +i sqrt|m| (m < 0)."""
        u, v = a
        if self.m > 0:
            return ctx.mpf(u.numerator) / u.denominator + (
                ctx.mpf(v.numerator) / v.denominator
            ) * ctx.sqrt(self.m)
        return ctx.mpc(
            ctx.mpf(u.numerator) / u.denominator,
            (ctx.mpf(v.numerator) / v.denominator) * ctx.sqrt(-self.m),
        )


def level(E: CurveModel, cond_n: int | None = None) -> int:
    n = conductor(E) if cond_n is None else cond_n
    return n * abs(E.field.disc)


def character(E: CurveModel, N: int, m: int) -> CharacterSpec:
    kind = "trivial" if m > 0 else "quadratic_from_K"
    return CharacterSpec(N, kind, E.field.disc)


# ---------------------------------------------------------------------------
# per-prime coefficients


def inverse_urst(urst):
    u, r, s, t = urst
    iu = u.inverse()
    return (iu, -r * iu * iu, -s * iu, (s * r - t) * iu**3)


def conj_urst(urst):
    return tuple(v.conj() for v in urst)


@dataclass
class SignContext:
    """Everything the sign tests need: mu transported to the P-minimal
    model and reduced, plus the reduced curves."""

    E: CurveModel
    mu: IsogenyMap | None
    rng_seed: int

    def rng(self, p: int) -> random.Random:
        return random.Random((self.rng_seed << 20) ^ p)

    def reduced_pair(self, ld: LocalData):
        """(E_k, nuE_k, mu_maps, numu_maps, k) at ld.prime."""
        P = ld.prime
        k = residue_field(P)
        Emin = ld.min_model
        T_inv = urst_isogeny(Emin, inverse_urst(ld.urst))  # Emin -> E
        nE = self.E.conjugate()
        Tnu = urst_isogeny(nE, conj_urst(ld.urst))  # nE -> conj(Emin)
        mu_min = compose(Tnu, compose(self.mu, T_inv))
        numu_min = mu_min.conjugate()
        Ek = reduce_curve(Emin, P, k)
        nEk = reduce_curve(Emin.conjugate(), P, k)
        mu_red = reduce_isogeny(mu_min, P)
        numu_red = reduce_isogeny(numu_min, P)
        return Ek, nEk, mu_red, numu_red, k


def _sample_points(Ek, avoid, rng):
    """Coprime-order point first, then a bounded general scan."""
    try:
        yield Ek.random_smooth_point_coprime(avoid, rng)
    except NoSuitablePoint:
        pass
    q = Ek.k.order
    if q <= 4096:
        sing = None if Ek.is_smooth() else Ek.singular_point()
        pts = [P for P in Ek.points() if P != sing]
        rng.shuffle(pts)
        yield from pts
    else:
        for _ in range(64):
            try:
                yield Ek.random_point_raw(rng, smooth_only=True)
            except NoSuitablePoint:
                return


def _frob_point(k, Q):
    if Q is None:
        return None
    return (k.frobenius(Q[0]), k.frobenius(Q[1]))


def coeff_good_split(E: CurveModel, p: int) -> tuple:
    Ps = primes_above(E.field, p)
    traces = [_good_trace(E, P) for P in Ps]
    if traces[0] != traces[1]:
        raise TraceMismatch(f"conjugate traces at {p} differ: {traces}")
    return cf_from_int(traces[0])


def coeff_good_inert(
    E: CurveModel, p: int, m: int, eps_p: int, sign_ctx: SignContext | None
):
    """a_p = c sqrt(m); returns ((u,v), ambiguous)."""
    P = primes_above(E.field, p)[0]
    c_frak = _good_trace(E, P)
    c2m = c_frak + 2 * eps_p * p
    if c2m % m != 0:
        raise NotASquareTimesM(f"c_p + 2 eps p = {c2m} not divisible by m = {m}")
    c2 = c2m // m
    if c2 < 0:
        raise NotASquareTimesM(f"(c_p + 2 eps p)/m = {c2} < 0")
    c = math.isqrt(c2)
    if c * c != c2:
        raise NotASquareTimesM(f"(c_p + 2 eps p)/m = {c2} is not a square")
    if c == 0:
        return CF_ZERO, False
    if sign_ctx is None or sign_ctx.mu is None:
        return (Fraction(0), Fraction(c)), True
    sign = _sign_test_inert(sign_ctx, tate_local(E, P), p, m, eps_p, c)
    # the Frobenius relation is stated through the dual isogeny, which is
    # sgn(m) times the conjugate isogeny the test evaluates
    if m < 0:
        sign = -sign
    return (Fraction(0), Fraction(sign * c)), False


def _sign_test_inert(ctx: SignContext, ld: LocalData, p, m, eps_p, c) -> int:
    """Decide sgn(c) from frob_{p^2} - c nu(mu) frob_p + eps p = 0 on E_p."""
    Ek, nEk, mu_red, numu_red, k = ctx.reduced_pair(ld)
    rng = ctx.rng(p)
    avoid = 2 * p * abs(m * c)
    for Q in _sample_points(Ek, avoid, rng):
        # frob_{p^2} fixes rational points; eps_p * p * Q added directly
        lhs = Ek.add(Q, Ek.mul(eps_p * p, Q))
        img = _eval_isogeny(numu_red, Ek, _frob_point(k, Q), k)
        if img is _EVAL_FAIL or img is None:
            continue
        rhs_plus = Ek.mul(c, img)
        zT = lhs == rhs_plus
        zS = lhs == Ek.neg(rhs_plus)
        if zT != zS:
            return 1 if zT else -1
        if not zT and not zS:
            raise InvalidQCurve(
                f"Frobenius relation fails at inert {p}: not this Q-curve's m"
            )
    raise NoSuitablePoint(f"sign test inconclusive at inert p = {p}")


def coeff_good_ramified(
    E: CurveModel, p: int, m: int, sign_ctx: SignContext | None
):
    """a_p = (c_p + e sqrt(m))/2; returns ((u,v), ambiguous)."""
    P = primes_above(E.field, p)[0]
    c_frak = _good_trace(E, P)
    disc = c_frak * c_frak - 4 * p
    if disc % m != 0:
        raise NotASquareInF(f"c_p^2 - 4p = {disc} not divisible by m")
    e2 = disc // m
    if e2 < 0:
        raise NotASquareInF(f"(c_p^2-4p)/m = {e2} < 0")
    e = math.isqrt(e2)
    if e * e != e2:
        raise NotASquareInF(f"(c_p^2-4p)/m = {e2} is not a square")
    half = Fraction(1, 2)
    if e == 0:
        return (half * c_frak, Fraction(0)), False
    if sign_ctx is None or sign_ctx.mu is None:
        return (half * c_frak, half * e), True
    sign = _sign_test_ramified(sign_ctx, tate_local(E, P), p, m, c_frak, e)
    if m < 0:  # dual vs conjugate isogeny, as in the inert case
        sign = -sign
    return (half * c_frak, half * sign * e), False


def _sign_test_ramified(ctx: SignContext, ld: LocalData, p, m, c_frak, e) -> int:
    """Decide sgn(e) from 2 frob_p = c_p + e mu_p on E_p (frob_p is the
    identity on F_p-points)."""
    Ek, nEk, mu_red, numu_red, k = ctx.reduced_pair(ld)
    rng = ctx.rng(p)
    avoid = 2 * p * abs(e * m)
    for Q in _sample_points(Ek, avoid, rng):
        lhs = Ek.add(Ek.mul(2, Q), Ek.neg(Ek.mul(c_frak, Q)))
        img = _eval_isogeny(mu_red, Ek, Q, k)
        if img is _EVAL_FAIL or img is None:
            continue
        rhs = Ek.mul(e, img)
        zT = lhs == rhs
        zS = lhs == Ek.neg(rhs)
        if zT != zS:
            return 1 if zT else -1
        if not zT and not zS:
            raise InvalidQCurve(
                f"Frobenius relation fails at ramified {p}: bad isogeny data"
            )
    raise NoSuitablePoint(f"sign test inconclusive at ramified p = {p}")


def coeff_bad(E: CurveModel, p: int, m: int, sign_ctx: SignContext | None):
    """a_p at a bad prime; returns ((u,v), ambiguous)."""
    Ps = primes_above(E.field, p)
    lds = [tate_local(E, P) for P in Ps]
    if len(Ps) == 2:
        cs = [ld.lfactor_c for ld in lds]
        if cs[0] != cs[1]:
            raise TraceMismatch(f"conjugate reduction types at {p} differ")
        return cf_from_int(cs[0]), False
    ld = lds[0]
    P = Ps[0]
    if P.splitting == "ramified":
        if ld.reduction != "additive":
            raise InvalidQCurve(
                f"bad ramified prime {p} must have additive reduction"
            )
        return CF_ZERO, False
    # inert
    if ld.reduction == "additive":
        return CF_ZERO, False
    if ld.reduction == "split_mult":
        raise InvalidQCurve(
            f"split multiplicative reduction at inert {p} contradicts m = {m}"
        )
    # nonsplit multiplicative: forces m = -1
    if m != -1:
        raise InvalidQCurve(
            f"nonsplit multiplicative inert reduction at {p} needs m = -1"
        )
    if sign_ctx is None or sign_ctx.mu is None:
        return (Fraction(0), Fraction(1)), True
    # m = -1 here, so the dual-vs-conjugate correction always flips
    sign = -_sign_test_torus(sign_ctx, ld, p)
    return (Fraction(0), Fraction(sign)), False


def _sign_test_torus(ctx: SignContext, ld: LocalData, p) -> int:
    """m = -1, nonsplit multiplicative inert: frob_p = c p mu_p on the
    smooth locus; c in {1, -1}."""
    Ek, nEk, mu_red, numu_red, k = ctx.reduced_pair(ld)
    rng = ctx.rng(p)
    for Q in _sample_points(Ek, 2 * p, rng):
        img = _eval_isogeny(mu_red, nEk, Q, k)
        if img is _EVAL_FAIL or img is None:
            continue
        rhs = nEk.mul(p, img)
        fr = _frob_point(k, Q)
        if not nEk.on_curve(fr):
            raise InvalidQCurve("Frobenius image off the conjugate torus")
        if rhs == nEk.neg(rhs):
            continue
        if fr == rhs:
            return 1
        if fr == nEk.neg(rhs):
            return -1
        raise InvalidQCurve(f"torus relation fails at {p}")
    raise NoSuitablePoint(f"torus sign test inconclusive at p = {p}")


# ---------------------------------------------------------------------------
# assembly


def attach_newform(
    E: CurveModel,
    m: int,
    pmax: int,
    mu: IsogenyMap | None = None,
    cond_n: int | None = None,
    seed: int = 20170418,
) -> NewformData:
    """Compute a_p for all p <= pmax."""
    n = conductor(E) if cond_n is None else cond_n
    N = n * abs(E.field.disc)
    chi = character(E, N, m)
    coef_field = CoefField(m)
    ctx = SignContext(E, mu, seed)
    nf = NewformData(N, chi, coef_field, {}, set())
    for p in primerange(2, pmax + 1):
        a, amb = compute_ap(E, p, m, n, ctx)
        nf.ap[p] = a
        if amb:
            nf.ambiguous.add(p)
    return nf


def compute_ap(E, p, m, cond_n, ctx: SignContext):
    if cond_n % p == 0:
        return coeff_bad(E, p, m, ctx)
    spl = kronecker(E.field.disc, p)
    if spl == 1:
        return coeff_good_split(E, p), False
    if spl == -1:
        eps_p = 1 if m > 0 else -1
        return coeff_good_inert(E, p, m, eps_p, ctx)
    return coeff_good_ramified(E, p, m, ctx)


# ---------------------------------------------------------------------------
# checks and derived forms


def euler_factor_check(E: CurveModel, nf: NewformData, p: int, detail=False):
    """Degree-4 identity between the K-side and F-side Euler factors at p."""
    m = nf.m
    # F-side: prod over Galois of (1 - a_p x + eps(p) p x^2)
    ap = nf.ap[p]
    e = nf.eps(p)
    f1 = [CF_ONE, cf_smul(-1, ap), cf_smul(Fraction(e * p), CF_ONE)]
    f2 = [CF_ONE, cf_smul(-1, cf_conj(ap)), cf_smul(Fraction(e * p), CF_ONE)]
    rhs = [CF_ZERO] * 5
    for i, x in enumerate(f1):
        for j, y in enumerate(f2):
            rhs[i + j] = cf_add(rhs[i + j], cf_mul(m, x, y))
    # K-side: prod over primes above p of P_frak(x^{f(frak)})
    lhs = [CF_ONE] + [CF_ZERO] * 4
    for P in primes_above(E.field, p):
        fdeg = P.residue_degree
        if not _needs_tate(E, p):
            c = _good_trace(E, P)
            loc = {0: CF_ONE, fdeg: cf_from_int(-c), 2 * fdeg: cf_from_int(P.norm())}
        else:
            ld = tate_local(E, P)
            if ld.reduction == "good":
                Ek = reduce_curve(ld.min_model, P)
                c = Ek.k.order + 1 - count_points(Ek)
                loc = {
                    0: CF_ONE,
                    fdeg: cf_from_int(-c),
                    2 * fdeg: cf_from_int(P.norm()),
                }
            elif ld.reduction == "additive":
                loc = {0: CF_ONE}
            else:
                c = 1 if ld.reduction == "split_mult" else -1
                loc = {0: CF_ONE, fdeg: cf_from_int(-c)}
        new = [CF_ZERO] * 5
        for i, x in enumerate(lhs):
            for j, y in loc.items():
                if i + j <= 4:
                    new[i + j] = cf_add(new[i + j], cf_mul(m, x, y))
        lhs = new
    ok = lhs == rhs
    if detail:
        return ok, lhs, rhs
    return ok


def h_form(nf: NewformData, alpha: FieldElement, nmax: int) -> list:
    """Coefficients lambda_n in K of h = (f + kappa conj(f))/(1+kappa)."""
    K = alpha.field
    nu_alpha = alpha.conj()
    a = nf.expand(nmax)
    out = [None] * (nmax + 1)
    for n_ in range(1, nmax + 1):
        u, v = a[n_]
        out[n_] = K(u) + K(v) * nu_alpha
    return out
