"""Periods, the effective denominator bound, numerical L-values and the
vanishing / exact-ratio decision.

All floating point work uses mpmath at a caller-chosen precision.  Error
accounting is a heuristic tail bound (|a_n| <= d(n) sqrt(n), bounded here
by 4n) plus arithmetic slack; verdicts carry a caveat flag accordingly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import mpmath
from mpmath import mp

from .curve import CurveModel, bad_rational_primes, primes_above, tate_local
from .newform import NewformData
from .qfield import FieldElement, denominator_ideal_norm, valuation


class PrecisionExhausted(RuntimeError):
    pass


class IllConditioned(RuntimeError):
    pass


class NonIntegralTwelfth(ValueError):
    pass


class SquareDegreeCase(ValueError):
    pass


# ---------------------------------------------------------------------------
# period lattices


def _optimal_agm(a, b):
    """Complex AGM with the standard 'right choice' of square root."""
    for _ in range(8 * mp.prec):
        if mpmath.fabs(a - b) <= mpmath.eps * (mpmath.fabs(a) + mpmath.fabs(b)) * 8:
            break
        a1 = (a + b) / 2
        b1 = mpmath.sqrt(a * b)
        if mpmath.fabs(a1 - b1) > mpmath.fabs(a1 + b1):
            b1 = -b1
        a, b = a1, b1
    return (a + b) / 2


def _embed(e: FieldElement, conj_embedding: bool):
    """Image of e under the fixed embedding of K.

    Real K: sqrt(d) -> positive real root (or its negative for the
    conjugate embedding).  Imaginary K: sqrt(d) -> +i sqrt(|d|).
    """
    d = e.field.d
    x = mp.mpf(e.x.numerator) / e.x.denominator
    y = mp.mpf(e.y.numerator) / e.y.denominator
    if d > 0:
        r = mpmath.sqrt(mp.mpf(d))
        return x + y * (-r if conj_embedding else r)
    r = mpmath.mpc(0, 1) * mpmath.sqrt(mp.mpf(-d))
    return x + y * (-r if conj_embedding else r)


def _period_triple(b2, b4, b6):
    """Three periods pi/M(.) from the 2-division values; any two of them
    generate the period lattice of dx/y on y^2 = 4x^3+b2x^2+2b4x+b6."""
    roots = mpmath.polyroots([4, b2, 2 * b4, b6], extraprec=mp.prec)
    e1, e2, e3 = roots
    zs = []
    for (a, b, c) in ((e1, e2, e3), (e2, e1, e3), (e3, e1, e2)):
        zs.append(mpmath.pi / _optimal_agm(mpmath.sqrt(a - c), mpmath.sqrt(a - b)))
    return zs


def _lattice_from_curve(E: CurveModel, conj_embedding: bool):
    """(omega1, omega2) with Im(omega2/omega1) > 0, validated against the
    Eisenstein series of the lattice."""
    b2 = _embed(E.b2, conj_embedding)
    b4 = _embed(E.b4, conj_embedding)
    b6 = _embed(E.b6, conj_embedding)
    zs = _period_triple(b2, b4, b6)
    # candidate bases from the period triple; each z_i is a period, so the
    # span is a sublattice of the true lattice, of small index.  The
    # Eisenstein check picks out the true one.
    cands = []
    for i in range(3):
        for j in range(i + 1, 3):
            tau = zs[j] / zs[i]
            if abs(mpmath.im(tau)) < mp.eps * 100:
                continue
            cands.append((zs[i], zs[j]))
    tried = list(cands)
    for _ in range(3):  # allow a few index-2 enlargements
        nxt = []
        for w1, w2 in tried:
            w1r, w2r = _reduce_basis(w1, w2)
            try:
                _validate_lattice(E, w1r, w2r, conj_embedding)
                return w1r, w2r
            except PrecisionExhausted:
                pass
            nxt.extend(
                [
                    (w1 / 2, w2),
                    (w1, w2 / 2),
                    ((w1 + w2) / 2, w2),
                ]
            )
        tried = nxt
    raise PrecisionExhausted("no candidate basis passed the Eisenstein check")


def _reduce_basis(w1, w2):
    """Gauss-reduce so tau = w2/w1 is in the usual fundamental domain."""
    for _ in range(200):
        tau = w2 / w1
        if mpmath.im(tau) < 0:
            w2 = -w2
            continue
        n = mpmath.nint(mpmath.re(tau))
        if n != 0:
            w2 = w2 - int(n) * w1
            continue
        if mpmath.fabs(w2 / w1) < 1 - mp.eps * 10:
            w1, w2 = w2, w1
            continue
        break
    return w1, w2


def _validate_lattice(E: CurveModel, w1, w2, conj_embedding):
    """Check g2, g3 of the lattice against c4/12, c6/216 of the curve."""
    tau = w2 / w1
    q = mpmath.expjpi(2 * tau)
    nterms = max(8, int(mp.dps * math.log(10) / (2 * math.pi * mpmath.im(tau))) + 3)
    e4 = mp.mpf(1)
    e6 = mp.mpf(1)
    for n in range(1, nterms + 1):
        s3 = sum(d**3 for d in range(1, n + 1) if n % d == 0)
        s5 = sum(d**5 for d in range(1, n + 1) if n % d == 0)
        e4 += 240 * s3 * q**n
        e6 -= 504 * s5 * q**n
    g2 = (2 * mpmath.pi / w1) ** 4 * e4 / 12
    g3 = (2 * mpmath.pi / w1) ** 6 * e6 / 216
    c4 = _embed(E.c4, conj_embedding)
    c6 = _embed(E.c6, conj_embedding)
    scale = max(1, mpmath.fabs(c4 / 12), mpmath.fabs(c6 / 216))
    tol = mpmath.mpf(10) ** (-mp.dps + 8) * scale
    if mpmath.fabs(g2 - c4 / 12) > tol or mpmath.fabs(g3 - c6 / 216) > tol:
        raise PrecisionExhausted("period lattice failed the Eisenstein check")


@dataclass
class PeriodData:
    """Real K: omega1, omega1_conj positive reals.  Imaginary K: a basis
    (omega1, omega2) with Im(omega1 * conj(omega2)) > 0."""

    kind: str  # "real" | "imaginary"
    omega1: object
    omega2: object  # conj-embedding real period, or the second basis vector


def periods(E: CurveModel) -> PeriodData:
    K = E.field
    if K.signature == "real":
        vals = []
        for conj_emb in (False, True):
            w1, w2 = _lattice_from_curve(E, conj_emb)
            # least positive real period: w1 real for rectangular, else 2Re
            vals.append(_least_positive_real(w1, w2))
        return PeriodData("real", vals[0], vals[1])
    w1, w2 = _lattice_from_curve(E, False)
    if mpmath.im(w1 * mpmath.conj(w2)) < 0:
        w2 = -w2
    return PeriodData("imaginary", w1, w2)


def _least_positive_real(w1, w2):
    """Least positive real element of the lattice Z w1 + Z w2 (the lattice
    is conjugation-stable since the curve is real)."""
    cands = []
    for a in range(-2, 3):
        for b in range(-2, 3):
            z = a * w1 + b * w2
            if mpmath.fabs(mpmath.im(z)) < mp.eps * 10**6 and mpmath.re(z) > mp.eps:
                cands.append(mpmath.re(z))
    if not cands:
        raise PrecisionExhausted("no real period found in a small search box")
    return min(cands)


@dataclass
class OmegaE:
    value: object  # positive mpf
    delta_norm: Fraction


def weierstrass_delta_norm(E: CurveModel) -> Fraction:
    """N(delta_omega) for the standard differential of the given model."""
    nd = Fraction(1)
    for p in bad_rational_primes(E):
        for P in primes_above(E.field, p):
            ld = tate_local(E, P)
            vmodel = valuation(E.disc, P)
            diff = vmodel - ld.v_disc_min
            if diff % 12 != 0:
                raise NonIntegralTwelfth(
                    f"v(disc) - v(disc_min) = {diff} at {P} is not divisible by 12"
                )
            # disc scales by u^12 and the differential by u^-1
            nd *= Fraction(P.norm()) ** (-diff // 12)
    return nd


def omega_E(E: CurveModel, pd: PeriodData | None = None) -> OmegaE:
    if pd is None:
        pd = periods(E)
    nd = weierstrass_delta_norm(E)
    ndf = mp.mpf(nd.numerator) / nd.denominator
    if pd.kind == "real":
        return OmegaE(pd.omega1 * pd.omega2 / ndf, nd)
    cov = mpmath.im(pd.omega1 * mpmath.conj(pd.omega2))
    return OmegaE(2 * mpmath.fabs(cov) / ndf, nd)


# ---------------------------------------------------------------------------
# the effective bound


@dataclass
class LBoundReport:
    q_alpha: Fraction
    tors: int
    t: int
    nd_alpha: int
    s_lcm: int
    s_max: int
    s_gcd: int
    B: int  # reconstruction denominator multiple
    threshold: object  # positive mpf vanishing threshold


def bound(
    E: CurveModel,
    alpha: FieldElement,
    m: int,
    s_lcm: int,
    s_max: int,
    tors: int,
    omega: OmegaE,
    s_gcd: int = 1,
) -> LBoundReport:
    r = math.isqrt(abs(m))
    if m > 0 and r * r == m:
        raise SquareDegreeCase(f"m = {m} is a perfect square")
    _, q = alpha.disc_coords()
    if q == 0:
        raise SquareDegreeCase("alpha is rational")
    t = 4 if m % 4 == 1 else 1
    nd = denominator_ideal_norm(alpha)
    assert nd.denominator == 1
    nd = int(nd)
    two_q_num = abs((2 * q).numerator)
    B = two_q_num * tors * tors * t * nd * s_lcm * s_lcm
    denom_max = two_q_num * tors * tors * t * nd * s_max * s_max
    disc = abs(E.field.disc)
    threshold = omega.value / (mpmath.sqrt(disc) * denom_max)
    return LBoundReport(q, tors, t, nd, s_lcm, s_max, s_gcd, B, threshold)


# ---------------------------------------------------------------------------
# L-values


def truncation_point(N: int, digits: int) -> int:
    rtN = math.sqrt(N)
    return int(
        math.ceil(rtN / (2 * math.pi) * (digits * math.log(10) + math.log(rtN) + 10))
    )


@dataclass
class LValue:
    value: object  # mpc
    error_estimate: object
    terms_used: int
    eta: object


def _embedded_coeffs(nf: NewformData, nmax: int):
    a = nf.expand(nmax)
    return [None] + [nf.embed(a[n], mpmath) for n in range(1, nmax + 1)]


def eta(nf: NewformData, digits: int | None = None, coeffs=None, heights=(1.0, 1.3)):
    """Sign of the functional equation, from the modular transformation of
    the attached q-series at two test heights."""
    N = nf.level
    digits = digits or mp.dps
    M = int(math.ceil(truncation_point(N, digits) * (max(heights) + 0.05)))
    c = 2 * mpmath.pi / mpmath.sqrt(N)
    if coeffs is None:
        coeffs = _embedded_coeffs(nf, M)
    elif len(coeffs) - 1 < M:
        coeffs = _embedded_coeffs(nf, M)

    def g(y):
        return mpmath.fsum(
            coeffs[n] * mpmath.exp(-c * n * y) for n in range(1, M + 1)
        )

    def gstar(y):
        return mpmath.fsum(
            mpmath.conj(coeffs[n]) * mpmath.exp(-c * n * y) for n in range(1, M + 1)
        )

    etas = []
    scale = mpmath.exp(-c)  # size of a healthy series value
    for y0 in heights:
        y = mp.mpf(y0)
        num, den = g(1 / y), y * y * gstar(y)
        if mpmath.fabs(den) < scale * mpmath.mpf(10) ** (-digits // 2):
            y = y * mp.mpf("1.07")  # perturb once
            num, den = g(1 / y), y * y * gstar(y)
            if mpmath.fabs(den) < scale * mpmath.mpf(10) ** (-digits // 2):
                raise IllConditioned(f"series vanishes near height {y0}")
        etas.append(num / den)
    tol = mpmath.mpf(10) ** (-digits // 3)
    if mpmath.fabs(etas[0] - etas[1]) > tol:
        raise IllConditioned(f"eta estimates disagree: {etas}")
    e = etas[1]
    if mpmath.fabs(mpmath.fabs(e) - 1) > tol:
        raise IllConditioned(f"|eta| = {mpmath.fabs(e)} is not 1")
    return e


def l_value(
    nf: NewformData,
    eta_f,
    derivative_order: int = 0,
    digits: int | None = None,
    coeffs=None,
) -> LValue:
    """L(f, 1) (k = 0) or L'(f, 1) (k = 1) by the split-integral series."""
    N = nf.level
    digits = digits or mp.dps
    M = truncation_point(N, digits)
    c = 2 * mpmath.pi / mpmath.sqrt(N)
    if coeffs is None or len(coeffs) - 1 < M:
        coeffs = _embedded_coeffs(nf, M)
    if derivative_order == 0:
        total = mpmath.fsum(
            (coeffs[n] + eta_f * mpmath.conj(coeffs[n])) / n * mpmath.exp(-c * n)
            for n in range(1, M + 1)
        )
        tail = 8 * mpmath.exp(-c * (M + 1)) / (1 - mpmath.exp(-c))
        err = tail + mpmath.mpf(10) ** (-digits) * M
        return LValue(total, err, M, eta_f)
    # Lambda'(f,1) = sum (a_n - eta conj(a_n)) E1(c n)/(c n); then undo the
    # completion factors
    lam1 = mpmath.fsum(
        (coeffs[n] - eta_f * mpmath.conj(coeffs[n])) * mpmath.e1(c * n) / (c * n)
        for n in range(1, M + 1)
    )
    L_at_1 = l_value(nf, eta_f, 0, digits, coeffs)
    rtN2pi = mpmath.sqrt(N) / (2 * mpmath.pi)
    Lp = lam1 / rtN2pi - (mpmath.log(rtN2pi) - mpmath.mpf(mpmath.euler)) * L_at_1.value
    tail = 8 * mpmath.exp(-c * (M + 1)) / (1 - mpmath.exp(-c)) / c
    err = tail + mpmath.mpf(10) ** (-digits) * M
    return LValue(Lp, err, M, eta_f)


def completed_lambda(nf: NewformData, eta_f, s, digits=None, coeffs=None):
    """Lambda(f, s) by incomplete-gamma smoothing (for residual checks)."""
    N = nf.level
    digits = digits or mp.dps
    M = truncation_point(N, digits)
    c = 2 * mpmath.pi / mpmath.sqrt(N)
    if coeffs is None or len(coeffs) - 1 < M:
        coeffs = _embedded_coeffs(nf, M)
    s = mpmath.mpmathify(s)
    one = mpmath.fsum(
        coeffs[n] * (c * n) ** (-s) * mpmath.gammainc(s, c * n)
        for n in range(1, M + 1)
    )
    two = mpmath.fsum(
        mpmath.conj(coeffs[n]) * (c * n) ** (s - 2) * mpmath.gammainc(2 - s, c * n)
        for n in range(1, M + 1)
    )
    return one + eta_f * two


# ---------------------------------------------------------------------------
# the decision


@dataclass
class Verdict:
    kind: str  # "Vanishes" | "Ratio" | "Inconclusive"
    ratio: Fraction | None = None
    detail: str = ""
    caveats: tuple = ("heuristic-precision",)


def reconstruct_rational(x, B: int):
    """The unique p/q with q | B and |x - p/q| < 1/(2B), or None."""
    if B < 2:
        raise ValueError("B must be at least 2")
    x = mp.mpf(x) if not isinstance(x, mp.mpf) else x
    fl = mpmath.floor(x)
    A = int(mpmath.nint(B * (x - fl)))
    cand = Fraction(int(fl)) + Fraction(A, B)
    if mpmath.fabs(x - (int(fl) + mp.mpf(A) / B)) < mp.mpf(1) / (2 * B):
        return cand
    return None


def decide(l_products, report: LBoundReport, disc: int, omega: OmegaE) -> Verdict:
    """l_products: list of (L(E,1) value, error) over the ambiguity branches
    (one entry when the sign data is complete)."""
    vals = [v for v, _ in l_products]
    errs = [e for _, e in l_products]
    spread = max(
        mpmath.fabs(vals[i] - vals[j]) for i in range(len(vals)) for j in range(len(vals))
    ) if len(vals) > 1 else mp.mpf(0)
    err = max(errs) * 4 + spread
    val = vals[0]
    if mpmath.fabs(mpmath.im(val)) > err + mpmath.mpf(10) ** (-mp.dps + 6):
        return Verdict("Inconclusive", detail="L(E,1) has a nonreal residue")
    L = mpmath.re(val)
    if mpmath.fabs(L) + err < report.threshold:
        return Verdict("Vanishes")
    x = L * mpmath.sqrt(abs(disc)) / omega.value
    B = report.B
    xerr = err * mpmath.sqrt(abs(disc)) / omega.value
    if xerr >= mp.mpf(1) / (2 * B):
        return Verdict(
            "Inconclusive",
            detail=f"error {mpmath.nstr(xerr)} exceeds 1/(2B), B = {B}",
        )
    fl = mpmath.floor(x)
    A = int(mpmath.nint(B * (x - fl)))
    resid = mpmath.fabs(B * (x - fl) - A)
    if resid + B * xerr >= mp.mpf("0.5"):
        return Verdict("Inconclusive", detail="reconstruction at the uniqueness boundary")
    ratio = Fraction(int(fl)) + Fraction(A, B)
    return Verdict("Ratio", ratio=ratio)
