"""Classical modular polynomials Phi_ell for ell in {2,3,5,7,11,13}.

The polynomials ship as a plain-text data file (one monomial per line,
"a b c" meaning c * X^a * Y^b); the loader honours the QCURVE_PHI_DATA
environment variable.  They can be regenerated from scratch with
``generate_phi``, which expands j = E4^3 / Delta as an exact integer
q-series, forms the power sums of the ell+1 conjugate functions, converts
them to elementary symmetric functions by Newton's identities, and matches
each X-coefficient against powers of j.  Every generated polynomial is
checked for X/Y symmetry and against the Kronecker congruence
Phi_ell = (X^ell - Y)(X - Y^ell) mod ell.
"""

from __future__ import annotations

import os
from fractions import Fraction
from pathlib import Path

SUPPORTED_ELLS = (2, 3, 5, 7, 11, 13)

_DATA_ENV = "QCURVE_PHI_DATA"
_DATA_DEFAULT = Path(__file__).parent / "data" / "modular_polys.txt"


class UnsupportedEll(ValueError):
    pass


# ---------------------------------------------------------------------------
# q-series helpers: a Laurent series is (offset, [c0, c1, ...]) meaning
# sum c_i q^(offset + i); all coefficients are exact ints.


def _series_mul(f, g, hi):
    """Product, truncated so exponents run up to hi."""
    of, cf = f
    og, cg = g
    off = of + og
    n = hi - off + 1
    out = [0] * max(n, 0)
    for i, a in enumerate(cf):
        if not a:
            continue
        if of + i + og > hi:
            break
        jmax = min(len(cg), hi - (of + i + og) + 1)
        for j in range(jmax):
            b = cg[j]
            if b:
                out[i + j] += a * b
    return (off, out)


def _series_add(f, g):
    of, cf = f
    og, cg = g
    off = min(of, og)
    hi = max(of + len(cf), og + len(cg))
    out = [0] * (hi - off)
    for i, a in enumerate(cf):
        out[of - off + i] += a
    for i, a in enumerate(cg):
        out[og - off + i] += a
    return (off, out)


def _series_scale(f, c):
    return (f[0], [c * a for a in f[1]])


def _series_coeff(f, n):
    off, cf = f
    i = n - off
    return cf[i] if 0 <= i < len(cf) else 0


def j_series(nterms: int) -> tuple[int, list[int]]:
    """j(q) = 1/q + 744 + 196884 q + ..., coefficients through q^(nterms)."""
    N = nterms + 2
    sigma3 = [0] * N
    for d in range(1, N):
        for m in range(d, N, d):
            sigma3[m] += d**3
    e4 = [1] + [240 * sigma3[n] for n in range(1, N)]
    # delta/q = prod (1-q^n)^24; eta-product via pentagonal numbers then ^24
    eul = [0] * N
    eul[0] = 1
    k = 1
    while True:
        g1 = k * (3 * k - 1) // 2
        g2 = k * (3 * k + 1) // 2
        if g1 >= N and g2 >= N:
            break
        s = 1 if k % 2 == 0 else -1
        if g1 < N:
            eul[g1] += s
        if g2 < N:
            eul[g2] += s
        k += 1

    def mul_trunc(a, b):
        out = [0] * N
        for i, x in enumerate(a):
            if x:
                for jj in range(min(len(b), N - i)):
                    if b[jj]:
                        out[i + jj] += x * b[jj]
        return out

    e = eul
    pw = [1] + [0] * (N - 1)
    k = 24
    while k:
        if k & 1:
            pw = mul_trunc(pw, e)
        e = mul_trunc(e, e)
        k >>= 1
    dq = pw  # Delta / q
    # invert dq (unit series)
    inv = [0] * N
    inv[0] = 1
    for n in range(1, N):
        inv[n] = -sum(dq[i] * inv[n - i] for i in range(1, n + 1))
    e43 = mul_trunc(mul_trunc(e4, e4), e4)
    jq = mul_trunc(e43, inv)  # j*q as a power series
    return (-1, jq[: nterms + 2])


def generate_phi(ell: int) -> dict[tuple[int, int], int]:
    """Coefficients {(a, b): c} of Phi_ell(X, Y) = sum c X^a Y^b."""
    if ell not in SUPPORTED_ELLS:
        raise UnsupportedEll(f"ell={ell}")
    deg = ell + 1
    pole = deg * ell  # largest pole order among the e_k
    hi = pole  # everything is tracked on exponents <= hi
    jpow_terms = ell * hi  # pick_ell needs j^k this far
    j = j_series(jpow_terms)

    # j^k for k = 1..deg
    jp = [None, j]
    for k in range(2, deg + 1):
        jp.append(_series_mul(jp[-1], j, jpow_terms))

    # power sums p_k = j(ell*tau)^k + sum_i j((tau+i)/ell)^k
    def subs_ell(f):
        off, cf = f
        out_off = off * ell
        out = [0] * (hi - out_off + 1)
        for i, a in enumerate(cf):
            e = (off + i) * ell
            if e > hi:
                break
            out[e - out_off] = a
        return (out_off, out)

    def pick_ell(f):
        off, _ = f
        lo = off // ell
        while lo * ell < off:
            lo += 1
        return (lo, [_series_coeff(f, ell * e) for e in range(lo, hi + 1)])

    p = [None]
    for k in range(1, deg + 1):
        p.append(_series_add(subs_ell(jp[k]), _series_scale(pick_ell(jp[k]), ell)))

    # Newton's identities: k e_k = sum_{i=1}^{k} (-1)^(i-1) e_{k-i} p_i
    e = [ (0, [1]) ]
    for k in range(1, deg + 1):
        acc = (0, [])
        for i in range(1, k + 1):
            term = _series_mul(e[k - i], p[i], hi)
            if i % 2 == 0:
                term = _series_scale(term, -1)
            acc = _series_add(acc, term)
        off, cf = acc
        # entries above exponent hi - (k-1)*ell are convolution garbage and
        # never consumed; exactness is guaranteed (and checked) through 0
        assert all(
            c % k == 0 for i, c in enumerate(cf) if off + i <= 0
        ), f"Newton division by {k} not exact"
        e.append((off, [c // k for c in cf]))

    # express each e_k as a polynomial in j and assemble Phi; the series
    # are exact on exponents <= 0, which pins the polynomial uniquely
    jp_neg = []
    for t in range(deg + 1):
        f = jp[t] if t else (0, [1])
        jp_neg.append({f[0] + i: c for i, c in enumerate(f[1]) if f[0] + i <= 0 and c})
    coeffs: dict[tuple[int, int], int] = {}
    for k in range(0, deg + 1):
        off, cf = e[k]
        ser = {off + i: c for i, c in enumerate(cf) if off + i <= 0 and c}
        poly = {}
        while ser:
            n0 = min(ser)
            t, c = -n0, ser[n0]
            poly[t] = c
            for nn, cc in jp_neg[t].items():
                v = ser.get(nn, 0) - c * cc
                if v:
                    ser[nn] = v
                else:
                    ser.pop(nn, None)
        for t, c in poly.items():
            if c:
                coeffs[(deg - k, t)] = c if k % 2 == 0 else -c
    # symmetry and Kronecker congruence checks
    for (a, b), c in list(coeffs.items()):
        assert coeffs.get((b, a), 0) == c, "Phi is not symmetric"
    # (X^ell - Y)(X - Y^ell) = X^(ell+1) - X^ell Y^ell - XY + Y^(ell+1)
    kron = {
        (ell + 1, 0): 1,
        (ell, ell): -1,
        (1, 1): -1,
        (0, ell + 1): 1,
    }
    keys = set(coeffs) | set(kron)
    for key in keys:
        assert (coeffs.get(key, 0) - kron.get(key, 0)) % ell == 0, (
            f"Kronecker congruence fails at {key}"
        )
    return coeffs


def write_data_file(path=None, ells=SUPPORTED_ELLS):
    path = Path(path or _DATA_DEFAULT)
    lines = []
    for ell in ells:
        coeffs = generate_phi(ell)
        lines.append(f"PHI {ell}")
        for (a, b), c in sorted(coeffs.items()):
            lines.append(f"{a} {b} {c}")
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("\n".join(lines) + "\n")
    return path


_cache: dict[int, dict] = {}


def load_phi(ell: int) -> dict[tuple[int, int], int]:
    """Coefficient table of Phi_ell from the shipped data file."""
    if ell not in SUPPORTED_ELLS:
        raise UnsupportedEll(f"ell={ell} (supported: {SUPPORTED_ELLS})")
    if not _cache:
        path = Path(os.environ.get(_DATA_ENV, _DATA_DEFAULT))
        cur = None
        for line in path.read_text().splitlines():
            parts = line.split()
            if not parts:
                continue
            if parts[0] == "PHI":
                cur = _cache.setdefault(int(parts[1]), {})
            else:
                a, b, c = int(parts[0]), int(parts[1]), int(parts[2])
                cur[(a, b)] = c
    return _cache[ell]


def phi_eval_poly(ell: int, j, K):
    """Phi_ell(j, Y) as a Poly over K, for a fixed first argument."""
    from .kpoly import Poly

    coeffs = load_phi(ell)
    deg = ell + 1
    jpows = [K.one]
    for _ in range(deg):
        jpows.append(jpows[-1] * j)
    out = [K.zero] * (deg + 1)
    for (a, b), c in coeffs.items():
        out[b] = out[b] + K(c) * jpows[a]
    return Poly(out)
