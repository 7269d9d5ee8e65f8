"""
Arithmetic in Z_p, in Z_p[[T]] modulo (p^N, T^M), and in the integer Laurent
ring Z[u, 1/u] with u = 1 + T.

Usage
-----

>>> from zptower_padic import LaurentU, omega_poly, mu_lambda
>>> omega_poly(2, 2).t_coefficients(5)
[0, 4, 6, 4, 1]
>>> mu_lambda(omega_poly(2, 2), 2)
MuLambda(mu=0, lambda_=4, certified=True, note='')

A p-adic integer is either an exact integer or a residue known modulo p^N:

>>> from zptower_padic import PadicScalar, binomial_series
>>> a = PadicScalar.from_digits(3, [2, 1, 0, 1], 40)   # 2 + 3 + 27, mod 3^40
>>> binomial_series(a, 4, 16)
TruncatedSeries(p=3, N=16, M=4: 1 + 32T + 496T^2 + 4960T^3)

Interface
---------
"""
import logging
import math
from typing import Dict, Iterable, List, Mapping, NamedTuple, Optional, Tuple, Union

import sympy
from sympy import Poly, Symbol


class PadicError(Exception): pass
class PrecisionError(PadicError): pass
class PrimeMismatchError(PadicError): pass
class ZeroSeriesError(PadicError): pass

logger = logging.getLogger(__name__)

_T = Symbol('T')

MuLambda = NamedTuple('MuLambda', [('mu', int),
                                   ('lambda_', int),
                                   ('certified', bool),
                                   ('note', str)])


def valuation(n: int, p: int) -> Optional[int]:
    """
    ord_p of an integer, or None for 0 (infinite valuation).
    """
    if n == 0:
        return None
    return int(sympy.multiplicity(p, abs(n)))


def check_prime(p: int) -> None:
    if not isinstance(p, int) or not sympy.isprime(p):
        raise PadicError("{} is not a prime".format(p))


def _binomials(a: int, count: int) -> List[int]:
    """
    binom(a, 0), ..., binom(a, count - 1) for any integer `a`, using
    binom(a, i) = binom(a, i - 1) * (a - i + 1) / i; every division is exact.
    """
    out = [1]
    b = 1
    for i in range(1, count):
        b = b * (a - i + 1) // i
        out.append(b)
    return out[:count]


def _order_at_one(residues: Mapping[int, int], p: int,
                  limit: Optional[int] = None) -> Optional[int]:
    """
    ord_T of ``sum r_k (1 + T)^k`` over GF(p), for k >= 0, or None when it
    is zero or not below `limit`.

    Over GF(p), ``(1 + T)^(k0 + p k') = (1 + T)^k0 (1 + T^p)^k'``, so the sum
    splits as ``sum_i T^i H_i(T^p)`` over i < p and each H_i has the same
    shape with exponents k'.
    """
    if not residues or (limit is not None and limit <= 0):
        return None
    if sum(residues.values()) % p:
        return 0
    best = limit
    found = False
    for i in range(p):
        if best is not None and i >= best:
            break
        digits = {}  # type: Dict[int, int]
        for k, r in residues.items():
            b = math.comb(k % p, i)
            if b:
                digits[k // p] = (digits.get(k // p, 0) + r * b) % p
        digits = {k: r for k, r in digits.items() if r}
        sub_limit = None if best is None else -(-(best - i) // p)
        o = _order_at_one(digits, p, sub_limit)
        if o is not None and (best is None or i + p * o < best):
            best, found = i + p * o, True
    return best if found else None


class PadicScalar(object):
    """
    An element of Z_p: an exact integer (``precision is None``) or a residue
    known modulo ``p**precision``.
    """
    def __init__(self, p: int, value: int, precision: Optional[int] = None) -> None:
        if precision is not None:
            if precision < 0:
                raise PrecisionError("negative precision {}".format(precision))
            value %= p ** precision
        self._p = p
        self._value = value
        self._precision = precision

    @classmethod
    def from_digits(cls, p: int, digits: Iterable[int],
                    precision: int) -> 'PadicScalar':
        """
        The residue ``sum(d_i * p**i)`` known modulo ``p**precision``.
        """
        value = 0
        for i, d in enumerate(digits):
            if not 0 <= d < p:
                raise PadicError("digit {} out of range for p={}".format(d, p))
            value += d * p ** i
        return cls(p, value, precision)

    @property
    def p(self) -> int:
        return self._p

    @property
    def value(self) -> int:
        """The integer representative (in [0, p^N) when truncated)."""
        return self._value

    @property
    def precision(self) -> Optional[int]:
        return self._precision

    @property
    def is_exact(self) -> bool:
        return self._precision is None

    def residue(self, k: int) -> int:
        """
        The image in Z/p^k.

        Raises:
            PrecisionError: if the value is only known to fewer than `k` digits.
        """
        if self._precision is not None and self._precision < k:
            raise PrecisionError("need {} p-adic digits, have {}".format(
                k, self._precision))
        return self._value % self._p ** k

    def valuation(self) -> Optional[int]:
        """
        ord_p of the value, or None when it is 0 (exactly, or to the known
        precision; see `is_zero`).
        """
        return valuation(self._value, self._p)

    def is_zero(self) -> bool:
        return self._value == 0

    def _coerce(self, other: Union['PadicScalar', int]) -> 'PadicScalar':
        if isinstance(other, int):
            return PadicScalar(self._p, other)
        if other._p != self._p:
            raise PrimeMismatchError("primes {} and {} differ".format(
                self._p, other._p))
        return other

    def _join(self, other: 'PadicScalar') -> Optional[int]:
        precs = [q for q in (self._precision, other._precision) if q is not None]
        return min(precs) if precs else None

    def __add__(self, other):
        other = self._coerce(other)
        return PadicScalar(self._p, self._value + other._value, self._join(other))

    __radd__ = __add__

    def __neg__(self):
        return PadicScalar(self._p, -self._value, self._precision)

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __mul__(self, other):
        other = self._coerce(other)
        return PadicScalar(self._p, self._value * other._value, self._join(other))

    __rmul__ = __mul__

    def __eq__(self, other) -> bool:
        if isinstance(other, int):
            other = PadicScalar(self._p, other, self._precision)
        if not isinstance(other, PadicScalar):
            return NotImplemented
        return (self._p, self._value, self._precision) == \
            (other._p, other._value, other._precision)

    def __hash__(self) -> int:
        return hash((self._p, self._value, self._precision))

    def __repr__(self) -> str:
        if self.is_exact:
            return "PadicScalar({}, p={})".format(self._value, self._p)
        return "PadicScalar({} + O({}^{}))".format(
            self._value, self._p, self._precision)


class TruncatedSeries(object):
    """
    An element of Z_p[[T]] known modulo (p^N, T^M).

    Arithmetic between series of different precisions is carried out at the
    smaller of each precision.
    """
    def __init__(self, p: int, coefficients: Iterable[int], p_prec: int,
                 t_prec: int) -> None:
        if p_prec < 1 or t_prec < 1:
            raise PrecisionError("precisions must be positive (N={}, M={})".format(
                p_prec, t_prec))
        mod = p ** p_prec
        coeffs = [c % mod for c in list(coefficients)[:t_prec]]
        coeffs += [0] * (t_prec - len(coeffs))
        self._p = p
        self._N = p_prec
        self._M = t_prec
        self._coeffs = tuple(coeffs)

    @classmethod
    def constant(cls, p: int, c: int, p_prec: int, t_prec: int) -> 'TruncatedSeries':
        return cls(p, [c], p_prec, t_prec)

    @property
    def p(self) -> int:
        return self._p

    @property
    def p_prec(self) -> int:
        return self._N

    @property
    def t_prec(self) -> int:
        return self._M

    @property
    def coefficients(self) -> Tuple[int, ...]:
        return self._coeffs

    def __getitem__(self, i: int) -> int:
        return self._coeffs[i]

    def signed_coefficients(self) -> List[int]:
        """Coefficients lifted to (-p^N/2, p^N/2]."""
        mod = self._p ** self._N
        return [c - mod if 2 * c > mod else c for c in self._coeffs]

    def valuations(self) -> List[int]:
        """ord_p of each coefficient, capped at N (so 0 maps to N)."""
        out = []
        for c in self._coeffs:
            v = valuation(c, self._p)
            out.append(self._N if v is None else min(v, self._N))
        return out

    def is_zero(self) -> bool:
        return not any(self._coeffs)

    def _coerce(self, other) -> 'TruncatedSeries':
        if isinstance(other, int):
            return TruncatedSeries.constant(self._p, other, self._N, self._M)
        if other._p != self._p:
            raise PrimeMismatchError("primes {} and {} differ".format(
                self._p, other._p))
        return other

    def __add__(self, other):
        other = self._coerce(other)
        M = min(self._M, other._M)
        return TruncatedSeries(self._p,
                               [a + b for a, b in zip(self._coeffs[:M], other._coeffs[:M])],
                               min(self._N, other._N), M)

    __radd__ = __add__

    def __neg__(self):
        return TruncatedSeries(self._p, [-c for c in self._coeffs], self._N, self._M)

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __mul__(self, other):
        other = self._coerce(other)
        M = min(self._M, other._M)
        N = min(self._N, other._N)
        a, b = self._coeffs, other._coeffs
        out = [0] * M
        for i in range(M):
            if a[i]:
                for j in range(M - i):
                    out[i + j] += a[i] * b[j]
        return TruncatedSeries(self._p, out, N, M)

    __rmul__ = __mul__

    def __eq__(self, other) -> bool:
        if not isinstance(other, TruncatedSeries):
            return NotImplemented
        return (self._p, self._N, self._M, self._coeffs) == \
            (other._p, other._N, other._M, other._coeffs)

    def __hash__(self) -> int:
        return hash((self._p, self._N, self._M, self._coeffs))

    def __repr__(self) -> str:
        return "TruncatedSeries(p={}, N={}, M={}: {})".format(
            self._p, self._N, self._M, format_t_polynomial(self._coeffs))


class LaurentU(object):
    """
    An exact Laurent polynomial ``sum c_k u^k`` in u = 1 + T with integer
    coefficients. Zero coefficients are never stored.
    """
    def __init__(self, terms: Optional[Mapping[int, int]] = None) -> None:
        self._terms = {k: c for k, c in (terms or {}).items() if c}  # type: Dict[int, int]

    @classmethod
    def monomial(cls, k: int, c: int = 1) -> 'LaurentU':
        return cls({k: c})

    @classmethod
    def constant(cls, c: int) -> 'LaurentU':
        return cls({0: c})

    @property
    def terms(self) -> Dict[int, int]:
        return dict(self._terms)

    def items(self) -> List[Tuple[int, int]]:
        """(exponent, coefficient) pairs by increasing exponent."""
        return sorted(self._terms.items())

    def is_zero(self) -> bool:
        return not self._terms

    @property
    def min_exponent(self) -> int:
        return min(self._terms) if self._terms else 0

    def _coerce(self, other) -> 'LaurentU':
        return LaurentU.constant(other) if isinstance(other, int) else other

    def __add__(self, other):
        other = self._coerce(other)
        terms = dict(self._terms)
        for k, c in other._terms.items():
            terms[k] = terms.get(k, 0) + c
        return LaurentU(terms)

    __radd__ = __add__

    def __neg__(self):
        return LaurentU({k: -c for k, c in self._terms.items()})

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __mul__(self, other):
        other = self._coerce(other)
        terms = {}  # type: Dict[int, int]
        for k1, c1 in self._terms.items():
            for k2, c2 in other._terms.items():
                terms[k1 + k2] = terms.get(k1 + k2, 0) + c1 * c2
        return LaurentU(terms)

    __rmul__ = __mul__

    def shift(self, k: int) -> 'LaurentU':
        """Multiply by u^k."""
        return LaurentU({e + k: c for e, c in self._terms.items()})

    def u_polynomial(self) -> Tuple[int, List[int]]:
        """
        Write the element as ``u^c * P(u)`` with P a polynomial and P(0) != 0.

        Returns:
            ``(c, [P_0, P_1, ...])``
        """
        c = self.min_exponent
        if not self._terms:
            return 0, []
        coeffs = [0] * (max(self._terms) - c + 1)
        for k, v in self._terms.items():
            coeffs[k - c] = v
        return c, coeffs

    def t_polynomial(self) -> Tuple[int, List[int]]:
        """
        Write the element as ``(1 + T)^c * g(T)`` with g an integer polynomial.

        Returns:
            ``(c, [g_0, g_1, ...])`` where ``g(T) = P(1 + T)``.
        """
        c, coeffs = self.u_polynomial()
        if not coeffs:
            return 0, []
        g = Poly(list(reversed(coeffs)), _T).shift(1)
        return c, [int(a) for a in reversed(g.all_coeffs())]

    def t_coefficients(self, t_prec: int) -> List[int]:
        """
        The first `t_prec` exact integer coefficients of the T-expansion.
        """
        out = [0] * t_prec
        for k, c in self._terms.items():
            for i, b in enumerate(_binomials(k, t_prec)):
                out[i] += c * b
        return out

    def __eq__(self, other) -> bool:
        if isinstance(other, int):
            other = LaurentU.constant(other)
        if not isinstance(other, LaurentU):
            return NotImplemented
        return self._terms == other._terms

    def __hash__(self) -> int:
        return hash(tuple(self.items()))

    def __repr__(self) -> str:
        if not self._terms:
            return "LaurentU(0)"
        parts = []
        for k, c in self.items():
            mono = "" if k == 0 else ("u" if k == 1 else "u^{}".format(k))
            if mono and abs(c) == 1:
                body = mono
            else:
                body = "{}{}".format(abs(c), mono)
            parts.append(("- " if c < 0 else "+ ") + body)
        text = " ".join(parts)
        text = text[2:] if text.startswith("+ ") else "-" + text[2:]
        return "LaurentU({})".format(text)


Series = Union[TruncatedSeries, LaurentU]


def format_t_polynomial(coeffs: Iterable[int]) -> str:
    """Render ``[0, 4, 6]`` as ``4T + 6T^2``."""
    parts = []
    for i, c in enumerate(coeffs):
        if not c:
            continue
        mono = "" if i == 0 else ("T" if i == 1 else "T^{}".format(i))
        body = mono if (mono and abs(c) == 1) else "{}{}".format(abs(c), mono)
        parts.append(("- " if c < 0 else "+ ") + body)
    if not parts:
        return "0"
    text = " ".join(parts)
    return text[2:] if text.startswith("+ ") else "-" + text[2:]


def omega_poly(p: int, k: int) -> LaurentU:
    """
    ``omega_k(T) = (1 + T)^(p^k) - 1``.
    """
    if k < 0:
        raise ValueError("k must be nonnegative, got {}".format(k))
    return LaurentU({p ** k: 1, 0: -1})


def guard_precision(p: int, p_prec: int, t_prec: int) -> int:
    """
    Input precision needed by `binomial_series` to certify `p_prec` output
    digits for `t_prec` coefficients; ord_p(i!) <= i / (p - 1).
    """
    return p_prec + t_prec // (p - 1) + 2


def binomial_series(a: Union[PadicScalar, int], t_prec: int, p_prec: int,
                    p: Optional[int] = None) -> TruncatedSeries:
    """
    ``(1 + T)^a = sum binom(a, i) T^i`` modulo (p^N, T^M).

    Args:
        a: the exponent; a bare int is an exact element of Z_p (then `p` is
            required)
        t_prec: M, the number of coefficients
        p_prec: N, the p-adic precision of each coefficient

    Raises:
        PrecisionError: if `a` is a residue known to fewer than
            `guard_precision` digits.
    """
    if isinstance(a, int):
        if p is None:
            raise PadicError("prime required for an integer exponent")
        a = PadicScalar(p, a)
    if not a.is_exact:
        needed = guard_precision(a.p, p_prec, t_prec)
        if a.precision < needed:
            raise PrecisionError(
                "exponent known to {} digits, {} needed for N={}, M={}".format(
                    a.precision, needed, p_prec, t_prec))
    return TruncatedSeries(a.p, _binomials(a.value, t_prec), p_prec, t_prec)


def laurent_to_series(f: LaurentU, p: int, t_prec: int,
                      p_prec: int) -> TruncatedSeries:
    """
    Substitute u = 1 + T and reduce modulo (p^N, T^M); negative powers of u
    expand through binom(-k, i).
    """
    return TruncatedSeries(p, f.t_coefficients(t_prec), p_prec, t_prec)


def mu_lambda(f: Series, p: Optional[int] = None,
              lambda_bound: Optional[int] = None) -> MuLambda:
    """
    The mu and lambda invariants of a nonzero power series: mu is the least
    p-adic valuation of a coefficient and lambda the first index attaining it.

    For an exact `LaurentU` (then `p` is required) the answer is certified
    and is read off the sparse u-coefficients of f = u^c P(u): mu is the
    least valuation among them, since u -> 1 + T preserves the content, and
    lambda is the multiplicity of the root u = 1 of (P / p^mu) mod p. No
    dense expansion is made. For a `TruncatedSeries` the visible answer is
    certified when mu = 0, or when the caller knows that lambda is at most
    `lambda_bound` < M.

    Raises:
        ZeroSeriesError: if no coefficient is visibly nonzero.
    """
    if isinstance(f, LaurentU):
        if p is None:
            raise PadicError("prime required for an exact series")
        if f.is_zero():
            raise ZeroSeriesError("series is identically 0")
        c = f.min_exponent
        mu = min(valuation(v, p) for _, v in f.items())
        scale = p ** mu
        residues = {k - c: v // scale % p for k, v in f.items()}
        lam = _order_at_one({k: r for k, r in residues.items() if r}, p)
        return MuLambda(mu, lam, True, '')

    vals = f.valuations()
    mu = min(vals)
    if mu >= f.p_prec:
        raise ZeroSeriesError("series indistinguishable from 0 at this precision")
    lam = vals.index(mu)
    if mu == 0:
        return MuLambda(mu, lam, True, '')
    if lambda_bound is not None and lambda_bound < f.t_prec and lam <= lambda_bound:
        return MuLambda(mu, lam, True,
                        'certified by lambda bound {}'.format(lambda_bound))
    note = ('mu > 0 visible only up to T^{}; a later coefficient could have '
            'smaller valuation'.format(f.t_prec - 1))
    logger.info("Uncertified invariants: {}".format(note))
    return MuLambda(mu, lam, False, note)
