"""Sparse multivariate polynomials over named variables x0, x1, ...

Monomials are kept in graded-lexicographic order, which gives every
operation a deterministic, canonical result.  Coefficients are plain
doubles; near-zero coefficients are pruned after arithmetic so that
floating-point dust does not accumulate into spurious terms.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from functools import reduce

import numpy as np

PRUNE_TOL = 1e-12


class DimensionError(ValueError):
    """Raised when operand variable spaces or vector lengths disagree."""


class GramStructureError(ValueError):
    """Raised when a polynomial cannot be expressed over a Gram basis."""


@dataclass(frozen=True)
class Monomial:
    """A product of variable powers, stored as sorted (var, exp) pairs with exp > 0."""

    exps: tuple[tuple[int, int], ...]

    @staticmethod
    def make(exps: dict[int, int] | list[tuple[int, int]]) -> "Monomial":
        items = exps.items() if isinstance(exps, dict) else exps
        cleaned = []
        for var, exp in sorted(items):
            if exp < 0:
                raise ValueError(f"negative exponent {exp} for x{var}")
            if exp > 0:
                cleaned.append((int(var), int(exp)))
        return Monomial(tuple(cleaned))

    @staticmethod
    def one() -> "Monomial":
        return Monomial(())

    @staticmethod
    def var(index: int, exp: int = 1) -> "Monomial":
        return Monomial.make([(index, exp)])

    @staticmethod
    def from_dense(vec) -> "Monomial":
        return Monomial.make([(i, int(e)) for i, e in enumerate(vec)])

    @property
    def degree(self) -> int:
        return sum(e for _, e in self.exps)

    def max_var(self) -> int:
        return max((v for v, _ in self.exps), default=-1)

    def dense(self, nvars: int) -> tuple[int, ...]:
        out = [0] * nvars
        for var, exp in self.exps:
            if var >= nvars:
                raise DimensionError(f"monomial uses x{var} but nvars={nvars}")
            out[var] = exp
        return tuple(out)

    def sort_key(self, nvars: int) -> tuple:
        # graded lex: total degree first, then exponent vector
        return (self.degree, self.dense(nvars))

    def __mul__(self, other: "Monomial") -> "Monomial":
        exps = dict(self.exps)
        for var, exp in other.exps:
            exps[var] = exps.get(var, 0) + exp
        return Monomial.make(exps)

    def __str__(self) -> str:
        if not self.exps:
            return "1"
        return " ".join(
            f"x{v}" if e == 1 else f"x{v}^{e}" for v, e in self.exps
        )


class Polynomial:
    """Sparse polynomial: a map from Monomial to real coefficient in `nvars` variables."""

    __slots__ = ("nvars", "terms", "_table")

    def __init__(self, nvars: int, terms: dict[Monomial, float] | None = None,
                 prune: bool = True):
        if nvars < 0:
            raise DimensionError("nvars must be >= 0")
        terms = dict(terms or {})
        for mono in terms:
            if mono.max_var() >= nvars:
                raise DimensionError(
                    f"monomial {mono} out of range for nvars={nvars}")
        if prune:
            terms = {m: float(c) for m, c in terms.items()
                     if abs(c) > PRUNE_TOL}
        self.nvars = nvars
        self.terms = terms
        self._table = None

    # -- constructors -------------------------------------------------

    @staticmethod
    def zero(nvars: int) -> "Polynomial":
        return Polynomial(nvars, {})

    @staticmethod
    def constant(nvars: int, value: float) -> "Polynomial":
        return Polynomial(nvars, {Monomial.one(): float(value)})

    @staticmethod
    def variable(index: int, nvars: int) -> "Polynomial":
        if not 0 <= index < nvars:
            raise DimensionError(f"variable index {index} out of range")
        return Polynomial(nvars, {Monomial.var(index): 1.0})

    # -- basic queries -------------------------------------------------

    @property
    def degree(self) -> int:
        return max((m.degree for m in self.terms), default=0)

    def is_zero(self) -> bool:
        return not self.terms

    def coeff(self, mono: Monomial) -> float:
        return self.terms.get(mono, 0.0)

    def ordered_terms(self) -> list[tuple[Monomial, float]]:
        return sorted(self.terms.items(), key=lambda t: t[0].sort_key(self.nvars))

    def max_abs_coeff(self) -> float:
        return max((abs(c) for c in self.terms.values()), default=0.0)

    # -- evaluation ----------------------------------------------------

    def _build_table(self):
        monos = list(self.terms)
        coeffs = np.array([self.terms[m] for m in monos], dtype=float)
        expmat = np.zeros((len(monos), self.nvars), dtype=np.int64)
        for r, m in enumerate(monos):
            for var, exp in m.exps:
                expmat[r, var] = exp
        self._table = (coeffs, expmat)
        return self._table

    def eval(self, x) -> float:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.nvars,):
            raise DimensionError(
                f"point of length {x.shape} for nvars={self.nvars}")
        coeffs, expmat = self._table or self._build_table()
        if coeffs.size == 0:
            return 0.0
        return float(coeffs @ np.prod(x[None, :] ** expmat, axis=1))

    def eval_many(self, X: np.ndarray) -> np.ndarray:
        """Evaluate at a batch of points, shape (N, nvars) -> (N,)."""
        X = np.asarray(X, dtype=float)
        if X.ndim != 2 or X.shape[1] != self.nvars:
            raise DimensionError(
                f"batch shape {X.shape} for nvars={self.nvars}")
        coeffs, expmat = self._table or self._build_table()
        if coeffs.size == 0:
            return np.zeros(X.shape[0])
        return np.prod(X[:, None, :] ** expmat[None, :, :], axis=2) @ coeffs

    # -- arithmetic ----------------------------------------------------

    def _check_compatible(self, other: "Polynomial"):
        if self.nvars != other.nvars:
            raise DimensionError(
                f"nvars mismatch: {self.nvars} vs {other.nvars}")

    def __add__(self, other):
        if isinstance(other, (int, float)):
            other = Polynomial.constant(self.nvars, other)
        self._check_compatible(other)
        terms = dict(self.terms)
        for m, c in other.terms.items():
            terms[m] = terms.get(m, 0.0) + c
        return Polynomial(self.nvars, terms)

    __radd__ = __add__

    def __neg__(self):
        return Polynomial(self.nvars,
                          {m: -c for m, c in self.terms.items()}, prune=False)

    def __sub__(self, other):
        if isinstance(other, (int, float)):
            other = Polynomial.constant(self.nvars, other)
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, (int, float)):
            return self.scale(other)
        self._check_compatible(other)
        terms: dict[Monomial, float] = {}
        for m1, c1 in self.terms.items():
            for m2, c2 in other.terms.items():
                m = m1 * m2
                terms[m] = terms.get(m, 0.0) + c1 * c2
        return Polynomial(self.nvars, terms)

    __rmul__ = __mul__

    def scale(self, factor: float) -> "Polynomial":
        return Polynomial(self.nvars,
                          {m: c * factor for m, c in self.terms.items()})

    def pow(self, k: int) -> "Polynomial":
        if k < 0:
            raise ValueError("negative power")
        out = Polynomial.constant(self.nvars, 1.0)
        for _ in range(k):
            out = out * self
        return out

    def with_nvars(self, nvars: int) -> "Polynomial":
        """Embed into a (larger) variable space, keeping variable indices."""
        if nvars < self.nvars:
            for m in self.terms:
                if m.max_var() >= nvars:
                    raise DimensionError("cannot shrink below used variables")
        return Polynomial(nvars, dict(self.terms), prune=False)

    # -- substitution --------------------------------------------------

    def substitute(self, var: int, q: "Polynomial") -> "Polynomial":
        """Replace variable `var` by polynomial `q`.

        The result lives in max(self.nvars, q.nvars) variables; all other
        variables keep their indices.
        """
        if not 0 <= var < self.nvars:
            raise DimensionError(f"substitution index {var} out of range")
        nvars = max(self.nvars, q.nvars)
        q = q.with_nvars(nvars)
        max_exp = max((dict(m.exps).get(var, 0) for m in self.terms), default=0)
        powers = [Polynomial.constant(nvars, 1.0)]
        for _ in range(max_exp):
            powers.append(powers[-1] * q)
        out = Polynomial.zero(nvars)
        for m, c in self.terms.items():
            exps = dict(m.exps)
            e = exps.pop(var, 0)
            rest = Polynomial(nvars, {Monomial.make(exps): c}, prune=False)
            out = out + rest * powers[e]
        return out

    def compose(self, subs: list["Polynomial"]) -> "Polynomial":
        """Simultaneously substitute every variable: x_i := subs[i]."""
        if len(subs) != self.nvars:
            raise DimensionError(
                f"need {self.nvars} substitutions, got {len(subs)}")
        nvars = max([q.nvars for q in subs], default=0)
        subs = [q.with_nvars(nvars) for q in subs]
        # cache powers of each substituted polynomial
        max_exp = [0] * self.nvars
        for m in self.terms:
            for var, exp in m.exps:
                max_exp[var] = max(max_exp[var], exp)
        powers = []
        for i, q in enumerate(subs):
            ps = [Polynomial.constant(nvars, 1.0)]
            for _ in range(max_exp[i]):
                ps.append(ps[-1] * q)
            powers.append(ps)
        out = Polynomial.zero(nvars)
        for m, c in self.terms.items():
            term = Polynomial.constant(nvars, c)
            for var, exp in m.exps:
                term = term * powers[var][exp]
            out = out + term
        return out

    # -- printing / parsing -------------------------------------------

    def to_string(self) -> str:
        if not self.terms:
            return "0.0"
        parts = []
        for mono, coeff in self.ordered_terms():
            if mono.exps:
                parts.append(f"{coeff!r} * {mono}")
            else:
                parts.append(f"{coeff!r}")
        return " + ".join(parts)

    _TERM_RE = re.compile(
        r"^\s*(?P<coeff>[-+]?[\d.eE+-]+|[-+]?inf|[-+]?nan)"
        r"(?:\s*\*\s*(?P<monos>(?:x\d+(?:\^\d+)?\s*)+))?\s*$")
    _VAR_RE = re.compile(r"x(\d+)(?:\^(\d+))?")

    @staticmethod
    def from_string(text: str, nvars: int) -> "Polynomial":
        text = text.strip()
        if not text:
            raise ValueError("empty polynomial string")
        terms: dict[Monomial, float] = {}
        for chunk in re.split(r"\s\+\s", text):
            m = Polynomial._TERM_RE.match(chunk)
            if m is None:
                raise ValueError(f"cannot parse polynomial term {chunk!r}")
            coeff = float(m.group("coeff"))
            exps: dict[int, int] = {}
            if m.group("monos"):
                for var, exp in Polynomial._VAR_RE.findall(m.group("monos")):
                    v = int(var)
                    exps[v] = exps.get(v, 0) + (int(exp) if exp else 1)
            mono = Monomial.make(exps)
            terms[mono] = terms.get(mono, 0.0) + coeff
        return Polynomial(nvars, terms, prune=False)

    def __repr__(self):
        return f"Polynomial({self.nvars}, {self.to_string()!r})"

    def __eq__(self, other):
        return (isinstance(other, Polynomial) and self.nvars == other.nvars
                and self.terms == other.terms)

    def __hash__(self):
        return hash((self.nvars, tuple(sorted(
            self.terms.items(), key=lambda t: t[0].sort_key(self.nvars)))))


def arith(op: str, p: Polynomial, q) -> Polynomial:
    """Named arithmetic dispatch: op in {add, sub, mul, scale}."""
    if op == "add":
        return p + q
    if op == "sub":
        return p - q
    if op == "mul":
        return p * q
    if op == "scale":
        if not isinstance(q, (int, float)):
            raise ValueError("scale expects a scalar")
        return p.scale(q)
    raise ValueError(f"unknown op {op!r}")


def monomials_up_to_degree(nvars: int, d: int) -> list[Monomial]:
    """All C(nvars+d, d) monomials of total degree <= d, graded-lex ordered."""
    if nvars < 1 or d < 0:
        raise ValueError("need nvars >= 1 and d >= 0")
    out: list[Monomial] = []

    def rec(var: int, remaining: int, acc: list[tuple[int, int]]):
        if var == nvars:
            out.append(Monomial.make(list(acc)))
            return
        for e in range(remaining + 1):
            if e:
                acc.append((var, e))
            rec(var + 1, remaining - e, acc)
            if e:
                acc.pop()

    rec(0, d, [])
    out.sort(key=lambda m: m.sort_key(nvars))
    assert len(out) == math.comb(nvars + d, d)
    return out


@dataclass(frozen=True)
class GramConstraint:
    """One linear equality over Gram entries: sum over (i, j) pairs equals `value`.

    Off-diagonal pairs (i < j) contribute Q[i,j] + Q[j,i] = 2 Q[i,j].
    """

    monomial: Monomial
    entries: tuple[tuple[int, int], ...]   # i <= j indices into the basis
    value: float

    def residual(self, Q: np.ndarray) -> float:
        acc = 0.0
        for i, j in self.entries:
            acc += Q[i, j] if i == j else 2.0 * Q[i, j]
        return acc - self.value


def gram_match(p: Polynomial, basis: list[Monomial]) -> list[GramConstraint]:
    """Linear equality constraints for p == z^T Q z with z the basis vector.

    Emits one constraint per monomial reachable as a basis product; a PSD Q
    satisfying all of them certifies that p is a sum of squares over `basis`.
    """
    products: dict[Monomial, list[tuple[int, int]]] = {}
    for i in range(len(basis)):
        for j in range(i, len(basis)):
            m = basis[i] * basis[j]
            products.setdefault(m, []).append((i, j))
    for m in p.terms:
        if m not in products:
            raise GramStructureError(
                f"monomial {m} of target not representable over the basis")
    nvars = p.nvars
    order = sorted(products, key=lambda m: m.sort_key(max(nvars, 1)))
    return [GramConstraint(m, tuple(products[m]), p.coeff(m)) for m in order]


def gram_reconstruct(Q: np.ndarray, basis: list[Monomial],
                     nvars: int) -> Polynomial:
    """Reassemble sum_ij Q[i,j] b_i b_j as a polynomial (test helper and audit)."""
    terms: dict[Monomial, float] = {}
    for i in range(len(basis)):
        for j in range(len(basis)):
            m = basis[i] * basis[j]
            terms[m] = terms.get(m, 0.0) + float(Q[i, j])
    return Polynomial(nvars, terms)
