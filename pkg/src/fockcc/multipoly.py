"""Sparse multivariate polynomials over tagged variables.

Variables are small tuples ``(tag, a, b)`` so they hash and sort cheaply:

* ``("t", I, B)`` and ``("c", I, B)`` with hole mask ``I`` and particle mask ``B``
* ``("psi", J, 0)``
* ``("lambda", 0, 0)``
* ``("aux", k, 0)``

Coefficients are exact ``Fraction`` values during construction.  Numerics go
through :class:`CompiledPolynomials`, which converts every coefficient to a
complex double exactly once and evaluates batches of points with numpy.
"""

from __future__ import annotations

import json
import re
from fractions import Fraction
from numbers import Number
from typing import Iterable, Iterator, Mapping, Sequence

import numpy as np
import scipy.sparse as sp

from .combinatorics import compact, elements_of, mask_of
from .errors import BindingError

TAGS = ("t", "psi", "c", "lambda", "aux")

Var = tuple  # (tag, a, b)
Monomial = tuple  # ((var, exp), ...) sorted by var


def t_var(I: int, B: int) -> Var:
    return ("t", I, B)


def c_var(I: int, B: int) -> Var:
    return ("c", I, B)


def psi_var(J: int) -> Var:
    return ("psi", J, 0)


def lambda_var() -> Var:
    return ("lambda", 0, 0)


def aux_var(k: int) -> Var:
    return ("aux", k, 0)


def _label(mask: int) -> str:
    els = elements_of(mask)
    if els and els[-1] > 9:
        # trailing comma keeps a lone "11" from reading as compact digits
        return ",".join(map(str, els)) + ("," if len(els) == 1 else "")
    return compact(mask)


def _unlabel(text: str) -> int:
    if text in ("", "0"):
        return 0
    if "," in text:
        return mask_of(int(x) for x in text.split(",") if x)
    return mask_of(int(ch) for ch in text)


def format_var(v: Var) -> str:
    tag, a, b = v
    if tag in ("t", "c"):
        return f"{tag}[{_label(a)}|{_label(b)}]"
    if tag == "psi":
        return f"psi[{_label(a)}]"
    if tag == "lambda":
        return "lambda"
    return f"aux[{a}]"


_VAR_RE = re.compile(r"^(t|c)\[([\d,]*)\|([\d,]*)\]$|^psi\[([\d,]*)\]$|^lambda$|^aux\[(\d+)\]$")


def parse_var(text: str) -> Var:
    m = _VAR_RE.match(text.strip())
    if not m:
        raise ValueError(f"not a variable: {text!r}")
    if m.group(1):
        return (m.group(1), _unlabel(m.group(2)), _unlabel(m.group(3)))
    if m.group(4) is not None:
        return psi_var(_unlabel(m.group(4)))
    if m.group(5) is not None:
        return aux_var(int(m.group(5)))
    return lambda_var()


def _mono_mul(a: Monomial, b: Monomial) -> Monomial:
    if not a:
        return b
    if not b:
        return a
    exps = dict(a)
    for v, e in b:
        exps[v] = exps.get(v, 0) + e
    return tuple(sorted(exps.items()))


def _mono_degree(m: Monomial) -> int:
    return sum(e for _, e in m)


class SparsePolynomial:
    """Immutable polynomial stored as ``{monomial: coefficient}``."""

    __slots__ = ("_terms", "_hash")

    def __init__(self, terms: Mapping[Monomial, Number] | None = None):
        clean = {}
        for mono, coef in (terms or {}).items():
            if coef != 0:
                clean[mono] = coef
        self._terms = clean
        self._hash = None

    # construction helpers
    @classmethod
    def constant(cls, value: Number) -> "SparsePolynomial":
        return cls({(): Fraction(value) if isinstance(value, int) else value})

    @classmethod
    def variable(cls, v: Var) -> "SparsePolynomial":
        return cls({((v, 1),): Fraction(1)})

    @classmethod
    def monomial(cls, variables: Iterable[Var], coef: Number = 1) -> "SparsePolynomial":
        exps: dict = {}
        for v in variables:
            exps[v] = exps.get(v, 0) + 1
        return cls({tuple(sorted(exps.items())): Fraction(coef) if isinstance(coef, int) else coef})

    @staticmethod
    def _coerce(other) -> "SparsePolynomial":
        if isinstance(other, SparsePolynomial):
            return other
        if isinstance(other, Number):
            return SparsePolynomial.constant(other)
        return NotImplemented

    # container protocol
    @property
    def terms(self) -> dict:
        return dict(self._terms)

    def items(self):
        return self._terms.items()

    def __len__(self) -> int:
        return len(self._terms)

    def __iter__(self) -> Iterator[Monomial]:
        return iter(self._terms)

    def is_zero(self) -> bool:
        return not self._terms

    def __bool__(self) -> bool:
        return bool(self._terms)

    def __eq__(self, other) -> bool:
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return self._terms == other._terms

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash(frozenset(self._terms.items()))
        return self._hash

    # arithmetic
    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        out = dict(self._terms)
        for mono, coef in other._terms.items():
            out[mono] = out.get(mono, 0) + coef
        return SparsePolynomial(out)

    __radd__ = __add__

    def __neg__(self):
        return SparsePolynomial({m: -c for m, c in self._terms.items()})

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        out: dict = {}
        for m1, c1 in self._terms.items():
            for m2, c2 in other._terms.items():
                m = _mono_mul(m1, m2)
                out[m] = out.get(m, 0) + c1 * c2
        return SparsePolynomial(out)

    __rmul__ = __mul__

    def __pow__(self, k: int):
        if k < 0:
            raise ValueError("negative powers are not polynomials")
        result = SparsePolynomial.constant(1)
        base = self
        while k:
            if k & 1:
                result = result * base
            base = base * base
            k >>= 1
        return result

    # structure
    def degree(self) -> int:
        """Total degree; the zero polynomial has degree -1."""
        return max((_mono_degree(m) for m in self._terms), default=-1)

    def variables(self) -> set:
        return {v for m in self._terms for v, _ in m}

    def is_homogeneous(self) -> bool:
        return len({_mono_degree(m) for m in self._terms}) <= 1

    def constant_term(self):
        return self._terms.get((), 0)

    def coefficient(self, variables: Iterable[Var]):
        exps: dict = {}
        for v in variables:
            exps[v] = exps.get(v, 0) + 1
        return self._terms.get(tuple(sorted(exps.items())), 0)

    # calculus and substitution
    def diff(self, v: Var) -> "SparsePolynomial":
        out: dict = {}
        for mono, coef in self._terms.items():
            for k, (w, e) in enumerate(mono):
                if w == v:
                    rest = mono[:k] + (((w, e - 1),) if e > 1 else ()) + mono[k + 1 :]
                    out[rest] = out.get(rest, 0) + coef * e
                    break
        return SparsePolynomial(out)

    def substitute(self, mapping: Mapping[Var, "SparsePolynomial | Number"]) -> "SparsePolynomial":
        """Replace variables by polynomials or numbers; others are kept."""
        cache: dict = {}
        out = SparsePolynomial()
        acc: dict = {}
        for mono, coef in self._terms.items():
            kept = []
            factor = SparsePolynomial.constant(coef)
            for v, e in mono:
                if v in mapping:
                    key = (v, e)
                    if key not in cache:
                        cache[key] = self._coerce(mapping[v]) ** e
                    factor = factor * cache[key]
                    if factor.is_zero():
                        break
                else:
                    kept.append((v, e))
            if factor.is_zero():
                continue
            kept = tuple(kept)
            for m, c in factor._terms.items():
                m2 = _mono_mul(kept, m)
                acc[m2] = acc.get(m2, 0) + c
        out._terms = {m: c for m, c in acc.items() if c != 0}
        return out

    def evaluate(self, point: Mapping[Var, Number]):
        """Value at ``point``; exact when coefficients and values are rational."""
        total = 0
        for mono, coef in self._terms.items():
            val = coef
            for v, e in mono:
                try:
                    x = point[v]
                except KeyError:
                    raise BindingError(f"no value for {format_var(v)}") from None
                val *= x**e
            total += val
        return total

    def homogenize(self, h: Var) -> "SparsePolynomial":
        """Pad every term with powers of ``h`` up to the total degree."""
        deg = self.degree()
        out: dict = {}
        for mono, coef in self._terms.items():
            pad = deg - _mono_degree(mono)
            m = _mono_mul(mono, ((h, pad),)) if pad else mono
            out[m] = out.get(m, 0) + coef
        return SparsePolynomial(out)

    # serialization
    def sorted_terms(self) -> list:
        return sorted(self._terms.items(), key=lambda kv: (_mono_degree(kv[0]), kv[0]))

    def __str__(self) -> str:
        if not self._terms:
            return "0"
        parts = []
        for mono, coef in self.sorted_terms():
            factors = []
            for v, e in mono:
                factors.extend([format_var(v)] * e)
            parts.append(" * ".join([str(coef)] + factors))
        return " + ".join(parts).replace("+ -", "- ")

    def __repr__(self) -> str:
        return f"SparsePolynomial({self})"

    def to_json(self) -> list:
        rows = []
        for mono, coef in self.sorted_terms():
            row = {"monomial": [[format_var(v), e] for v, e in mono]}
            if isinstance(coef, complex):
                row["coef_re"], row["coef_im"] = coef.real, coef.imag
            else:
                coef = Fraction(coef)
                row["coef_num"], row["coef_den"] = coef.numerator, coef.denominator
            rows.append(row)
        return rows

    @classmethod
    def from_json(cls, rows: Sequence[Mapping] | str) -> "SparsePolynomial":
        if isinstance(rows, str):
            rows = json.loads(rows)
        terms: dict = {}
        for row in rows:
            mono = tuple(sorted((parse_var(v), int(e)) for v, e in row["monomial"]))
            if "coef_num" in row:
                coef = Fraction(row["coef_num"], row["coef_den"])
            else:
                coef = complex(row["coef_re"], row["coef_im"])
            terms[mono] = terms.get(mono, 0) + coef
        return cls(terms)

    @classmethod
    def parse(cls, text: str) -> "SparsePolynomial":
        """Inverse of ``str``: ``"1 * t[1|3] - 2 * psi[12]"``."""
        text = text.strip()
        if text == "0":
            return cls()
        text = re.sub(r"\s-\s", " + -", text)
        total = cls()
        for chunk in text.split(" + "):
            factors = [f.strip() for f in chunk.split("*")]
            coef = Fraction(factors[0])
            total = total + cls.monomial([parse_var(f) for f in factors[1:]], coef)
        return total


def as_polynomial(x) -> SparsePolynomial:
    if isinstance(x, SparsePolynomial):
        return x
    return SparsePolynomial.constant(x)


def jacobian_polynomials(polys: Sequence[SparsePolynomial], unknowns: Sequence[Var]) -> list[list[SparsePolynomial]]:
    return [[p.diff(v) for v in unknowns] for p in polys]


class CompiledPolynomials:
    """Batched float evaluation of a list of polynomials and their Jacobian.

    Every term is flattened to a fixed-width row of unknown indices (repeated
    for powers, padded with a column that always holds 1).  Values are gathered
    products; the Jacobian uses prefix/suffix products so each factor position
    contributes its partial derivative, which is then scattered into the
    ``(row, unknown)`` slots through a sparse matrix.
    """

    def __init__(self, polys: Sequence[SparsePolynomial], unknowns: Sequence[Var],
                 params: Mapping[Var, Number] | None = None):
        self.unknowns = list(unknowns)
        self.n_polys = len(polys)
        self.n_vars = len(self.unknowns)
        index = {v: k for k, v in enumerate(self.unknowns)}
        params = dict(params or {})
        one = self.n_vars  # padding column
        rows, coefs, factor_lists = [], [], []
        for r, p in enumerate(polys):
            for mono, coef in p.items():
                c = complex(coef)
                idx = []
                for v, e in mono:
                    if v in index:
                        idx.extend([index[v]] * e)
                    elif v in params:
                        c *= complex(params[v]) ** e
                    else:
                        raise BindingError(f"{format_var(v)} is neither an unknown nor a parameter")
                if c == 0:
                    continue
                rows.append(r)
                coefs.append(c)
                factor_lists.append(idx)
        self.width = max((len(f) for f in factor_lists), default=0)
        n_terms = len(coefs)
        self.factors = np.full((n_terms, max(self.width, 1)), one, dtype=np.intp)
        for k, f in enumerate(factor_lists):
            self.factors[k, : len(f)] = f
        self.coefs = np.asarray(coefs, dtype=complex)
        self.rows = np.asarray(rows, dtype=np.intp)
        self.term_to_row = sp.csr_matrix(
            (np.ones(n_terms), (self.rows, np.arange(n_terms))), shape=(self.n_polys, n_terms)
        )
        # (term, position) pairs that hit a real unknown, scattered to row*n_vars+var
        t_idx, pos = np.nonzero(self.factors[:, : self.width] != one) if self.width else (np.zeros(0, int), np.zeros(0, int))
        self._dpos = (t_idx, pos)
        flat = self.rows[t_idx] * self.n_vars + self.factors[t_idx, pos]
        self.jac_scatter = sp.csr_matrix(
            (np.ones(len(t_idx)), (flat, np.arange(len(t_idx)))),
            shape=(self.n_polys * self.n_vars, len(t_idx)),
        )
        self.degrees = [p.degree() for p in polys]

    def _gather(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=complex))
        Xe = np.concatenate([X, np.ones((X.shape[0], 1), dtype=complex)], axis=1)
        return Xe[:, self.factors]  # (P, T, W)

    def evaluate(self, X: np.ndarray) -> np.ndarray:
        """Values for a batch ``X`` of shape ``(P, n_vars)``; returns ``(P, n_polys)``."""
        G = self._gather(X)
        terms = G.prod(axis=2) * self.coefs
        return np.asarray(self.term_to_row @ terms.T).T

    def evaluate_with_jacobian(self, X: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        G = self._gather(X)
        P = G.shape[0]
        terms = G.prod(axis=2) * self.coefs
        F = np.asarray(self.term_to_row @ terms.T).T
        if self.width == 0 or not len(self._dpos[0]):
            return F, np.zeros((P, self.n_polys, self.n_vars), dtype=complex)
        ones = np.ones(G.shape[:2] + (1,), dtype=complex)
        prefix = np.concatenate([ones, np.cumprod(G, axis=2)[:, :, :-1]], axis=2)
        suffix = np.concatenate([np.cumprod(G[:, :, ::-1], axis=2)[:, :, ::-1][:, :, 1:], ones], axis=2)
        partial = prefix * suffix * self.coefs[None, :, None]
        t_idx, pos = self._dpos
        contrib = partial[:, t_idx, pos]  # (P, K)
        Jflat = np.asarray(self.jac_scatter @ contrib.T).T
        return F, Jflat.reshape(P, self.n_polys, self.n_vars)

    def jacobian(self, X: np.ndarray) -> np.ndarray:
        return self.evaluate_with_jacobian(X)[1]


class PolynomialSystem:
    """Ordered polynomials over ordered unknowns, with bound parameters.

    ``freeze`` builds the complex shadow used by the numeric solver; it runs
    lazily on first numeric use.
    """

    def __init__(self, polys: Sequence[SparsePolynomial], unknowns: Sequence[Var] | None = None,
                 params: Mapping[Var, Number] | None = None, metadata: Mapping | None = None):
        self.polys = [as_polynomial(p) for p in polys]
        self.params = dict(params or {})
        if unknowns is None:
            found = set().union(*(p.variables() for p in self.polys)) if self.polys else set()
            unknowns = sorted(found - set(self.params))
        self.unknowns = list(unknowns)
        self.metadata = dict(metadata or {})
        known = set(self.unknowns) | set(self.params)
        for p in self.polys:
            missing = p.variables() - known
            if missing:
                raise BindingError(f"unbound variables {sorted(map(format_var, missing))}")
        self._compiled = None

    def __len__(self) -> int:
        return len(self.polys)

    @property
    def is_square(self) -> bool:
        return len(self.polys) == len(self.unknowns)

    @property
    def degrees(self) -> list[int]:
        return [p.degree() for p in self.polys]

    @property
    def n_vars(self) -> int:
        return len(self.unknowns)

    def freeze(self) -> CompiledPolynomials:
        if self._compiled is None:
            self._compiled = CompiledPolynomials(self.polys, self.unknowns, self.params)
        return self._compiled

    def _as_batch(self, point) -> tuple[np.ndarray, bool]:
        if isinstance(point, Mapping):
            return np.array([[point[v] for v in self.unknowns]], dtype=complex), True
        X = np.asarray(point, dtype=complex)
        return np.atleast_2d(X), X.ndim == 1

    def evaluate(self, point) -> np.ndarray:
        X, single = self._as_batch(point)
        F = self.freeze().evaluate(X)
        return F[0] if single else F

    def jacobian(self, point) -> np.ndarray:
        X, single = self._as_batch(point)
        J = self.freeze().jacobian(X)
        return J[0] if single else J

    def evaluate_with_jacobian(self, X: np.ndarray):
        return self.freeze().evaluate_with_jacobian(X)

    def symbolic_jacobian(self) -> list[list[SparsePolynomial]]:
        return jacobian_polynomials(self.polys, self.unknowns)

    def to_json(self) -> dict:
        return {
            "unknowns": [format_var(v) for v in self.unknowns],
            "params": {format_var(v): [complex(x).real, complex(x).imag] for v, x in self.params.items()},
            "polynomials": [p.to_json() for p in self.polys],
            "metadata": self.metadata,
        }

    @classmethod
    def from_json(cls, data: Mapping | str) -> "PolynomialSystem":
        if isinstance(data, str):
            data = json.loads(data)
        params = {parse_var(k): complex(re_, im) for k, (re_, im) in data.get("params", {}).items()}
        return cls(
            [SparsePolynomial.from_json(rows) for rows in data["polynomials"]],
            [parse_var(v) for v in data["unknowns"]],
            params,
            data.get("metadata"),
        )


def evaluate(p: SparsePolynomial, point: Mapping[Var, Number]):
    return p.evaluate(point)


def homogenize(p: SparsePolynomial, h: Var) -> SparsePolynomial:
    return p.homogenize(h)


def jacobian(system: PolynomialSystem, point) -> np.ndarray:
    return system.jacobian(point)
