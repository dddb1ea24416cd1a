"""Expression trees for analytic germs fixing the origin.

Grammar (ASCII)::

    expr   := "rot(" num ")" | "poly(" num ("," num)* ")"
            | "moeb(" num "," num "," num "," num ")"
            | "comp(" expr "," expr ")" | "inv(" expr ")" | "conj(" expr "," expr ")"
    num    := arithmetic over reals, ``pi`` and ``i`` (``2pi/3``, ``1-0.5i``)

``comp(f, g)`` is ``f o g`` and ``conj(f, h)`` is ``h^{-1} o f o h``.
``moeb(a, b, c, d)`` is ``(a z + b) / (c z + d)`` and must have ``b = 0``.

Every node evaluates vectorised on numpy arrays together with its complex
derivative.  ``Inverse`` nodes are solved by damped Newton iteration seeded
at the target point.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import ExprSyntaxError, NewtonDivergence, OutOfDomain, SemanticError
from .jets import Jet, compose, conjugate, invert

NEWTON_MAX_ITER = 100
NEWTON_RTOL = 1e-13
MAX_HALVINGS = 12
UNIVALENCE_FRACTION = 0.1     # |p'| threshold, relative to |p'(0)|
SCAN_POINTS = 256
RADIUS_CAP = 1e6


def _circle(r: float, n: int = SCAN_POINTS) -> np.ndarray:
    return r * np.exp(2j * np.pi * (np.arange(n) + 0.5) / n)


class MapExpr:
    """Base class; concrete nodes are frozen dataclasses."""

    def _ev(self, z: np.ndarray):
        """Return ``(value, derivative, ok)`` on an array of points."""
        raise NotImplementedError

    def evaluate(self, z):
        """Vectorised value and derivative; raises if any Newton solve fails."""
        z = np.asarray(z, dtype=complex)
        w, dw, ok = self._ev(z.reshape(-1))
        if not ok.all():
            raise NewtonDivergence("inverse evaluation did not converge (point outside the image?)")
        return w.reshape(z.shape), dw.reshape(z.shape)

    def evaluate_masked(self, z):
        z = np.asarray(z, dtype=complex)
        w, dw, ok = self._ev(z.reshape(-1))
        return w.reshape(z.shape), dw.reshape(z.shape), ok.reshape(z.shape)

    def __call__(self, z):
        return self.evaluate(z)[0]

    @property
    def radius_hint(self) -> float:
        raise NotImplementedError

    @property
    def linear_coefficient(self) -> complex:
        return complex(jet_of_expr(self, 1).coeffs[0])


@dataclass(frozen=True)
class Rotation(MapExpr):
    angle: float

    def _ev(self, z):
        m = complex(math.cos(self.angle), math.sin(self.angle))
        return m * z, np.full(z.shape, m), np.ones(z.shape, dtype=bool)

    @property
    def radius_hint(self) -> float:
        return math.inf


@dataclass(frozen=True)
class Polynomial(MapExpr):
    coefficients: tuple

    def __post_init__(self):
        c = tuple(complex(x) for x in self.coefficients)
        if not c or c[0] == 0:
            raise SemanticError("polynomial needs a nonzero linear coefficient")
        while len(c) > 1 and c[-1] == 0:
            c = c[:-1]
        object.__setattr__(self, "coefficients", c)

    def _ev(self, z):
        w = np.zeros(z.shape, dtype=complex)
        dw = np.zeros(z.shape, dtype=complex)
        for c in self.coefficients[::-1]:
            dw = dw * z + w + c
            w = (w + c) * z
        # Horner above builds w = sum c_j z^j and dw = its derivative
        return w, dw, np.ones(z.shape, dtype=bool)

    def _min_derivative(self, r: float) -> float:
        return float(np.min(np.abs(self._ev(_circle(r))[1])))

    @cached_property
    def radius_hint(self) -> float:
        if len(self.coefficients) == 1:
            return math.inf
        thresh = UNIVALENCE_FRACTION * abs(self.coefficients[0])
        lo, hi = 0.0, 1e-3
        while self._min_derivative(hi) >= thresh:
            lo, hi = hi, 2 * hi
            if hi > RADIUS_CAP:
                return RADIUS_CAP
        for _ in range(60):
            mid = 0.5 * (lo + hi)
            if self._min_derivative(mid) >= thresh:
                lo = mid
            else:
                hi = mid
        return lo


@dataclass(frozen=True)
class Moebius(MapExpr):
    a: complex
    c: complex
    d: complex

    def __post_init__(self):
        for name in ("a", "c", "d"):
            object.__setattr__(self, name, complex(getattr(self, name)))
        if self.a * self.d == 0:
            raise SemanticError("moebius map is degenerate (ad - bc = 0)")

    def _ev(self, z):
        den = self.c * z + self.d
        with np.errstate(divide="ignore", invalid="ignore"):
            return self.a * z / den, self.a * self.d / den**2, np.isfinite(den) & (den != 0)

    @property
    def radius_hint(self) -> float:
        return math.inf if self.c == 0 else abs(self.d / self.c)


@dataclass(frozen=True)
class Compose(MapExpr):
    left: MapExpr
    right: MapExpr

    def _ev(self, z):
        w1, d1, ok1 = self.right._ev(z)
        w2, d2, ok2 = self.left._ev(w1)
        return w2, d2 * d1, ok1 & ok2

    @cached_property
    def radius_hint(self) -> float:
        return _compose_radius(self.left.radius_hint, self.right)


@dataclass(frozen=True)
class Inverse(MapExpr):
    inner: MapExpr

    def _ev(self, z):
        return _newton_inverse(self.inner, z)

    @cached_property
    def radius_hint(self) -> float:
        r = self.inner.radius_hint
        if r == math.inf:
            return math.inf
        w, _, ok = self.inner._ev(_circle(r * (1 - 1e-9)))
        return float(np.min(np.abs(w[ok]))) if ok.any() else 0.0


@dataclass(frozen=True)
class Conjugate(MapExpr):
    base: MapExpr
    by: MapExpr

    @cached_property
    def expanded(self) -> MapExpr:
        return Compose(Inverse(self.by), Compose(self.base, self.by))

    def _ev(self, z):
        return self.expanded._ev(z)

    @property
    def radius_hint(self) -> float:
        return self.expanded.radius_hint


def _compose_radius(r_outer: float, inner: MapExpr) -> float:
    """Largest r <= radius(inner) with inner(disc r) inside disc r_outer."""
    r_in = inner.radius_hint
    if r_outer == math.inf:
        return r_in
    if r_in == math.inf:
        # only linear maps have unbounded hints
        return r_outer / abs(inner.linear_coefficient)

    def fits(r):
        w, _, ok = inner._ev(_circle(r))
        return ok.all() and float(np.max(np.abs(w))) < r_outer

    if fits(r_in * (1 - 1e-12)):
        return r_in
    lo, hi = 0.0, r_in
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if fits(mid):
            lo = mid
        else:
            hi = mid
    return lo


def _newton_inverse(inner: MapExpr, z: np.ndarray):
    w = z.copy()
    val, d, ok_in = inner._ev(w)
    res = val - z
    tol = NEWTON_RTOL * np.maximum(1.0, np.abs(z))
    done = (np.abs(res) <= tol) & ok_in
    stalled = ~ok_in
    for _ in range(NEWTON_MAX_ITER):
        act = np.nonzero(~done & ~stalled)[0]
        if not len(act):
            break
        with np.errstate(divide="ignore", invalid="ignore"):
            step = res[act] / d[act]
        step[~np.isfinite(step)] = 0.0
        t = np.ones(len(act))
        base = w[act]
        old = np.abs(res[act])
        trial = base - step
        tv, td, tok = inner._ev(trial)
        tr = tv - z[act]
        bad = ~tok | ~(np.abs(tr) < old)
        for _h in range(MAX_HALVINGS):
            if not bad.any():
                break
            t[bad] *= 0.5
            sub = np.nonzero(bad)[0]
            trial[sub] = base[sub] - t[sub] * step[sub]
            v2, d2, ok2 = inner._ev(trial[sub])
            tv[sub], td[sub], tok[sub] = v2, d2, ok2
            tr[sub] = v2 - z[act][sub]
            bad = ~tok | ~(np.abs(tr) < old)
        # a point whose residual cannot be reduced is outside the image
        stalled[act[bad]] = True
        good = ~bad
        ia = act[good]
        w[ia], d[ia], ok_in[ia], res[ia] = trial[good], td[good], tok[good], tr[good]
        done[ia] = np.abs(tr[good]) <= tol[ia]
    with np.errstate(divide="ignore", invalid="ignore"):
        dw = 1.0 / d
    return w, dw, done


def eval_at(expr: MapExpr, z, check_domain: bool = True):
    """Value of ``expr`` at ``z`` (scalar or array)."""
    za = np.asarray(z, dtype=complex)
    if check_domain and np.any(np.abs(za) >= expr.radius_hint):
        raise OutOfDomain(f"|z| >= radius_hint = {expr.radius_hint:.6g}")
    w = expr.evaluate(za)[0]
    return complex(w) if w.ndim == 0 else w


def jet_of_expr(expr: MapExpr, order: int) -> Jet:
    if order < 1:
        raise ValueError("order must be at least 1")
    if isinstance(expr, Rotation):
        return Jet.linear(complex(math.cos(expr.angle), math.sin(expr.angle)), order)
    if isinstance(expr, Polynomial):
        return Jet(expr.coefficients[:order]).pad(order)
    if isinstance(expr, Moebius):
        ratio = -expr.c / expr.d
        return Jet([expr.a / expr.d * ratio**n for n in range(order)])
    if isinstance(expr, Compose):
        return compose(jet_of_expr(expr.left, order), jet_of_expr(expr.right, order))
    if isinstance(expr, Inverse):
        return invert(jet_of_expr(expr.inner, order))
    if isinstance(expr, Conjugate):
        return conjugate(jet_of_expr(expr.base, order), jet_of_expr(expr.by, order))
    raise TypeError(f"not a MapExpr: {expr!r}")


# ---------------------------------------------------------------- printing

def format_complex(c: complex) -> str:
    c = complex(c)
    re_, im = c.real, c.imag
    if im == 0:
        return repr(re_ + 0.0)
    if re_ == 0:
        return f"{im!r}i"
    return f"{re_!r}{'+' if im >= 0 else '-'}{abs(im)!r}i"


def to_text(expr: MapExpr) -> str:
    if isinstance(expr, Rotation):
        return f"rot({expr.angle!r})"
    if isinstance(expr, Polynomial):
        return "poly(" + ", ".join(format_complex(c) for c in expr.coefficients) + ")"
    if isinstance(expr, Moebius):
        return f"moeb({format_complex(expr.a)}, 0, {format_complex(expr.c)}, {format_complex(expr.d)})"
    if isinstance(expr, Compose):
        return f"comp({to_text(expr.left)}, {to_text(expr.right)})"
    if isinstance(expr, Inverse):
        return f"inv({to_text(expr.inner)})"
    if isinstance(expr, Conjugate):
        return f"conj({to_text(expr.base)}, {to_text(expr.by)})"
    raise TypeError(f"not a MapExpr: {expr!r}")


# ----------------------------------------------------------------- parsing

_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)|(?P<ident>[A-Za-z_]+)|(?P<op>[-+*/(),]))"
)


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.toks = []
        pos = 0
        while pos < len(text):
            m = _TOKEN.match(text, pos)
            if not m or m.end() == pos:
                if text[pos:].strip() == "":
                    break
                start = pos + len(text[pos:]) - len(text[pos:].lstrip())
                raise ExprSyntaxError(start, "a number, name or one of + - * / ( ) ,", text)
            kind = m.lastgroup
            self.toks.append((kind, m.group(kind), m.start(kind)))
            pos = m.end()
        self.i = 0

    def peek(self):
        return self.toks[self.i] if self.i < len(self.toks) else ("end", "", len(self.text))

    def take(self):
        tok = self.peek()
        self.i += 1
        return tok

    def expect(self, value: str):
        tok = self.take()
        if tok[1] != value:
            raise ExprSyntaxError(tok[2], repr(value), self.text)
        return tok

    def finish(self):
        tok = self.peek()
        if tok[0] != "end":
            raise ExprSyntaxError(tok[2], "end of input", self.text)

    # numbers
    def number(self) -> complex:
        val = self.term()
        while self.peek()[1] in ("+", "-"):
            op = self.take()[1]
            rhs = self.term()
            val = val + rhs if op == "+" else val - rhs
        return val

    def term(self) -> complex:
        val = self.unary()
        while True:
            kind, text, _ = self.peek()
            if text in ("*", "/"):
                self.take()
                rhs = self.unary()
                if text == "/" and rhs == 0:
                    raise SemanticError("division by zero in numeric literal")
                val = val * rhs if text == "*" else val / rhs
            elif kind == "ident" and text in ("pi", "i"):
                val = val * self.primary()
            else:
                return val

    def unary(self) -> complex:
        if self.peek()[1] in ("+", "-"):
            sign = -1 if self.take()[1] == "-" else 1
            return sign * self.unary()
        return self.primary()

    def primary(self) -> complex:
        kind, text, pos = self.take()
        if kind == "num":
            return complex(float(text))
        if kind == "ident" and text == "pi":
            return complex(math.pi)
        if kind == "ident" and text == "i":
            return 1j
        if text == "(":
            val = self.number()
            self.expect(")")
            return val
        raise ExprSyntaxError(pos, "a number, 'pi', 'i' or '('", self.text)

    def numbers(self) -> list:
        vals = [self.number()]
        while self.peek()[1] == ",":
            self.take()
            vals.append(self.number())
        return vals

    # maps
    def expr(self) -> MapExpr:
        kind, name, pos = self.take()
        if kind != "ident" or name not in ("rot", "poly", "moeb", "comp", "inv", "conj"):
            raise ExprSyntaxError(pos, "one of rot, poly, moeb, comp, inv, conj", self.text)
        self.expect("(")
        if name == "rot":
            angle = self.number()
            if angle.imag != 0:
                raise SemanticError("rotation angle must be real")
            node = Rotation(angle.real)
        elif name == "poly":
            node = Polynomial(tuple(self.numbers()))
        elif name == "moeb":
            args = self.numbers()
            if len(args) != 4:
                raise SemanticError("moeb takes four arguments a, b, c, d")
            a, b, c, d = args
            if b != 0:
                raise SemanticError("moebius map must fix the origin (b = 0)")
            node = Moebius(a, c, d)
        elif name == "inv":
            node = Inverse(self.expr())
        else:
            first = self.expr()
            self.expect(",")
            second = self.expr()
            node = Compose(first, second) if name == "comp" else Conjugate(first, second)
        self.expect(")")
        return node


def parse_expr(text: str) -> MapExpr:
    p = _Parser(text)
    node = p.expr()
    p.finish()
    return node


def parse_number(text: str) -> complex:
    p = _Parser(text)
    val = p.number()
    p.finish()
    return val


def inverse_of(expr: MapExpr) -> MapExpr:
    """Inverse node with the cheap closed forms substituted."""
    if isinstance(expr, Rotation):
        return Rotation(-expr.angle)
    if isinstance(expr, Polynomial) and len(expr.coefficients) == 1:
        return Polynomial((1 / expr.coefficients[0],))
    if isinstance(expr, Moebius):
        # a z / (c z + d) has inverse d w / (a - c w)
        return Moebius(expr.d, -expr.c, expr.a)
    if isinstance(expr, Inverse):
        return expr.inner
    if isinstance(expr, Conjugate):
        return Conjugate(inverse_of(expr.base), expr.by)
    if isinstance(expr, Compose):
        return Compose(inverse_of(expr.right), inverse_of(expr.left))
    return Inverse(expr)


def scaling(s: complex) -> MapExpr:
    """The linear germ ``z -> s z``."""
    return Polynomial((s,))
