"""Small symbolic expression engine for state-space vector fields.

Node kinds: constants, state variables z1..zn, sums, products,
quotients, integer powers, and sin/cos/tan.  Secants are spelled as
quotients (1/cos), and no trigonometric identities are applied
anywhere: simplification is limited to structural, value-preserving
rewrites (constant folding, dropped zeros and ones, flattening).

Nodes are immutable and content-interned in a module-level table, so
structurally equal expressions are the same object and derivative and
evaluation caches key on node identity.  The table is written with
dict.setdefault only, which keeps interning race-free under the
CPython GIL; heavy concurrent construction from many threads is safe
but will serialize.

Variables are one-based in the textual form ("z1" is state 0 of the
evaluation vector) to match the usual state-space notation.
"""

from __future__ import annotations

import itertools
import math

from fliess.errors import EvaluationError, MapFormatError

_TABLE = {}
_IDS = itertools.count()

CONST, VAR, ADD, MUL, DIV, POW, SIN, COS, TAN = (
    "const", "var", "add", "mul", "div", "pow", "sin", "cos", "tan",
)


class Expr:
    """Interned immutable expression node; build through the module constructors."""

    __slots__ = ("kind", "value", "args", "_id")

    def __init__(self, kind, value, args, _id):
        object.__setattr__(self, "kind", kind)
        object.__setattr__(self, "value", value)
        object.__setattr__(self, "args", args)
        object.__setattr__(self, "_id", _id)

    def __setattr__(self, name, val):
        raise AttributeError("Expr nodes are immutable")

    # arithmetic sugar so vector-field definitions read naturally
    def __add__(self, other):
        return add(self, _coerce(other))

    def __radd__(self, other):
        return add(_coerce(other), self)

    def __sub__(self, other):
        return sub(self, _coerce(other))

    def __rsub__(self, other):
        return sub(_coerce(other), self)

    def __mul__(self, other):
        return mul(self, _coerce(other))

    def __rmul__(self, other):
        return mul(_coerce(other), self)

    def __truediv__(self, other):
        return div(self, _coerce(other))

    def __rtruediv__(self, other):
        return div(_coerce(other), self)

    def __neg__(self):
        return mul(const(-1.0), self)

    def __pow__(self, n):
        return power(self, n)

    def is_const(self, v=None):
        return self.kind == CONST and (v is None or self.value == v)

    def __repr__(self):
        return f"Expr<{to_text(self)}>"


def _intern(kind, value, args):
    key = (kind, value, tuple(a._id for a in args))
    hit = _TABLE.get(key)
    if hit is not None:
        return hit
    node = Expr(kind, value, args, next(_IDS))
    return _TABLE.setdefault(key, node)


def _coerce(x):
    if isinstance(x, Expr):
        return x
    if isinstance(x, (int, float)):
        return const(float(x))
    raise TypeError(f"cannot coerce {type(x)} to Expr")


# ---------------------------------------------------------------------------
# constructors (these are the simplifier: every build path runs through them)


def const(v):
    v = float(v)
    if v == 0.0:
        v = 0.0  # normalize -0.0
    return _intern(CONST, v, ())


ZERO = const(0.0)
ONE = const(1.0)


def var(i):
    if i < 0:
        raise ValueError("variable index must be nonnegative")
    return _intern(VAR, int(i), ())


def add(*xs):
    flat = []
    acc = 0.0
    for x in xs:
        x = _coerce(x)
        if x.kind == ADD:
            flat.extend(x.args)
        elif x.kind == CONST:
            acc += x.value
        else:
            flat.append(x)
    # collect repeated identical addends into coefficient * node
    counts = {}
    order = []
    for x in flat:
        if x._id not in counts:
            counts[x._id] = [x, 0.0]
            order.append(x._id)
        counts[x._id][1] += 1.0
    terms = []
    for key in order:
        node, k = counts[key]
        # fold coefficient * node when node is itself const-scaled
        if k != 1.0:
            node = mul(const(k), node)
        if node.kind == CONST:
            acc += node.value
        else:
            terms.append(node)
    if acc != 0.0:
        terms.append(const(acc))
    if not terms:
        return ZERO
    if len(terms) == 1:
        return terms[0]
    terms.sort(key=lambda n: n._id)
    return _intern(ADD, None, tuple(terms))


def sub(a, b):
    return add(a, mul(const(-1.0), b))


def mul(*xs):
    flat = []
    acc = 1.0
    for x in xs:
        x = _coerce(x)
        if x.kind == MUL:
            flat.extend(x.args)
        elif x.kind == CONST:
            acc *= x.value
        else:
            flat.append(x)
    if acc == 0.0:
        return ZERO
    # collect repeated factors into integer powers
    counts = {}
    order = []
    for x in flat:
        if x._id not in counts:
            counts[x._id] = [x, 0]
            order.append(x._id)
        counts[x._id][1] += 1
    factors = []
    for key in order:
        node, k = counts[key]
        factors.append(power(node, k) if k != 1 else node)
    factors = [f for f in factors if not f.is_const(1.0)]
    folded = [f for f in factors if f.kind == CONST]
    for f in folded:
        acc *= f.value
    factors = [f for f in factors if f.kind != CONST]
    if acc == 0.0:
        return ZERO
    if not factors:
        return const(acc)
    if acc != 1.0:
        factors.append(const(acc))
    if len(factors) == 1:
        return factors[0]
    factors.sort(key=lambda n: n._id)
    return _intern(MUL, None, tuple(factors))


def div(a, b):
    a = _coerce(a)
    b = _coerce(b)
    if b.kind == CONST:
        if b.value == 0.0:
            raise ZeroDivisionError("constant zero denominator")
        return mul(a, const(1.0 / b.value))
    if a.is_const(0.0):
        return ZERO
    if a._id == b._id:
        return ONE
    return _intern(DIV, None, (a, b))


def power(a, n):
    a = _coerce(a)
    n = int(n)
    if n == 0:
        return ONE
    if n == 1:
        return a
    if a.kind == CONST:
        return const(a.value**n)
    if a.kind == POW:
        return power(a.args[0], a.value * n)
    return _intern(POW, n, (a,))


def sin(a):
    a = _coerce(a)
    if a.kind == CONST:
        return const(math.sin(a.value))
    return _intern(SIN, None, (a,))


def cos(a):
    a = _coerce(a)
    if a.kind == CONST:
        return const(math.cos(a.value))
    return _intern(COS, None, (a,))


def tan(a):
    a = _coerce(a)
    if a.kind == CONST:
        return const(math.tan(a.value))
    return _intern(TAN, None, (a,))


def sec(a):
    """Secant, spelled structurally as 1/cos."""
    return div(ONE, cos(a))


def simplify(e):
    """Rebuild bottom-up through the smart constructors (idempotent)."""
    if e.kind in (CONST, VAR):
        return e
    args = [simplify(a) for a in e.args]
    if e.kind == ADD:
        return add(*args)
    if e.kind == MUL:
        return mul(*args)
    if e.kind == DIV:
        return div(*args)
    if e.kind == POW:
        return power(args[0], e.value)
    return {SIN: sin, COS: cos, TAN: tan}[e.kind](args[0])


# ---------------------------------------------------------------------------
# differentiation

_DIFF_CACHE = {}


def differentiate(e, i):
    """Partial derivative with respect to state variable index i (0-based)."""
    key = (e._id, i)
    hit = _DIFF_CACHE.get(key)
    if hit is not None:
        return hit
    k = e.kind
    if k == CONST:
        out = ZERO
    elif k == VAR:
        out = ONE if e.value == i else ZERO
    elif k == ADD:
        out = add(*[differentiate(a, i) for a in e.args])
    elif k == MUL:
        parts = []
        for j, f in enumerate(e.args):
            df = differentiate(f, i)
            if df.is_const(0.0):
                continue
            rest = list(e.args[:j]) + list(e.args[j + 1 :]) + [df]
            parts.append(mul(*rest))
        out = add(*parts) if parts else ZERO
    elif k == DIV:
        a, b = e.args
        da, db = differentiate(a, i), differentiate(b, i)
        out = div(sub(mul(da, b), mul(a, db)), mul(b, b))
    elif k == POW:
        base = e.args[0]
        out = mul(const(e.value), power(base, e.value - 1), differentiate(base, i))
    elif k == SIN:
        out = mul(cos(e.args[0]), differentiate(e.args[0], i))
    elif k == COS:
        out = mul(const(-1.0), sin(e.args[0]), differentiate(e.args[0], i))
    elif k == TAN:
        out = div(differentiate(e.args[0], i), power(cos(e.args[0]), 2))
    else:  # pragma: no cover
        raise ValueError(f"unknown node kind {k}")
    _DIFF_CACHE[key] = out
    return out


# ---------------------------------------------------------------------------
# evaluation


def evaluate(e, z, memo=None):
    """Evaluate at the state vector z (indexable).  Raises EvaluationError
    on non-finite results (poles of tan, zero denominators, overflow)."""
    if memo is None:
        memo = {}
    hit = memo.get(e._id)
    if hit is not None:
        return hit
    k = e.kind
    if k == CONST:
        v = e.value
    elif k == VAR:
        v = float(z[e.value])
    elif k == ADD:
        v = 0.0
        for a in e.args:
            v += evaluate(a, z, memo)
    elif k == MUL:
        v = 1.0
        for a in e.args:
            v *= evaluate(a, z, memo)
    elif k == DIV:
        num = evaluate(e.args[0], z, memo)
        den = evaluate(e.args[1], z, memo)
        if den == 0.0:
            raise EvaluationError(f"zero denominator in {to_text(e)}")
        v = num / den
    elif k == POW:
        base = evaluate(e.args[0], z, memo)
        if base == 0.0 and e.value < 0:
            raise EvaluationError(f"zero base with negative exponent in {to_text(e)}")
        try:
            v = base**e.value
        except OverflowError:
            raise EvaluationError(f"overflow evaluating {to_text(e)}") from None
    elif k == SIN:
        v = math.sin(evaluate(e.args[0], z, memo))
    elif k == COS:
        v = math.cos(evaluate(e.args[0], z, memo))
    else:
        v = math.tan(evaluate(e.args[0], z, memo))
    if not math.isfinite(v):
        raise EvaluationError(f"non-finite value evaluating {to_text(e)}")
    memo[e._id] = v
    return v


def compile_expr(exprs, n_vars):
    """Compile a list of expressions into one function z -> list of floats.

    Shared subexpressions are emitted once.  Division by zero raises
    ZeroDivisionError from the generated code (callers wanting the
    library's EvaluationError should pre-validate with evaluate()).
    """
    lines = []
    names = {}

    def emit(e):
        name = names.get(e._id)
        if name is not None:
            return name
        k = e.kind
        if k == CONST:
            name = repr(e.value)
        elif k == VAR:
            name = f"z[{e.value}]"
        else:
            child = [emit(a) for a in e.args]
            if k == ADD:
                rhs = " + ".join(child)
            elif k == MUL:
                rhs = " * ".join(child)
            elif k == DIV:
                rhs = f"{child[0]} / {child[1]}"
            elif k == POW:
                rhs = f"{child[0]} ** {e.value}"
            else:
                rhs = f"_math.{k}({child[0]})"
            name = f"t{len(lines)}"
            lines.append(f"    {name} = {rhs}")
        names[e._id] = name
        return name

    results = [emit(_coerce(e)) for e in exprs]
    src = "def _field(z):\n" + "\n".join(lines) + f"\n    return [{', '.join(results)}]\n"
    scope = {"_math": math}
    exec(compile(src, "<fliess-symexpr>", "exec"), scope)
    return scope["_field"]


# ---------------------------------------------------------------------------
# textual form


_PREC = {ADD: 1, MUL: 2, DIV: 2, POW: 3}


def to_text(e):
    """Render in the textual grammar accepted by parse_expr."""

    def render(node, parent_prec):
        k = node.kind
        if k == CONST:
            v = node.value
            if v == int(v) and abs(v) < 1e16:
                s = str(int(v))
            else:
                s = repr(v)
            if v < 0 and parent_prec > 1:
                return f"({s})"
            return s
        if k == VAR:
            return f"z{node.value + 1}"
        if k in (SIN, COS, TAN):
            return f"{k}({render(node.args[0], 0)})"
        if k == ADD:
            s = "+".join(render(a, 1) for a in node.args).replace("+-", "-")
            return f"({s})" if parent_prec > 1 else s
        if k == MUL:
            s = "*".join(render(a, 2) for a in node.args)
            return f"({s})" if parent_prec > 2 else s
        if k == DIV:
            num = render(node.args[0], 2)
            den = render(node.args[1], 3)
            s = f"{num}/{den}"
            return f"({s})" if parent_prec > 2 else s
        if k == POW:
            return f"{render(node.args[0], 4)}^{node.value}"
        raise ValueError(k)

    return render(e, 0)


class _Parser:
    def __init__(self, text, n_vars=None):
        self.text = text
        self.pos = 0
        self.n_vars = n_vars

    def error(self, msg):
        raise MapFormatError(f"expression parse error at column {self.pos}: {msg} (in {self.text!r})")

    def skip_ws(self):
        while self.pos < len(self.text) and self.text[self.pos].isspace():
            self.pos += 1

    def peek(self):
        self.skip_ws()
        return self.text[self.pos] if self.pos < len(self.text) else ""

    def take(self, ch):
        if self.peek() != ch:
            self.error(f"expected {ch!r}")
        self.pos += 1

    def parse(self):
        e = self.parse_sum()
        self.skip_ws()
        if self.pos != len(self.text):
            self.error("trailing input")
        return e

    def parse_sum(self):
        e = self.parse_product()
        while True:
            ch = self.peek()
            if ch == "+":
                self.pos += 1
                e = add(e, self.parse_product())
            elif ch == "-":
                self.pos += 1
                e = sub(e, self.parse_product())
            else:
                return e

    def parse_product(self):
        e = self.parse_power()
        while True:
            ch = self.peek()
            if ch == "*":
                self.pos += 1
                e = mul(e, self.parse_power())
            elif ch == "/":
                self.pos += 1
                e = div(e, self.parse_power())
            else:
                return e

    def parse_power(self):
        base = self.parse_atom()
        if self.peek() == "^":
            self.pos += 1
            sign = 1
            if self.peek() == "-":
                self.pos += 1
                sign = -1
            start = self.pos
            while self.pos < len(self.text) and self.text[self.pos].isdigit():
                self.pos += 1
            if start == self.pos:
                self.error("integer exponent expected")
            return power(base, sign * int(self.text[start : self.pos]))
        return base

    def parse_atom(self):
        ch = self.peek()
        if ch == "-":
            self.pos += 1
            return mul(const(-1.0), self.parse_power())
        if ch == "(":
            self.pos += 1
            e = self.parse_sum()
            self.take(")")
            return e
        if ch.isdigit() or ch == ".":
            start = self.pos
            while self.pos < len(self.text) and (self.text[self.pos].isdigit() or self.text[self.pos] in ".eE"):
                if self.text[self.pos] in "eE" and self.pos + 1 < len(self.text) and self.text[self.pos + 1] in "+-":
                    self.pos += 1
                self.pos += 1
            try:
                return const(float(self.text[start : self.pos]))
            except ValueError:
                self.error("bad number literal")
        if ch.isalpha():
            start = self.pos
            while self.pos < len(self.text) and self.text[self.pos].isalnum():
                self.pos += 1
            name = self.text[start : self.pos]
            if name in ("sin", "cos", "tan", "sec"):
                self.take("(")
                arg = self.parse_sum()
                self.take(")")
                return {"sin": sin, "cos": cos, "tan": tan, "sec": sec}[name](arg)
            if name.startswith("z") and name[1:].isdigit():
                idx = int(name[1:]) - 1
                if idx < 0 or (self.n_vars is not None and idx >= self.n_vars):
                    self.error(f"variable {name} outside declared state dimension")
                return var(idx)
            self.error(f"unknown identifier {name!r}")
        self.error("unexpected character")


def parse_expr(text, n_vars=None):
    """Parse the textual grammar: z-variables, + - * / ^int, sin/cos/tan/sec."""
    return _Parser(text, n_vars).parse()
