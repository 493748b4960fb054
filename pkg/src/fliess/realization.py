"""State-space realizations, their generating series, and simulation.

A realization is an input-affine system

    dz/dt = g0(z) + sum_i g_i(z) u_i(t),    y_j = h_j(z),

with symbolic vector fields.  Its generating series assigns to the
word x_{i1} x_{i2} ... x_{ik} the iterated Lie derivative of h taken
innermost-first along the word:

    coeff = L_{g_{ik}} ( ... L_{g_{i2}} ( L_{g_{i1}} h ) ... ) (z0)

so the first letter of a word names the outermost time integral of
the matching iterated-integral functional.  The symbolic derivative
table depends only on the vector fields, not the initial state, and
is cached so re-evaluating the series along a sectioned trajectory
costs one expression-table evaluation per section.

The functional evaluator sums coefficient-weighted iterated integrals
on a shared uniform grid (trapezoid rule, 2000 points per unit time by
default); the ground-truth simulator is fixed-step classical
Runge-Kutta.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from fliess import symexpr
from fliess.errors import EvaluationError, MapFormatError, SimulationError
from fliess.series import EPS, Series, VectorSeries

DEFAULT_GRID_DENSITY = 2000  # points per unit time


@dataclass(frozen=True)
class Realization:
    """Input-affine system with symbolic fields.

    fields: list of m+1 vector fields (drift first), each a list of n
    expressions; outputs: list of expressions; z0: initial state.
    """

    fields: tuple
    outputs: tuple
    z0: tuple

    def __init__(self, fields, outputs, z0):
        fields = tuple(tuple(col) for col in fields)
        outputs = tuple(outputs)
        z0 = tuple(float(v) for v in z0)
        n = len(z0)
        if not fields:
            raise ValueError("need at least the drift field")
        for col in fields:
            if len(col) != n:
                raise ValueError("field dimension and state dimension differ")
        object.__setattr__(self, "fields", fields)
        object.__setattr__(self, "outputs", outputs)
        object.__setattr__(self, "z0", z0)

    @property
    def n_states(self):
        return len(self.z0)

    @property
    def n_inputs(self):
        return len(self.fields) - 1

    @property
    def n_outputs(self):
        return len(self.outputs)

    def with_initial_state(self, z0):
        return Realization(self.fields, self.outputs, z0)

    def to_json_dict(self):
        return {
            "n": self.n_states,
            "m": self.n_inputs,
            "z0": list(self.z0),
            "fields": [[symexpr.to_text(e) for e in col] for col in self.fields],
            "outputs": [symexpr.to_text(e) for e in self.outputs],
        }

    @classmethod
    def from_json_dict(cls, obj):
        try:
            n = obj["n"]
            fields = [[symexpr.parse_expr(t, n) for t in col] for col in obj["fields"]]
            outputs = [symexpr.parse_expr(t, n) for t in obj["outputs"]]
            return cls(fields, outputs, obj["z0"])
        except (KeyError, TypeError) as exc:
            raise MapFormatError(f"malformed realization document: {exc}") from exc


def lie_derivative(g, h):
    """L_g h = sum_s (dh/dz_s) g_s for a vector field g."""
    parts = []
    for s, gs in enumerate(g):
        if gs.is_const(0.0):
            continue
        dh = symexpr.differentiate(h, s)
        if dh.is_const(0.0):
            continue
        parts.append(symexpr.mul(dh, gs))
    return symexpr.add(*parts) if parts else symexpr.ZERO


# symbolic word -> expression tables, keyed by field/output structure
_TABLE_CACHE = {}


def _coefficient_table(fields, outputs, degree):
    """Map each word (up to degree) to one expression per output.

    Words whose expression is identically zero are pruned together
    with their whole extension subtree (appending letters to a zero
    coefficient keeps it zero).
    """
    key = (
        tuple(tuple(e._id for e in col) for col in fields),
        tuple(e._id for e in outputs),
    )
    cached = _TABLE_CACHE.get(key)
    if cached is not None and cached[0] >= degree:
        return cached[1]
    table = {}
    for out_idx, h in enumerate(outputs):
        frontier = {(): h}
        if not h.is_const(0.0):
            table[((), out_idx)] = h
        for _ in range(degree):
            nxt = {}
            for word, phi in frontier.items():
                for letter, g in enumerate(fields):
                    child = lie_derivative(g, phi)
                    if child.is_const(0.0):
                        continue
                    nxt[word + (letter,)] = child
            for word, phi in nxt.items():
                table[(word, out_idx)] = phi
            frontier = nxt
            if not frontier:
                break
    _TABLE_CACHE[key] = (degree, table)
    return table


def generating_series(realization, degree):
    """Generating series of the realization about its initial state.

    Returns a VectorSeries (one component per output) over the
    alphabet with one drift letter plus one letter per input, truncated
    to the requested degree.
    """
    table = _coefficient_table(realization.fields, realization.outputs, degree)
    memo = {}
    per_output = [dict() for _ in realization.outputs]
    for (word, out_idx), phi in table.items():
        if len(word) > degree:
            continue
        value = symexpr.evaluate(phi, realization.z0, memo)
        if abs(value) > EPS:
            per_output[out_idx][word] = value
    alphabet = realization.n_inputs + 1
    return VectorSeries(
        [Series(alphabet, degree, terms) for terms in per_output]
    )


def growth_estimate(series):
    """Crude (K, M) with |coeff(word)| <= K * M^|word| * |word|! (diagnostic only)."""
    if isinstance(series, Series):
        series = VectorSeries([series])
    K = max(abs(c.constant_term()) for c in series)
    if K == 0.0:
        K = max(series.max_abs_coeff(), 1.0)
    M = 0.0
    for comp in series:
        for w, c in comp.terms_dict().items():
            k = len(w)
            if k == 0:
                continue
            M = max(M, (abs(c) / (K * math.factorial(k))) ** (1.0 / k))
    return K, max(M, 1.0)


# ---------------------------------------------------------------------------
# control signals


@dataclass
class ControlSignal:
    """Vector input signal on [0, horizon].

    Either polynomial-in-time per input (monomial coefficients) or
    sampled values on a uniform grid with linear interpolation.
    """

    kind: str
    horizon: float
    poly: list = field(default_factory=list)  # monomial coeffs per input
    times: np.ndarray = None
    values: np.ndarray = None  # shape (m, len(times))

    @classmethod
    def from_monomial(cls, coeffs, horizon):
        return cls(kind="poly", horizon=float(horizon), poly=[np.asarray(c, dtype=float) for c in coeffs])

    @classmethod
    def from_taylor(cls, coeffs, horizon):
        """coeffs[i][k] are series-convention values: u_i(t) = sum_k c_k t^k / k!."""
        mono = [
            np.array([c / math.factorial(k) for k, c in enumerate(ci)])
            for ci in coeffs
        ]
        return cls.from_monomial(mono, horizon)

    @classmethod
    def constant(cls, values, horizon):
        return cls.from_monomial([[v] for v in values], horizon)

    @classmethod
    def from_samples(cls, times, values):
        times = np.asarray(times, dtype=float)
        values = np.atleast_2d(np.asarray(values, dtype=float))
        if values.shape[1] != times.shape[0]:
            raise ValueError("sample count and time count differ")
        return cls(kind="samples", horizon=float(times[-1]), times=times, values=values)

    @property
    def n_inputs(self):
        return len(self.poly) if self.kind == "poly" else self.values.shape[0]

    def eval(self, t):
        """Evaluate at scalar time or array of times; returns (m,) or (m, len(t))."""
        t = np.asarray(t, dtype=float)
        if self.kind == "poly":
            rows = [np.polynomial.polynomial.polyval(t, c) for c in self.poly]
        else:
            rows = [np.interp(t, self.times, vi) for vi in self.values]
        return np.array(rows)


# ---------------------------------------------------------------------------
# functional evaluation


def _cumtrapz(f, dt):
    out = np.empty_like(f)
    out[0] = 0.0
    np.cumsum((f[1:] + f[:-1]) * (0.5 * dt), out=out[1:])
    return out


def uniform_grid(horizon, density=DEFAULT_GRID_DENSITY):
    n = max(2, int(round(horizon * density)) + 1)
    return np.linspace(0.0, horizon, n)


def fliess_eval(series, u, grid):
    """Evaluate the Chen-Fliess functional of the series along input u.

    u may be a ControlSignal or a pre-evaluated (m, len(grid)) array.
    The drift channel u_0 = 1 is implicit.  Iterated integrals are
    shared across words through their suffixes.
    """
    scalar = isinstance(series, Series)
    if scalar:
        series = VectorSeries([series])
    grid = np.asarray(grid, dtype=float)
    dt = grid[1] - grid[0]
    m = series.alphabet_size - 1
    if isinstance(u, ControlSignal):
        u_vals = u.eval(grid) if m else np.zeros((0, grid.size))
    else:
        u_vals = np.atleast_2d(np.asarray(u, dtype=float))
    if m and u_vals.shape != (m, grid.size):
        raise ValueError(f"input samples must have shape {(m, grid.size)}")
    channels = [np.ones_like(grid)] + [u_vals[i] for i in range(m)]

    integrals = {(): np.ones_like(grid)}

    def integral(word):
        hit = integrals.get(word)
        if hit is not None:
            return hit
        inner = integral(word[1:])
        out = _cumtrapz(channels[word[0]] * inner, dt)
        integrals[word] = out
        return out

    outputs = np.zeros((grid.size, len(series)))
    for j, comp in enumerate(series):
        acc = np.zeros_like(grid)
        for w, c in comp.terms_dict().items():
            acc = acc + c * integral(w)
        outputs[:, j] = acc
    return outputs[:, 0] if scalar else outputs


# ---------------------------------------------------------------------------
# simulation


@dataclass
class Trajectory:
    times: np.ndarray
    states: np.ndarray   # (len(times), n)
    outputs: np.ndarray  # (len(times), ell)

    def final_state(self):
        return self.states[-1]

    def to_csv(self, path):
        """Header t,z1,...,zn,y1,...,yl; 15 significant digits."""
        n = self.states.shape[1]
        ell = self.outputs.shape[1]
        header = ",".join(["t"] + [f"z{i+1}" for i in range(n)] + [f"y{j+1}" for j in range(ell)])
        data = np.column_stack([self.times, self.states, self.outputs])
        with open(path, "w") as fh:
            fh.write(header + "\n")
            for row in data:
                fh.write(",".join(f"{v:.15g}" for v in row) + "\n")


def rk4_simulate(realization, u, horizon, steps):
    """Classical fixed-step fourth-order Runge-Kutta integration.

    Inputs are evaluated at stage times.  Raises SimulationError with
    the first offending time if the state leaves the finite range.
    """
    n = realization.n_states
    m = realization.n_inputs
    field_fn = _compiled_fields(realization)
    out_fn = _compiled_outputs(realization)

    def rhs(t, z):
        uv = u.eval(t) if m else np.zeros(0)
        return np.array(field_fn(z, uv))

    h = horizon / steps
    times = np.linspace(0.0, horizon, steps + 1)
    states = np.empty((steps + 1, n))
    states[0] = realization.z0
    z = np.array(realization.z0, dtype=float)
    for k in range(steps):
        t = times[k]
        try:
            k1 = rhs(t, z)
            k2 = rhs(t + 0.5 * h, z + 0.5 * h * k1)
            k3 = rhs(t + 0.5 * h, z + 0.5 * h * k2)
            k4 = rhs(t + h, z + h * k3)
        except (ZeroDivisionError, OverflowError) as exc:
            raise SimulationError(t, f"field evaluation failed at t={t:g}: {exc}") from exc
        z = z + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if not np.all(np.isfinite(z)):
            raise SimulationError(times[k + 1])
        states[k + 1] = z
    outputs = np.array([out_fn(s) for s in states])
    return Trajectory(times=times, states=states, outputs=outputs)


_FIELD_FN_CACHE = {}


def _compiled_fields(realization):
    key = tuple(tuple(e._id for e in col) for col in realization.fields)
    fn = _FIELD_FN_CACHE.get(key)
    if fn is None:
        flat = [e for col in realization.fields for e in col]
        raw = symexpr.compile_expr(flat, realization.n_states)
        n = realization.n_states
        m = realization.n_inputs

        def fn(z, uv):
            vals = raw(z)
            out = vals[:n]
            for i in range(m):
                gi = vals[(i + 1) * n : (i + 2) * n]
                ui = uv[i]
                out = [a + ui * b for a, b in zip(out, gi)]
            return out

        _FIELD_FN_CACHE[key] = fn
    return fn


_OUT_FN_CACHE = {}


def _compiled_outputs(realization):
    key = tuple(e._id for e in realization.outputs)
    fn = _OUT_FN_CACHE.get(key)
    if fn is None:
        fn = symexpr.compile_expr(list(realization.outputs), realization.n_states)
        _OUT_FN_CACHE[key] = fn
    return fn
