"""Explicit left inversion of multivariable input-output operators.

Given the square plant series c (m outputs, m inputs) and a reference
output expansion c_y, the inverse input series is

    c_u = natural part of the group inverse of  C^sh-1  sh  (x0^r)^-1 (c - c_y)

where r is the vector relative degree, C collects the left shifts of
c by the linear words x0^(r_i - 1) x_j, C^sh-1 is the matrix shuffle
inverse, and the group inverse runs in the composition group.  The
reference must match the plant's drift coefficients below the relative
degree; those orders never enter the formula itself, they are a
hypothesis of the theorem, so they are checked explicitly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from fliess.composition import compose, group_inverse
from fliess.errors import (
    MapFormatError,
    MatchingConditionError,
    NoRelativeDegreeError,
    SingularDecouplingError,
)
from fliess.series import (
    SINGULARITY_RTOL,
    MatrixSeries,
    Series,
    VectorSeries,
    drift_word,
    left_shift,
    shuffle,
    shuffle_inverse,
)

MATCHING_TOL = 1e-9


@dataclass
class TaylorOutput:
    """Per-channel Taylor expansions in series convention.

    coeffs[i][k] multiplies t^k / k!; all channels carry the same
    number of coefficients.
    """

    coeffs: list

    def __init__(self, coeffs):
        coeffs = [np.asarray(c, dtype=float) for c in coeffs]
        if not coeffs:
            raise ValueError("need at least one channel")
        width = coeffs[0].shape[0]
        for c in coeffs:
            if c.shape != (width,):
                raise ValueError("channels must carry equally many coefficients")
        self.coeffs = coeffs

    @property
    def n_channels(self):
        return len(self.coeffs)

    @property
    def degree(self):
        return self.coeffs[0].shape[0] - 1

    def eval(self, t):
        """Evaluate all channels at scalar or array t."""
        t = np.asarray(t, dtype=float)
        mono = [c / np.array([math.factorial(k) for k in range(c.size)]) for c in self.coeffs]
        return np.array([np.polynomial.polynomial.polyval(t, c) for c in mono])

    def channel(self, i, alphabet_size, max_degree):
        """Channel i as a drift-only series."""
        return Series.from_taylor(self.coeffs[i], alphabet_size, max_degree)

    def as_vector_series(self, alphabet_size, max_degree):
        return VectorSeries([self.channel(i, alphabet_size, max_degree) for i in range(self.n_channels)])

    def to_json_dict(self):
        return {"outputs": [list(c) for c in self.coeffs], "convention": "series"}

    @classmethod
    def from_json_dict(cls, obj):
        try:
            if obj.get("convention", "series") != "series":
                raise MapFormatError(f"unsupported Taylor convention {obj['convention']!r}")
            return cls(obj["outputs"])
        except (KeyError, TypeError) as exc:
            raise MapFormatError(f"malformed Taylor document: {exc}") from exc

    @classmethod
    def from_series(cls, series, degree):
        """Extract drift coefficients 0..degree from a (vector) series."""
        if isinstance(series, Series):
            series = VectorSeries([series])
        return cls([c.taylor_coeffs(degree + 1) for c in series])


@dataclass
class RelativeDegree:
    orders: list           # r_i per output
    decoupling: np.ndarray  # A[i][j] = (c_i, x0^(r_i-1) x_j)


def _leading_drift_count(word):
    k = 0
    for letter in word:
        if letter != 0:
            break
        k += 1
    return k


def relative_degree(c, rank_rtol=SINGULARITY_RTOL):
    """Vector relative degree of a square vector series.

    For each component, r_i - 1 is the least number of leading drift
    letters over the forced support, the linear word x0^(r_i-1) x_j
    must actually appear, and the resulting constant decoupling matrix
    must pass the singular-value rank test.
    """
    if isinstance(c, Series):
        c = VectorSeries([c])
    m = c.alphabet_size - 1
    orders = []
    for i, comp in enumerate(c):
        forced = comp.forced_part()
        if forced.is_zero():
            raise NoRelativeDegreeError(i, f"output component {i} has no input dependence")
        r = 1 + min(_leading_drift_count(w) for w in forced.support())
        row = [comp.coeff(drift_word(r - 1) + (j,)) for j in range(1, m + 1)]
        if not any(abs(v) > 0.0 for v in row):
            raise NoRelativeDegreeError(
                i, f"output component {i}: no linear word at shift {r - 1}"
            )
        orders.append(r)
    a = np.array(
        [
            [c[i].coeff(drift_word(orders[i] - 1) + (j,)) for j in range(1, m + 1)]
            for i in range(len(c))
        ]
    )
    if a.shape[0] != a.shape[1]:
        raise SingularDecouplingError(
            f"decoupling matrix is {a.shape[0]}x{a.shape[1]}, need square"
        )
    sv = np.linalg.svd(a, compute_uv=False)
    if sv[0] == 0.0 or sv[-1] <= rank_rtol * sv[0]:
        raise SingularDecouplingError(
            f"decoupling matrix fails the rank test (sigma_min/sigma_max = {sv[-1]:.3e}/{sv[0]:.3e})"
        )
    return RelativeDegree(orders=orders, decoupling=a)


def left_invert(c, c_y, degree, matching_tol=MATCHING_TOL):
    """Invert the plant series against a reference output expansion.

    c: VectorSeries with m components over m+1 letters, truncated to at
    least degree + max(r).  c_y: TaylorOutput with m channels.  Returns
    the input expansions as a TaylorOutput with coefficients 0..degree.
    """
    if isinstance(c, Series):
        c = VectorSeries([c])
    m = c.alphabet_size - 1
    if len(c) != m:
        raise SingularDecouplingError(f"need a square plant, got {len(c)} outputs over {m} inputs")
    if c_y.n_channels != m:
        raise ValueError(f"reference has {c_y.n_channels} channels, plant has {m} outputs")
    rd = relative_degree(c)
    rmax = max(rd.orders)
    if c.max_degree < degree + rmax:
        raise ValueError(
            f"plant series degree {c.max_degree} too low: need degree+max(r) = {degree + rmax}"
        )
    for i, r in enumerate(rd.orders):
        ref = c_y.coeffs[i]
        for k in range(r):
            have = c[i].coeff(drift_word(k))
            want = ref[k] if k < ref.size else 0.0
            if abs(have - want) > matching_tol:
                raise MatchingConditionError(i, k, have, want, matching_tol)
    # C[i][j] = (x0^(r_i-1) x_j)^-1 (c_i), truncated to the inversion degree
    rows = []
    for i, r in enumerate(rd.orders):
        rows.append(
            [
                left_shift(drift_word(r - 1) + (j,), c[i]).truncate(degree)
                for j in range(1, m + 1)
            ]
        )
    c_matrix = MatrixSeries(rows)
    residual = []
    for i, r in enumerate(rd.orders):
        ref_series = c_y.channel(i, c.alphabet_size, c.max_degree)
        residual.append(left_shift(drift_word(r), c[i] - ref_series).truncate(degree))
    w = VectorSeries(residual)
    d = shuffle(shuffle_inverse(c_matrix, degree), w, degree)
    e = group_inverse(d, degree)
    return TaylorOutput([e[j].taylor_coeffs(degree + 1) for j in range(m)])


def tracking_error_series(c, c_u, c_y, degree):
    """Coefficient-level tracking error of the reconstructed output.

    Composes the plant with the drift-only embedding of c_u, truncates
    to the requested degree, and returns (ell, degree+1) coefficient
    differences c_y - (c o c_u) in series convention.  Coefficients
    through the inversion degree vanish by construction; the entries
    are exact as long as the plant series carries at least the
    requested degree.
    """
    if isinstance(c, Series):
        c = VectorSeries([c])
    u_embedded = c_u.as_vector_series(c.alphabet_size, degree)
    yhat = compose(c, u_embedded, degree)
    out = np.zeros((len(c), degree + 1))
    for i, comp in enumerate(yhat):
        ref = c_y.coeffs[i]
        for k in range(degree + 1):
            want = ref[k] if k < ref.size else 0.0
            out[i, k] = want - comp.coeff(drift_word(k))
    return out
