"""Catalog of explicit exponential Runge-Kutta (EERK) Butcher tableaux.

Every tableau is stored symbolically: entry ``(i, j)`` of the coefficient
matrix ``A`` is the function ``a_{i+1,j}(z)`` as a :data:`~eerk.phi.PhiExpr`
tree, with the weight row ``b_j = a_{s+1,j}`` stored as the last row of
``A`` so downstream analysis needs no special casing.  Abscissas and
rational coefficients are exact :class:`~fractions.Fraction` values.

Catalog (CLI spelling in parentheses):

========  =====================================================
etd1      exponential forward Euler
eerk2     one-parameter second-order family; ``c2 = 1`` is the
          ETD2RK method of Cox & Matthews (2002)
eerk2w    weak one-parameter variant of eerk2
eerk2s    three-stage second-order method of Strehmel & Weiner (1992)
eerk31    one-parameter third-order family (Hochbruck & Ostermann 2005)
eerk32    two-parameter third-order family (Hochbruck & Ostermann 2005)
etd3rk    three-stage method of Cox & Matthews (2002)
etd2cf3   commutator-free CF3 variant (Celledoni, Marthinsen & Owren 2003)
cm4       exponential classical RK4 (Cox & Matthews 2002)
krogstad4 Krogstad (2005)
sw4       Strehmel & Weiner (1992)
ho4       five-stage stiff-order-four method (Hochbruck & Ostermann 2005)
========  =====================================================
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from eerk.phi import Const, Negate, Phi, PhiExpr, Product, Sum, evaluate

__all__ = [
    "Tableau",
    "DiffTableau",
    "MethodError",
    "METHOD_PARAMS",
    "get_method",
    "parse_method",
    "coefficient_matrix",
    "butcher_diff",
    "verify_row_sums",
    "verify_order_conditions",
    "RowSumReport",
    "ConditionCheck",
]


class MethodError(ValueError):
    """Unknown method name or inadmissible abscissa parameters."""


F = Fraction
_ZERO = Const(F(0))


def _c(value) -> Const:
    return Const(value if isinstance(value, Fraction) else F(value))


def _cp(coeff, order, scale=F(1)) -> PhiExpr:
    """coeff * phi_order(scale * z), collapsing a unit coefficient."""
    coeff = coeff if isinstance(coeff, Fraction) else F(coeff)
    if coeff == 1:
        return Phi(order, scale)
    return Product((Const(coeff), Phi(order, scale)))


def _add(*terms) -> PhiExpr:
    return Sum(tuple(terms))


def _sub(a, b) -> PhiExpr:
    return Sum((a, Negate(b)))


@dataclass(frozen=True)
class Tableau:
    """Abscissas ``c_1..c_{s+1}`` plus the lower-triangular coefficient rows.

    ``rows[i]`` holds ``(a_{i+2,1}, ..., a_{i+2,i+1})`` for ``0 <= i < s``;
    the final row is the weight row.  ``c[0] = 0`` and ``c[s] = 1``.
    """

    name: str
    params: tuple = ()
    c: tuple = ()
    rows: tuple = ()

    @property
    def stages(self) -> int:
        return len(self.rows)

    @property
    def label(self) -> str:
        if not self.params:
            return self.name
        inner = ",".join(f"{k}={v}" for k, v in self.params)
        return f"{self.name}:{inner}"


@dataclass(frozen=True)
class DiffTableau:
    """Row-difference transform of a :class:`Tableau` (same layout)."""

    name: str
    params: tuple = ()
    c: tuple = ()
    rows: tuple = ()

    @property
    def stages(self) -> int:
        return len(self.rows)


def coefficient_matrix(t, z) -> np.ndarray:
    """Evaluate the s x s coefficient matrix at ``z``.

    For scalar ``z`` the result has shape ``(s, s)``; for an array of shape
    ``(n,)`` it is ``(n, s, s)``.  Strictly upper entries are zero.
    """
    s = t.stages
    scalar = np.isscalar(z)
    zarr = np.atleast_1d(np.asarray(z, dtype=float))
    out = np.zeros(zarr.shape + (s, s))
    for i, row in enumerate(t.rows):
        for j, entry in enumerate(row):
            out[..., i, j] = evaluate(entry, zarr)
    return out[0] if scalar else out


def butcher_diff(t: Tableau) -> DiffTableau:
    """Difference coefficients: the diagonal is kept, and below it each
    entry has the same-column entry of the previous stage row subtracted."""
    rows = [t.rows[0]]
    for i in range(1, t.stages):
        prev, cur = t.rows[i - 1], t.rows[i]
        row = tuple(_sub(cur[j], prev[j]) for j in range(i)) + (cur[i],)
        rows.append(row)
    return DiffTableau(name=t.name, params=t.params, c=t.c, rows=tuple(rows))


# --------------------------------------------------------------------------
# Method builders
# --------------------------------------------------------------------------


def _check_abscissa(name, value):
    if not (0 < value <= 1):
        raise MethodError(f"{name} must lie in (0, 1], got {value}")


def _etd1() -> Tableau:
    return Tableau("etd1", (), (F(0), F(1)), ((Phi(1),),))


def _eerk2(c2: Fraction) -> Tableau:
    _check_abscissa("c2", c2)
    rows = (
        (_cp(c2, 1, c2),),
        (_sub(Phi(1), _cp(1 / c2, 2)), _cp(1 / c2, 2)),
    )
    return Tableau("eerk2", (("c2", c2),), (F(0), c2, F(1)), rows)


def _eerk2w(c2: Fraction) -> Tableau:
    _check_abscissa("c2", c2)
    rows = (
        (_cp(c2, 1, c2),),
        (_cp(1 - 1 / (2 * c2), 1), _cp(1 / (2 * c2), 1)),
    )
    return Tableau("eerk2w", (("c2", c2),), (F(0), c2, F(1)), rows)


def _eerk2s(c2: Fraction) -> Tableau:
    _check_abscissa("c2", c2)
    rows = (
        (_cp(c2, 1, c2),),
        (_sub(Phi(1), _cp(1 / c2, 2)), _cp(1 / c2, 2)),
        (_sub(Phi(1), Phi(2)), _ZERO, Phi(2)),
    )
    return Tableau("eerk2s", (("c2", c2),), (F(0), c2, F(1), F(1)), rows)


def _eerk31(c2: Fraction) -> Tableau:
    _check_abscissa("c2", c2)
    c3 = F(2, 3)
    rows = (
        (_cp(c2, 1, c2),),
        (_sub(_cp(c3, 1, c3), _cp(F(4, 9) / c2, 2, c3)), _cp(F(4, 9) / c2, 2, c3)),
        (_sub(Phi(1), _cp(F(3, 2), 2)), _ZERO, _cp(F(3, 2), 2)),
    )
    return Tableau("eerk31", (("c2", c2),), (F(0), c2, c3, F(1)), rows)


def _eerk32(c2: Fraction, c3: Fraction) -> Tableau:
    _check_abscissa("c2", c2)
    _check_abscissa("c3", c3)
    if c2 == F(2, 3):
        raise MethodError("eerk32 requires c2 != 2/3 (gamma undefined)")
    if c3 == c2:
        raise MethodError("eerk32 requires c3 != c2 (a32 degenerates)")
    if c3 == F(2, 3):
        raise MethodError("eerk32 requires c3 != 2/3 (reduces to eerk31)")
    gamma = (3 * c3 - 2) * c3 / ((2 - 3 * c2) * c2)
    w = gamma * c2 + c3
    a32 = _add(_cp(gamma * c2, 2, c2), _cp(c3 * c3 / c2, 2, c3))
    b2 = _cp(gamma / w, 2)
    b3 = _cp(1 / w, 2)
    rows = (
        (_cp(c2, 1, c2),),
        (_sub(_cp(c3, 1, c3), a32), a32),
        (Sum((Phi(1), Negate(b2), Negate(b3))), b2, b3),
    )
    return Tableau("eerk32", (("c2", c2), ("c3", c3)), (F(0), c2, c3, F(1)), rows)


def _etd3rk() -> Tableau:
    half = F(1, 2)
    rows = (
        (_cp(half, 1, half),),
        (Negate(Phi(1)), _cp(2, 1)),
        (
            _add(_cp(4, 3), _cp(-3, 2), Phi(1)),
            _add(_cp(-8, 3), _cp(4, 2)),
            _sub(_cp(4, 3), Phi(2)),
        ),
    )
    return Tableau("etd3rk", (), (F(0), half, F(1), F(1)), rows)


def _etd2cf3() -> Tableau:
    c2, c3 = F(1, 3), F(2, 3)
    a32 = _cp(F(4, 3), 2, c3)
    rows = (
        (_cp(c2, 1, c2),),
        (_sub(_cp(c3, 1, c3), a32), a32),
        (
            _add(Phi(1), _cp(F(-9, 2), 2), _cp(9, 3)),
            _sub(_cp(6, 2), _cp(18, 3)),
            _add(_cp(F(-3, 2), 2), _cp(9, 3)),
        ),
    )
    return Tableau("etd2cf3", (), (F(0), c2, c3, F(1)), rows)


_B_ROW_4TH = (
    _add(Phi(1), _cp(-3, 2), _cp(4, 3)),
    _sub(_cp(2, 2), _cp(4, 3)),
    _sub(_cp(2, 2), _cp(4, 3)),
    _sub(_cp(4, 3), Phi(2)),
)


def _cm4() -> Tableau:
    half = F(1, 2)
    rows = (
        (_cp(half, 1, half),),
        (_ZERO, _cp(half, 1, half)),
        (
            Product((Const(half), Phi(1, half), Sum((Phi(0, half), Const(F(-1)))))),
            _ZERO,
            Phi(1, half),
        ),
        _B_ROW_4TH,
    )
    return Tableau("cm4", (), (F(0), half, half, F(1), F(1)), rows)


def _krogstad4() -> Tableau:
    half = F(1, 2)
    rows = (
        (_cp(half, 1, half),),
        (_sub(_cp(half, 1, half), Phi(2, half)), Phi(2, half)),
        (_sub(Phi(1), _cp(2, 2)), _ZERO, _cp(2, 2)),
        _B_ROW_4TH,
    )
    return Tableau("krogstad4", (), (F(0), half, half, F(1), F(1)), rows)


def _sw4() -> Tableau:
    half = F(1, 2)
    rows = (
        (_cp(half, 1, half),),
        (_sub(_cp(half, 1, half), _cp(half, 2, half)), _cp(half, 2, half)),
        (_sub(Phi(1), _cp(2, 2)), _cp(-2, 2), _cp(4, 2)),
        (
            _add(Phi(1), _cp(-3, 2), _cp(4, 3)),
            _ZERO,
            _sub(_cp(4, 2), _cp(8, 3)),
            _sub(_cp(4, 3), Phi(2)),
        ),
    )
    return Tableau("sw4", (), (F(0), half, half, F(1), F(1)), rows)


def _ho4() -> Tableau:
    half = F(1, 2)
    a52 = _add(_cp(half, 2, half), Negate(Phi(3)), _cp(F(1, 4), 2), Negate(_cp(half, 3, half)))
    a54 = _sub(_cp(F(1, 4), 2, half), a52)
    a51 = Sum((_cp(half, 1, half), Negate(Product((Const(F(2)), a52))), Negate(a54)))
    rows = (
        (_cp(half, 1, half),),
        (_sub(_cp(half, 1, half), Phi(2, half)), Phi(2, half)),
        (_sub(Phi(1), _cp(2, 2)), Phi(2), Phi(2)),
        (a51, a52, a52, a54),
        (
            _add(Phi(1), _cp(-3, 2), _cp(4, 3)),
            _ZERO,
            _ZERO,
            _sub(_cp(4, 3), Phi(2)),
            _sub(_cp(4, 2), _cp(8, 3)),
        ),
    )
    return Tableau("ho4", (), (F(0), half, half, F(1), half, F(1)), rows)


_BUILDERS = {
    "etd1": _etd1,
    "eerk2": _eerk2,
    "eerk2w": _eerk2w,
    "eerk2s": _eerk2s,
    "eerk31": _eerk31,
    "eerk32": _eerk32,
    "etd3rk": _etd3rk,
    "etd2cf3": _etd2cf3,
    "cm4": _cm4,
    "krogstad4": _krogstad4,
    "sw4": _sw4,
    "ho4": _ho4,
}

#: Parameter names each method accepts, in declaration order.
METHOD_PARAMS = {
    "etd1": (),
    "eerk2": ("c2",),
    "eerk2w": ("c2",),
    "eerk2s": ("c2",),
    "eerk31": ("c2",),
    "eerk32": ("c2", "c3"),
    "etd3rk": (),
    "etd2cf3": (),
    "cm4": (),
    "krogstad4": (),
    "sw4": (),
    "ho4": (),
}


def _as_fraction(value) -> Fraction:
    if isinstance(value, Fraction):
        return value
    if isinstance(value, str):
        try:
            return Fraction(value)
        except (ValueError, ZeroDivisionError) as exc:
            raise MethodError(f"cannot parse abscissa {value!r}") from exc
    return Fraction(value)


def get_method(name: str, **params) -> Tableau:
    """Build a catalog tableau, e.g. ``get_method("eerk2", c2="1/2")``.

    Abscissas may be given as Fractions, decimal/fraction strings, ints or
    floats; they are stored exactly.  Raises :class:`MethodError` for
    unknown names, wrong parameter sets or inadmissible abscissas.
    """
    key = name.lower()
    if key not in _BUILDERS:
        known = ", ".join(sorted(_BUILDERS))
        raise MethodError(f"unknown method {name!r} (known: {known})")
    expected = METHOD_PARAMS[key]
    if set(params) != set(expected):
        raise MethodError(f"{key} takes parameters {expected}, got {tuple(params)}")
    args = [_as_fraction(params[p]) for p in expected]
    return _BUILDERS[key](*args)


def parse_method(spec: str) -> Tableau:
    """Parse a CLI method spec like ``"eerk32:c2=0.75,c3=0.6"``."""
    name, _, rest = spec.partition(":")
    params = {}
    if rest:
        for item in rest.split(","):
            key, eq, value = item.partition("=")
            if not eq or not key or not value:
                raise MethodError(f"malformed method spec {spec!r}")
            params[key.strip()] = value.strip()
    return get_method(name.strip(), **params)


# --------------------------------------------------------------------------
# Coefficient identity checks
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class RowSumReport:
    max_deviation: float
    passed: bool
    worst_z: float
    worst_row: int
    tolerance: float


def verify_row_sums(t: Tableau, z_grid, tol: float = 1e-11) -> RowSumReport:
    """Check the equilibria identity: row ``i`` of ``A(z)`` must sum to
    ``(exp(c_{i+1} z) - 1)/z`` for every ``z`` in the grid.

    The right-hand side is evaluated through ``expm1``, independently of the
    phi-function code path.
    """
    zarr = np.asarray(z_grid, dtype=float)
    a = coefficient_matrix(t, zarr)
    worst = 0.0
    worst_z, worst_row = float(zarr.flat[0]), 1
    for i in range(t.stages):
        target = np.expm1(float(t.c[i + 1]) * zarr) / zarr
        dev = np.abs(a[..., i, : i + 1].sum(axis=-1) - target)
        idx = int(np.argmax(dev))
        if dev[idx] > worst:
            worst, worst_z, worst_row = float(dev[idx]), float(zarr[idx]), i + 1
    return RowSumReport(worst, worst <= tol, worst_z, worst_row, tol)


@dataclass(frozen=True)
class ConditionCheck:
    name: str
    residual_origin: float
    max_residual: float
    status: str  # "strict" | "weak" | "failed"


def _classify(origin: float, worst: float, tol: float) -> str:
    if worst <= tol:
        return "strict"
    if origin <= tol:
        return "weak"
    return "failed"


def verify_order_conditions(t: Tableau, target_order: int, z_grid, tol: float = 1e-12):
    """Evaluate stiff order-condition residuals on a grid of ``z`` values.

    A condition is *strict* when its residual stays below ``tol`` on the
    whole grid, *weak* when it only holds at ``z = 0`` (residuals there
    below ``tol`` but orders of magnitude above it on the grid), and
    *failed* otherwise.  The coupling condition that quantifies over an
    arbitrary bounded operator is checked with that operator taken as the
    scalar identity.

    Supported: two-stage methods at order 2, three-stage methods at order 2
    (the first four conditions) or 3 (all six).
    """
    zarr = np.concatenate([[0.0], np.asarray(z_grid, dtype=float)])
    a = coefficient_matrix(t, zarr)
    s = t.stages
    c = [float(v) for v in t.c]
    p1 = evaluate(Phi(1), zarr)
    p2 = evaluate(Phi(2), zarr)

    if s == 2 and target_order == 2:
        residuals = [
            ("weights_phi1", a[:, 1, 0] + a[:, 1, 1] - p1),
            ("weights_abscissa_phi2", a[:, 1, 1] * c[1] - p2),
            ("second_stage_consistency", a[:, 0, 0] - c[1] * evaluate(Phi(1, t.c[1]), zarr)),
        ]
    elif s == 3 and target_order in (2, 3):
        b = a[:, 2, :]
        residuals = [
            ("weights_phi1", b[:, 0] + b[:, 1] + b[:, 2] - p1),
            ("weights_abscissa_phi2", b[:, 1] * c[1] + b[:, 2] * c[2] - p2),
            ("second_stage_consistency", a[:, 0, 0] - c[1] * evaluate(Phi(1, t.c[1]), zarr)),
            ("third_stage_consistency", a[:, 1, 0] + a[:, 1, 1] - c[2] * evaluate(Phi(1, t.c[2]), zarr)),
        ]
        if target_order == 3:
            p3 = evaluate(Phi(3), zarr)
            psi23 = c[2] ** 2 * evaluate(Phi(2, t.c[2]), zarr) - c[1] * a[:, 1, 1]
            residuals += [
                ("weights_abscissa_sq_phi3", b[:, 1] * c[1] ** 2 + b[:, 2] * c[2] ** 2 - 2 * p3),
                ("stage_defect_orthogonality",
                 b[:, 1] * c[1] ** 2 * evaluate(Phi(2, t.c[1]), zarr) + b[:, 2] * psi23),
            ]
    else:
        raise MethodError(
            f"order-condition check supports 2-stage order 2 and 3-stage order 2/3; "
            f"got {s} stages at order {target_order}"
        )

    checks = []
    for name, r in residuals:
        origin = float(np.abs(r[0]))
        worst = float(np.max(np.abs(r)))
        checks.append(ConditionCheck(name, origin, worst, _classify(origin, worst, tol)))
    return checks
