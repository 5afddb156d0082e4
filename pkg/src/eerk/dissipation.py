"""Energy-dissipation analysis of EERK tableaux.

For a tableau with difference coefficients ``abar`` the discrete orthogonal
convolution (DOC) kernels are the lower-triangular inverse

    theta[k, k] = 1 / abar[k+1, k]
    theta[k, j] = -sum_{l=j+1..k} theta[k, l] * abar[l+1, j] / abar[j+1, j]

satisfying ``sum_{l=j..m} theta[m, l] * abar[l+1, j] = delta_{mj}``.  The
*differentiation matrix* is

    d[k, l] = theta[k, l] + (z/2) * (2 - delta_{kl})        (standard)
    d[k, l] = theta[k, l] + z                               (implicit)

on the lower triangle.  Positive semi-definiteness of the symmetric part
``S = (D + D^T)/2`` certifies that the method dissipates the gradient-flow
energy at every stage, for every step size.  Equivalently (and used here as
a cross-check), ``D = A(z)^{-1} E + z E - (z/2) I`` with ``E`` the
lower-triangular matrix of ones.

The scalar ``trace(D)/s`` is the *average dissipation rate* R(z): values
near 1 mean the discrete energy decays at about the continuous rate, larger
values mean a time-"ahead" effect.

Classification scans a grid of ``z <= 0``: a method is ``PSD-on-grid`` when
every leading principal minor of ``S`` is nonnegative (up to a
magnitude-aware tolerance) at every grid point, else ``NPD`` with a witness
refined by bisection toward the sign change.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

import numpy as np

from eerk.phi import evaluate
from eerk.tableaux import DiffTableau, Tableau, butcher_diff, coefficient_matrix

__all__ = [
    "SingularDiagonalError",
    "doc_kernels",
    "doc_identity_residual",
    "differentiation_matrix",
    "differentiation_matrix_inverse_route",
    "leading_principal_minors",
    "average_dissipation_rate",
    "eerk32_abscissa_condition",
    "default_z_grid",
    "DissipationSample",
    "dissipation_sample",
    "Witness",
    "Classification",
    "classify_method",
    "scan_method",
]

VARIANTS = ("standard", "implicit")


class SingularDiagonalError(ArithmeticError):
    """A difference-coefficient diagonal entry vanished at the given z."""


def _check_variant(variant):
    if variant not in VARIANTS:
        raise ValueError(f"variant must be one of {VARIANTS}, got {variant!r}")


def _theta_from_abar(abar: np.ndarray) -> np.ndarray:
    s = abar.shape[-1]
    diag = abar[..., range(s), range(s)]
    if np.any(diag == 0.0):
        raise SingularDiagonalError("zero diagonal difference coefficient")
    theta = np.zeros_like(abar)
    for k in range(s):
        theta[..., k, k] = 1.0 / abar[..., k, k]
        for j in range(k - 1, -1, -1):
            acc = np.zeros_like(theta[..., k, k])
            for l in range(j + 1, k + 1):
                acc += theta[..., k, l] * abar[..., l, j]
            theta[..., k, j] = -acc / abar[..., j, j]
    return theta


def doc_kernels(dt: DiffTableau, z) -> np.ndarray:
    """DOC kernels of a Butcher-Diff tableau at ``z`` (scalar or array).

    Shape ``(s, s)`` for scalar ``z``, ``(n, s, s)`` for an ``(n,)`` array.
    Raises :class:`SingularDiagonalError` when a diagonal entry vanishes.
    """
    return _theta_from_abar(coefficient_matrix(dt, z))


def doc_identity_residual(dt: DiffTableau, z) -> float:
    """Max elementwise residual of ``Theta @ Abar = I`` at ``z``."""
    abar = coefficient_matrix(dt, z)
    theta = _theta_from_abar(abar)
    eye = np.eye(abar.shape[-1])
    return float(np.max(np.abs(theta @ abar - eye)))


def differentiation_matrix(t: Tableau, z, variant: str = "standard",
                           verify: bool = False) -> np.ndarray:
    """Differentiation matrix ``D(z)`` (or the implicit variant) at ``z``.

    Built through the DOC recursion; with ``verify=True`` it is also built
    through the matrix-inverse route and the two are required to agree to
    1e-10 elementwise.
    """
    _check_variant(variant)
    scalar = np.isscalar(z)
    zarr = np.atleast_1d(np.asarray(z, dtype=float))
    dt = butcher_diff(t)
    theta = _theta_from_abar(coefficient_matrix(dt, zarr))
    s = t.stages
    lower = np.tri(s)
    zz = zarr[..., None, None]
    if variant == "standard":
        # z/2 * (2 - delta_kl) on the lower triangle
        d = theta + zz * lower - (zz / 2.0) * np.eye(s)
    else:
        d = theta + zz * lower
    if verify:
        other = differentiation_matrix_inverse_route(t, zarr, variant)
        # 1e-10 absolute, floored elementwise at float64 granularity (entries
        # grow like z^2 for some five-stage weights)
        bound = np.maximum(1e-10, 32 * np.finfo(float).eps * np.abs(d))
        excess = float(np.max(np.abs(d - other) - bound))
        if excess > 0.0:
            raise AssertionError(
                f"DOC and inverse routes disagree beyond tolerance by {excess:.3e}")
    return d[0] if scalar else d


def differentiation_matrix_inverse_route(t: Tableau, z, variant: str = "standard") -> np.ndarray:
    """``A(z)^{-1} E + z E - (z/2) I`` (standard) or ``A^{-1} E + z E``."""
    _check_variant(variant)
    scalar = np.isscalar(z)
    zarr = np.atleast_1d(np.asarray(z, dtype=float))
    a = coefficient_matrix(t, zarr)
    s = t.stages
    ones_lower = np.tri(s)
    theta = np.linalg.solve(a, np.broadcast_to(ones_lower, a.shape).copy())
    zz = zarr[..., None, None]
    d = theta + zz * ones_lower
    if variant == "standard":
        d = d - (zz / 2.0) * np.eye(s)
    return d[0] if scalar else d


def leading_principal_minors(d: np.ndarray) -> np.ndarray:
    """Determinants of the leading blocks of the symmetric part of ``d``.

    Accepts ``(s, s)`` or batched ``(..., s, s)`` input; returns ``(s,)``
    or ``(..., s)``.  Each block determinant is computed independently by
    pivoted LU.
    """
    d = np.asarray(d, dtype=float)
    s = d.shape[-1]
    sym = 0.5 * (d + np.swapaxes(d, -1, -2))
    minors = np.empty(d.shape[:-2] + (s,))
    for j in range(1, s + 1):
        minors[..., j - 1] = np.linalg.det(sym[..., :j, :j])
    return minors


def average_dissipation_rate(t: Tableau, z, variant: str = "standard"):
    """``R(z) = z/2 + mean_i 1/a_{i+1,i}(z)`` (or ``z + mean`` implicit).

    Equals ``trace(D)/s`` of the corresponding variant.  Scalar in, float
    out; array in, array out.
    """
    _check_variant(variant)
    scalar = np.isscalar(z)
    zarr = np.atleast_1d(np.asarray(z, dtype=float))
    inv_sum = np.zeros_like(zarr)
    for i, row in enumerate(t.rows):
        diag = np.asarray(evaluate(row[i], zarr), dtype=float)
        if np.any(diag == 0.0):
            raise SingularDiagonalError("zero diagonal coefficient")
        inv_sum += 1.0 / diag
    shift = 0.5 if variant == "standard" else 1.0
    rate = shift * zarr + inv_sum / t.stages
    return float(rate[0]) if scalar else rate


def eerk32_abscissa_condition(c2, c3) -> float:
    """Necessary large-|z| rate condition for the two-parameter third-order
    family: nonnegative return means ``R(z)`` stays nonnegative as
    ``z -> -inf``.
    """
    c2 = float(Fraction(c2) if isinstance(c2, str) else c2)
    c3 = float(Fraction(c3) if isinstance(c3, str) else c3)
    if c2 == 2.0 / 3.0 or c3 == c2 or c3 == 0.0:
        raise ValueError("degenerate abscissas: need c2 != 2/3, c3 != c2, c3 != 0")
    return (6.0 * c3 * (c2 - c3) / (3.0 * c2 - 2.0)
            - 1.0
            + 2.0 * c2 * (3.0 * c2 - 2.0) / (3.0 * c3 * (c2 - c3)))


def default_z_grid() -> np.ndarray:
    """400 log-spaced points with |z| in [1e-6, 1e4] joined with 400
    linearly spaced points in [-100, 0), ascending."""
    log_part = -np.logspace(-6.0, 4.0, 400)
    lin_part = np.linspace(-100.0, 0.0, 401)[:-1]
    return np.unique(np.concatenate([log_part, lin_part]))


GRID_NOTE = "union(400 log |z| in [1e-6,1e4], 400 linear in [-100,0))"


@dataclass(frozen=True)
class DissipationSample:
    """All analysis quantities of one method at one ``z``."""

    z: float
    theta: np.ndarray
    d: np.ndarray
    sym: np.ndarray
    minors: np.ndarray
    rate: float
    variant: str


def dissipation_sample(t: Tableau, z: float, variant: str = "standard") -> DissipationSample:
    theta = doc_kernels(butcher_diff(t), float(z))
    d = differentiation_matrix(t, float(z), variant)
    sym = 0.5 * (d + d.T)
    return DissipationSample(
        z=float(z),
        theta=theta,
        d=d,
        sym=sym,
        minors=leading_principal_minors(d),
        rate=average_dissipation_rate(t, float(z), variant),
        variant=variant,
    )


@dataclass(frozen=True)
class Witness:
    z: float
    minor_index: int  # 1-based
    minor_value: float


@dataclass(frozen=True)
class Classification:
    verdict: str  # "PSD-on-grid" | "NPD"
    witness: Optional[Witness]
    grid_note: str

    @property
    def is_psd(self) -> bool:
        return self.verdict == "PSD-on-grid"


def _minor_violation(t: Tableau, z: float, tol: float, variant: str):
    """First violating (1-based minor index, value) at ``z``, else None."""
    d = differentiation_matrix(t, z, variant)
    sym = 0.5 * (d + d.T)
    minors = leading_principal_minors(d)
    scale = max(1.0, float(np.max(np.abs(np.diag(sym)))))
    for j, m in enumerate(minors, start=1):
        if m < -tol * scale**j:
            return j, float(m)
    return None


def classify_method(t: Tableau, z_grid=None, tol: float = 1e-9,
                    variant: str = "standard") -> Classification:
    """Scan the grid for negative leading principal minors of ``S(D; z)``.

    The tolerance scales with the matrix magnitude: minor ``j`` must stay
    above ``-tol * max(1, max_k |S_kk|)^j``.  On failure the witness is the
    smallest-|z| violating grid point, sharpened by 20 bisection steps
    toward the adjacent passing point.
    """
    _check_variant(variant)
    grid = default_z_grid() if z_grid is None else np.sort(np.asarray(z_grid, dtype=float))
    if grid.size == 0:
        raise ValueError("empty z grid")
    if np.any(grid > 0.0):
        raise ValueError("classification grid must satisfy z <= 0")
    note = GRID_NOTE if z_grid is None else f"user grid ({grid.size} points)"

    d = differentiation_matrix(t, grid, variant)
    sym = 0.5 * (d + np.swapaxes(d, -1, -2))
    minors = leading_principal_minors(d)
    diag_scale = np.maximum(1.0, np.max(np.abs(sym[:, range(t.stages), range(t.stages)]), axis=-1))
    powers = diag_scale[:, None] ** np.arange(1, t.stages + 1)[None, :]
    violating = np.any(minors < -tol * powers, axis=-1)
    if not np.any(violating):
        return Classification("PSD-on-grid", None, note)

    idx = int(np.max(np.nonzero(violating)[0]))  # ascending grid: largest z
    z_fail = float(grid[idx])
    if idx + 1 < grid.size and not violating[idx + 1]:
        z_pass = float(grid[idx + 1])
        for _ in range(20):
            mid = 0.5 * (z_fail + z_pass)
            if _minor_violation(t, mid, tol, variant) is not None:
                z_fail = mid
            else:
                z_pass = mid
    j, value = _minor_violation(t, z_fail, tol, variant)
    return Classification("NPD", Witness(z_fail, j, value), note)


def scan_method(t: Tableau, z_grid=None, variant: str = "standard"):
    """Rates and minors over a grid: ``(z, rate, minors)`` arrays with
    shapes ``(n,)``, ``(n,)``, ``(n, s)`` (one CSV row per grid point)."""
    grid = default_z_grid() if z_grid is None else np.asarray(z_grid, dtype=float)
    d = differentiation_matrix(t, grid, variant)
    minors = leading_principal_minors(d)
    rate = average_dissipation_rate(t, grid, variant)
    return grid, rate, minors
