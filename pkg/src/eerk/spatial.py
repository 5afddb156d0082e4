"""Discrete 1-D Dirichlet Laplacian, spectral function application and the
Cahn-Hilliard problem setup.

The operator is the tridiagonal stencil ``(-1, 2, -1)/h^2`` on ``m`` interior
points of an interval with homogeneous Dirichlet ends; its eigenvectors are
the orthonormal sine modes, so applying any scalar function of the operator
reduces to a sine transform, an eigenvalue-wise multiply, and a transform
back.  Inner products carry the quadrature weight ``h`` so that discrete
energies approximate integrals.

``Problem`` bundles the operator with a problem kind:

* ``CahnHilliard(eps, kappa)``: the stiff operator is
  ``eps^2 L^2 + kappa L``, the stabilized nonlinearity
  ``L((1 + kappa) u - u^3)``, and energies/monitoring use the H^{-1} inner
  product ``<u, L^{-1} v>``.
* ``StabilizedSemilinear(kappa, g)``: the stiff operator is ``L + kappa I``
  with nonlinearity ``g(u) + kappa u`` in the plain L^2 setting.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Union

import numpy as np
import scipy.fft

__all__ = [
    "SpectralOperator",
    "build_laplacian_1d",
    "apply_spectral",
    "inner_product",
    "CahnHilliard",
    "StabilizedSemilinear",
    "Problem",
    "ch_energy",
]

# dense transforms are fast enough below this size and easier to introspect
_DENSE_LIMIT = 1024


class SpectralOperator:
    """Eigen-decomposition of the Dirichlet Laplacian on ``m`` interior points.

    ``transform`` selects the sine-transform backend: ``"dense"`` uses a
    precomputed orthonormal sine matrix, ``"fft"`` uses the fast DST-I, and
    ``"auto"`` (default) picks dense for ``m <= 1024``.  Both are involutions
    and agree to rounding; instances are immutable and thread-safe.
    """

    def __init__(self, length: float, m: int, transform: str = "auto"):
        if m < 2:
            raise ValueError(f"need at least 2 interior points, got {m}")
        if transform not in ("auto", "dense", "fft"):
            raise ValueError(f"unknown transform backend {transform!r}")
        self.length = float(length)
        self.m = int(m)
        self.h = self.length / (m + 1)
        k = np.arange(1, m + 1)
        self.eigenvalues = (4.0 / self.h**2) * np.sin(k * np.pi / (2.0 * (m + 1))) ** 2
        self.x = self.h * k
        if transform == "auto":
            transform = "dense" if m <= _DENSE_LIMIT else "fft"
        self.transform = transform
        if transform == "dense":
            self._basis = np.sqrt(2.0 / (m + 1)) * np.sin(np.outer(k, k) * np.pi / (m + 1))
        else:
            self._basis = None

    def forward(self, v: np.ndarray) -> np.ndarray:
        """Coefficients of ``v`` in the orthonormal sine basis."""
        if self._basis is not None:
            return self._basis @ v
        return scipy.fft.dst(v, type=1, norm="ortho")

    # the orthonormal sine transform is its own inverse
    inverse = forward

    def apply(self, f: Callable[[np.ndarray], np.ndarray], v: np.ndarray) -> np.ndarray:
        """Apply the operator function ``f(L)`` to ``v`` spectrally."""
        return self.apply_values(f(self.eigenvalues), v)

    def apply_values(self, values: np.ndarray, v: np.ndarray) -> np.ndarray:
        if len(v) != self.m:
            raise ValueError(f"vector length {len(v)} != {self.m}")
        values = np.asarray(values, dtype=float)
        if not np.all(np.isfinite(values)):
            raise ValueError("operator function not finite on the spectrum")
        return self.inverse(values * self.forward(v))

    def apply_stencil(self, v: np.ndarray) -> np.ndarray:
        """Tridiagonal product ``L v`` with Dirichlet ends, in O(m)."""
        out = 2.0 * v
        out[:-1] -= v[1:]
        out[1:] -= v[:-1]
        return out / self.h**2

    def inner(self, u: np.ndarray, v: np.ndarray, metric: str = "l2") -> float:
        """Quadrature-weighted inner product: ``h * sum(u v)`` for ``l2``,
        ``h * sum(u L^{-1} v)`` for ``hminus1``."""
        if metric == "l2":
            return float(self.h * np.dot(u, v))
        if metric == "hminus1":
            return float(self.h * np.dot(self.forward(u), self.forward(v) / self.eigenvalues))
        raise ValueError(f"unknown metric {metric!r}")


def build_laplacian_1d(length: float, m: int, transform: str = "auto") -> SpectralOperator:
    """Dirichlet Laplacian on ``(0, length)`` with ``m`` interior points."""
    return SpectralOperator(length, m, transform)


def apply_spectral(op: SpectralOperator, f, v) -> np.ndarray:
    return op.apply(f, np.asarray(v, dtype=float))


def inner_product(op: SpectralOperator, u, v, metric: str = "l2") -> float:
    return op.inner(np.asarray(u, dtype=float), np.asarray(v, dtype=float), metric)


@dataclass(frozen=True)
class CahnHilliard:
    """Interface width ``eps`` and stabilization ``kappa``; H^{-1} flow."""

    eps: float
    kappa: float


@dataclass(frozen=True)
class StabilizedSemilinear:
    """Shifted semilinear problem ``u' = -(L + kappa) u + g(u) + kappa u``.

    ``potential`` (optional) is the pointwise Lyapunov density ``G`` with
    ``g = -G'``; it is only needed when energies are requested.
    """

    kappa: float
    g: Callable[[np.ndarray], np.ndarray]
    potential: Optional[Callable[[np.ndarray], np.ndarray]] = None


@dataclass(frozen=True)
class Problem:
    op: SpectralOperator
    kind: Union[CahnHilliard, StabilizedSemilinear]
    metric_override: Optional[str] = None

    def __post_init__(self):
        mu = self.spectral_shift(self.op.eigenvalues)
        if not np.all(mu > 0):
            raise ValueError("stiff spectral map must be positive on the spectrum")
        if self.metric_override not in (None, "l2", "hminus1"):
            raise ValueError(f"unknown metric {self.metric_override!r}")

    @property
    def metric(self) -> str:
        """Inner product used by energies and stage-law monitoring."""
        if self.metric_override is not None:
            return self.metric_override
        return "hminus1" if isinstance(self.kind, CahnHilliard) else "l2"

    def spectral_shift(self, lam):
        """Eigenvalue map of the stabilized stiff operator."""
        if isinstance(self.kind, CahnHilliard):
            return self.kind.eps**2 * lam**2 + self.kind.kappa * lam
        return lam + self.kind.kappa

    def g_stabilized(self, u: np.ndarray) -> np.ndarray:
        if isinstance(self.kind, CahnHilliard):
            return self.op.apply_stencil((1.0 + self.kind.kappa) * u - u**3)
        return self.kind.g(u) + self.kind.kappa * u

    def energy(self, v: np.ndarray) -> float:
        """Discrete free energy ``(stiff quadratic)/2 + h * sum G(v)``."""
        if isinstance(self.kind, CahnHilliard):
            stiff = 0.5 * self.kind.eps**2 * self.op.inner(v, self.op.apply_stencil(v))
            return stiff + float(self.op.h * np.sum(0.25 * (v**2 - 1.0) ** 2))
        if self.kind.potential is None:
            raise ValueError("semilinear problem has no potential; cannot form an energy")
        stiff = 0.5 * self.op.inner(v, self.op.apply_stencil(v))
        return stiff + float(self.op.h * np.sum(self.kind.potential(v)))


def ch_energy(problem: Problem, v) -> float:
    """Cahn-Hilliard energy ``(eps^2/2) <v, L v> + h * sum (v^2-1)^2 / 4``."""
    if not isinstance(problem.kind, CahnHilliard):
        raise ValueError("ch_energy requires a CahnHilliard problem")
    return problem.energy(np.asarray(v, dtype=float))
