"""Explicit exponential Runge-Kutta (EERK) methods for gradient flows.

The package bundles:

* numerically stable phi-function evaluation and symbolic tableau
  coefficients (:mod:`eerk.phi`),
* a catalog of EERK Butcher tableaux with parameterized abscissas
  (:mod:`eerk.tableaux`),
* the energy-dissipation machinery: discrete orthogonal convolution
  kernels, differentiation matrices, leading-principal-minor
  classification and average dissipation rates (:mod:`eerk.dissipation`),
* a spectral 1-D Dirichlet Laplacian and Cahn-Hilliard problem setup
  (:mod:`eerk.spatial`),
* the generic stage loop with optional stage-energy-law monitoring
  (:mod:`eerk.integrator`),
* benchmark drivers and a CSV-emitting command line front end
  (:mod:`eerk.bench`, :mod:`eerk.cli`).
"""

from eerk.dissipation import (
    Classification,
    average_dissipation_rate,
    classify_method,
    default_z_grid,
    differentiation_matrix,
    doc_kernels,
    leading_principal_minors,
)
from eerk.integrator import RunReport, StepRecord, integrate, stage_energy_margin, step
from eerk.phi import Const, Negate, Phi, PhiExpr, Product, Sum, Var, evaluate, phi, phi_scalar
from eerk.spatial import (
    CahnHilliard,
    Problem,
    StabilizedSemilinear,
    apply_spectral,
    build_laplacian_1d,
    ch_energy,
    inner_product,
)
from eerk.tableaux import (
    DiffTableau,
    Tableau,
    butcher_diff,
    get_method,
    parse_method,
    verify_order_conditions,
    verify_row_sums,
)

__all__ = [
    "phi",
    "phi_scalar",
    "evaluate",
    "Const",
    "Var",
    "Phi",
    "Sum",
    "Product",
    "Negate",
    "PhiExpr",
    "Tableau",
    "DiffTableau",
    "get_method",
    "parse_method",
    "butcher_diff",
    "verify_row_sums",
    "verify_order_conditions",
    "doc_kernels",
    "differentiation_matrix",
    "leading_principal_minors",
    "average_dissipation_rate",
    "classify_method",
    "default_z_grid",
    "Classification",
    "build_laplacian_1d",
    "apply_spectral",
    "inner_product",
    "ch_energy",
    "CahnHilliard",
    "StabilizedSemilinear",
    "Problem",
    "step",
    "integrate",
    "stage_energy_margin",
    "StepRecord",
    "RunReport",
]

__version__ = "0.1.0"
