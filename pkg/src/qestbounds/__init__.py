"""Precision limits for multiparameter quantum state estimation.

Submodules:
  matcore   -- Hermitian linear algebra, logarithmic-derivative solvers
  models    -- parametric state families and D-invariant extensions
  fisher    -- SLD/RLD information matrices, fidelity, local Gaussian data
  bounds    -- the bound ladder (SLD, RLD, minimized, nuisance) and covariances
  gaussian  -- Williamson/canonical forms, Gaussian measurements, tail bounds
  estimate  -- Monte-Carlo attainability checks for one-parameter models
  cli       -- command-line front end
"""

__version__ = "0.1.0"

from . import matcore, models, fisher, bounds, gaussian, estimate  # noqa: F401
