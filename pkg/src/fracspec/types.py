"""Shared type definitions for fracspec."""

from typing import Literal

Model = Literal["rlc", "rl"]
"""RLC is -D I D u (flux -I D u); RL is -D^2 I u (flux -D I u)."""

BCFamily = Literal[
    "dirichlet",
    "mixed_flux_dirichlet",
    "neumann",
    "rl_weighted_dirichlet",
    "rl_mixed",
]

LadderKind = Literal["lambda", "mu", "sigma", "kappa"]

PosednessStatus = Literal[
    "WellPosed", "WellPosedUpToConstant", "IllPosed", "RequiresSingularBC"
]

PinMode = Literal["zero", "mean_zero"]

PolyBasis = Literal["jacobi", "power"]

ProbeVariant = Literal["flux_at_zero", "flux_at_one"]

OperatorMode = Literal["closed_form", "verification"]
"""Closed-form ladders, or the quadrature/finite-difference oracle."""

RHSKind = Literal["callable", "jacobi", "constant", "monomial", "polynomial", "log_series"]

KernelName = Literal["k0", "k1"]
"""k0 is the kernel function vanishing at x = 1, k1 the one vanishing at x = 0."""
