"""
Cheap, imperfect solutions from a physics-informed network
===========================================================

A PINN is trained per coefficient vector for at most 100 full-batch Adam
steps.  That is far too little to converge, which is the point: the prior
is cheap to make and visibly wrong, and the in-context model has to cope.
"""

import time

import numpy as np

from cdr_icl.pde import CdrParams, Grid, InitialCondition, solve_cdr
from cdr_icl.pinn import PinnConfig, train_pinn

grid, ic = Grid(), InitialCondition()
config = PinnConfig()  # threshold 1e-3, 100 epochs, lr 1e-2, 3 x 64 tanh

for alpha in [CdrParams(beta=1.0), CdrParams(beta=5.0), CdrParams(nu=1.0), CdrParams(nu=10.0),
              CdrParams(rho=(1, 0, 0)), CdrParams(rho=(5, 0, 0))]:
    start = time.perf_counter()
    result = train_pinn(alpha, config, ic, grid)
    truth = solve_cdr(alpha, ic, grid)
    err = np.linalg.norm(result.field.values - truth.values) / np.linalg.norm(truth.values)
    print(f"{alpha.label():45s} loss {result.history[0]:.3g} -> {result.final_loss:.3g}"
          f"  prior rel err {err:.3f}  ({time.perf_counter() - start:.1f}s)")

# %%
# Diffusion and reaction fields come out within a few percent to ten percent.
# Fast convection is the classic PINN failure: after 100 steps the network
# has barely moved the bump, so the relative error is tens of percent.
