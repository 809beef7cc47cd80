"""In-context operator learning for 1D convection-diffusion-reaction equations.

Submodules: ``pde`` (spectral solver), ``autodiff``/``mlp``/``optim``/``pinn``
(PINN priors), ``noise``/``dataset`` (prior corruption and point sets),
``model`` (in-context transformer), ``metrics``/``experiments``/``cli``.

The package root imports nothing heavy so the CLI can cap BLAS threads
before numpy loads.
"""

__version__ = "0.1.0"
