"""Two-stage gradient descent-ascent for one-layer generative models.

Submodules:

- ``hermite``: orthonormal Hermite basis, activation expansions, dual kernels
- ``model``: activations plus the generator and discriminator families
- ``losses``: game objectives with empirical and population risks and their derivatives
- ``optimizer``: marginal-norm stage and projected stochastic GDA
- ``stationarity``: SOSP / FOSP certificates and the recovery bound
- ``hardness``: 3SAT to ReLU min-max reduction with brute-force decision
- ``harness``: configured experiments with CSV/SVG output and a CLI
"""

__version__ = "0.1.0"
