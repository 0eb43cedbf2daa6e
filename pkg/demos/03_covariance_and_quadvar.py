# %% [markdown]
# # Exact second moments
#
# `U(t) = Cov(X_t)` by adaptive Gauss-Kronrod quadrature, checked against
# closed forms, plus the quadratic variation of the martingale part.

# %%
import numpy as np

from opbridge import BridgeModel, covariance, covariance_ode_residual, quadratic_variation
from opbridge.grids import geometric_levels

t = np.array([0.25, 0.5, 0.9, 1 - 2.0**-20])
for alpha in (0.25, 1.0, 1.5):
    U = covariance(BridgeModel([[alpha]], [[1.0]]), t).matrices[:, 0, 0]
    exact = ((1 - t) - (1 - t) ** (2 * alpha)) / (2 * alpha - 1)
    print(f"alpha={alpha}: max rel err {np.max(np.abs(U / exact - 1)):.1e}")

# %% [markdown]
# Skew-symmetric drift with identity noise leaves the law of Brownian motion.

# %%
skew = BridgeModel([[0.0, 1.0], [-1.0, 0.0]], np.eye(2))
print(covariance(skew, [0.6]).matrices[0])
print("ODE residual:", np.abs(covariance_ode_residual(skew, 0.3, 1e-4)).max())

# %% [markdown]
# Quadratic variation stays bounded for real parts below 1/2 and blows up above.

# %%
grid = geometric_levels(1.0, 1, 24)
for a in (0.25, 0.75):
    c = quadratic_variation(BridgeModel([[a]], [[1.0]]), 1, grid)
    print(a, c.divergence_flag, c.values[[0, 9, -1]])
