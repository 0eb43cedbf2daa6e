# %% [markdown]
# # Simulating paths
#
# The exact sampler draws Gaussian transitions; Euler-Maruyama integrates the
# SDE on a uniform grid.  Both are reproducible from one master seed.

# %%
import numpy as np

from opbridge import BridgeModel, covariance, sample_euler, sample_exact
from opbridge.grids import default_grid, uniform_grid
from opbridge.sampler import append_terminal_zero

model = BridgeModel(np.diag([0.25, 0.75]), np.eye(2))
ens = sample_exact(model, default_grid(1.0, extra=[0.9]), 20000, master_seed=2026)
for t in (0.5, 0.9):
    X = ens.at(t)
    print(t, "\n", X.T @ X / len(X), "\n", covariance(model, [t]).matrices[0])

# %%
eu = sample_euler(model, uniform_grid(1.0, 900, 0.9), 20000, 7, record_times=[0.9])
X = eu.paths[:, -1]
print("Euler at 0.9:\n", X.T @ X / len(X))
print(eu.notes[0])

# %% [markdown]
# Bridge models may be pinned at T.

# %%
pinned = append_terminal_zero(sample_exact(model, default_grid(1.0), 3, 1), model)
print(pinned.times[-3:], pinned.paths[0, -3:])
