# %% [markdown]
# # Does X_t reach 0?
#
# Classification from the spectrum, then moment proxies: decay of
# E||X_t||^2 toward T and the exponent of each spectral block.

# %%
import numpy as np

from opbridge import BridgeModel, classify, convergence_diagnostic, decay_exponent, rescaled_limit_probe
from opbridge.grids import default_grid
from opbridge.sampler import sample_exact

bridge = BridgeModel(np.diag([0.25, 0.75]), np.eye(2))
skew = BridgeModel([[0.0, 1.0], [-1.0, 0.0]], np.eye(2))
for m in (bridge, skew, BridgeModel(np.diag([-0.1, 0.5]), np.eye(2))):
    print(classify(m).verdict)

# %%
grid = default_grid(1.0, k_max=20)
for m in (bridge, skew):
    rep = convergence_diagnostic(sample_exact(m, grid, 5000, 3), m)
    print(rep.verdict, rep.converged, np.round(rep.second_moments[-5:], 5))

# %%
for j in range(2):
    r = decay_exponent(bridge, j)
    print(f"block {j}: a={r.real_part}, predicted {r.predicted_moment_exponent}, estimated {r.estimated_exponent:.3f}")

# %% [markdown]
# Rescaling by (T - t)**-Atilde: the median norm goes to 0, stays, or blows up
# depending on the sign of the spectrum of A - Atilde.

# %%
scalar = BridgeModel([[0.25]], [[1.0]])
ens = sample_exact(scalar, default_grid(1.0, k_max=40), 4000, 5)
for at in (0.2, 0.25, 0.3):
    p = rescaled_limit_probe(scalar, [[at]], ens)
    print(at, p.expected, p.observed, round(p.slope, 3))
