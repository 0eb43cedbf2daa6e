# %% [markdown]
# # Splitting A by eigenvalue real part
#
# We hide a Jordan block and a scalar behind a random similarity and recover
# the real-spectrally-simple blocks.

# %%
import numpy as np
import scipy.linalg

from opbridge import decompose, op_power, project_path, project_power

rng = np.random.default_rng(1)
D = scipy.linalg.block_diag([[0.25]], [[0.75, 1.0], [0.0, 0.75]])
M = np.eye(3) + 0.5 * rng.normal(size=(3, 3))
A = M @ D @ np.linalg.inv(M)
dec = decompose(A)
print("real parts:", dec.real_parts, "block dims:", dec.block_dims)
resid = np.linalg.solve(dec.basis, A) @ dec.basis - dec.block_diagonal()
print("similarity residual:", np.linalg.norm(resid))

# %%
r = 0.1
rebuilt = dec.basis @ scipy.linalg.block_diag(*project_power(dec, r)) @ np.linalg.inv(dec.basis)
print("power consistency:", np.linalg.norm(rebuilt - op_power(A, r)))

path = rng.normal(size=(5, 3))
views = project_path(dec, path)
print([v.values.shape for v in views])
