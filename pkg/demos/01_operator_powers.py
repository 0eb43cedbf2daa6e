# %% [markdown]
# # Operator powers r**A
#
# `r**A = exp(A log r)` generalises scalar powers to matrix exponents.  It is
# computed without eigenvectors, so Jordan blocks are fine.

# %%
import numpy as np

from opbridge import eigen_summary, op_power, op_power_at_zero

J = np.array([[0.75, 1.0], [0.0, 0.75]])
for r in (4.0, 0.25, 1e-6):
    print(f"r = {r:g}\n{op_power(J, r)}")
    print("closed form r^0.75 [[1, log r], [0, 1]]:\n", r**0.75 * np.array([[1, np.log(r)], [0, 1]]))

# %% [markdown]
# Rotations: for skew-symmetric `A`, `r**A` is orthogonal and never decays.

# %%
S = np.array([[0.0, 1.0], [-1.0, 0.0]])
Q = op_power(S, 1e-3)
print("Q^T Q =\n", Q.T @ Q)
print(eigen_summary(S))
try:
    op_power_at_zero(S)
except ValueError as exc:
    print("limit at 0:", exc)
print("limit at 0 for [[1,1],[-1,1]]:\n", op_power_at_zero([[1.0, 1.0], [-1.0, 1.0]]))
