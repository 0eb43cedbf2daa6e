# %% [markdown]
# # Different drifts, same law
#
# For normal A the pair (A, I) and (A^T, I) have identical covariance
# functions, so identical laws.

# %%
import numpy as np

from opbridge import BridgeModel, commutator_defect, compare_laws
from opbridge.uniqueness import normal_kernel_defect, random_normal_matrix, respec_consistency

rng = np.random.default_rng(0)
A = random_normal_matrix(rng, 3)
m1, m2 = BridgeModel(A, np.eye(3)), BridgeModel(A.T, np.eye(3))
cmp = compare_laws(m1, m2)
print(cmp.verdict, cmp.max_deviation)
print("kernel identity:", [float(normal_kernel_defect(A, r)) for r in (0.1, 2.0, 10.0)])

# %%
r1 = BridgeModel(0.4 * np.array([[1.0, 1.0], [-1.0, 1.0]]), np.eye(2))
r2 = BridgeModel(0.4 * np.eye(2), np.eye(2))
c = compare_laws(r1, r2)
print(c.verdict, respec_consistency(r1, r2, c).message)

# %%
s1, s2 = BridgeModel([[0.3]], [[1.0]]), BridgeModel([[0.6]], [[1.0]])
print(compare_laws(s1, s2).verdict, commutator_defect(s1, s2).max_defect)
