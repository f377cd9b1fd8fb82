"""Palm kernels, multiplicative functionals and conditional kernels."""

import numpy as np

from qpfaff import (
    Sine4Kernel,
    atom_oracle,
    conditional_kernel,
    conditional_oracle,
    correlation,
    expectation_multiplicative,
    kg_transform,
    palm_many,
    palm_one,
    qdet,
)
from qpfaff.sampler import inclusion_probabilities
from qpfaff.verify import dilute_sine4

spacer = "_" * 60

#%%
print("\nConditioning Sine4 to have a point at 0 digs a hole around 0.")
K = Sine4Kernel("limit")
P = palm_one(K, 0.0)
for x in (0.1, 0.5, 1.0, 2.0, 4.0):
    print(f"  density at {x:3.1f}: {P(x, x)[0].real:.6f}   (unconditioned {K(x, x)[0].real})")

print("\nThe Palm product rule: rho_3(x, y, z) = rho_1(x) * rho_2^x(y, z)")
x, y, z = 0.0, 1.7, 3.1
print("  rho_3                =", correlation(K, [x, y, z]))
print("  rho_1 * Palm rho_2   =", K(x, x)[0].real * correlation(P, [y, z]))

print("\nIterated Palm kernels do not depend on the order of the points:")
a = palm_many(K, [0.0, 2.0, 5.0]).matrix([1.0, 3.5]).entries
b = palm_many(K, [5.0, 0.0, 2.0]).matrix([1.0, 3.5]).entries
print("  max difference:", np.abs(a - b).max())

print(spacer)

#%%
print("\nOn a grid, reweighting by g gives a new Pfaffian process with kernel K^g,")
print("and the expectations factorize.")
T = dilute_sine4(8)
rng = np.random.default_rng(3)
g, h = rng.uniform(0, 2, 8), rng.uniform(0, 2, 8)
lhs = expectation_multiplicative(T, g * h)
rhs = expectation_multiplicative(kg_transform(T, g), h) * expectation_multiplicative(T, g)
print("  E[Psi_gh]            =", lhs)
print("  E^g[Psi_h] E[Psi_g]  =", rhs)

print(spacer)

#%%
print("\nConditioning on the exact configuration in a window B = {2, 3}:")
print("cell 2 occupied, cell 3 empty.  The kernel on the rest predicts the")
print("conditional inclusion probabilities computed by brute force.")
atoms = atom_oracle(T)
C = conditional_kernel(T, [2, 3], [2])
cond = conditional_oracle(atoms, [2, 3], [2])
pred = inclusion_probabilities(C).real
print("  cells         :", C.ground.labels)
print("  kernel        :", np.round(C.diagonal().real, 6))
print("  oracle        :", np.round(cond.inclusion()[[1 << j for j in range(C.n)]], 6))
print("  worst error over all subsets:", np.abs(pred - cond.inclusion()).max())
