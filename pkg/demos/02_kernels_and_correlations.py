"""Correlation functions of the CSE and Sine4 kernels."""

import numpy as np

from qpfaff import CSEKernel, GroundSet, Sine4Kernel, correlation, grid_discretize

spacer = "_" * 60

#%%
print("\nThe CSE kernel with N particles has flat density N / 2 pi on the circle.")
for N in (2, 6, 10):
    K = CSEKernel(N)
    print(f"  N={N:2d}: rho_1(0.3) = {correlation(K, [0.3]):.12f}, N/2pi = {N / (2 * np.pi):.12f}")

print("\nIts Fourier sum and closed form agree:")
theta = np.linspace(-np.pi, np.pi, 7)[1:]
diff = np.abs(CSEKernel(6, "sum")(theta[:, None], 0.0) - CSEKernel(6, "closed")(theta[:, None], 0.0))
print("  max difference on 6 angles:", diff.max())

print(spacer)

#%%
print("\nTwo-point correlation of the CSE with N=6: strong repulsion near 0.")
K = CSEKernel(6)
for d in (0.05, 0.25, 0.5, 1.0, 2.0):
    print(f"  rho_2(0, {d:4.2f}) = {correlation(K, [0.0, d]):.6f}")

print(spacer)

#%%
print("\nThe Sine4 kernel has density 1/4.  Far apart, rho_2 approaches 1/16")
print("only slowly: the correction behaves like cos(pi x) / (8 x).")
S = Sine4Kernel()
for x in (5.0, 20.0, 50.0, 50.5):
    r2 = correlation(S, [0.0, x])
    print(f"  x={x:5.1f}: rho_2 - 1/16 = {r2 - 1 / 16:+.6f}   1/(8x) = {1 / (8 * x):.6f}")

print(spacer)

#%%
print("\nA grid discretization folds the cell weights in; its trace is the mean count.")
T = grid_discretize(S, GroundSet.uniform(0, 8, 200))
print("  trace on [0, 8] with 200 cells:", T.diagonal().real.sum())
