"""Quaternion determinants three ways."""

import numpy as np

from qpfaff import QMatrix, Quaternion, qdet, qdet_moore, qdet_recursive, random_self_adjoint
from qpfaff.qmatrix import phi_lift, psi
from qpfaff.quaternion import I, J, K, phi

spacer = "_" * 60

#%%
print("\nThe units multiply like Hamilton's quaternions:")
print("i * j =", I * J)
print("j * i =", J * I)
print("phi(j) =")
print(phi(J).real)

print(spacer)

#%%
print("\nA random self-adjoint 4x4 matrix has a complex quaternion determinant.")
rng = np.random.default_rng(1)
M = random_self_adjoint(4, rng)
print("Pfaffian route :", qdet(M))
print("Dyson recursion:", qdet_recursive(M))
print("Moore expansion:", qdet_moore(M))

print("\nThe recursion may expand along any row of a self-adjoint matrix:")
for k in range(M.n):
    print(f"  row {k}:", qdet_recursive(M, k))

print(spacer)

#%%
print("\npsi(M) is skew-symmetric, and qdet(M)^2 is the determinant of the lift:")
A = psi(M)
print("max |psi + psi^T| =", np.abs(A + A.T).max())
print("qdet(M)^2      =", qdet(M) ** 2)
print("det(phi(M))    =", np.linalg.det(phi_lift(M)))

print(spacer)

#%%
print("\nFor commuting (scalar) entries the quaternion determinant is the ordinary one:")
S = np.array([[2.0, 1.0, 0.5], [1.0, 3.0, 0.2], [0.5, 0.2, 1.0]])
print("qdet =", qdet(QMatrix(S)).real, " det =", np.linalg.det(S))
