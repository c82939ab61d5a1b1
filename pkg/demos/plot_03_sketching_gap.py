"""
How far can a sketch be fooled?
===============================

For any m unit vectors there is a unitary that agrees with U on all of them yet
has trace overlap 2m - d with U. The sketched objective is then at its minimum
while the full objective is 2(d - m)/d away from it.
"""

import numpy as np

from aqcsketch.sketch import haar_unitary, random_unit_vectors
from aqcsketch.verification import adversarial_unitary

rng = np.random.default_rng(3)
d = 32
U = haar_unitary(d, rng)

print(" m   sketched   full    2(d-m)/d")
for m in (1, 4, 8, 16, 32):
    X = random_unit_vectors(d, m, rng)
    V = adversarial_unitary(U, X)
    sketched = 1 - np.einsum("ij,ij->j", (V @ X).conj(), U @ X).real.mean()
    full = 1 - np.trace(V.conj().T @ U).real / d
    print(f"{m:2d}  {sketched:9.2e}  {full:6.3f}  {2 * (d - m) / d:6.3f}")

# for a Haar-random V the overlap is small: E|<V, U>|^2 = 1
Vs = haar_unitary(d, rng, size=5000)
overlap = np.abs(np.einsum("kij,ij->k", Vs.conj(), U)) ** 2
print("\nmean |<V,U>|^2 over Haar V:", overlap.mean())
