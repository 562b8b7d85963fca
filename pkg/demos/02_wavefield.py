# Wavefield for left and right incidence, checked against direct integration.
# Run: python demos/02_wavefield.py
import numpy as np

from ptscatter import PotentialSpec, oracle_wavefield, scatter, wavefield

spec = PotentialSpec(4.0, 0.8, 3)
E = 5.6
L = spec.length
x = np.linspace(-np.pi, L + np.pi, 13)

res = scatter(spec, E)
print(f"E={E}: T={res.T:.5f}  R_L={res.R_L:.5f}  R_R={res.R_R:.5f}  basis={res.basis_provenance.value}")

for side in ("left", "right"):
    psi = wavefield(spec, E, side, x)
    ref = oracle_wavefield(spec, E, side, x)
    print(f"\n{side} incidence")
    print("      x        |psi|^2")
    for xi, p in zip(x, psi):
        print(f"  {xi:8.3f}  {abs(p) ** 2:10.5f}")
    print("max deviation from integrator:", np.max(np.abs(psi - ref)))
