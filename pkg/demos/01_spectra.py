# Transmission and reflection spectra across the three regimes.
# Run: python demos/01_spectra.py
import numpy as np

from ptscatter import PotentialSpec, regime_classify, spectrum_sweep

W0 = 4.0
energies = np.linspace(4.05, 40, 200)

for v0 in (0.3, 0.5, 0.8):
    print(f"v0 = {v0}  ({regime_classify(v0).tag.name.lower()})")
    for n in (1, 2, 9):
        rows = spectrum_sweep(PotentialSpec(W0, v0, n), energies)
        t2 = np.array([r.T2 for r in rows])
        rl2 = np.array([r.RL2 for r in rows])
        rr2 = np.array([r.RR2 for r in rows])
        res = max(r.unitarity_residual for r in rows)
        print(f"  n={n}: max|T|^2={t2.max():.4f}  max|R_L|^2={rl2.max():.3e}  "
              f"max|R_R|^2={rr2.max():.3e}  unitarity residual {res:.1e}")

# |T|^2 above one means gain; generalized unitarity still holds:
# ||T|^2 - 1| = |R_L| |R_R| at every energy.
r = spectrum_sweep(PotentialSpec(W0, 0.8, 1), [7.2])[0]
print("\nv0=0.8, n=1, E=7.2:", f"|T|^2-1 = {r.T2 - 1:.6f}", f"|R_L R_R| = {abs(r.R_L * r.R_R):.6f}")
