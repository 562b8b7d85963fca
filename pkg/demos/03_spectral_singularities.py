# Scan (v0, E) for zeros of the matching determinant, then refine them.
# A zero is a spectral singularity: T, R_L and R_R all diverge there.
# Run: python demos/03_spectral_singularities.py  (about half a minute)
from ptscatter import PotentialSpec, scatter, ss_refine, ss_scan

W0 = 4.0
for n in (1, 5):
    found = ss_scan(W0, n, (2.6, 3.0), (9.5, 11.5), 60)
    print(f"n={n}: {len(found)} grid candidate(s)")
    for c in found:
        r = ss_refine(c)
        print(f"  grid ({c.v0:.4f}, {c.e:.4f}) |D|={c.det_magnitude:.1e}"
              f"  ->  refined ({r.v0:.9f}, {r.e:.9f}) |D|={r.det_magnitude:.1e} ok={r.refined}")
        if r.refined:
            # transmission grows like 1/dE^2 on approach
            for d in (1e-2, 1e-3, 1e-4):
                print(f"     E+{d:g}: |T|^2 = {scatter(PotentialSpec(W0, r.v0, n), r.e + d).T2:.3e}")
