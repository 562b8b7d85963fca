# At v0 = 0.5 the interior is a Bessel problem.  This compares left and
# right reflection for an even number of cells.
# Run: python demos/04_invisibility.py
import numpy as np

from ptscatter import PotentialSpec, invisibility_check

energies = np.linspace(4.5, 40, 12)
for n in (2, 4):
    rep = invisibility_check(PotentialSpec(4.0, 0.5, n), energies)
    print(f"n={n}: passed={rep.passed}  energies with visible |R_L|^2: {rep.finite_left_count}")
    for e, t2, rl2, rr2 in zip(rep.energies, rep.T2, rep.RL2, rep.RR2):
        print(f"  E={e:6.2f}  |T|^2={t2:.5f}  |R_L|^2={rl2:.3e}  |R_R|^2={rr2:.3e}")

# odd n and v0 != 0.5 are refused rather than evaluated
print(invisibility_check(PotentialSpec(4.0, 0.5, 3), [5.0]).refused)
