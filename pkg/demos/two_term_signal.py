"""Build a two-term interference model and look at its phaseless signal.

The squared field |u|^2 oscillates in k with period 2*pi/tau, where tau is
the path difference between the two terms.  The dips of the signal sit at
the real parts of the complex zeros of the underlying difference field, so
we print both side by side.
"""

import numpy as np

from zcs.forward import TwoTermModel, mirror_zero_check, synth_phaseless
from zcs.zerocount import analytic_zeros_two_term

model = TwoTermModel(0.6, 1.9, 0.4)
tau = model.tau
print(f"model: amp={model.amp_A}, tau={tau}")

sig = synth_phaseless(model, 2.0, 40.0, 4096)
k = sig.k_grid
print(f"sampled k in [{k[0]:.1f}, {k[-1]:.1f}], {k.size} points")

# local minima of the signal
f = sig.values
idx = np.nonzero((f[1:-1] < f[:-2]) & (f[1:-1] < f[2:]))[0] + 1
dips = k[idx]

zeros = analytic_zeros_two_term(model.amp_A, tau, range(1, 30))
zeros = zeros[(zeros.real >= k[0]) & (zeros.real <= k[-1])]

print(f"\n{'dip k':>12}  {'zero Re':>12}  {'gap':>10}")
for d, z in zip(dips, zeros):
    print(f"{d:12.5f}  {z.real:12.5f}  {abs(d - z.real):10.2e}")

print(f"\nzeros share Im = ln(A)/tau = {np.log(model.amp_A) / tau:.6f}")

# zeros come in conjugate-like mirror pairs around the lattice points
res = mirror_zero_check(model)
print(f"mirror pairs checked: {len(res['pairs'])}, worst |F| = {res['max_abs_F']:.2e}")
