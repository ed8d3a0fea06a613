"""Recover the path difference and amplitude from a phaseless signal alone."""

import numpy as np

from zcs.forward import TwoTermModel, synth_phaseless
from zcs.zerocount import estimate_tau

rng = np.random.default_rng(11)

print(f"{'tau true':>10} {'tau est':>12} {'rel err':>10} "
      f"{'amp true':>9} {'amp est':>9} {'dips':>5}")
for _ in range(8):
    amp = rng.uniform(0.5, 0.95)
    tau = rng.uniform(0.5, 5.0)
    model = TwoTermModel(amp, tau + 0.3, 0.3)

    k_min = 10.0 / tau
    k_max = k_min + 60.0 * 2.0 * np.pi / tau
    est = estimate_tau(synth_phaseless(model, k_min, k_max, 4096))

    rel = abs(est.tau_hat - tau) / tau
    print(f"{tau:10.5f} {est.tau_hat:12.5f} {rel:10.2e} "
          f"{amp:9.4f} {est.amp_hat:9.4f} {est.n_dips:5d}")

# the two internal estimators (dip spacing and spectral peak) must agree;
# a tail perturbation degrades but does not break the estimate
model = TwoTermModel(0.8, 2.0, 0.0)
est = estimate_tau(synth_phaseless(model, 5.0, 200.0, 4096, tail_c=2.0, seed=0))
print(f"\nwith tail: tau_hat={est.tau_hat:.5f} (true 2.0), "
      f"agreement={est.method_agreement:.2e}, low_confidence={est.low_confidence}")
