"""
Analog beam selection and the LMMSE combiner
============================================

Sensing beams are fixed; the K communication pairs come from the L strongest
candidates, keeping the subset with the smallest symbol MSE.
"""

import numpy as np

from bpmisac import ArrayGeometry, ImConfig, SensingSpec, dft_codebook, sample_channel
from bpmisac.precoder import LinkNoise, comm_mse, lmmse_combiner, select_beams

rng = np.random.default_rng(2)
cfg = ImConfig(4, 3, 4)
spec = SensingSpec.uniform((11, 12, 13), 5.0)
tx = rx = dft_codebook(32)
noise = LinkNoise.from_ebn0_db(0.0, cfg)

h = sample_channel(rng, ArrayGeometry(32, 32), 8)
sel, eq = select_beams(h, tx, rx, spec, noise, cfg, l=20)
print("selected (tx, rx) pairs:", sel.pairs)

w = lmmse_combiner(eq, np.ones(4), spec.t, spec, noise, cfg)
chi = comm_mse(eq, w, np.ones(4), spec.t, spec, noise, cfg)
print("MSE at the LMMSE combiner: %.4f" % chi)

# Any small change to the combiner makes things worse.
for _ in range(3):
    d = rng.standard_normal(w.shape) + 1j * rng.standard_normal(w.shape)
    d *= 1e-2 / np.linalg.norm(d)
    print("  perturbed: %.6f" % comm_mse(eq, w + d, np.ones(4), spec.t, spec, noise, cfg))
