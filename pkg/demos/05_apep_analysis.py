"""
Effective paths and the analytic error probability
==================================================

Paths landing in a sensing column block their whole receive row.  The exact
distribution of the surviving paths feeds a union bound on the BER.
"""

import numpy as np

from bpmisac import ImConfig, build_im_codebook
from bpmisac.apep import GridParams, apep, effective_path_dist, mc_path_oracle, total_variation
from bpmisac.precoder import LinkNoise

g = GridParams(n_t=7, n_r=7, w=3, p=7)
dist = effective_path_dist(g)
print("P(M_C = c):", np.round(dist.pmf, 4))
print("mass of 3 sensing hits in 2 rows leaving 3 paths: %.4f" % dist.joint(3, 3, 2))
mc = mc_path_oracle(np.random.default_rng(0), g, 200_000)
print("total variation to direct placement: %.4f" % total_variation(dist.pmf, mc))

cfg = ImConfig(4, 3, 4)
cb = build_im_codebook(cfg)
big = GridParams(32, 32, 3, 8)
print("P(M_C < K) = %.5f" % effective_path_dist(big).below(4))
for snr in (-10, -5, 0, 5, 10):
    noise = LinkNoise.from_ebn0_db(snr, cfg)
    print("Eb/N0 %4d dB  APEP %.3e   without sensing %.3e"
          % (snr, apep(big, cb, noise), apep(GridParams(32, 32, 0, 8), cb, noise)))
