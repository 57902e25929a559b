"""
Digital power allocation and the sensing trade-off
==================================================

The weight mu sets how much sensing interference the communication MSE may
absorb.  A small mu forces the sensing amplitudes away from the template.
"""

import numpy as np

from bpmisac import ArrayGeometry, ImConfig, SensingSpec, dft_codebook, sample_channel
from bpmisac.allocation import optimize_digital, unoptimized_allocation
from bpmisac.precoder import LinkNoise, select_beams

rng = np.random.default_rng(3)
cfg = ImConfig(4, 3, 4)
spec = SensingSpec.uniform((11, 12, 13), 5.0)
tx = rx = dft_codebook(32)
noise = LinkNoise.from_ebn0_db(0.0, cfg)
_, eq = select_beams(sample_channel(rng, ArrayGeometry(32, 32), 8), tx, rx, spec, noise, cfg, 20)

print("  mu   iters  beampattern MSE  (scaled baseline)   chi / budget")
for mu in (0.1, 0.3, 0.5, 0.7, 0.9, 1.0):
    res = optimize_digital(eq, spec, noise, cfg, mu)
    base = unoptimized_allocation(eq, spec, noise, cfg, mu)
    print("%5.1f %6d %14.4g %14.4g %14.4f / %.4f"
          % (mu, res.iterations, res.objective, base.objective, res.chi, res.gamma))

res = optimize_digital(eq, spec, noise, cfg, 0.3)
print("objective trace at mu = 0.3:", np.round(res.objective_trace[:6], 4), "...")
print("sensing amplitudes:", np.round(res.b, 3), "template:", np.round(spec.t, 3))
