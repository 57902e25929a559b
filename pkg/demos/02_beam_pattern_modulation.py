"""
Index modulation over beams
===========================

Bits pick which N_C of the K beams are active; the rest ride on QAM symbols.
With K = 4, N_C = 3 and 4-QAM that makes 2 index bits + 3 x 2 symbol bits.
"""

import numpy as np

from bpmisac import ImConfig, build_im_codebook, demodulate_ml, modulate

cfg = ImConfig(k=4, n_c=3, m=4)
cb = build_im_codebook(cfg)
print("eta =", cb.eta, "bits per channel use")
print("patterns:", cb.patterns)

bits = np.array([1, 0, 0, 1, 1, 1, 0, 0], dtype=np.uint8)
x = modulate(bits, cb)
print("bits", bits, "->", np.round(x, 3))

# Noisy nearest-candidate detection.
rng = np.random.default_rng(0)
msgs = rng.integers(0, 2, size=(20000, cb.eta), dtype=np.uint8)
for sigma2 in (0.5, 0.1, 0.02):
    noise = np.sqrt(sigma2 / 2) * (rng.standard_normal((20000, 4))
                                   + 1j * rng.standard_normal((20000, 4)))
    est = demodulate_ml(modulate(msgs, cb) + noise, cb)
    print("sigma2 = %.2f  BER = %.4f" % (sigma2, np.mean(est != msgs)))
