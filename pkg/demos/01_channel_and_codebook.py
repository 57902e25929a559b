"""
Beamspace channels and the DFT codebook
=======================================

A sparse mmWave channel seen through a DFT codebook concentrates its energy
in a few beam pairs.  On-grid paths land in exactly one cell.
"""

import numpy as np

from bpmisac import ArrayGeometry, dft_codebook, sample_channel
from bpmisac.beamspace import beamspace_matrix, grid_angle

rng = np.random.default_rng(1)
geom = ArrayGeometry(16, 16)
tx = rx = dft_codebook(16)

# Codewords are orthonormal, and codeword i steers toward its grid angle.
print("Gram error:", np.abs(tx.matrix.conj().T @ tx.matrix - np.eye(16)).max())
print("codeword 5 steers toward %.3f rad" % grid_angle(5, 16))

# Four paths placed exactly on grid cells.
ch = sample_channel(rng, geom, 4, on_grid=True)
power = np.abs(beamspace_matrix(ch.matrix, tx, rx)) ** 2
print("occupied (rx, tx) cells:", ch.cells)
print("power outside them: %.1e" % (power.sum() - sum(power[r - 1, t - 1] for r, t in ch.cells)))

# Off-grid paths leak into neighbouring beams.
ch = sample_channel(rng, geom, 4)
power = np.sort(np.abs(beamspace_matrix(ch.matrix, tx, rx)).ravel() ** 2)[::-1]
print("largest beamspace powers:", np.round(power[:6], 2))
print("||H||_F^2 = %.1f  (mean over draws is n_t n_r = 256)" % np.sum(np.abs(ch.matrix) ** 2))
