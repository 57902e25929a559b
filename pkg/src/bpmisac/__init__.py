"""Hybrid mmWave transceiver design for beam-pattern-modulated ISAC.

Submodules
----------
beamspace   steering vectors, DFT codebooks, multipath channels
modem       index modulation over beams, sensing symbols, ML detection
precoder    analog beam selection, LMMSE combiner, communication MSE
allocation  alternating digital power allocation, beampattern metrics
apep        effective-path distribution and the APEP error bound
sim         Monte Carlo link simulation and experiment drivers
"""

from .allocation import (AllocationResult, SolverOptions, beampattern, beampattern_mse,
                         optimize_digital, solve_b_step, solve_p_step)
from .apep import GridParams, apep, effective_path_dist, mc_path_oracle, pairwise_error_prob
from .beamspace import ArrayGeometry, dft_codebook, sample_channel, steering_vector
from .modem import (ImConfig, SensingSpec, build_im_codebook, demodulate_ml,
                    draw_sensing_symbol, modulate, spectral_efficiency)
from .precoder import (LinkNoise, comm_mse, lmmse_combiner, mse_threshold, select_beams,
                       sensing_precoder)
from .sim import ExperimentConfig, run_ber_sweep, run_tradeoff_sweep

__version__ = "0.1.0"
