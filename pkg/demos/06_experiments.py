"""
Seeded experiments and CSV output
=================================

Sweeps are deterministic in (config, seed) and independent of thread count.
The same runs are available from the shell as ``bpm-isac ber|tradeoff|...``.
"""

from bpmisac import ExperimentConfig
from bpmisac.io import records_to_csv
from bpmisac.sim import run_ber_sweep, run_tradeoff_sweep

cfg = ExperimentConfig(trials=30, symbols_per_channel=100, snr_grid=(-18, -14, -10), seed=5)
print(records_to_csv(run_ber_sweep(cfg, threads=4)))

for scheme in ("gbm", "pbpm"):
    rec = run_ber_sweep(cfg.replace(scheme=scheme, snr_grid=(-14,)))[0]
    print("%-5s BER at -14 dB: %.4f" % (scheme, rec.ber))

recs = run_tradeoff_sweep(cfg, [0.1, 0.5, 1.0], snr_db=-14.0, threads=4)
for r in recs:
    print("%-9s mu=%.1f  BER %.4f  beampattern MSE %.4g" % (r.digital, r.mu, r.ber,
                                                           r.beampattern_mse))

same = records_to_csv(run_ber_sweep(cfg, threads=1)) == records_to_csv(run_ber_sweep(cfg, threads=8))
print("identical CSV at 1 and 8 threads:", same)
