"""
Power against secrecy for the schemes that use the eavesdropper's channel.

Sweeps the eavesdropper SNR ceiling and prints, for each scheme, the average
transmit power next to the eavesdropper's detection probability.  A random
guess on QPSK is right a quarter of the time, so values near 0.25 mean the
phase carries no usable information.

    python3 demos/tradeoff.py [trials]
"""

import sys

from secure_slp.harness import ExperimentConfig, run_sweep_gamma_e, tradeoff_pairs

trials = int(sys.argv[1]) if len(sys.argv) > 1 else 2000
gammas = (-15, -5, 5, 15)
cfg = ExperimentConfig(
    schemes=("cd_partial", "cd_full", "icss", "fast_icss"), gamma_e_db=gammas,
    train_trials=trials, test_trials=trials, ser_trials=trials, seed=7,
)

pairs = tradeoff_pairs(run_sweep_gamma_e(cfg))
print(f"{'scheme':<12}" + "".join(f"{g:>16} dB" for g in gammas))
for scheme, points in pairs.items():
    cells = "".join(f"{p:>10.2f} dB {q:>6.3f}" for p, q in points)
    print(f"{scheme:<12}{cells}")
print("\ncells: average power, eavesdropper detection probability")
