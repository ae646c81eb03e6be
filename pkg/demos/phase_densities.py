"""
What the eavesdropper learns: phase densities given user 1 sends c_1.

For each scheme the conditional density of the eavesdropper's received
phase is estimated from training transmissions and summarised by its peak
to mean ratio and the detection probability it yields on fresh data.  A
flat density (ratio near 1) leaves nothing to exploit.

    python3 demos/phase_densities.py [trials]
"""

import sys

import numpy as np

from secure_slp.eavesdropper import LinkParams, estimate_detection_probability
from secure_slp.geometry import QosParams

trials = int(sys.argv[1]) if len(sys.argv) > 1 else 4000
link = LinkParams(N=6, K=3, M=4, rho=0.3, qos=QosParams(10.0, -15.0))

print(f"{'scheme':<16}{'peak/mean':>10}{'p_det':>8}  densest phase")
for scheme in ("traditional_ci", "cd_partial", "cd_full", "icss", "zf"):
    report, pdf = estimate_detection_probability(scheme, link, trials, trials, seed=3, B=72)
    f1 = pdf.densities[0]
    peak = np.degrees(pdf.bin_centers[np.argmax(f1)])
    print(f"{scheme:<16}{f1.max() / f1.mean():>10.2f}{report.p_correct:>8.3f}  {peak:6.1f} deg")
