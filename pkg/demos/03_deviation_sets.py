"""Large deviations of log ||T_n|| and the structure of sub-deviation sets.

First the exceedance curves: the probability that the product norm (or
an image length, or the top-left entry) strays from its mean by eps*n
decays exponentially in n; the rate delta is fitted, never assumed.

Then one realization's sub-deviation set in energy: the energies where
log |P(E)| undershoots the growth function by eps * length form small
intervals, one around each eigenvalue of the truncated window.
"""

import numpy as np

from nsanderson import deviations, ensembles, growth, rng, spectrum

ens = ensembles.two_point_ensemble(0.0, 3.0)

ns = [50, 100, 150, 200, 300, 400]
ref = growth.estimate_growth(ens, [(1, n) for n in ns], [0.0], 20_000, 21,
                             tag="demo-ref")
L = {n: float(ref.mean[i, 0]) for i, n in enumerate(ns)}
eps = 0.1 * L[200] / 200

print(f"exceedance of |statistic - L_n| > eps n at E = 0, eps = {eps:.4f}:")
for stat in ("norm", "image", "entry"):
    curve = deviations.exceedance(ens, ns, 0.0, eps, 2000, 22, stat, L,
                                  tag=f"demo-{stat}")
    probs = "  ".join(f"{p:.3f}" for p in curve.p_hat)
    print(f"  {stat:6s}: p_hat = [{probs}]  fitted delta = {curve.delta_hat:.4f}")

n = 40
window = (n + 1, 3 * n + 1)
energies = np.linspace(-0.5, 0.5, 9)
table = growth.estimate_growth(ens, [window], energies, 2000, 23, tag="demo-scan")
lref = deviations.LinearLReference.from_table(table, window)
h = float(np.min(table.rate()))

pots = ens.sample_sites(np.arange(window[0], window[1] + 1),
                        rng.substream(24, "demo"))
op = spectrum.TruncatedOperator(window[0], window[1], pots)
eigs = spectrum.eigenvalues(op)
inside = eigs[(np.abs(eigs) <= 0.5)]
gap = float(np.min(np.diff(inside)))
grid = np.linspace(-0.5, 0.5, int(np.ceil(1.0 / (gap / 3.0))) + 1)

eps_scan = 0.3 * h
scan = deviations.scan_deviation_set(pots, window, eps_scan, grid, lref)
print(f"\nsub-deviation set of window {window} at eps = 0.3 h_hat = {eps_scan:.3f}:")
print(f"  {len(inside)} eigenvalues in J, {scan.interval_count()} intervals, "
      f"total length {scan.total_length:.3e}")
for iv in scan.intervals[:6]:
    print(f"  eigenvalue {iv.eigenvalue:+.6f}: interval width {iv.length:.2e}")
if scan.interval_count() > 6:
    print(f"  ... and {scan.interval_count() - 6} more")
print(f"  structure ok (one eigenvalue per interval): {scan.structure_ok}")
