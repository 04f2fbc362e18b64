# Plant a layered ego network, run the circle pipeline, and see what comes back.
#
#   python demos/synthetic_recovery.py [n_egos]

import sys
import tempfile
import warnings
from collections import Counter

import numpy as np

from fedinet.circles import scaling_ratios
from fedinet.report import analyze
from fedinet.synth import PlantedModel, canonical_window, generate_cohort, read_ground_truth

n_egos = int(sys.argv[1]) if len(sys.argv) > 1 else 40

# 18 months ending 2023-12-31; rings of 1.5/3.5/10/35/100 alters contacted
# every 5 days, weekly, monthly, twice a year and yearly
model = PlantedModel.canonical(canonical_window("2023-12-31"))
print("planted ring sizes:", model.ring_sizes)
print("planted rates /yr :", [round(f, 1) for f in model.ring_frequencies])

out = tempfile.mkdtemp(prefix="fedinet-demo-")
with warnings.catch_warnings():
    # the yearly ring expects only 1.5 contacts in the window
    warnings.simplefilter("ignore")
    ds = generate_cohort(model, n_egos, seed=1, out=out + "/ds")
analysis = analyze(ds)

print("\ncircles per ego:", analysis.histogram)
for k, row in analysis.cohort.items():
    print("k=%d  egos=%3d  cumulative sizes %s" % (k, row.egos, [round(s, 1) for s in row.sizes]))

ratios = [np.mean(scaling_ratios(n)) for n in analysis.egonets.values() if n.k > 1]
print("\nmean scaling ratio: %.2f" % np.mean(ratios))

# where did each planted ring end up? count, per ring, which recovered circle
# (1 = innermost) its alters were first placed in
truth = read_ground_truth(out + "/ds/ground_truth.csv")
placed = {ring: Counter() for ring in range(len(model.ring_sizes))}
lost = Counter()
for ego, net in analysis.egonets.items():
    first_circle = {}
    for i, c in enumerate(net.circles, 1):
        for a in c.members:
            first_circle.setdefault(a, i)
    for alter, ring in truth[ego].items():
        if alter in first_circle:
            placed[ring][first_circle[alter]] += 1
        else:
            lost[ring] += 1
print("\nplanted ring -> recovered circle (counts), dropped by the tie filter")
for ring, c in placed.items():
    print("  ring %d: %s  dropped=%d" % (ring + 1, dict(sorted(c.items())), lost[ring]))
