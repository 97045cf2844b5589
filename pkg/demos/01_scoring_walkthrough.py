"""Walkthrough: from an objectness map to a pooled scene vector.

Builds one toy frame by hand, then shows each stage of the foreground-aware
scoring path: binary entropy of the objectness probabilities, the [1, 2]
attention factor, the boosted feature map, and the final per-channel vector.

Run:  python3 demos/01_scoring_walkthrough.py
"""

import numpy as np

from bidal import Domain, FrameRecord, enhance, entropy_map, pool, scene_vector

rng = np.random.default_rng(0)

# a 3-channel feature map over a 4x4 grid, with one "object" in the corner:
# high objectness top-left, background elsewhere, and an ambiguous strip
obj = np.full((1, 4, 4), 0.05)
obj[0, :2, :2] = 0.95  # confident foreground
obj[0, 3, :] = 0.50  # maximally uncertain row
frame = FrameRecord(
    id="demo",
    domain=Domain.TARGET,
    feature_map=rng.normal(size=(3, 4, 4)),
    objectness_map=obj,
    roi_features=rng.normal(size=(2, 5)),
    roi_confidences=np.array([0.9, 0.6]),
)

print("objectness map:")
print(np.round(obj[0], 2))

ent = entropy_map(obj)[0]
print("\nbinary entropy (base 2) -- peaks exactly where p = 0.5:")
print(np.round(ent, 2))

e = enhance(frame)
print("\nattention = 1 + (objectness + entropy)/2, always inside [1, 2]:")
print(np.round(e.attention, 2))
print(
    "\nconfident foreground gets ~%.2fx, background ~%.2fx, and the"
    % (e.attention[0, 0], e.attention[2, 3])
)
print(
    "uncertain strip the largest boost of all (%.2fx), since its entropy"
    % e.attention[3, 0]
)
print("term is maxed out at 1.0")

v = pool(e)
print("\npooled scene vector (one value per channel):", np.round(v, 3))
assert np.allclose(v, scene_vector(frame))

# the boost changes the pooled vector only where attention deviates from 1
flat = frame.feature_map.mean(axis=(1, 2))
print("plain average pool for comparison:      ", np.round(flat, 3))
