"""Walkthrough: training the domain discriminator on synthetic frames.

Generates a shifted source/target pair, trains the from-scratch MLP on the
pooled scene vectors, and prints the loss curve plus how cleanly the two
domains separate on held-out frames.

Run:  python3 demos/02_train_discriminator.py
"""

import numpy as np

from bidal import (
    DiscriminatorModel,
    SyntheticConfig,
    TrainConfig,
    generate,
    scene_vector,
    train,
)

cfg = SyntheticConfig(n_source=200, n_target=200, n_eval=30, domain_shift=3.0, seed=0)
source, target, _ = generate(cfg)
print("generated %d source and %d target frames (shift %.1f)"
      % (len(source), len(target), cfg.domain_shift))

src_vecs = [scene_vector(f) for f in source]
tgt_vecs = [scene_vector(f) for f in target]
dim = len(src_vecs[0])

# hold out the last quarter of each domain for the separation check
n_hold = len(src_vecs) // 4
model = DiscriminatorModel.initialize((dim, 32, 1), seed=0)
model, history = train(
    model,
    src_vecs[:-n_hold],
    tgt_vecs[:-n_hold],
    TrainConfig(epochs=120, learning_rate=1e-2, seed=0),
)

print("\nloss curve (binary cross-entropy, every 20 epochs):")
for i in range(0, len(history), 20):
    print("  epoch %3d  loss %.4f" % (i + 1, history[i]))
print("  epoch %3d  loss %.4f" % (len(history), history[-1]))

held_src = model.predict(np.stack(src_vecs[-n_hold:]))
held_tgt = model.predict(np.stack(tgt_vecs[-n_hold:]))
print("\nheld-out domainness scores (0 = source-like, 1 = target-like):")
print("  source frames: mean %.3f  max %.3f" % (held_src.mean(), held_src.max()))
print("  target frames: mean %.3f  min %.3f" % (held_tgt.mean(), held_tgt.min()))

# the interesting frames for transfer are the source frames the model finds
# most target-like -- exactly what the source-selection stage keeps
order = np.argsort(-held_src)
print("\nmost target-like held-out source frames:")
for i in order[:3]:
    print("  %s  score %.3f" % (source[len(src_vecs) - n_hold + i].id, held_src[i]))
