"""
Zero-shot prediction with the in-context transformer
=====================================================

The model never sees the equation.  It reads a set of (x, t, u) observations
of one solution and predicts u at new (x, t) locations.  After training on
Fisher reactions with strengths 1..5 it is given exact test context for each
strength and scored on held-out points.
"""

import tempfile

import numpy as np

from cdr_icl.experiments import desk_config, prepare, system_space, training_tasks
from cdr_icl.metrics import l2_errors
from cdr_icl.model import count_parameters, init_model, load_checkpoint, predict_zero_shot, save_checkpoint, train_model

cfg = desk_config(epochs=3000)  # lr 3e-3 with cosine decay; see the README
model = init_model(cfg.model)
print("parameters:", count_parameters(model))

store, sets = prepare(system_space("reaction", 1, 5), cfg)


def report(epoch, loss):
    if epoch % 500 == 0:
        print(f"epoch {epoch:5d}  loss {loss:.3e}")


result = train_model(model, training_tasks(sets), cfg.model, callback=report)
print(f"trained {result.epochs_run} epochs in {result.seconds:.0f}s")

# %%
errors = []
for alpha, s in sets.items():
    pred = predict_zero_shot(model, s.test_context, s.test_queries)
    err = l2_errors(pred, s.test_queries[:, 2])
    errors.append(err.rel)
    print(f"{alpha.label():45s} abs {err.abs:.4f}  rel {err.rel:.4f}")
print("mean rel err", np.mean(errors))

# %%
# Checkpoints hold the config and a flat float64 parameter vector.
with tempfile.TemporaryDirectory() as tmp:
    save_checkpoint(model, f"{tmp}/reaction.ckpt")
    again = load_checkpoint(f"{tmp}/reaction.ckpt")
    s = next(iter(sets.values()))
    print("reloaded model agrees:", np.array_equal(predict_zero_shot(again, s.test_context, s.test_queries),
                                                   predict_zero_shot(model, s.test_context, s.test_queries)))
