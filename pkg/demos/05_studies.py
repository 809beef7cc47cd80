"""
The error studies at desk scale
===============================

Each study trains one model (or one per setting) and writes
``report_<id>.csv`` plus a JSON summary into ``study_reports/``.  Budgets are
cut down so the whole script runs in well under an hour on one core; raise
``EPOCHS`` or the ranges for closer-to-reference runs.
"""

from cdr_icl import experiments as ex

EPOCHS = 3000
OUT = "study_reports"
cfg = ex.desk_config(epochs=EPOCHS)

# Seen coefficients, exact prior.
seen, _ = ex.run_seen_interpolation("reaction", 5, "numerical", cfg)
seen.write(OUT)
print("seen reaction 1..5      mean rel", round(seen.mean().rel, 4))

# Unseen half-integer strengths with a model trained on 1..10.
unseen, _ = ex.run_unseen_params("reaction", 10, test_values=ex.half_integers(1, 13), cfg=cfg, prior="numerical")
unseen.write(OUT, svg=True)
for region in ("interpolation", "extrapolation"):
    print(f"unseen reaction {region:13s} mean rel", round(unseen.mean(unseen.select(region=region)).rel, 4))

# %%
# Training on PINN priors only: the model ends up more accurate than the
# data it was trained on.
sweep = ex.run_prior_ratio_sweep("diffusion", 10, ratios=(1.0,), cfg=cfg)
for key, report in sweep.items():
    report.write(OUT)
print("diffusion, 100% PINN    model rel", round(sweep["1"].mean().rel, 4),
      " prior rel", round(sweep["prior"].mean().rel, 4))

# %%
# Forecasting: context only up to t = 0.6, queries after it.
forecast, _ = ex.run_time_extrapolation(betas=ex.half_integers(1, 9), trained_high=10, cfg=cfg, prior="numerical")
forecast.extras.pop("profile", None)
forecast.write(OUT, svg=True)
print("time extrapolation      rel per beta", [round(r.errors.rel, 3) for r in forecast.rows])

# %%
# Mixed reactions in training, single reactions at test time.
multi, _ = ex.run_multi_reaction(3, cfg)
multi.write(OUT)
print("multi-reaction          per term", {k: round(v["rel"], 4) for k, v in multi.extras["per_term"].items()})
