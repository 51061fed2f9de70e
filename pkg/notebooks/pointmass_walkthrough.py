"""Short SAC / TAC / RAC runs on the point-mass task against a random baseline.

Takes a few minutes on one core; raise ``STEPS`` for longer runs.
"""
import numpy as np

from genac.envs import PointMass2D
from genac.learner import FAST_HIDDEN, TrainerConfig, random_policy_returns, train

STEPS = 5_000

#%%
base = random_policy_returns(PointMass2D(), 100, np.random.default_rng(0))
print(f"random policy: {base.mean():.1f} +/- {base.std():.1f}")

#%%
curves = {}
for algo in ("sac", "tac", "rac"):
    cfg = TrainerConfig.for_algo(algo, index=2.0, total_steps=STEPS, seed=0,
                                 hidden=FAST_HIDDEN, batch_size=128)
    curves[algo] = train(PointMass2D(), cfg).curve
    print(algo, np.round(curves[algo].column("eval_return_mean"), 1).tolist())

#%%
# Entropy estimates along training, per algorithm.
for algo, curve in curves.items():
    print(algo, np.round(curve.column("entropy_estimate"), 3).tolist())
