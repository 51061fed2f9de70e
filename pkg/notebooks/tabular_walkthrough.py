"""Soft policy iteration on a small random MDP with each entropy family."""
import numpy as np

from genac.entropy import EntropyMeasure
from genac.tabular import policy_iteration, random_mdp, run_property_suite, softmax_policy

#%%
mdp = random_mdp(4, 3, 0.9, np.random.default_rng(7))
measures = [EntropyMeasure.shannon(), EntropyMeasure.tsallis(2.0),
            EntropyMeasure.tsallis(3.0), EntropyMeasure.renyi(2.0)]

#%%
# Policies at convergence: Tsallis q=2 zeroes out poor actions, Shannon never does.
np.set_printoptions(precision=4, suppress=True)
for m in measures:
    res = policy_iteration(mdp, m, alpha=0.3)
    print(m.label(), "iterations", len(res.audit))
    print(res.policy.probs)

#%%
# The audit trail: Q changes shrink and every gain is nonnegative.
res = policy_iteration(mdp, EntropyMeasure.tsallis(2.0), alpha=0.3)
for e in res.audit:
    print(f"iter {e.iteration}  max|dQ| {e.q_change:.2e}  min gain {e.min_gain:.2e}")

#%%
# Shannon's greedy policy is the softmax of Q / alpha.
res = policy_iteration(mdp, EntropyMeasure.shannon(), alpha=0.3)
print(np.abs(res.policy.probs - softmax_policy(res.Q, 0.3).probs).max())

#%%
# The full property suite on 20 random MDPs.
for r in run_property_suite(seeds=range(20)):
    print(r.name, "PASS" if r.passed else "FAIL", r.checked)
