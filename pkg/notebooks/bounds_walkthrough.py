"""Value-loss bounds and the best-of-L selector, step by step.

Run as a script or cell by cell in an editor that understands ``#%%``.
"""
import numpy as np

from genac.analysis import (BoundParams, ensemble_dominance_mc, extreme_value_params,
                            gaussian_expected_bell, lower_bound, optimal_sigma_tsallis,
                            zeta_renyi, zeta_tsallis)

#%%
# Unit parameters: bell width and height 1, policy std at most 1, alpha 1.
unit = BoundParams()
for q in np.linspace(1.0, 3.0, 11):
    print(f"q={q:.1f}  zeta_tsallis={zeta_tsallis(unit.with_(index=q)):.5f}")
print("zeta_renyi (any eta):", zeta_renyi(unit))

#%%
# The bound flattens at 1 - 1/sqrt(2) until the clamp at sigma*^2 stops binding.
print(1 - 2 ** -0.5)

#%%
# Smaller alpha, smaller loss.
for a in (1.0, 0.1, 0.01, 1e-4):
    p = unit.with_(alpha=a)
    print(f"alpha={a:g}  tsallis(q=2) {zeta_tsallis(p):.3e}  renyi {zeta_renyi(p):.3e}")

#%%
# Optimal policy width for a single bell, and how it shrinks with alpha.
for a in (1.0, 0.1, 1e-3, 1e-6):
    print(f"alpha={a:g}  sigma={optimal_sigma_tsallis(unit.with_(alpha=a), 1.0, 1.0):.4g}")

#%%
# Discounted lower bound on the regularized fixed point.
p = unit.with_(gamma=0.9, index=2.0)
print("lower bound with q_standard=1:", lower_bound(p, 1.0))

#%%
# Best of L draws from N(0, 1) under a unit bell.
rows = ensemble_dominance_mc([1, 2, 4, 8, 16, 32, 64], 1.0, trials=200_000,
                             rng=np.random.default_rng(0))
for r in rows:
    print(f"L={r['L']:3d}  E[Q]={r['expected_Q']:.4f}  gap={r['gap']:.2e}")
print("L=1 closed form:", gaussian_expected_bell(1.0, 1.0, 1.0))

#%%
# Extreme-value location and scale of the best of L negative half-normal draws.
for L in (2, 8, 64):
    rho, phi = extreme_value_params(L, 1.0)
    print(f"L={L:3d}  rho={rho:.5f}  phi={phi:.5f}")
