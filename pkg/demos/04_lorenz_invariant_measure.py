# %% [markdown]
# # Occupancy measures of the Lorenz attractor
#
# Trajectories started anywhere settle onto the attractor and spend the
# same fraction of time in each region of it.

# %%
import numpy as np

from supermeasured.lorenz import CHAOTIC, LorenzParams, half_split_tv, integrate, off_attractor_witness

traj = integrate(CHAOTIC, (1.0, 1.0, 1.0), 0.01, 10**6)
print("max |state|:", np.linalg.norm(traj.states, axis=1).max().round(2))
for n in (15_625, 62_500, 250_000, 10**6):
    print(f"{n:>8} steps  half-split TV {half_split_tv(integrate(CHAOTIC, (1.0, 1.0, 1.0), 0.01, n)):.4f}")

# %%
w = off_attractor_witness(CHAOTIC, 0.01, 10**6, perturbation=20.0, seed=7)
print("starts", np.round(w.initial_a, 2), np.round(w.initial_b, 2), "TV", round(w.tv, 4))

# %% [markdown]
# Below r = 1 the origin attracts everything.

# %%
decay = integrate(LorenzParams(10.0, 0.5, 8 / 3), (5.0, -3.0, 8.0), 0.01, 6000)
print("final |state|:", np.linalg.norm(decay.states[-1]))
