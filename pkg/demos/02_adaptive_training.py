# %% [markdown]
# Adaptive RBF-KAN on the Franke surface
#
# The shape parameter is trained as theta = ln h, starting from the LOOCV
# estimate.  For comparison the same network is trained with h frozen.
# Epochs are cut to 400 so the script runs in a few seconds; pass the full
# 2000 through the CLI for the reference protocol.

# %%
import numpy as np

from rbfkan.baselines import fastkan_fixed
from rbfkan.benchmarks import generate_dataset, reconstruct_surface
from rbfkan.kan import ModelConfig, init_model
from rbfkan.loocv import LoocvConfig, prepare_auxiliary, search_h
from rbfkan.training import TrainConfig, train

ds = generate_dataset("f1", 2000, seed=0)
lcfg = LoocvConfig()
h0 = search_h(*prepare_auxiliary(ds, lcfg), "GA", lcfg).h_opt
print(f"LOOCV h_init = {h0:.4f}")

tcfg = TrainConfig(epochs=400, eval_every=100)

# %%
adaptive, rec = train(init_model(ModelConfig(widths=(2, 8, 1)), h0), ds, tcfg)
for epoch, mse, rel, h in rec.history:
    print(f"epoch {epoch:4d}  mse {mse:.3e}  test rel L2 {rel:.3e}  h {h:.4f}")

# %%
fixed, rec_fixed = train(fastkan_fixed(ModelConfig(widths=(2, 8, 1))), ds, tcfg)
print(f"fixed h=0.5714: test rel L2 {rec_fixed.history[-1][2]:.3e}")

# %% [markdown]
# Surface reconstruction on a 100 x 100 grid (the CSV export is what the
# CLI writes as surface.csv).

# %%
grid = reconstruct_surface(adaptive, "f1", 100)
print(f"grid rel L2 {grid.rel_l2:.3e}")
print("worst grid point:", np.abs(grid.z_pred - grid.z_true).max())
