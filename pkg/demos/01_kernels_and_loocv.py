# %% [markdown]
# Kernels and the LOOCV shape search
#
# Every kernel is a profile of q = r / h.  The Wendland family is compactly
# supported: it vanishes for r >= h.

# %%
import numpy as np

from rbfkan import kernels
from rbfkan.benchmarks import generate_dataset
from rbfkan.loocv import LoocvConfig, prepare_auxiliary, rippa_errors, search_h

r = np.linspace(0, 2, 9)
for kind in kernels.KERNEL_NAMES:
    print(f"{kind:4s}", np.round(kernels.eval(kind, r, 1.0), 4))

# %% [markdown]
# Rippa's formula gives all leave-one-out residuals from one factorization.
# Here it is on a small 1D problem.

# %%
x = np.linspace(0, 1, 12)
y = np.sin(2 * np.pi * x)
e = rippa_errors(x, y, "GA", 0.1)
print("LOO residuals:", np.round(e, 5))
print("max |e|:", np.abs(e).max())

# %% [markdown]
# The two-stage search scans a coarse linear grid on [0.01, 20]
# and refines around the coarse winner.  For the benchmarks, the auxiliary
# problem projects the training inputs onto their first coordinate.

# %%
ds = generate_dataset("f1", 2000, seed=0)
cfg = LoocvConfig()
pts, tgt = prepare_auxiliary(ds, cfg)
res = search_h(pts, tgt, "GA", cfg)
print(f"h_opt = {res.h_opt:.4f}, err = {res.err_min:.3e}, {len(res.curve)} candidates")

coarse = [(h, err) for h, err, stage in res.curve if stage == 1]
for h, err in coarse[:8]:
    print(f"  h={h:7.3f}  err={err:.3e}")
