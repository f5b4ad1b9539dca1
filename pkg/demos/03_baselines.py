# %% [markdown]
# Baseline models
#
# All baselines share the training loop.  A short run on the peak function
# f4 gives a feel for their relative behaviour (short schedules, so the
# numbers are only indicative).

# %%
from rbfkan.baselines import (
    ChebKanConfig,
    MlpConfig,
    SplineKanConfig,
    init_cheb_kan,
    init_mlp,
    init_spline_kan,
)
from rbfkan.benchmarks import generate_dataset
from rbfkan.kan import ModelConfig, init_model
from rbfkan.training import TrainConfig, train

ds = generate_dataset("f4", 2000, seed=0)
tcfg = TrainConfig(epochs=300, eval_every=300)

models = {
    "rbf_kan W6": init_model(ModelConfig(kernel="W6"), 0.5),
    "spline_kan": init_spline_kan(SplineKanConfig()),
    "cheb_kan": init_cheb_kan(ChebKanConfig()),
    "mlp": init_mlp(MlpConfig()),
}

# %%
for name, model in models.items():
    _, rec = train(model, ds, tcfg)
    print(f"{name:12s} params {model.n_params():6d}  test rel L2 {rec.history[-1][2]:.3e}  ({rec.seconds:.1f} s)")

# %% [markdown]
# Models serialize to a versioned JSON document and reload exactly.

# %%
import json
import tempfile
from pathlib import Path

from rbfkan.baselines import model_from_dict

with tempfile.TemporaryDirectory() as d:
    path = Path(d) / "mlp.json"
    models["mlp"].save(path)
    back = model_from_dict(json.loads(path.read_text()))
    print("round trip exact:", (back.predict(ds.x_test) == models["mlp"].predict(ds.x_test)).all())
