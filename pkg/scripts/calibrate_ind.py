"""Dev: train s51 trio with tuned hyperparameters; inspect independence + closed loop."""
import sys, time
import numpy as np
from indistack.scenarios import builtin, train_task, evaluate
from indistack.dynamics import single_integrator_team

cfg = builtin("s51")
cfg.training.update({
    "hidden": [64, 64], "iterations": 250, "dataset_size": 3072,
    "horizon": 16, "fit_epochs": 10, "learning_rate": 1e-3,
    "dt": 0.02, "gamma": 0.98,
})
seed = int(sys.argv[1]) if len(sys.argv) > 1 else 0

t0 = time.time(); avoid = train_task(cfg, "avoid", seed); print(f"avoid {time.time()-t0:.0f}s J(0,0)={avoid.forward([0.,0.]):.2f}")
t0 = time.time(); base = train_task(cfg, "goto", seed); print(f"base {time.time()-t0:.0f}s")
t0 = time.time(); ind = train_task(cfg, "goto", seed, independent_to=[(avoid, 1e4)]); print(f"ind {time.time()-t0:.0f}s")

for x in ([0.8,0.0],[1.5,0.0],[2.0,0.3],[0,1.0],[-1.5,0.0],[-2,0]):
    print(f"  J at {x}: base={base.forward(x):7.2f} ind={ind.forward(x):7.2f}")

def coss(g1, g2):
    n1 = np.linalg.norm(g1, axis=1); n2 = np.linalg.norm(g2, axis=1)
    return np.abs(np.einsum('bi,bi->b', g1, g2)) / np.maximum(n1 * n2, 1e-12)

rng = np.random.default_rng(2)
behind = np.column_stack([rng.uniform(0.55, 1.2, 400), rng.uniform(-0.6, 0.6, 400)])
print("behind |cos| base", coss(avoid.input_grad(behind), base.input_grad(behind)).mean().round(3),
      "ind", coss(avoid.input_grad(behind), ind.input_grad(behind)).mean().round(3))
X = np.random.default_rng(0).uniform(-3, 3, size=(1000, 2))
print("box    |cos| base", coss(avoid.input_grad(X), base.input_grad(X)).mean().round(4),
      "ind", coss(avoid.input_grad(X), ind.input_grad(X)).mean().round(4))

t0 = time.time()
rb = evaluate(cfg, {"avoid": avoid, "goto": base}, 10, cfg.seeds["eval"], method="baseline")
ri = evaluate(cfg, {"avoid": avoid, "goto": ind}, 10, cfg.seeds["eval"],
              penalties={"goto": {"avoid": 1e4}}, method="independent")
print(f"eval {time.time()-t0:.0f}s  baseline {rb.success_rate}  independent {ri.success_rate}")
for r in rb.records + ri.records:
    print(" ", r.method[:4], r.trial, int(r.success), r.reason[:44], {k: round(v, 2) for k, v in r.final_costs.items()}, r.steps)
