"""Dev: s51 quality sweep after solver fix; measure near-region gradient geometry."""
import sys, time
import numpy as np
from indistack.scenarios import builtin, train_task, build_stack, evaluate
from indistack.dynamics import single_integrator_team

cfg = builtin("s51")
# candidate hyperparameters
cfg.training.update({
    "hidden": [64, 64], "iterations": 250, "dataset_size": 2048,
    "horizon": 16, "fit_epochs": 8, "learning_rate": 2e-3, "dt": 0.02,
})
cfg.tasks["goto"].train.update({"hidden": [64]})
seed = 0

t0 = time.time(); avoid = train_task(cfg, "avoid", seed); print(f"avoid {time.time()-t0:.0f}s")
t0 = time.time(); base = train_task(cfg, "goto", seed); print(f"base {time.time()-t0:.0f}s")
t0 = time.time(); ind = train_task(cfg, "goto", seed, independent_to=[(avoid, 1e4)]); print(f"ind {time.time()-t0:.0f}s")

# gradient geometry on a ring just outside the region (edge at 0.5)
angles = np.linspace(0, 2*np.pi, 24, endpoint=False)
ring = 0.75 * np.stack([np.cos(angles), np.sin(angles)], axis=1)
ga, gb, gi = avoid.input_grad(ring), base.input_grad(ring), ind.input_grad(ring)
def coss(g1, g2):
    n1 = np.linalg.norm(g1, axis=1); n2 = np.linalg.norm(g2, axis=1)
    return np.abs(np.einsum('bi,bi->b', g1, g2)) / np.maximum(n1*n2, 1e-12)
print("ring |cos(avoid, base)| mean", coss(ga, gb).mean().round(3), " |cos(avoid, ind)| mean", coss(ga, gi).mean().round(3))

# behind-region probes (right side, where the conflict lives)
rng = np.random.default_rng(2)
behind = np.column_stack([rng.uniform(0.55, 1.2, 300), rng.uniform(-0.6, 0.6, 300)])
ga, gb, gi = avoid.input_grad(behind), base.input_grad(behind), ind.input_grad(behind)
print("behind |cos| base", coss(ga, gb).mean().round(3), "ind", coss(ga, gi).mean().round(3))

# full-box probes (acceptance-8 style)
X = np.random.default_rng(0).uniform(-3, 3, size=(1000, 2))
ga, gb, gi = avoid.input_grad(X), base.input_grad(X), ind.input_grad(X)
na = np.linalg.norm(ga, axis=1)
print("box |cos| base", coss(ga, gb).mean().round(4), "ind", coss(ga, gi).mean().round(4),
      " avoid far-grad mean", na[np.max(np.abs(X),axis=1)>1.2].mean().round(3))

t0 = time.time()
rb = evaluate(cfg, {"avoid": avoid, "goto": base}, 10, cfg.seeds["eval"], method="baseline")
ri = evaluate(cfg, {"avoid": avoid, "goto": ind}, 10, cfg.seeds["eval"],
              penalties={"goto": {"avoid": 1e4}}, method="independent")
print(f"eval {time.time()-t0:.0f}s  baseline {rb.success_rate}  independent {ri.success_rate}")
for r in rb.records + ri.records:
    print(" ", r.method[:4], r.trial, int(r.success), r.reason[:50], {k: round(v,2) for k,v in r.final_costs.items()}, r.steps)
