"""Dev: long-lookahead independence training against the low-noise avoid net."""
import sys, time
import numpy as np
from indistack.scenarios import builtin, train_task, evaluate
from indistack.tasks import TaskSpec, GoToPoint, InputMetric, Penalty
from indistack.training import TrainConfig, value_iteration, optimal_input
from indistack.dynamics import single_integrator_team

cfg = builtin("s51")
sys_ = single_integrator_team(1)
seed = 0

# avoid net: tuned low-noise settings
cfg.training.update({"hidden": [64, 64], "iterations": 250, "dataset_size": 3072,
                     "horizon": 16, "fit_epochs": 10, "learning_rate": 1e-3,
                     "dt": 0.02, "gamma": 0.92})
t0 = time.time(); avoid = train_task(cfg, "avoid", seed)
print(f"avoid {time.time()-t0:.0f}s J(0,0)={avoid.forward([0.,0.]):.2f}")

goto_cost = GoToPoint([-2.0, 0.0], 5.0)

def train_goto(lam, **hp):
    tcfg = TrainConfig(sample_box=([-3,-3],[3,3]), seed=seed, **hp)
    pens = (Penalty(avoid, lam, 10.0),) if lam else ()
    return value_iteration(TaskSpec("goto", goto_cost, InputMetric(pens)), sys_, tcfg)

hp = dict(gamma=0.98, td_lambda=0.95, horizon=20, dt=0.05, iterations=250,
          dataset_size=3072, fit_epochs=10, learning_rate=1e-3, hidden=(64,))
t0 = time.time(); base = train_goto(0.0, **hp); print(f"base {time.time()-t0:.0f}s")
t0 = time.time(); ind = train_goto(1e4, **hp); print(f"ind {time.time()-t0:.0f}s")

# policy mobility in the far field: how frozen is the penalized optimal input?
rng = np.random.default_rng(3)
far = rng.uniform(-3, 3, size=(500, 2))
far = far[np.max(np.abs(far), axis=1) > 1.2][:300]
r = avoid.input_grad(far)
gi = ind.input_grad(far)
R = np.broadcast_to(np.eye(2), (len(far), 2, 2)) + 1e4 * np.einsum('bi,bj->bij', r, r)
u = np.linalg.solve(R, -0.5 * gi[..., None])[..., 0]
print("far-field ind |u*|: mean", np.linalg.norm(u, axis=1).mean().round(3),
      " |grad|: mean", np.linalg.norm(gi, axis=1).mean().round(3))

def coss(g1, g2):
    n1 = np.linalg.norm(g1, axis=1); n2 = np.linalg.norm(g2, axis=1)
    return np.abs(np.einsum('bi,bi->b', g1, g2)) / np.maximum(n1 * n2, 1e-12)
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
for rec in rb.records + ri.records:
    print(" ", rec.method[:4], rec.trial, int(rec.success), rec.reason[:44],
          {k: round(v, 2) for k, v in rec.final_costs.items()}, rec.steps)
