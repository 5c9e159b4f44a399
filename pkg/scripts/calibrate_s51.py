"""Dev calibration for the s51 pipeline (not shipped with the package)."""
import sys, time
import numpy as np
from indistack.scenarios import builtin, train_task, build_stack, evaluate, sample_initial_states
from indistack.independence import report

cfg = builtin("s51")
seed = int(sys.argv[1]) if len(sys.argv) > 1 else 0

t0 = time.time()
avoid = train_task(cfg, "avoid", seed)
print(f"avoid trained in {time.time()-t0:.1f}s")
t0 = time.time()
goto_base = train_task(cfg, "goto", seed)
print(f"goto_base trained in {time.time()-t0:.1f}s")
t0 = time.time()
goto_ind = train_task(cfg, "goto", seed, independent_to=[(avoid, cfg.lambdas["goto"])])
print(f"goto_ind trained in {time.time()-t0:.1f}s")

# value landscape probes
for x in ([0.0,0.0],[0.6,0.0],[1.5,0.0],[2.0,0.0],[-2.0,0.0],[0,1.5]):
    print(f"J at {x}: avoid={avoid.forward(x):8.3f} base={goto_base.forward(x):8.3f} ind={goto_ind.forward(x):8.3f}")

# gradient cosine stats near region
rng = np.random.default_rng(0)
X = rng.uniform(-3, 3, size=(1000, 2))
ga = avoid.input_grad(X); gb = goto_base.input_grad(X); gi = goto_ind.input_grad(X)
na = np.linalg.norm(ga, axis=1); nb = np.linalg.norm(gb, axis=1); ni = np.linalg.norm(gi, axis=1)
mask_b = (na > 1e-6) & (nb > 1e-6)
mask_i = (na > 1e-6) & (ni > 1e-6)
cos_b = np.abs(np.einsum('bi,bi->b', ga, gb))[mask_b] / (na*nb)[mask_b]
cos_i = np.abs(np.einsum('bi,bi->b', ga, gi))[mask_i] / (na*ni)[mask_i]
print(f"mean |cos| base={cos_b.mean():.4f} ind={cos_i.mean():.4f}")

# closed-loop eval
t0 = time.time()
res_b = evaluate(cfg, {"avoid": avoid, "goto": goto_base}, cfg.trials, cfg.seeds["eval"], method="baseline")
res_i = evaluate(cfg, {"avoid": avoid, "goto": goto_ind}, cfg.trials, cfg.seeds["eval"],
                 penalties={"goto": {"avoid": cfg.lambdas["goto"]}}, method="independent")
print(f"eval in {time.time()-t0:.1f}s")
print(f"baseline rate {res_b.success_rate}  independent rate {res_i.success_rate}")
for r in res_b.records:
    print(" base", r.trial, r.success, r.reason[:60], {k: round(v,3) for k,v in r.final_costs.items()}, "steps", r.steps)
for r in res_i.records:
    print(" ind ", r.trial, r.success, r.reason[:60], {k: round(v,3) for k,v in r.final_costs.items()}, "steps", r.steps)
