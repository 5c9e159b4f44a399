"""Dev: sweep avoid-task hyperparameters to measure gradient cleanliness."""
import itertools, sys, time
import numpy as np
from indistack.scenarios import builtin
from indistack.tasks import AvoidRegions, TaskSpec
from indistack.training import TrainConfig, value_iteration
from indistack.dynamics import single_integrator_team

cfg = builtin("s51")
sys_ = single_integrator_team(1)
cost = AvoidRegions(cfg.regions, 60.0, 1)

rng = np.random.default_rng(5)
probes_far = rng.uniform(-3, 3, size=(4000, 2))
far_mask = np.max(np.abs(probes_far), axis=1) > 1.2  # >0.7 away from region edge
probes_far = probes_far[far_mask]
probes_near = rng.uniform(-1.0, 1.0, size=(2000, 2))
near_mask = np.max(np.abs(probes_near), axis=1) > 0.5
probes_near = probes_near[near_mask]

variants = {
    "base":    dict(iterations=150, dataset_size=1024, hidden=(64,), fit_epochs=8,  learning_rate=2e-3, horizon=12, dt=0.02),
    "bigD":    dict(iterations=150, dataset_size=4096, hidden=(64,), fit_epochs=8,  learning_rate=2e-3, horizon=12, dt=0.02),
    "long":    dict(iterations=400, dataset_size=4096, hidden=(64,), fit_epochs=8,  learning_rate=2e-3, horizon=12, dt=0.02),
    "wide":    dict(iterations=300, dataset_size=4096, hidden=(64,64), fit_epochs=8, learning_rate=2e-3, horizon=12, dt=0.02),
    "lowlr":   dict(iterations=400, dataset_size=4096, hidden=(64,), fit_epochs=12, learning_rate=1e-3, horizon=12, dt=0.02),
}

name = sys.argv[1] if len(sys.argv) > 1 else None
for vname, hp in variants.items():
    if name and vname != name:
        continue
    t0 = time.time()
    tcfg = TrainConfig(sample_box=([-3, -3], [3, 3]), seed=0, gamma=0.99, td_lambda=0.9, **hp)
    task = TaskSpec("avoid", cost)
    net = value_iteration(task, sys_, tcfg)
    g_far = np.linalg.norm(net.input_grad(probes_far), axis=1)
    g_near = np.linalg.norm(net.input_grad(probes_near), axis=1)
    vals = net.forward(probes_far)
    print(f"{vname:7s} {time.time()-t0:6.1f}s  J(0,0)={net.forward([0.0,0.0]):7.3f}  "
          f"far |grad| mean={g_far.mean():.4f} p90={np.quantile(g_far,0.9):.4f} max={g_far.max():.3f}  "
          f"near mean={g_near.mean():.3f}  J_far range [{vals.min():.3f},{vals.max():.3f}]")
