"""Dev: drive the avoid net's far-field gradient noise toward zero."""
import sys, time
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
probes_far = probes_far[np.max(np.abs(probes_far), axis=1) > 1.2]
line = np.column_stack([np.linspace(0.0, 1.4, 57), np.zeros(57)])  # centerline wall profile

variants = {
    # name: (gamma, H, iters, D, epochs, lr, hidden)
    "g98H24":  (0.98, 24, 250, 3072, 12, 1.5e-3, (64, 64)),
    "g97H32":  (0.97, 32, 220, 3072, 12, 1.5e-3, (64, 64)),
    "g98H24s": (0.98, 24, 250, 3072, 12, 1.5e-3, (64,)),
}
name = sys.argv[1] if len(sys.argv) > 1 else None
for vname, (g, H, K, D, E, lr, hid) in variants.items():
    if name and vname != name:
        continue
    t0 = time.time()
    tcfg = TrainConfig(sample_box=([-3, -3], [3, 3]), seed=0, gamma=g, td_lambda=0.9,
                       horizon=H, iterations=K, dataset_size=D, fit_epochs=E,
                       learning_rate=lr, hidden=hid, dt=0.02)
    net = value_iteration(TaskSpec("avoid", cost), sys_, tcfg)
    gf = np.linalg.norm(net.input_grad(probes_far), axis=1)
    prof = net.forward(line)
    slope = np.abs(np.diff(prof) / np.diff(line[:, 0]))
    print(f"{vname:8s} {time.time()-t0:6.0f}s J(0,0)={net.forward([0.0,0.0]):6.2f} "
          f"far|g| mean={gf.mean():.4f} p95={np.quantile(gf,0.95):.4f} "
          f"wall slope max={slope.max():.1f} @x={line[np.argmax(slope),0]:.2f} "
          f"J(0.7,0)={net.forward([0.7,0.0]):.3f} J(1.5,0)={net.forward([1.5,0.0]):.3f}")
