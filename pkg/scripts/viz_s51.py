"""Dev: visualize value fields and closed-loop QP flow for s51 nets."""
import time
import numpy as np
import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
from matplotlib.patches import Rectangle

from indistack.scenarios import builtin, train_task, build_stack
from indistack.controller import build_qp, solve
from indistack.dynamics import single_integrator_team
from indistack.tasks import TaskSpec, GoToPoint, InputMetric, Penalty
from indistack.training import TrainConfig, value_iteration

cfg = builtin("s51")
sys_ = single_integrator_team(1)
seed = 0
cfg.training.update({"hidden": [64, 64], "iterations": 250, "dataset_size": 3072,
                     "horizon": 16, "fit_epochs": 10, "learning_rate": 1e-3,
                     "dt": 0.02, "gamma": 0.92})
avoid = train_task(cfg, "avoid", seed)
goto_cost = GoToPoint([-2.0, 0.0], 5.0)
hp = dict(gamma=0.98, td_lambda=0.95, horizon=20, dt=0.05, iterations=250,
          dataset_size=3072, fit_epochs=10, learning_rate=1e-3, hidden=(64,))
def train_goto(lam):
    pens = (Penalty(avoid, lam, 10.0),) if lam else ()
    return value_iteration(TaskSpec("goto", goto_cost, InputMetric(pens)), sys_,
                           TrainConfig(sample_box=([-3,-3],[3,3]), seed=seed, **hp))
base = train_goto(0.0)
ind = train_goto(1e4)

g = 60
xs = np.linspace(-3, 3, g); ys = np.linspace(-3, 3, g)
XX, YY = np.meshgrid(xs, ys)
P = np.column_stack([XX.ravel(), YY.ravel()])

fig, axes = plt.subplots(2, 3, figsize=(16, 9))
for ax, net, title in zip(axes[0], (avoid, base, ind), ("avoid", "goto_base", "goto_ind")):
    V = net.forward(P).reshape(g, g)
    im = ax.imshow(V, origin="lower", extent=(-3, 3, -3, 3), cmap="viridis")
    fig.colorbar(im, ax=ax); ax.set_title(title)
    ax.add_patch(Rectangle((-0.5, -0.5), 1, 1, fill=False, color="r"))

# closed-loop QP flow fields
for ax, net, pen, title in zip(
    axes[1][:2],
    (base, ind),
    ({}, {"goto": {"avoid": 1e4}}),
    ("QP flow base", "QP flow ind"),
):
    stack = build_stack(cfg, {"avoid": avoid, "goto": net}, pen)
    gq = 24
    qx = np.linspace(-2.6, 2.6, gq); qy = np.linspace(-2.0, 2.0, gq)
    UU = np.zeros((gq, gq, 2))
    for i, yv in enumerate(qy):
        for j, xv in enumerate(qx):
            sol = solve(build_qp(stack, sys_, np.array([xv, yv])))
            UU[i, j] = np.clip(sol.u, -6, 6)
    ax.quiver(qx, qy, UU[:, :, 0], UU[:, :, 1], np.hypot(UU[:,:,0], UU[:,:,1]))
    ax.add_patch(Rectangle((-0.5, -0.5), 1, 1, fill=False, color="r"))
    ax.plot(-2, 0, "g*"); ax.set_title(title)

# trajectories from the 10 starts for ind
from indistack.scenarios import simulate_stack, sample_initial_states
stack_i = build_stack(cfg, {"avoid": avoid, "goto": ind}, {"goto": {"avoid": 1e4}})
starts = sample_initial_states(cfg, 10, cfg.seeds["eval"])
ax = axes[1][2]
for x0 in starts:
    traj = simulate_stack(stack_i, sys_, x0, cfg.dt, 2000, regions=cfg.regions)
    ax.plot(traj.X[:, 0], traj.X[:, 1], lw=0.8)
    ax.plot(traj.X[-1, 0], traj.X[-1, 1], "r.")
ax.add_patch(Rectangle((-0.5, -0.5), 1, 1, fill=False, color="r"))
ax.plot(-2, 0, "g*"); ax.set_title("ind trajectories"); ax.set_xlim(-3, 3); ax.set_ylim(-3, 3)

fig.savefig("/root/pkg/scripts/viz_s51.png", dpi=80)
print("saved")
# save nets for reuse
avoid.save("/root/pkg/scripts/m_avoid.json"); base.save("/root/pkg/scripts/m_base.json"); ind.save("/root/pkg/scripts/m_ind.json")
