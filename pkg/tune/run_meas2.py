import json, time
import numpy as np
from qdemon.presets import load_preset
from qdemon import sac, harness
from qdemon.environments import Env
from qdemon.sac import SacPolicy

results = {}
try:
    results.update(json.load(open('tune/meas2_results.json')))
except Exception:
    pass

def trace_stats(agent, config, n=6000, seed=7):
    policy = SacPolicy(agent, deterministic=True)
    rng = np.random.default_rng(seed)
    env = Env(config)
    state = env.reset(rng)
    actions = []
    for _ in range(n):
        a = policy(state, rng)
        out = env.step(a, rng)
        actions.append(['unitary','thermalize','measure'][a.discrete])
        state = out.next
    from collections import Counter
    return dict(Counter(actions)), harness.mean_consecutive_measurements(actions)

for name in ('fig4_x_k070', 'fig4_z_k070', 'fig7_k070', 'fig4_x_k055', 'fig4_x_k099'):
    preset = load_preset(name)
    config = preset.config_for(1.0)
    t0 = time.time()
    agent, curves, info = sac.train(config, preset.hyper, seed=1)
    metrics = sac.final_metrics(agent, config, 60000, seed=1)
    counts, mcm = trace_stats(agent, config)
    results[name] = {
        'minutes': (time.time()-t0)/60,
        'P': metrics.avg_power, 'D': metrics.avg_dissipation, 'eta': metrics.efficiency,
        'actions': counts, 'mean_consec_meas': mcm,
        'curve_tail': [(r.step, round(r.avg_power,5)) for r in curves[-4:]],
    }
    print(name, json.dumps(results[name]), flush=True)
    with open('tune/meas2_results.json','w') as f:
        json.dump(results, f, indent=1)
