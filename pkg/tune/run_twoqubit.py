import json, time
import numpy as np
from qdemon.presets import load_preset
from qdemon import sac, baselines

results = {}
for name in ('fig11', 'fig14'):
    preset = load_preset(name)
    config = preset.config_for(1.0)
    t0 = time.time()
    bpol, bmet, bf = baselines.optimize_swap_policy(config)
    tb = time.time() - t0
    t0 = time.time()
    agent, curves, info = sac.train(config, preset.hyper, seed=1)
    metrics = sac.final_metrics(agent, config, 40000, seed=1)
    f_c = config.c * config.power_scale * metrics.avg_power
    results[name] = {
        'train_minutes': (time.time()-t0)/60, 'baseline_minutes': tb/60,
        'rl': {'P': metrics.avg_power, 'D': metrics.avg_dissipation, 'eta': metrics.efficiency, 'f_c': f_c},
        'baseline': {'P': bmet.avg_power, 'D': bmet.avg_dissipation, 'eta': bmet.efficiency, 'f_c': bf,
                     'u': bpol.u_bar, 'tau': bpol.tau_bar},
        'ratio': f_c / bf,
        'curve_tail': [(r.step, round(r.avg_power,5)) for r in curves[-4:]],
    }
    print(name, json.dumps(results[name]), flush=True)
    with open('tune/twoqubit_results.json','w') as f:
        json.dump(results, f, indent=1)
