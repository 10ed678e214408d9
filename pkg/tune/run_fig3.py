import json, time
import numpy as np
from qdemon.presets import load_preset
from qdemon import sac, baselines

results = {}
preset = load_preset('fig3')
for c in (1.0, 0.8, 0.7):
    config = preset.config_for(c)
    bpol, bmet, bf = baselines.optimize_measure_flip_thermalize(config)
    t0 = time.time()
    agent, curves, info = sac.train(config, preset.hyper, seed=1)
    metrics = sac.final_metrics(agent, config, 60000, seed=1)
    f_c = config.c * config.power_scale * metrics.avg_power - (1 - config.c) * config.dissipation_scale * metrics.avg_dissipation
    results[str(c)] = {
        'minutes': (time.time() - t0) / 60,
        'rl': {'P': metrics.avg_power, 'D': metrics.avg_dissipation, 'eta': metrics.efficiency, 'f_c': f_c},
        'baseline': {'P': bmet.avg_power, 'D': bmet.avg_dissipation, 'eta': bmet.efficiency, 'f_c': bf,
                     'u': bpol.u_bar, 'tau': bpol.tau_bar},
        'ratio': f_c / bf,
        'curve_tail': [(r.step, r.avg_power, r.avg_dissipation) for r in curves[-4:]],
    }
    print(c, json.dumps(results[str(c)], indent=1), flush=True)
    with open('tune/fig3_results.json', 'w') as f:
        json.dump(results, f, indent=1)
