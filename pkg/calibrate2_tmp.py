"""Round 2: MSE trend over n, q-monotonicity probes, solve ordering."""
import time
import numpy as np
import robust_t as rt
from dataclasses import replace

qgrid = tuple(round(0.80 + 0.02 * k, 10) for k in range(10))

print('=== criterion-2 probe: MLq MSE(nu) across n (case I, range 80-160) ===', flush=True)
for n in (50, 100, 200):
    spec = rt.SimulationSpec(true_params=rt.preset_case(1), n=n, n_outliers=5,
                             n_replications=50, q_grid=qgrid, seed=1)
    t0 = time.time()
    rep = rt.run_simulation(spec)
    print(f'n={n:3d}: ML mse={rep.ml.mse_nu:.4f} nu={rep.ml.mean_nu:.3f} | '
          f'q*={rep.selected_q} MLq mse={rep.mlq.mse_nu:.4f} nu={rep.mlq.mean_nu:.3f} '
          f'[{time.time()-t0:.0f}s]', flush=True)

print('=== q-monotone d_sigma probe (single datasets) ===', flush=True)
for case in (1, 2):
    for seed in (0, 1, 2, 3, 4):
        spec = rt.SimulationSpec(true_params=rt.preset_case(case), n=200, n_outliers=5,
                                 n_replications=1, q_grid=(0.85,), seed=seed)
        data = rt.contaminate(rt.generate_replicate(spec, 0), spec, 0)
        truth = spec.true_params
        ds = []
        for q in (1.0, 0.95, 0.9, 0.85):
            r = rt.fit(data, rt.FitConfig(method='mlq', q=q))
            ds.append(rt.distance_metrics(r.params, truth).d_sigma)
        mono = all(a >= b - 1e-12 for a, b in zip(ds, ds[1:]))
        print(f'case{case} seed={seed}: d_sig over q 1.0->0.85: '
              + ' '.join(f'{d:.4f}' for d in ds) + f'  monotone_noninc={mono}', flush=True)
