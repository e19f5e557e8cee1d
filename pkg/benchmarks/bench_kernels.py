"""Compare the compiled kernels against the numpy fallback.

    python benchmarks/bench_kernels.py [--repeat 5]
"""
import argparse
import timeit

import numpy as np

from beamfair import model, solver
from beamfair._backend import compiled_kernels, python_kernels
from beamfair.radio import build_gains, interference_free_rates
from beamfair.search import brute_force


def _setup():
    config = model.load_config()
    params = config.params
    sc = model.generate_scenario(params, config.ap_positions, seed=0)
    g = build_gains(sc, config.beam_config, params)
    ifr = interference_free_rates(g, params.power_budget_w)
    return params, sc, g, ifr


def bench(kern, params, sc, g, ifr, repeat):
    budget = params.power_budget_w
    p = np.full(params.n_ues, budget)
    t_args = (g.serving_gain, g.interf_gain, ifr, g.bandwidth_hz, g.noise_w, p)
    fp_args = (g.serving_gain, g.interf_gain, ifr, g.bandwidth_hz, g.noise_w, budget, p, 1e-10, 10000)
    out = {}
    n = 2000
    out["apply_T"] = min(timeit.repeat(lambda: kern.apply_T(*t_args), number=n, repeat=repeat)) / n
    n = 200
    out["fixed_point"] = min(timeit.repeat(lambda: kern.fixed_point(*fp_args), number=n, repeat=repeat)) / n
    saved = solver.kernels
    solver.kernels = kern
    try:
        out["brute_force"] = min(timeit.repeat(lambda: brute_force(sc, params), number=1, repeat=max(1, repeat // 2)))
    finally:
        solver.kernels = saved
    return out


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    params, sc, g, ifr = _setup()
    backends = {"python": python_kernels}
    if compiled_kernels is not None:
        backends["cython"] = compiled_kernels
    else:
        print("compiled extension not built; timing the numpy fallback only")
    results = {name: bench(k, params, sc, g, ifr, args.repeat) for name, k in backends.items()}

    print(f"{'kernel':<18}" + "".join(f"{name:>14}" for name in results) + ("      speedup" if len(results) > 1 else ""))
    for key, unit, scale in [("apply_T", "us", 1e6), ("fixed_point", "us", 1e6), ("brute_force", "s", 1.0)]:
        row = f"{key + ' (' + unit + ')':<18}" + "".join(f"{r[key] * scale:>14.2f}" for r in results.values())
        if len(results) > 1:
            row += f"{results['python'][key] / results['cython'][key]:>12.1f}x"
        print(row)


if __name__ == "__main__":
    main()
