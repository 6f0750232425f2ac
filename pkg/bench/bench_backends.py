"""Time one sample presentation on each available simulation backend.

    python bench/bench_backends.py --n-exc 100 --repeats 20

Both backends run the same presentations from the same starting state, so
the spike counts printed alongside the timings must agree.
"""
import argparse
import time

import numpy as np

from snnbudget import _backend
from snnbudget.core import NetworkModel, SimParams, simulate_sample
from snnbudget.learning import StdpState


def bench(fn, variant, n_exc, repeats, learn, seed=0):
    _backend.run_presentation = fn
    model = NetworkModel.create(784, n_exc, variant, seed=seed)
    params = SimParams()
    images = np.random.default_rng(seed).integers(0, 256, (repeats, 784))
    # a sparse image, like MNIST digits: roughly a fifth of the pixels on
    images[images < 200] = 0
    state = StdpState.for_model(model) if learn else None
    rng = np.random.default_rng(seed)
    spikes = 0
    start = time.perf_counter()
    for pixels in images:
        if state is not None:
            state.reset()
        spikes += simulate_sample(model, pixels, params, rng, stdp=state).total_exc
    return (time.perf_counter() - start) / repeats, spikes


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n-exc", type=int, default=100)
    ap.add_argument("--repeats", type=int, default=20)
    args = ap.parse_args(argv)
    original = _backend.run_presentation
    print(f"backends available: {', '.join(_backend.BACKENDS)} (default: {_backend.NAME})")
    print(f"{'variant':9s} {'mode':9s} {'backend':8s} {'ms/sample':>10s} {'speedup':>8s} {'spikes':>7s}")
    try:
        for variant in ("lateral", "baseline"):
            for learn in (False, True):
                timings = {name: bench(fn, variant, args.n_exc, args.repeats, learn)
                           for name, fn in _backend.BACKENDS.items()}
                ref = timings["python"][0]
                for name, (sec, spikes) in timings.items():
                    mode = "training" if learn else "inference"
                    print(f"{variant:9s} {mode:9s} {name:8s} {1e3 * sec:10.2f} {ref / sec:7.1f}x {spikes:7d}")
    finally:
        _backend.run_presentation = original


if __name__ == "__main__":
    main()
