"""Time the compiled kernels against the numpy fallback.

    python benchmarks/bench_kernels.py [--images 2000] [--samples 5000]
"""

import argparse
import timeit

import numpy as np

from memrc import kernels
from memrc.device import DeviceParams
from memrc.encoding import EncodingConfig, encode_batch, reservoir_size
from memrc.variability import DeviceBank


def evolve_case(n_images):
    p = DeviceParams(tau=6e-9)
    enc = EncodingConfig("2D", True, 7)
    rng = np.random.default_rng(0)
    progs = encode_batch(rng.random((n_images, 28, 28)) < 0.19, enc)
    bank = DeviceBank.nominal(p, reservoir_size(enc, 28, 28))
    floor = np.minimum(bank.x_init, p.x_min)
    args = (progs, bank.x_init, bank.tau_eff, bank.lambda_f, bank.eta_f, floor,
            p.lambda_rate, p.eta, p.t_pulse, p.x_min, p.x_max, 1.5, None)
    return lambda mod: mod.evolve(*args)


def sgd_case(n_samples):
    rng = np.random.default_rng(0)
    X = np.where(rng.random((n_samples, 581)) < 0.21, rng.integers(1, 16, (n_samples, 581)) / 15, 0.0)
    y = rng.integers(0, 10, n_samples).astype(np.int64)
    order = rng.permutation(n_samples).astype(np.int64)
    w = rng.uniform(-0.01, 0.01, (581, 10))
    return lambda mod: mod.sgd_epoch(w.copy(), X, y, order, 0.02, False)


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--images", type=int, default=2000)
    ap.add_argument("--samples", type=int, default=5000)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()

    cases = {f"evolve ({args.images} images x 581 devices)": evolve_case(args.images),
             f"sgd_epoch ({args.samples} samples x 581 features)": sgd_case(args.samples)}
    backends = kernels.backends()
    print(f"default backend: {kernels.BACKEND}")
    for label, fn in cases.items():
        times = {name: min(timeit.repeat(lambda: fn(mod), number=1, repeat=args.repeat))
                 for name, mod in backends.items()}
        line = "  ".join(f"{name} {t * 1e3:9.1f} ms" for name, t in times.items())
        if "cython" in times:
            line += f"  speedup x{times['python'] / times['cython']:.1f}"
        print(f"{label:45s} {line}")


if __name__ == "__main__":
    main()
