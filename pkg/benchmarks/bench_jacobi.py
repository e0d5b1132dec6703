"""Time the Jacobi eigen-kernel: compiled extension vs numpy fallback.

    python3 benchmarks/bench_jacobi.py [--dims 8 16 32 64] [--repeat 5]

Both backends diagonalize the same random hermitian matrices; the script also
reports the largest eigenvalue difference between them and against
``numpy.linalg.eigvalsh``.
"""

import argparse
import timeit

import numpy as np

from qpigeon import kernels
from qpigeon.qcore import eigh, random_hermitian


def bench(dim, repeat, seed=0):
    op = random_hermitian(np.random.default_rng(seed), dim)
    ref = np.linalg.eigvalsh(op.matrix)
    row = {"dim": dim}
    values = {}
    for name in kernels.available_backends():
        previous = kernels.use_backend(name)
        try:
            number = max(1, 200 // dim) if name == "compiled" else 1
            t = min(timeit.repeat(lambda: eigh(op), number=number, repeat=repeat)) / number
            values[name] = eigh(op)[0]
        finally:
            kernels.use_backend(previous)
        row[name] = t
        row[f"{name}_err"] = float(np.max(np.abs(values[name] - ref)))
    return row


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--dims", type=int, nargs="+", default=[8, 16, 32, 64])
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args(argv)

    names = kernels.available_backends()
    print(f"backends: {', '.join(names)} (active: {kernels.active_backend()})")
    header = f"{'dim':>5}" + "".join(f"{n + ' [ms]':>17}{n + ' err':>14}" for n in names)
    if "compiled" in names:
        header += f"{'speedup':>10}"
    print(header)
    for dim in args.dims:
        row = bench(dim, args.repeat)
        line = f"{dim:>5}" + "".join(f"{row[n] * 1e3:>17.3f}{row[n + '_err']:>14.1e}" for n in names)
        if "compiled" in names:
            line += f"{row['python'] / row['compiled']:>9.1f}x"
        print(line)


if __name__ == "__main__":
    main()
