"""Write the demo field files the README examples refer to.

Four files per run: the constant and Gaussian accelerants, the linear
potential, and an accelerant that fails the injectivity test (useful for
exercising the rejection path).
"""

import argparse
import os

import numpy as np

from kreinmap import Accelerant, GridSpec, Potential
from kreinmap.cli import write_field


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out-dir", default="demo_fields")
    ap.add_argument("--n", type=int, default=200, help="grid cells")
    args = ap.parse_args(argv)

    os.makedirs(args.out_dir, exist_ok=True)
    g = GridSpec(args.n)
    x = g.nodes
    u = -1.0 + np.arange(4 * args.n + 1) / (2 * args.n)

    def ac(samples):
        return Accelerant(1, g, np.asarray(samples, complex)[:, None, None])

    fields = {
        "h_const.json": ac(np.full(u.shape, 0.5)),
        "h_gauss.json": ac(0.3 * np.exp(-(u**2))),
        "h_rejected.json": ac(np.full(u.shape, -1.25)),
        "q_linear.json": Potential(
            1, g,
            (0.3 * (1.0 + x)).astype(complex)[:, None, None],
            np.full((args.n + 1, 1, 1), 0.2, dtype=complex),
        ),
    }
    for name, obj in fields.items():
        path = os.path.join(args.out_dir, name)
        write_field(path, obj, meta="demo field")
        print(f"wrote {path}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
