"""Quantize a fair binary source toward the rate-distortion limit.

Test channel BSC(0.11) fixes the target pair (R, D) = (0.5001, 0.11).
The achieved rate drops toward the oracle as the block grows while the
distortion hugs the crossover; D1/D2/D3 split the distortion into decoder
mismatch, rounding noise, and residual.
"""

import numpy as np

from nestedpolar import build_source_code, diagnostics
from nestedpolar.dmc import dsbs
from nestedpolar.oracles import binary_entropy

CROSSOVER = 0.11
BLOCKS = 80
SEED = 7


def main():
    joint = dsbs(CROSSOVER)
    oracle = 1 - binary_entropy(CROSSOVER)
    print(f"oracle R({CROSSOVER}) = {oracle:.6f}\n")
    print(f"{'n':>3} {'N':>5} {'rate':>8} {'D':>8} {'mismatch':>9}")
    for n in (4, 6, 8):
        code = build_source_code(joint, n, seed=SEED + n)
        rng = np.random.default_rng((SEED, n))
        x = rng.integers(0, 2, size=(BLOCKS, 1 << n))
        d = diagnostics(code, x, sample_seed=SEED)
        print(f"{n:>3} {1 << n:>5} {code.rate():>8.4f} "
              f"{d['D_avg']:>8.4f} {d['mismatch_fraction']:>9.4f}")
    print(f"\nthe rate gap is the not-yet-polarized index fraction and "
          f"shrinks slowly with N; the distortion already sits near "
          f"{CROSSOVER} because the encoder samples the exact test-channel "
          f"posterior.")


if __name__ == "__main__":
    main()
