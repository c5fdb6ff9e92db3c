"""White-noise tolerance of the probe witnesses.

Tabulates the critical noise fraction below which the witness still flags
the noisy target element as entangled, for GHZ probes over qubit number and
maximally entangled probes over local dimension.  The GHZ column climbs
toward 1/3 as n grows; both families start at 20% for the smallest case.
"""

import argparse

from povm_entangle import (
    ghz_probe,
    me_probe,
    noise_threshold,
    noisy_ghz_element,
    noisy_me_element,
    witness_evaluate,
)


def check_flip(family, size, tau, delta=1e-9):
    """Verdicts just inside and outside the threshold."""
    if family == "ghz":
        below = witness_evaluate(noisy_ghz_element(size, tau - delta), ghz_probe(size))
        above = witness_evaluate(noisy_ghz_element(size, tau + delta), ghz_probe(size))
    else:
        below = witness_evaluate(noisy_me_element(size, tau - delta), me_probe(size))
        above = witness_evaluate(noisy_me_element(size, tau + delta), me_probe(size))
    return below.verdict, above.verdict


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--max-n", type=int, default=8, help="largest GHZ qubit number")
    ap.add_argument("--max-d", type=int, default=8, help="largest qudit dimension")
    ap.add_argument("--flips", action="store_true", help="also verify the verdict flips")
    args = ap.parse_args()

    print("GHZ probe, n qubits")
    print(f"  {'n':>3} {'threshold':>12} {'gap to 1/3':>12}")
    for n in range(2, args.max_n + 1):
        tau = noise_threshold("ghz", n)
        print(f"  {n:>3} {tau:>12.8f} {1 / 3 - tau:>12.2e}")
        if args.flips:
            below, above = check_flip("ghz", n, tau)
            assert (below, above) == ("entangled", "inconclusive"), (n, below, above)

    print()
    print("maximally entangled probe, dimension d")
    print(f"  {'d':>3} {'threshold':>12}")
    for d in range(2, args.max_d + 1):
        tau = noise_threshold("me", d)
        print(f"  {d:>3} {tau:>12.8f}")
        if args.flips:
            below, above = check_flip("me", d, tau)
            assert (below, above) == ("entangled", "inconclusive"), (d, below, above)

    if args.flips:
        print()
        print("all verdict flips confirmed at threshold +/- 1e-9")


if __name__ == "__main__":
    main()
