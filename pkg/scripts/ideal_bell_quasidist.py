"""Quasidistribution grids of an ideal Bell-state analyzer.

Feeds exact Born-rule frequencies through reconstruction, standard form, and
the optimal quasidistribution, then prints one 6x6 grid per outcome.  Every
grid should show six entries at -1/6, six at +1/3, zeros elsewhere, and a
cumulative negativity of -1.  With --out the matching SVG charts are written
as well.
"""

import argparse
from pathlib import Path

import numpy as np

from povm_entangle import (
    bell_model,
    expected_frequencies,
    negativity_report,
    optimal_quasidistribution,
    reconstruct_povm,
    to_standard_form,
)
from povm_entangle.quasidist import LABELS
from povm_entangle.svg import quasidist_svg


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", type=str, default=None, help="directory for SVG charts")
    args = ap.parse_args()

    freqs = expected_frequencies(bell_model())
    povm = reconstruct_povm(freqs)

    out_dir = Path(args.out) if args.out else None
    if out_dir:
        out_dir.mkdir(parents=True, exist_ok=True)

    total = 0.0
    for label in povm.labels:
        form = to_standard_form(povm.element(label))
        qd = optimal_quasidistribution(form)
        rep = negativity_report(qd)
        total += rep.cumulative_negativity
        print(f"element {label}  (pi = {np.round(form.pi, 6).tolist()})")
        header = "      " + "".join(f"{l:>8}" for l in LABELS)
        print(header)
        for i, row_label in enumerate(LABELS):
            cells = "".join(f"{qd.grid[i, j]:8.4f}" for j in range(6))
            print(f"  {row_label:>4}{cells}")
        print(
            f"  q = {qd.q:+.6f}, most negative {rep.max_negativity:+.6f}, "
            f"cumulative {rep.cumulative_negativity:+.6f}, verdict {rep.verdict}"
        )
        print()
        if out_dir:
            svg = quasidist_svg(
                qd.grid, title=f"Ideal analyzer: element {label}", q=qd.q
            )
            (out_dir / f"ideal_{label}.svg").write_text(svg)

    print(f"cumulative negativity over all elements: {total:+.6f}")
    if out_dir:
        print(f"charts written to {out_dir}")


if __name__ == "__main__":
    main()
