"""Full workflow on synthetic data, library API end to end.

Simulates a noisy Bell-state analyzer, reconstructs and repairs the POVM,
derives standard forms and optimal quasidistributions, and finishes with a
small Monte Carlo error propagation.  Prints a compact report; artifacts go
to the output directory.
"""

import argparse
import json
from pathlib import Path

import numpy as np

from povm_entangle import (
    McConfig,
    bell_model,
    closest_bell_labels,
    draw_counts,
    negativity_report,
    optimal_quasidistribution,
    physicality_correct,
    propagate,
    reconstruct_povm,
    relative_frequencies,
    to_standard_form,
)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--eps", type=float, default=0.05, help="white noise fraction")
    ap.add_argument("--counts", type=int, default=10000, help="events per setting pair")
    ap.add_argument("--indefiniteness", type=float, default=0.01, help="probability distortion amplitude")
    ap.add_argument("--samples", type=int, default=200, help="Monte Carlo samples")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--out", type=str, default="pipeline_out", help="artifact directory")
    args = ap.parse_args()

    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)

    model = bell_model(args.eps, args.counts, args.indefiniteness)
    data = draw_counts(model, seed=args.seed)
    (out_dir / "counts.csv").write_text(data.to_csv())
    print(f"simulated {args.counts} events per setting pair, eps {args.eps}, seed {args.seed}")

    freqs = relative_frequencies(data)
    raw = reconstruct_povm(freqs)
    povm, p, lam = physicality_correct(raw)
    print(f"reconstruction: lambda {lam:.6f}, mixing probability p {p:.6f}")
    match = closest_bell_labels(povm)
    for label, entry in match.items():
        print(f"  outcome {label} -> Bell {entry['label']} (overlap {entry['overlap']:.4f})")

    print()
    print(f"{'element':>8} {'q':>10} {'most neg':>10} {'cumulative':>11} verdict")
    for label in povm.labels:
        form = to_standard_form(povm.element(label))
        qd = optimal_quasidistribution(form)
        rep = negativity_report(qd)
        print(
            f"{label:>8} {qd.q:>10.4f} {rep.max_negativity:>10.4f} "
            f"{rep.cumulative_negativity:>11.4f} {rep.verdict}"
        )

    print()
    print(f"propagating counting errors over {args.samples} samples ...")
    report = propagate(data, McConfig(sample_size=args.samples, seed=args.seed))
    print(f"retained {report.retained}, excluded {report.excluded}")
    print(f"{'element':>8} {'q mean':>10} {'q std':>8} {'min-entry mean':>15} {'significance':>13}")
    for e in report.elements:
        sig = f"{e.negativity_significance:.1f}" if np.isfinite(e.negativity_significance) else "n/a"
        print(
            f"{e.label:>8} {e.q_mean:>10.4f} {e.q_std:>8.4f} "
            f"{e.max_negativity_mean:>15.4f} {sig:>13}"
        )

    payload = {"uncertainty": report.to_dict()}
    (out_dir / "uncertainty.json").write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
    print(f"artifacts in {out_dir}")


if __name__ == "__main__":
    main()
