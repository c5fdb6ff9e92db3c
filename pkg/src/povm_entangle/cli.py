"""Command line interface.

Subcommands cover the whole workflow: simulate coincidence data, reconstruct
and repair the POVM, derive standard forms and optimal quasidistributions
with SVG charts, propagate counting errors, evaluate probe witnesses, and
merge outcome groups.  All JSON output is canonical (sorted keys, two-space
indent, trailing newline) and embeds a run manifest, so reruns with equal
inputs are byte identical.

Exit codes: 0 success, 1 usage, 2 invalid data, 3 numeric failure.
"""

from __future__ import annotations

import json
import os
import sys
from pathlib import Path

import click
import numpy as np

from . import __version__
from .errors import ConvergenceError, ValidationError
from .montecarlo import McConfig, propagate
from .operators import PovmSet, bloch_vector
from .quasidist import negativity_report, optimal_quasidistribution
from .simulate import bell_model, draw_counts, model_from_spec
from .standard_form import FormConfig, back_transform, to_standard_form
from .svg import quasidist_svg
from .tomography import (
    BasisMap,
    CoincidenceCounts,
    closest_bell_labels,
    combine_outcomes,
    physicality_correct,
    reconstruct_correlations,
    reconstruct_povm,
    relative_frequencies,
)
from .witness import (
    ghz_probe,
    lambda_gmax_analytic,
    me_probe,
    noise_threshold,
    separability_eigenvalue_numeric,
    witness_evaluate,
)
from .operators import lambda_operator, noisy_ghz_element, noisy_me_element

SEED_ENV = "POVM_ENTANGLE_SEED"


def _resolve_seed(seed: int | None) -> int:
    if seed is not None:
        return int(seed)
    env = os.environ.get(SEED_ENV)
    if env is not None:
        try:
            return int(env)
        except ValueError:
            raise ValidationError(f"{SEED_ENV} must be an integer, got {env!r}")
    return 0


def _manifest(command: str, **params) -> dict:
    return {
        "tool": "povm-entangle",
        "version": __version__,
        "command": command,
        "parameters": params,
    }


def _canonical(obj: dict) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _emit(obj: dict, out: str | None):
    text = _canonical(obj)
    if out is None:
        click.echo(text, nl=False)
    else:
        Path(out).write_text(text)


def _load_json(path: str) -> dict:
    try:
        return json.loads(Path(path).read_text())
    except FileNotFoundError:
        raise ValidationError(f"no such file: {path}")
    except json.JSONDecodeError as e:
        raise ValidationError(f"{path} is not valid JSON: {e}")


def _read_basis_map(path: str | None) -> BasisMap | None:
    if path is None:
        return None
    return BasisMap.from_dict(_load_json(path))


def _read_counts(path: str, basis_map: BasisMap | None = None) -> CoincidenceCounts:
    if path.endswith(".json"):
        d = _load_json(path)
        if "counts" not in d:
            raise ValidationError(f"{path} has no 'counts' entry")
        sub = {"counts": d["counts"]}
        if "basis_map" in d:
            sub["basis_map"] = d["basis_map"]
        counts = CoincidenceCounts.from_json_dict(sub)
    else:
        try:
            text = Path(path).read_text()
        except FileNotFoundError:
            raise ValidationError(f"no such file: {path}")
        counts = CoincidenceCounts.from_csv(text, basis_map=basis_map)
    return counts


def _read_povm(path: str) -> PovmSet:
    d = _load_json(path)
    if "corrected_povm" in d:
        return PovmSet.from_dict(d["corrected_povm"])
    if "povm" in d:
        return PovmSet.from_dict(d["povm"])
    return PovmSet.from_dict(d)


def _safe(label: str) -> str:
    return label.replace("/", "_").replace("\\", "_")


@click.group()
@click.version_option(version=__version__, prog_name="povm-entangle")
def cli():
    """Detector tomography, quasidistributions, and entanglement witnesses."""


@cli.command()
@click.option("--model", "model_path", type=str, default=None, help="JSON model spec file.")
@click.option("--povm", "povm_path", type=str, default=None, help="'bell' or a POVM JSON to simulate (default: Bell analyzer).")
@click.option("--eps", type=float, default=0.0, show_default=True, help="White noise fraction.")
@click.option("--counts", type=int, default=10000, show_default=True, help="Events per setting pair.")
@click.option("--indefiniteness", type=float, default=0.0, show_default=True, help="Zero-sum probability distortion amplitude.")
@click.option("--seed", type=int, default=None, help=f"RNG seed (default: ${SEED_ENV} or 0).")
@click.option("--basis-map", "basis_map_path", type=str, default=None, help="Basis map JSON file.")
@click.option("--out", "-o", type=str, default=None, help="Output file (.csv or .json; default: CSV to stdout).")
def simulate(model_path, povm_path, eps, counts, indefiniteness, seed, basis_map_path, out):
    """Draw synthetic coincidence counts from a detector model."""
    basis_map = _read_basis_map(basis_map_path)
    if model_path is not None:
        model, model_seed = model_from_spec(_load_json(model_path))
        used_seed = int(seed) if seed is not None else model_seed
    else:
        used_seed = _resolve_seed(seed)
        if povm_path is None or povm_path.lower() == "bell":
            model = bell_model(eps, counts, indefiniteness, basis_map)
        else:
            from .simulate import DetectorModel

            model = DetectorModel(
                povm=_read_povm(povm_path),
                eps=eps,
                counts_per_setting=counts,
                basis_map=basis_map or BasisMap.default(),
                indefiniteness=indefiniteness,
            )
    data = draw_counts(model, used_seed)
    if out is not None and out.endswith(".json"):
        manifest = _manifest(
            "simulate",
            eps=model.eps,
            counts_per_setting=model.counts_per_setting,
            indefiniteness=model.indefiniteness,
            seed=used_seed,
        )
        _emit({"manifest": manifest, **data.to_json_dict()}, out)
    else:
        text = data.to_csv()
        if out is None:
            click.echo(text, nl=False)
        else:
            Path(out).write_text(text)


@cli.command()
@click.option("--counts", "counts_path", type=str, required=True, help="Coincidence counts (.csv or .json).")
@click.option("--basis-map", "basis_map_path", type=str, default=None, help="Basis map JSON (CSV input only).")
@click.option("--margin", type=float, default=1e-5, show_default=True, help="Eigenvalue margin for the physicality correction.")
@click.option("--out", "-o", type=str, default=None, help="Output JSON file (default: stdout).")
def reconstruct(counts_path, basis_map_path, margin, out):
    """Linearly invert counts into a POVM and repair indefiniteness."""
    basis_map = _read_basis_map(basis_map_path)
    data = _read_counts(counts_path, basis_map)
    freqs = relative_frequencies(data)
    raw = reconstruct_povm(freqs)
    corrected, p, lam = physicality_correct(raw, margin=margin)
    corrs = reconstruct_correlations(freqs)
    total = sum(el.matrix for el in raw.elements)
    residual = float(np.max(np.abs(total - np.eye(4))))
    if residual > 1e-6:
        click.echo(f"warning: completeness residual {residual:.3e}", err=True)
    payload = {
        "manifest": _manifest("reconstruct", counts=counts_path, margin=margin),
        "raw_povm": raw.to_dict(),
        "corrected_povm": corrected.to_dict(),
        "lambda": lam,
        "p": p,
        "completeness_residual": residual,
        "correlations": {
            label: c.coeffs.tolist() for label, c in zip(raw.labels, corrs)
        },
        "bell_match": closest_bell_labels(corrected),
    }
    _emit(payload, out)


@cli.command()
@click.option("--povm", "povm_path", type=str, required=True, help="POVM JSON (bare or reconstruct output).")
@click.option("--out", "-o", "out_dir", type=str, required=True, help="Output directory.")
@click.option("--max-iter", type=int, default=10000, show_default=True, help="Filter iteration cap.")
def quasidist(povm_path, out_dir, max_iter):
    """Standard forms, optimal quasidistributions, and SVG charts per element."""
    povm = _read_povm(povm_path)
    cfg = FormConfig(max_iter=max_iter)
    outp = Path(out_dir)
    outp.mkdir(parents=True, exist_ok=True)
    manifest = _manifest("quasidist", povm=povm_path, max_iter=max_iter)
    summary: dict = {"manifest": manifest, "elements": {}, "failed": []}
    for label, element in povm.items():
        try:
            form = to_standard_form(element, cfg)
        except ConvergenceError as e:
            summary["elements"][label] = {"error": str(e), "residual": e.residual}
            summary["failed"].append(label)
            continue
        qdist = optimal_quasidistribution(form)
        report = negativity_report(qdist)
        tilde = back_transform(form, qdist)
        bloch_a = [bloch_vector(s) for s in tilde.states_a]
        bloch_b = [bloch_vector(s) for s in tilde.states_b]
        fname = f"element_{_safe(label)}.json"
        payload = {
            "manifest": manifest,
            "label": label,
            "standard_form": form.to_dict(),
            "quasidistribution": qdist.to_dict(),
            "negativity": report.to_dict(),
            "tilde": {
                "states_a": [[[v.real, v.imag] for v in s] for s in tilde.states_a],
                "states_b": [[[v.real, v.imag] for v in s] for s in tilde.states_b],
                "bloch_a": [v.tolist() for v in bloch_a],
                "bloch_b": [v.tolist() for v in bloch_b],
                "grid": tilde.grid.tolist(),
            },
        }
        Path(outp / fname).write_text(_canonical(payload))
        from .quasidist import LABELS

        footer = tuple(
            "A %s: (%.4f, %.4f, %.4f)" % ((LABELS[k],) + tuple(bloch_a[k])) for k in range(6)
        ) + tuple(
            "B %s: (%.4f, %.4f, %.4f)" % ((LABELS[k],) + tuple(bloch_b[k])) for k in range(6)
        )
        svg = quasidist_svg(
            qdist.grid,
            title=f"Optimal quasidistribution: element {label}",
            q=qdist.q,
            footer_lines=footer,
        )
        Path(outp / f"element_{_safe(label)}.svg").write_text(svg)
        summary["elements"][label] = {
            "q": qdist.q,
            "max_negativity": report.max_negativity,
            "cumulative_negativity": report.cumulative_negativity,
            "verdict": report.verdict,
            "file": fname,
        }
    Path(outp / "summary.json").write_text(_canonical(summary))
    if summary["failed"]:
        raise ConvergenceError(
            "standard form failed for element(s): " + ", ".join(summary["failed"])
        )


@cli.command()
@click.option("--counts", "counts_path", type=str, required=True, help="Coincidence counts (.csv or .json).")
@click.option("--basis-map", "basis_map_path", type=str, default=None, help="Basis map JSON (CSV input only).")
@click.option("--samples", type=int, default=10000, show_default=True, help="Monte Carlo sample count.")
@click.option("--inflation", type=float, default=1.05, show_default=True, help="Covariance factor inflation.")
@click.option("--seed", type=int, default=None, help=f"RNG seed (default: ${SEED_ENV} or 0).")
@click.option("--workers", type=int, default=None, help="Parallel worker processes.")
@click.option("--margin", type=float, default=1e-5, show_default=True, help="Physicality margin.")
@click.option("--max-iter", type=int, default=10000, show_default=True, help="Filter iteration cap.")
@click.option("--out", "-o", "out_dir", type=str, default=None, help="Output directory (default: summary to stdout).")
def errors(counts_path, basis_map_path, samples, inflation, seed, workers, margin, max_iter, out_dir):
    """Propagate counting statistics through the pipeline by resampling."""
    basis_map = _read_basis_map(basis_map_path)
    data = _read_counts(counts_path, basis_map)
    used_seed = _resolve_seed(seed)
    cfg = McConfig(sample_size=samples, inflation=inflation, seed=used_seed, workers=workers)
    report = propagate(data, cfg, FormConfig(max_iter=max_iter), margin=margin)
    manifest = _manifest(
        "errors",
        counts=counts_path,
        samples=samples,
        inflation=inflation,
        seed=used_seed,
        margin=margin,
    )
    if out_dir is None:
        _emit({"manifest": manifest, **report.to_dict()}, None)
        return
    outp = Path(out_dir)
    outp.mkdir(parents=True, exist_ok=True)
    summary: dict = {
        "manifest": manifest,
        "sample_size": cfg.sample_size,
        "inflation": cfg.inflation,
        "seed": cfg.seed,
        "retained": report.retained,
        "excluded": report.excluded,
        "elements": {},
    }
    for e in report.elements:
        fname = f"errors_{_safe(e.label)}.json"
        Path(outp / fname).write_text(_canonical({"manifest": manifest, **e.to_dict()}))
        svg = quasidist_svg(
            e.grid_reference,
            title=f"Quasidistribution with error bars: element {e.label}",
            q=e.q_reference,
            sigma=e.grid_std,
        )
        Path(outp / f"errors_{_safe(e.label)}.svg").write_text(svg)
        summary["elements"][e.label] = {
            "q_mean": e.q_mean,
            "q_std": e.q_std,
            "max_negativity_mean": e.max_negativity_mean,
            "max_negativity_std": e.max_negativity_std,
            "negativity_significance": (
                e.negativity_significance if np.isfinite(e.negativity_significance) else None
            ),
            "file": fname,
        }
    Path(outp / "summary.json").write_text(_canonical(summary))


@cli.command()
@click.option("--family", type=click.Choice(["ghz", "me"]), default=None, help="Probe family.")
@click.option("-n", "n", type=int, default=None, help="Qubit number for the ghz family.")
@click.option("-d", "d", type=int, default=None, help="Local dimension for the me family.")
@click.option("--eps", type=float, default=0.0, show_default=True, help="White noise fraction (family mode).")
@click.option("--povm", "povm_path", type=str, default=None, help="POVM JSON for element mode.")
@click.option("--element", "element_label", type=str, default=None, help="Element label within the POVM.")
@click.option("--lambda", "lambda_mode", is_flag=True, help="Cross-check the analytic bound against the numeric solver.")
@click.option("--numeric", is_flag=True, help="Use the numeric lower bound for the verdict.")
@click.option("--restarts", type=int, default=64, show_default=True, help="Solver restarts.")
@click.option("--seed", type=int, default=None, help=f"Solver seed (default: ${SEED_ENV} or 0).")
@click.option("--out", "-o", type=str, default=None, help="Output JSON file (default: stdout).")
def witness(family, n, d, eps, povm_path, element_label, lambda_mode, numeric, restarts, seed, out):
    """Evaluate probe-state witnesses or cross-check separability bounds."""
    used_seed = _resolve_seed(seed)
    if lambda_mode:
        if n is None or d is None:
            raise click.UsageError("--lambda needs both -n and -d")
        op = lambda_operator(n, d)
        analytic = lambda_gmax_analytic(n, d)
        res = separability_eigenvalue_numeric(op, restarts=restarts, seed=used_seed)
        payload = {
            "manifest": _manifest("witness", mode="lambda", n=n, d=d, restarts=restarts, seed=used_seed),
            "mode": "lambda",
            "n": n,
            "d": d,
            "analytic": analytic,
            "numeric": res.gmax,
            "difference": analytic - res.gmax,
            "converged": res.converged,
        }
        _emit(payload, out)
        return
    if povm_path is not None:
        if element_label is None:
            raise click.UsageError("element mode needs --element")
        povm = _read_povm(povm_path)
        element = povm.element(element_label)
        if family == "ghz":
            if any(p != 2 for p in element.parties):
                raise ValidationError("ghz probe needs qubit parties")
            probe = ghz_probe(len(element.parties))
        else:
            if len(element.parties) != 2 or element.parties[0] != element.parties[1]:
                raise ValidationError("me probe needs two equal-dimension parties")
            probe = me_probe(element.parties[0])
        result = witness_evaluate(
            element, probe, numeric=numeric, restarts=restarts, seed=used_seed
        )
        payload = {
            "manifest": _manifest(
                "witness",
                mode="element",
                povm=povm_path,
                element=element_label,
                family=family or "me",
                numeric=numeric,
                seed=used_seed,
            ),
            "mode": "element",
            "element": element_label,
            **result.to_dict(),
        }
        _emit(payload, out)
        return
    if family is None:
        raise click.UsageError("pick a mode: --family, --povm/--element, or --lambda")
    if family == "ghz":
        if n is None:
            raise click.UsageError("family ghz needs -n")
        element = noisy_ghz_element(n, eps)
        probe = ghz_probe(n)
        threshold = noise_threshold("ghz", n)
        size = n
    else:
        if d is None:
            raise click.UsageError("family me needs -d")
        element = noisy_me_element(d, eps)
        probe = me_probe(d)
        threshold = noise_threshold("me", d)
        size = d
    result = witness_evaluate(element, probe, numeric=numeric, restarts=restarts, seed=used_seed)
    payload = {
        "manifest": _manifest(
            "witness", mode="family", family=family, size=size, eps=eps, numeric=numeric, seed=used_seed
        ),
        "mode": "family",
        "family": family,
        "size": size,
        "eps": eps,
        "noise_threshold": threshold,
        **result.to_dict(),
    }
    _emit(payload, out)


@cli.command()
@click.option("--counts", "counts_path", type=str, required=True, help="Coincidence counts (.csv or .json).")
@click.option("--basis-map", "basis_map_path", type=str, default=None, help="Basis map JSON (CSV input only).")
@click.option("--groups", type=str, required=True, help="Merge spec, e.g. 'AA+AD,DA+DD'.")
@click.option("--out", "-o", type=str, default=None, help="Output file (.csv or .json; default: CSV to stdout).")
def combine(counts_path, basis_map_path, groups, out):
    """Merge outcome groups by summing their counts."""
    basis_map = _read_basis_map(basis_map_path)
    data = _read_counts(counts_path, basis_map)
    parsed = [[lbl.strip() for lbl in grp.split("+")] for grp in groups.split(",") if grp]
    merged = combine_outcomes(data, parsed)
    if out is not None and out.endswith(".json"):
        manifest = _manifest("combine", counts=counts_path, groups=groups)
        _emit({"manifest": manifest, **merged.to_json_dict()}, out)
    else:
        text = merged.to_csv()
        if out is None:
            click.echo(text, nl=False)
        else:
            Path(out).write_text(text)


def main(argv: list[str] | None = None) -> int:
    """Entry point with the documented exit code mapping."""
    try:
        rv = cli.main(args=argv, prog_name="povm-entangle", standalone_mode=False)
        return int(rv) if isinstance(rv, int) else 0
    except click.exceptions.Exit as e:
        return int(e.exit_code)
    except click.ClickException as e:
        e.show(file=sys.stderr)
        return 1
    except ValidationError as e:
        click.echo(f"error: {e}", err=True)
        return 2
    except (ConvergenceError, np.linalg.LinAlgError) as e:
        click.echo(f"error: {e}", err=True)
        return 3


if __name__ == "__main__":
    sys.exit(main())
