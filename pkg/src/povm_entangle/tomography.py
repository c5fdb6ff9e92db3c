"""Linear-inversion detector tomography from two-photon coincidence counts.

Probe states are labeled by the six polarizations H, V, D, A, R, L.  A basis
map assigns each label a Pauli axis and sign per arm; the default map is the
asymmetric assignment of the reference experiment (Alice H -> z+, Bob D -> z+,
and so on).  Relative frequencies feed 4x6 sampling matrices that invert the
Born rule exactly, and an optional white-noise admixture repairs indefinite
reconstructions without breaking completeness.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .operators import (
    HermitianOperator,
    PauliCorrelationMatrix,
    PovmSet,
    bell_povm,
    min_eigenvalue,
    pauli_compose,
    pauli_eigenstate,
)

PROBE_LABELS = ("H", "V", "D", "A", "R", "L")
DEFAULT_OUTCOMES = ("AA", "AD", "DA", "DD")

_AXES = ("x", "y", "z")
_AXIS_ROW = {"x": 1, "y": 2, "z": 3}

# Detection threshold for "this reconstruction is indefinite"; matches the
# positivity slack allowed on corrected POVM elements.
INDEFINITE_TOL = 1e-12

_DEFAULT_ALICE = {"H": ("z", 1), "V": ("z", -1), "D": ("x", 1), "A": ("x", -1), "L": ("y", 1), "R": ("y", -1)}
_DEFAULT_BOB = {"D": ("z", 1), "A": ("z", -1), "H": ("x", 1), "V": ("x", -1), "R": ("y", 1), "L": ("y", -1)}


def _parse_assignment(value) -> tuple[str, int]:
    if isinstance(value, str):
        if len(value) == 2 and value[0] in _AXES and value[1] in "+-":
            return value[0], 1 if value[1] == "+" else -1
        raise ValidationError(f"bad axis assignment {value!r}, expected e.g. 'z+'")
    axis, sign = value
    if axis not in _AXES or int(sign) not in (1, -1):
        raise ValidationError(f"bad axis assignment {value!r}")
    return axis, int(sign)


@dataclass(frozen=True)
class BasisMap:
    """Per-arm assignment of probe labels to Pauli eigenstates."""

    alice: dict
    bob: dict

    def __post_init__(self):
        for side, mapping in (("alice", self.alice), ("bob", self.bob)):
            if set(mapping) != set(PROBE_LABELS):
                raise ValidationError(f"{side} map must cover exactly the labels {PROBE_LABELS}")
            parsed = {label: _parse_assignment(mapping[label]) for label in PROBE_LABELS}
            targets = set(parsed.values())
            if len(targets) != 6:
                raise ValidationError(f"{side} map must hit each (axis, sign) pair exactly once")
            object.__setattr__(self, side, parsed)

    @classmethod
    def default(cls) -> "BasisMap":
        return cls(dict(_DEFAULT_ALICE), dict(_DEFAULT_BOB))

    def assignment(self, side: str, label: str) -> tuple[str, int]:
        mapping = {"alice": self.alice, "bob": self.bob}.get(side)
        if mapping is None:
            raise ValidationError(f"side must be 'alice' or 'bob', got {side!r}")
        return mapping[label]

    def state(self, side: str, label: str) -> np.ndarray:
        axis, sign = self.assignment(side, label)
        return pauli_eigenstate(axis, sign)

    def to_dict(self) -> dict:
        fmt = lambda a: {l: f"{axis}{'+' if s > 0 else '-'}" for l, (axis, s) in a.items()}
        return {
            "alice": {l: fmt(self.alice)[l] for l in PROBE_LABELS},
            "bob": {l: fmt(self.bob)[l] for l in PROBE_LABELS},
        }

    @classmethod
    def from_dict(cls, data: dict) -> "BasisMap":
        try:
            return cls(dict(data["alice"]), dict(data["bob"]))
        except (KeyError, TypeError) as exc:
            raise ValidationError(f"malformed basis map: {exc}") from exc


@dataclass(frozen=True, eq=False)
class CoincidenceCounts:
    """Raw coincidence counts, indexed [outcome, alice probe, bob probe]."""

    outcomes: tuple[str, ...]
    counts: np.ndarray
    basis_map: BasisMap

    def __post_init__(self):
        outcomes = tuple(str(s) for s in self.outcomes)
        if not outcomes or len(set(outcomes)) != len(outcomes):
            raise ValidationError(f"outcome labels must be non-empty and unique, got {outcomes}")
        c = np.asarray(self.counts)
        if c.shape != (len(outcomes), 6, 6):
            raise ValidationError(f"counts shape must be ({len(outcomes)}, 6, 6), got {c.shape}")
        if not np.issubdtype(c.dtype, np.integer):
            if not np.all(c == np.floor(c)):
                raise ValidationError("counts must be integers")
            c = c.astype(np.int64)
        if np.any(c < 0):
            raise ValidationError("counts must be nonnegative")
        totals = c.sum(axis=0)
        if np.any(totals <= 0):
            ia, ib = np.argwhere(totals <= 0)[0]
            pair = (PROBE_LABELS[ia], PROBE_LABELS[ib])
            raise ValidationError(f"zero total counts for probe pair {pair}")
        c = np.ascontiguousarray(c.astype(np.int64))
        c.setflags(write=False)
        object.__setattr__(self, "outcomes", outcomes)
        object.__setattr__(self, "counts", c)

    @property
    def totals(self) -> np.ndarray:
        return self.counts.sum(axis=0)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["probe_a", "probe_b", "outcome", "count"])
        for ia, a in enumerate(PROBE_LABELS):
            for ib, b in enumerate(PROBE_LABELS):
                for k, out in enumerate(self.outcomes):
                    w.writerow([a, b, out, int(self.counts[k, ia, ib])])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str, basis_map: BasisMap | None = None) -> "CoincidenceCounts":
        rows = list(csv.reader(io.StringIO(text)))
        if not rows:
            raise ValidationError("empty counts file")
        header = [h.strip().lower() for h in rows[0]]
        if header != ["probe_a", "probe_b", "outcome", "count"]:
            raise ValidationError(f"line 1: expected header probe_a,probe_b,outcome,count, got {rows[0]}")
        outcomes: list[str] = []
        seen: dict[tuple[str, str, str], int] = {}
        records = []
        for lineno, row in enumerate(rows[1:], start=2):
            if not row or all(not f.strip() for f in row):
                continue
            if len(row) != 4:
                raise ValidationError(f"line {lineno}: expected 4 fields, got {len(row)}")
            a, b, out = row[0].strip().upper(), row[1].strip().upper(), row[2].strip().upper()
            if a not in PROBE_LABELS:
                raise ValidationError(f"line {lineno}: unknown probe label {row[0]!r}")
            if b not in PROBE_LABELS:
                raise ValidationError(f"line {lineno}: unknown probe label {row[1]!r}")
            try:
                n = int(row[3])
            except ValueError:
                raise ValidationError(f"line {lineno}: count {row[3]!r} is not an integer") from None
            key = (a, b, out)
            if key in seen:
                raise ValidationError(f"line {lineno}: duplicate entry for {key}, first seen on line {seen[key]}")
            seen[key] = lineno
            if out not in outcomes:
                outcomes.append(out)
            records.append((a, b, out, n))
        if not records:
            raise ValidationError("counts file has a header but no data rows")
        counts = np.full((len(outcomes), 6, 6), -1, dtype=np.int64)
        kidx = {out: k for k, out in enumerate(outcomes)}
        aidx = {l: i for i, l in enumerate(PROBE_LABELS)}
        for a, b, out, n in records:
            counts[kidx[out], aidx[a], aidx[b]] = n
        missing = np.argwhere(counts < 0)
        if missing.size:
            k, ia, ib = missing[0]
            raise ValidationError(
                f"missing entry for probe pair ({PROBE_LABELS[ia]},{PROBE_LABELS[ib]}) outcome {outcomes[k]}"
            )
        return cls(tuple(outcomes), counts, basis_map or BasisMap.default())

    def to_json_dict(self) -> dict:
        body = {}
        for ia, a in enumerate(PROBE_LABELS):
            for ib, b in enumerate(PROBE_LABELS):
                body[f"{a},{b}"] = {out: int(self.counts[k, ia, ib]) for k, out in enumerate(self.outcomes)}
        return {"basis_map": self.basis_map.to_dict(), "counts": body}

    @classmethod
    def from_json_dict(cls, data: dict, basis_map: BasisMap | None = None) -> "CoincidenceCounts":
        if "counts" not in data:
            raise ValidationError("counts JSON must contain a 'counts' object")
        if basis_map is None:
            basis_map = BasisMap.from_dict(data["basis_map"]) if data.get("basis_map") else BasisMap.default()
        body = data["counts"]
        if not isinstance(body, dict) or not body:
            raise ValidationError("'counts' must be a non-empty object keyed by 'A,B' probe pairs")
        outcomes: list[str] = []
        aidx = {l: i for i, l in enumerate(PROBE_LABELS)}
        entries = {}
        for key, cell in body.items():
            parts = [p.strip().upper() for p in str(key).split(",")]
            if len(parts) != 2 or parts[0] not in PROBE_LABELS or parts[1] not in PROBE_LABELS:
                raise ValidationError(f"bad probe pair key {key!r}, expected e.g. 'H,V'")
            if not isinstance(cell, dict):
                raise ValidationError(f"key {key!r}: expected an object of outcome counts")
            cell = {str(k).upper(): v for k, v in cell.items()}
            for out in cell:
                if out not in outcomes:
                    outcomes.append(out)
            entries[(aidx[parts[0]], aidx[parts[1]])] = cell
        counts = np.zeros((len(outcomes), 6, 6), dtype=np.int64)
        for ia in range(6):
            for ib in range(6):
                cell = entries.get((ia, ib))
                if cell is None:
                    raise ValidationError(
                        f"missing probe pair ({PROBE_LABELS[ia]},{PROBE_LABELS[ib]}) in counts JSON"
                    )
                if set(cell) != set(outcomes):
                    raise ValidationError(
                        f"key {PROBE_LABELS[ia]},{PROBE_LABELS[ib]}: outcome labels differ from {outcomes}"
                    )
                for k, out in enumerate(outcomes):
                    try:
                        counts[k, ia, ib] = int(cell[out])
                    except (TypeError, ValueError):
                        raise ValidationError(
                            f"key {PROBE_LABELS[ia]},{PROBE_LABELS[ib]}: count {cell[out]!r} is not an integer"
                        ) from None
        return cls(tuple(outcomes), counts, basis_map)


@dataclass(frozen=True, eq=False)
class RelativeFrequencies:
    """Per-setting outcome frequencies p_k(a, b) with the underlying totals."""

    outcomes: tuple[str, ...]
    probs: np.ndarray
    totals: np.ndarray
    basis_map: BasisMap

    def __post_init__(self):
        outcomes = tuple(str(s) for s in self.outcomes)
        p = np.asarray(self.probs, dtype=float)
        t = np.asarray(self.totals, dtype=float)
        if p.shape != (len(outcomes), 6, 6):
            raise ValidationError(f"probs shape must be ({len(outcomes)}, 6, 6), got {p.shape}")
        if t.shape != (6, 6):
            raise ValidationError(f"totals shape must be (6, 6), got {t.shape}")
        if np.any(t <= 0):
            raise ValidationError("totals must be positive for every probe pair")
        if np.any(p < 0) or np.any(p > 1):
            raise ValidationError("frequencies must lie in [0, 1]")
        colsum = p.sum(axis=0)
        if float(np.max(np.abs(colsum - 1))) > 1e-12:
            raise ValidationError("frequencies must sum to 1 for every probe pair")
        p = np.ascontiguousarray(p)
        p.setflags(write=False)
        t = np.ascontiguousarray(t)
        t.setflags(write=False)
        object.__setattr__(self, "outcomes", outcomes)
        object.__setattr__(self, "probs", p)
        object.__setattr__(self, "totals", t)


def relative_frequencies(counts: CoincidenceCounts) -> RelativeFrequencies:
    """Exact count ratios p_k(a, b) = E_k(a, b) / E(a, b)."""
    totals = counts.totals.astype(float)
    probs = counts.counts.astype(float) / totals
    return RelativeFrequencies(counts.outcomes, probs, totals, counts.basis_map)


def sampling_matrices(basis_map: BasisMap | None = None) -> tuple[np.ndarray, np.ndarray]:
    """4x6 inversion matrices (alice, bob); rows 0, x, y, z, columns H..L.

    Row 0 is 1/3 everywhere because the six probe projectors resolve the
    identity three times over; each axis row carries +1 at the plus label and
    -1 at the minus label of that axis.
    """
    bm = basis_map or BasisMap.default()
    out = []
    for mapping in (bm.alice, bm.bob):
        s = np.zeros((4, 6))
        s[0, :] = 1.0 / 3.0
        for j, label in enumerate(PROBE_LABELS):
            axis, sign = mapping[label]
            s[_AXIS_ROW[axis], j] = float(sign)
        out.append(s)
    return out[0], out[1]


def reconstruct_correlations(
    freqs: RelativeFrequencies, basis_map: BasisMap | None = None
) -> list[PauliCorrelationMatrix]:
    """One Pauli coefficient matrix per outcome, C_k = S_A P_k S_B^T / 4."""
    bm = basis_map or freqs.basis_map
    sa, sb = sampling_matrices(bm)
    return [PauliCorrelationMatrix(sa @ freqs.probs[k] @ sb.T / 4) for k in range(len(freqs.outcomes))]


def reconstruct_povm(freqs: RelativeFrequencies, basis_map: BasisMap | None = None) -> PovmSet:
    """Linear-inversion POVM; completeness is exact by construction."""
    mats = reconstruct_correlations(freqs, basis_map)
    elements = tuple(pauli_compose(c) for c in mats)
    return PovmSet(freqs.outcomes, elements)


def physicality_correct(
    povm: PovmSet, margin: float = 1e-5, detect_tol: float = INDEFINITE_TOL
) -> tuple[PovmSet, float, float]:
    """Mix every element toward identity/m until the worst eigenvalue clears zero.

    Returns (corrected set, mixing probability p, lam).  lam is the worst
    negative eigenvalue magnitude plus the safety margin, or 0 when nothing is
    indefinite beyond detect_tol; p = lam / (lam + 1/m) for m outcomes, which
    leaves the completeness sum untouched.
    """
    if margin < 0:
        raise ValidationError(f"margin must be nonnegative, got {margin}")
    worst = -min(min_eigenvalue(el) for el in povm.elements)
    if worst <= detect_tol:
        return povm, 0.0, 0.0
    m = len(povm)
    lam = worst + margin
    p = lam / (lam + 1.0 / m)
    mix = np.eye(povm.elements[0].dim) / m
    corrected = tuple(
        HermitianOperator((1 - p) * el.matrix + p * mix, el.parties) for el in povm.elements
    )
    return PovmSet(povm.labels, corrected), p, lam


def combine_outcomes(counts: CoincidenceCounts, groups) -> CoincidenceCounts:
    """Merge outcome labels; groups must partition the existing outcomes."""
    groups = [tuple(str(l) for l in g) for g in groups]
    flat = [l for g in groups for l in g]
    if sorted(flat) != sorted(counts.outcomes) or len(set(flat)) != len(flat):
        raise ValidationError(f"groups {groups} do not partition the outcomes {counts.outcomes}")
    kidx = {out: k for k, out in enumerate(counts.outcomes)}
    merged = np.stack([sum(counts.counts[kidx[l]] for l in g) for g in groups])
    labels = tuple("+".join(g) for g in groups)
    return CoincidenceCounts(labels, merged, counts.basis_map)


def closest_bell_labels(povm: PovmSet) -> dict:
    """Best-overlap ideal Bell label for each element, with the overlap value.

    Overlap is tr(element * bell projector) / tr(element), in [0, 1] for a
    positive element.  Reconstructed outcome ordering is a detector property,
    so the match is reported rather than assumed.
    """
    ideal = bell_povm()
    out = {}
    for label, el in povm.items():
        t = el.trace()
        if t <= 0:
            raise ValidationError(f"element {label!r} has nonpositive trace")
        scores = {
            bl: float(np.real(np.trace(el.matrix @ bel.matrix))) / t for bl, bel in ideal.items()
        }
        best = max(scores, key=lambda k: (scores[k], k))
        out[label] = {"label": best, "overlap": scores[best]}
    return out
