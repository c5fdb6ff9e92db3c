"""Two-qubit standard form by local filtering and rotation.

A positive two-qubit operator is brought to sum_w pi_w sigma_w (x) sigma_w in
two steps: alternating local filters X = (reduced operator)^(-1/2) strip the
single-arm Pauli terms, then an SO(3) pair from a signed singular value
decomposition diagonalizes the 3x3 correlation block.  Both rotations keep
determinant +1 so they lift to SU(2) conjugations.  The filters are rescaled
at the end so the transformed operator keeps the source trace.

The inverse transform maps the six Pauli eigenstate projectors to the skewed
pure states whose quasidistribution reproduces the original operator; signs
of the quasidistribution survive because the reweighting factors are positive.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConvergenceError, ValidationError
from .operators import (
    PAULIS,
    QUASI_AXES,
    HermitianOperator,
    _hermitize,
    pauli_eigenstate,
    pauli_expand,
)

_I2 = np.eye(2, dtype=complex)

# accumulated filters this large mean the iteration is running away, not
# converging; bail out before float overflow starts emitting warnings
_FILTER_CAP = 1e60


@dataclass(frozen=True)
class FormConfig:
    """Tolerances and caps for the standard-form iteration."""

    bloch_tol: float = 1e-12
    residual_tol: float = 1e-9
    max_iter: int = 10000
    eig_floor: float = 1e-12

    def __post_init__(self):
        if self.bloch_tol <= 0 or self.residual_tol <= 0 or self.eig_floor <= 0:
            raise ValidationError("tolerances must be positive")
        if self.max_iter < 1:
            raise ValidationError("max_iter must be at least 1")


@dataclass(frozen=True, eq=False)
class LocalTransform:
    """Invertible filters and unitary rotations applied as (U_A L_A) (x) (U_B L_B)."""

    filter_a: np.ndarray
    filter_b: np.ndarray
    rotation_a: np.ndarray
    rotation_b: np.ndarray

    def __post_init__(self):
        for name in ("filter_a", "filter_b"):
            m = np.asarray(getattr(self, name), dtype=complex)
            if m.shape != (2, 2):
                raise ValidationError(f"{name} must be 2x2")
            if abs(np.linalg.det(m)) <= 1e-10:
                raise ValidationError(f"{name} is numerically singular")
            object.__setattr__(self, name, _frozen(m))
        for name in ("rotation_a", "rotation_b"):
            u = np.asarray(getattr(self, name), dtype=complex)
            if u.shape != (2, 2):
                raise ValidationError(f"{name} must be 2x2")
            if float(np.max(np.abs(u @ u.conj().T - _I2))) > 1e-10:
                raise ValidationError(f"{name} is not unitary")
            object.__setattr__(self, name, _frozen(u))

    def to_dict(self) -> dict:
        def enc(m):
            return {"re": m.real.tolist(), "im": m.imag.tolist()}

        return {
            "filter_a": enc(self.filter_a),
            "filter_b": enc(self.filter_b),
            "rotation_a": enc(self.rotation_a),
            "rotation_b": enc(self.rotation_b),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "LocalTransform":
        def dec(d):
            return np.asarray(d["re"], dtype=float) + 1j * np.asarray(d["im"], dtype=float)

        try:
            return cls(*(dec(data[k]) for k in ("filter_a", "filter_b", "rotation_a", "rotation_b")))
        except (KeyError, TypeError) as exc:
            raise ValidationError(f"malformed transform record: {exc}") from exc


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class StandardForm:
    """Diagonal Pauli coefficients plus the transform that produced them."""

    pi: np.ndarray
    transform: LocalTransform
    source_trace: float
    residual: float

    def __post_init__(self):
        pi = np.asarray(self.pi, dtype=float)
        if pi.shape != (4,):
            raise ValidationError(f"pi must have shape (4,), got {pi.shape}")
        if pi[0] <= 0:
            raise ValidationError(f"pi[0] must be positive, got {pi[0]}")
        object.__setattr__(self, "pi", _frozen(pi))
        object.__setattr__(self, "source_trace", float(self.source_trace))
        object.__setattr__(self, "residual", float(self.residual))

    def to_dict(self) -> dict:
        d = {"pi": self.pi.tolist(), "residual": self.residual, "source_trace": self.source_trace}
        d.update(self.transform.to_dict())
        return d

    @classmethod
    def from_dict(cls, data: dict) -> "StandardForm":
        try:
            return cls(
                np.asarray(data["pi"], dtype=float),
                LocalTransform.from_dict(data),
                float(data["source_trace"]),
                float(data["residual"]),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ValidationError(f"malformed standard form record: {exc}") from exc


def _ptrace_b(m: np.ndarray) -> np.ndarray:
    return m.reshape(2, 2, 2, 2).trace(axis1=1, axis2=3)


def _ptrace_a(m: np.ndarray) -> np.ndarray:
    return m.reshape(2, 2, 2, 2).trace(axis1=0, axis2=2)


def _bloch_residual(rho: np.ndarray) -> float:
    ra, rb = _ptrace_b(rho), _ptrace_a(rho)
    vals = [abs(np.trace(r @ p).real) for r in (ra, rb) for p in PAULIS[1:]]
    return max(vals)


def _inv_sqrt(h: np.ndarray, floor: float) -> np.ndarray:
    w, v = np.linalg.eigh(h)
    w = np.maximum(w, floor)
    return (v * (w**-0.5)) @ v.conj().T


def remove_local_terms(
    op: HermitianOperator, cfg: FormConfig = FormConfig()
) -> tuple[HermitianOperator, np.ndarray, np.ndarray]:
    """Alternating local filters until both single-arm Bloch vectors vanish.

    Returns (filtered operator, filter_a, filter_b) with
    filtered = (filter_a (x) filter_b) op (...)^dagger and the filters scaled
    so the output trace equals the input trace.  Requires a positive operator;
    rank-deficient inputs with nonzero local terms do not converge and raise
    ConvergenceError with the residual reached.
    """
    if op.parties != (2, 2):
        raise ValidationError(f"standard form needs a two-qubit operator, got parties {op.parties}")
    t_in = op.trace()
    if t_in <= 0:
        raise ValidationError(f"operator trace must be positive, got {t_in}")
    rho = np.asarray(op.matrix) / t_in
    ma = _I2.copy()
    mb = _I2.copy()
    res = _bloch_residual(rho)
    converged = res < cfg.bloch_tol
    for _ in range(cfg.max_iter):
        if converged:
            break
        # fold each renormalization into the filter so the accumulated
        # product stays O(1) instead of growing exponentially
        xa = _inv_sqrt(_ptrace_b(rho), cfg.eig_floor)
        k = np.kron(xa, _I2)
        rho = _hermitize(k @ rho @ k.conj().T)
        t = rho.trace().real
        rho /= t
        ma = (xa / t**0.5) @ ma
        xb = _inv_sqrt(_ptrace_a(rho), cfg.eig_floor)
        k = np.kron(_I2, xb)
        rho = _hermitize(k @ rho @ k.conj().T)
        t = rho.trace().real
        rho /= t
        mb = (xb / t**0.5) @ mb
        res = _bloch_residual(rho)
        converged = res < cfg.bloch_tol
        if max(np.max(np.abs(ma)), np.max(np.abs(mb))) > _FILTER_CAP:
            raise ConvergenceError(
                f"local filters diverged at Bloch residual {res:.3e}; "
                "the operator has no full-rank standard form",
                residual=res,
            )
    if not converged:
        raise ConvergenceError(
            f"local-term removal stalled at Bloch residual {res:.3e} "
            f"after {cfg.max_iter} iterations",
            residual=res,
        )
    k = np.kron(ma, mb)
    out = _hermitize(k @ op.matrix @ k.conj().T)
    scale = t_in / out.trace().real
    ma = ma * scale**0.25
    mb = mb * scale**0.25
    return HermitianOperator(out * scale, (2, 2)), ma, mb


def su2_from_so3(r: np.ndarray) -> np.ndarray:
    """SU(2) lift of a rotation: U sigma_j U^dag = sum_i r[i, j] sigma_i."""
    r = np.asarray(r, dtype=float)
    if r.shape != (3, 3) or np.max(np.abs(r @ r.T - np.eye(3))) > 1e-9 or np.linalg.det(r) < 0:
        raise ValidationError("expected a proper 3x3 rotation matrix")
    ang = float(np.arccos(np.clip((np.trace(r) - 1) / 2, -1.0, 1.0)))
    if ang < 1e-12:
        return _I2.copy()
    if np.pi - ang < 1e-6:
        # Axis from the dominant column of (r + 1)/2; stable at angle pi.
        m = (r + np.eye(3)) / 2
        k = int(np.argmax(np.diag(m)))
        axis = m[:, k] / np.sqrt(max(m[k, k], 1e-30))
    else:
        axis = np.array([r[2, 1] - r[1, 2], r[0, 2] - r[2, 0], r[1, 0] - r[0, 1]])
        axis = axis / (2 * np.sin(ang))
    axis = axis / np.linalg.norm(axis)
    n_dot_sigma = axis[0] * PAULIS[1] + axis[1] * PAULIS[2] + axis[2] * PAULIS[3]
    return np.cos(ang / 2) * _I2 - 1j * np.sin(ang / 2) * n_dot_sigma


def so3_from_su2(u: np.ndarray) -> np.ndarray:
    """Rotation matrix r[i, j] = tr(sigma_i U sigma_j U^dag) / 2."""
    u = np.asarray(u, dtype=complex)
    r = np.empty((3, 3))
    for j in range(3):
        conj = u @ PAULIS[j + 1] @ u.conj().T
        for i in range(3):
            r[i, j] = np.trace(PAULIS[i + 1] @ conj).real / 2
    return r


def diagonalize_correlations(
    op: HermitianOperator, cfg: FormConfig = FormConfig()
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Diagonal Pauli coefficients and the SU(2) pair that realizes them.

    Expects vanishing local terms.  The diagonal is ordered by decreasing
    magnitude with signs carried along; ties prefer the nonnegative entry,
    then the original axis order.  Both underlying rotations have det +1, so
    the net sign of the diagonal is preserved.
    """
    c = pauli_expand(op).coeffs
    local = max(float(np.max(np.abs(c[0, 1:]))), float(np.max(np.abs(c[1:, 0]))))
    if local > cfg.residual_tol:
        raise ValidationError(f"local Pauli terms not removed (largest {local:.3e})")
    block = c[1:, 1:]
    off = float(np.max(np.abs(block - np.diag(np.diag(block)))))
    if off < 1e-12:
        diag = np.diag(block).astype(float).copy()
        ra = np.eye(3)
        rb = np.eye(3)
    else:
        u, s, vt = np.linalg.svd(block)
        u, vt, diag = u.copy(), vt.copy(), s.astype(float).copy()
        if np.linalg.det(u) < 0:
            u[:, 2] *= -1
            diag[2] *= -1
        if np.linalg.det(vt) < 0:
            vt[2, :] *= -1
            diag[2] *= -1
        ra = u.T
        rb = vt
    order = sorted(range(3), key=lambda i: (-abs(diag[i]), 0 if diag[i] >= 0 else 1, i))
    perm = np.zeros((3, 3))
    for slot, src in enumerate(order):
        perm[slot, src] = 1.0
    if np.linalg.det(perm) < 0:
        perm[2, :] *= -1
    ra = perm @ ra
    rb = perm @ rb
    diag = diag[order]
    pi = np.array([c[0, 0], diag[0], diag[1], diag[2]])
    return pi, su2_from_so3(ra), su2_from_so3(rb)


def standard_operator(pi) -> HermitianOperator:
    """sum_w pi_w sigma_w (x) sigma_w for a 4-vector or StandardForm."""
    if isinstance(pi, StandardForm):
        pi = pi.pi
    pi = np.asarray(pi, dtype=float)
    if pi.shape != (4,):
        raise ValidationError(f"pi must have shape (4,), got {pi.shape}")
    m = sum(pi[w] * np.kron(PAULIS[w], PAULIS[w]) for w in range(4))
    return HermitianOperator(m, (2, 2))


def to_standard_form(op: HermitianOperator, cfg: FormConfig = FormConfig()) -> StandardForm:
    """Filter, rotate, and report the diagonal form of a positive two-qubit operator."""
    filtered, ma, mb = remove_local_terms(op, cfg)
    pi, ua, ub = diagonalize_correlations(filtered, cfg)
    k = np.kron(ua, ub)
    rotated = _hermitize(k @ filtered.matrix @ k.conj().T)
    target = np.zeros((4, 4))
    target[np.arange(4), np.arange(4)] = pi
    residual = float(np.max(np.abs(pauli_expand(rotated).coeffs - target)))
    if residual > cfg.residual_tol:
        raise ConvergenceError(
            f"standard form residual {residual:.3e} exceeds {cfg.residual_tol:.1e}",
            residual=residual,
        )
    transform = LocalTransform(ma, mb, ua, ub)
    return StandardForm(pi=pi, transform=transform, source_trace=op.trace(), residual=residual)


@dataclass(frozen=True, eq=False)
class TildeDecomposition:
    """Skewed pure-state decomposition of the original operator."""

    states_a: np.ndarray
    states_b: np.ndarray
    grid: np.ndarray

    def __post_init__(self):
        for name in ("states_a", "states_b"):
            s = np.asarray(getattr(self, name), dtype=complex)
            if s.shape != (6, 2):
                raise ValidationError(f"{name} must have shape (6, 2)")
            object.__setattr__(self, name, _frozen(s))
        g = np.asarray(self.grid, dtype=float)
        if g.shape != (6, 6):
            raise ValidationError("grid must have shape (6, 6)")
        object.__setattr__(self, "grid", _frozen(g))

    def recompose(self) -> HermitianOperator:
        m = np.zeros((4, 4), dtype=complex)
        for k in range(6):
            pa = np.outer(self.states_a[k], self.states_a[k].conj())
            for l in range(6):
                if self.grid[k, l] == 0.0:
                    continue
                pb = np.outer(self.states_b[l], self.states_b[l].conj())
                m += self.grid[k, l] * np.kron(pa, pb)
        return HermitianOperator(_hermitize(m), (2, 2))


def _fix_phase(v: np.ndarray) -> np.ndarray:
    k = int(np.argmax(np.abs(v)))
    ph = v[k] / abs(v[k])
    return v / ph


def back_transform(form: StandardForm, qdist) -> TildeDecomposition:
    """Pull a standard-form quasidistribution back to the original operator.

    Each Pauli eigenstate |a> maps to L^(-1) U^dag |a> normalized; the grid
    entry picks up both normalizations, so its sign never changes and the
    recomposition sum reproduces the source operator.  `qdist` needs only a
    (6, 6) `grid` attribute.
    """
    grid = np.asarray(qdist.grid, dtype=float)
    if grid.shape != (6, 6):
        raise ValidationError("quasidistribution grid must have shape (6, 6)")
    t = form.transform
    states = [pauli_eigenstate(axis, sign) for axis, sign in QUASI_AXES]
    out_states = []
    norms = []
    for m_filter, m_rot in ((t.filter_a, t.rotation_a), (t.filter_b, t.rotation_b)):
        back = np.linalg.inv(m_filter) @ m_rot.conj().T
        side_states = np.empty((6, 2), dtype=complex)
        side_norms = np.empty(6)
        for k, s in enumerate(states):
            v = back @ s
            n = float(np.vdot(v, v).real)
            if n <= 1e-30:
                raise ValidationError("filter inversion produced a null state")
            side_states[k] = _fix_phase(v / np.sqrt(n))
            side_norms[k] = n
        out_states.append(side_states)
        norms.append(side_norms)
    tilde_grid = grid * np.outer(norms[0], norms[1])
    return TildeDecomposition(out_states[0], out_states[1], tilde_grid)
