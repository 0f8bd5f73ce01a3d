"""Conditioning of the derivative Vandermonde matrix, the symmetric-model
circle audit, and the covering check that patches the zero-location regimes
together."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import HypothesisViolationError, SingularityError, ValidationError
from .model import (
    FiniteVolumeModel,
    ModelSpec,
    Rectangle,
    _polyval,
    in_coexistence_strip,
    in_stability_region,
    in_two_phase_region,
)
from .zeros import ZeroSet


# ---------------------------------------------------------------------------
# Small dense Hermitian eigensolver (cyclic complex Jacobi). The matrices here
# are q x q with q <= 6; precision matters more than speed.


def _hermitian_eigenvalues(a: np.ndarray, sweeps: int = 100) -> np.ndarray:
    a = np.array(a, dtype=complex)
    n = a.shape[0]
    if n == 1:
        return np.array([a[0, 0].real])
    scale = max(float(np.abs(a).max()), 1e-300)
    for _ in range(sweeps):
        off = 0.0
        for p in range(n - 1):
            for q in range(p + 1, n):
                off = max(off, abs(a[p, q]))
        if off <= 1e-16 * scale:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                b = abs(a[p, q])
                if b <= 1e-18 * scale:
                    continue
                phase = a[p, q] / b
                tau = (a[q, q].real - a[p, p].real) / (2.0 * b)
                t = math.copysign(1.0, tau) / (abs(tau) + math.hypot(tau, 1.0)) if tau != 0 else 1.0
                c = 1.0 / math.hypot(t, 1.0)
                s = t * c
                u = np.eye(n, dtype=complex)
                u[p, p] = c
                u[q, q] = c
                u[p, q] = s * phase
                u[q, p] = -s * phase.conjugate()
                a = u.conj().T @ a @ u
    return np.sort(a.diagonal().real)


def _det_abs(matrix: np.ndarray) -> float:
    """|det| by Gaussian elimination with partial pivoting."""
    a = np.array(matrix, dtype=complex)
    n = a.shape[0]
    det = 1.0
    for k in range(n):
        piv = k + int(np.argmax(np.abs(a[k:, k])))
        if abs(a[piv, k]) == 0.0:
            return 0.0
        if piv != k:
            a[[k, piv]] = a[[piv, k]]
        det *= abs(a[k, k])
        a[k + 1 :, k:] -= np.outer(a[k + 1 :, k] / a[k, k], a[k, k:])
    return det


@dataclass
class VandermondeReport:
    Q: tuple[int, ...]
    z: complex
    b_values: dict[int, complex]
    det_abs: float
    det_pairwise: float
    norm: float
    inverse_norm: float
    inverse_bound: float

    @property
    def det_rel_err(self) -> float:
        return abs(self.det_abs - self.det_pairwise) / max(self.det_pairwise, 1e-300)

    @property
    def bound_ok(self) -> bool:
        return self.inverse_norm <= self.inverse_bound * (1.0 + 1e-8)


def vandermonde_report(fvm: FiniteVolumeModel, Q, z: complex) -> VandermondeReport:
    """Condition the power matrix of finite-volume logarithmic derivatives.

    Builds M[l, m] = b_m(z)^l for the phases of Q, computes |det M| both
    directly and as the pairwise product of gaps, and compares the spectral
    norm of the inverse against the norm^{q-1}/|det| bound. Requires every
    phase of Q to be almost stable at z on the kappa/L scale.
    """
    Q = tuple(sorted(fvm.base.check_phase(k) for k in Q))
    if len(Q) < 2 or len(set(Q)) != len(Q):
        raise ValidationError(f"need at least two distinct phases, got {Q}")
    if not fvm.domain.contains(z):
        raise ValidationError(f"{z} outside domain")
    if not in_stability_region(fvm.base, z, fvm.kappa / fvm.L, Q):
        from .errors import DomainError

        raise DomainError(
            f"{z} is not in the joint almost-stable region of {Q} at eps=kappa/L"
        )
    b = {k: complex(fvm.log_weight_L_deriv(k, z)) for k in Q}
    vals = [b[k] for k in Q]
    qn = len(Q)
    for i in range(qn):
        for j in range(i + 1, qn):
            if abs(vals[i] - vals[j]) < 1e-12:
                raise SingularityError(
                    f"derivatives of phases {Q[i]} and {Q[j]} coincide at {z} "
                    f"(gap {abs(vals[i] - vals[j]):.3e}); the power matrix is singular"
                )
    m = np.array([[v**l for v in vals] for l in range(qn)], dtype=complex)
    det_direct = _det_abs(m)
    det_pairwise = 1.0
    for i in range(qn):
        for j in range(i + 1, qn):
            det_pairwise *= abs(vals[j] - vals[i])
    lam = _hermitian_eigenvalues(m @ m.conj().T)
    norm = math.sqrt(float(lam[-1]))
    inverse_norm = 1.0 / math.sqrt(float(lam[0]))
    return VandermondeReport(
        Q=Q,
        z=complex(z),
        b_values=b,
        det_abs=det_direct,
        det_pairwise=det_pairwise,
        norm=norm,
        inverse_norm=inverse_norm,
        inverse_bound=norm ** (qn - 1) / det_direct,
    )


# ---------------------------------------------------------------------------
# Symmetric-model audit


@dataclass
class LeeYangReport:
    max_abs_re: float
    tolerance: float
    count_unit_segment: int
    zeros_checked: int
    symmetry_residual: float

    @property
    def on_axis(self) -> bool:
        return self.max_abs_re <= self.tolerance


def lee_yang_audit(
    fvm: FiniteVolumeModel,
    zeros: ZeroSet,
    plus: int,
    minus: int,
    grid=(21, 21),
    tol_sym: float = 1e-10,
    zero_tol: float | None = None,
) -> LeeYangReport:
    """Audit that zeros of a plus/minus symmetric model sit on the symmetry axis.

    The hypotheses are verified first on a grid: equal degeneracies, weights
    exchanged by w -> -conj(w), and perturbation seeds respecting the same
    reflection. Only then is the conclusion reported: the maximum |Re w|
    over the supplied zeros, against a tolerance proportional to the
    finite-volume error scale, plus the zero count on Im w in (0, 1].
    """
    base = fvm.base
    p, n = base.check_phase(plus), base.check_phase(minus)
    if p == n:
        raise ValidationError("plus and minus must be distinct phases")
    if base.phases[p].degeneracy != base.phases[n].degeneracy:
        raise HypothesisViolationError(
            f"degeneracies differ: q[{p}]={base.phases[p].degeneracy}, "
            f"q[{n}]={base.phases[n].degeneracy}"
        )
    dom = base.domain
    if abs(dom.re_lo + dom.re_hi) > 1e-12 * max(1.0, abs(dom.re_hi)):
        raise HypothesisViolationError(
            "domain is not symmetric under w -> -conj(w); cannot test the hypotheses"
        )
    mesh = dom.grid(*grid)
    mirror = -np.conj(mesh)
    wp = np.exp(base.phases[p].log_weight(mesh))
    wn = np.exp(base.phases[n].log_weight(mirror))
    sym_res = float(np.abs(wp - np.conj(wn)).max())
    if sym_res > tol_sym:
        raise HypothesisViolationError(
            f"weight symmetry fails on the grid: max residual {sym_res:.3e} > {tol_sym:g}"
        )
    up = _polyval(fvm.perturbations[p], mesh)
    un = _polyval(fvm.perturbations[n], mirror)
    seed_res = float(np.abs(up - np.conj(un)).max())
    if seed_res > tol_sym:
        raise HypothesisViolationError(
            f"perturbation seeds break the reflection symmetry: {seed_res:.3e} > {tol_sym:g}"
        )
    if zero_tol is None:
        zero_tol = 10.0 * math.exp(-fvm.tau * fvm.L)
    max_re = max((abs(w.z.real) for w in zeros.zeros), default=0.0)
    count_unit = sum(w.multiplicity for w in zeros.zeros if 0.0 < w.z.imag <= 1.0)
    return LeeYangReport(
        max_abs_re=max_re,
        tolerance=zero_tol,
        count_unit_segment=count_unit,
        zeros_checked=len(zeros.zeros),
        symmetry_residual=max(sym_res, seed_res),
    )


# ---------------------------------------------------------------------------
# Covering check


@dataclass
class CoveringReport:
    checked: int
    in_strip: int
    uncovered: list[complex]
    chi_empirical: float
    required_rho: float

    @property
    def covered(self) -> bool:
        return not self.uncovered


def covering_check(
    model: ModelSpec,
    domain: Rectangle,
    L: int,
    d: int,
    omega_L: float,
    gamma_L: float,
    rho_L: float,
    grid=(41, 41),
    multiple_points=None,
) -> CoveringReport:
    """Verify that the coexistence strip splits into two-phase shells and
    multiple-point discs.

    Every grid point of the strip where no phase dominates by omega_L/N must
    lie in a two-phase almost-stable region at scale gamma_L or within
    rho_L of a multiple point. The report lists uncovered points and the
    smallest rho_L/gamma_L ratio that would have covered everything.
    """
    if omega_L > gamma_L * L**d:
        raise ValidationError(
            f"omega_L={omega_L:.3g} must not exceed gamma_L*N={gamma_L * L ** d:.3g}"
        )
    if multiple_points is None:
        from .diagram import find_multiple_points

        multiple_points = find_multiple_points(model, grid)
    mp_locs = [mp.z for mp in multiple_points]
    N = int(L) ** int(d)
    eps_strip = omega_L / N
    pairs = [(m, n) for m in range(model.r) for n in range(m + 1, model.r)]
    mesh = domain.grid(*grid)
    checked = 0
    in_strip = 0
    uncovered: list[complex] = []
    required_rho = 0.0
    for z in mesh.ravel():
        z = complex(z)
        if not model.domain.contains(z):
            continue
        checked += 1
        if not in_coexistence_strip(model, z, eps_strip):
            continue
        in_strip += 1
        if any(in_two_phase_region(model, z, gamma_L, q) for q in pairs):
            continue
        dist = min((abs(z - zm) for zm in mp_locs), default=math.inf)
        required_rho = max(required_rho, dist)
        if dist >= rho_L:
            uncovered.append(z)
    if math.isinf(required_rho):
        warnings.warn("strip points needed a multiple-point disc but none was found", stacklevel=2)
    chi = required_rho / gamma_L if math.isfinite(required_rho) else math.inf
    return CoveringReport(
        checked=checked,
        in_strip=in_strip,
        uncovered=uncovered,
        chi_empirical=chi,
        required_rho=required_rho,
    )
