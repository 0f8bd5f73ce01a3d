"""Phase-weight models and their stability structure.

A model is a finite family of non-vanishing weights zeta_m(z) = exp(P_m(z)),
P_m a complex polynomial, over a rectangular domain. Everything downstream
works with the stored exponents, so no log is ever recovered from a weight
and there is no branch ambiguity. This module evaluates exponents and their
derivatives, classifies which phases are stable or almost stable at a point,
checks the non-degeneracy assumptions a well-posed model must satisfy, and
builds finite-volume companions with controlled analytic perturbations.
"""

from __future__ import annotations

import cmath
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DomainError,
    NoConvergenceError,
    SingularityError,
    SpuriousRootError,
    ValidationError,
)

# Stability tolerance, relative to log_max. Exact ties occur only on
# measure-zero sets; symmetry-aware tests cover the cases we assert.
TOL_STAB = 1e-12

# Perturbation sup norms are measured on this grid (per axis).
_SUP_GRID = 101


def _require_finite(z: complex, what: str = "point") -> complex:
    z = complex(z)
    if not (math.isfinite(z.real) and math.isfinite(z.imag)):
        raise ValidationError(f"{what} must be finite, got {z!r}")
    return z


@dataclass(frozen=True)
class Rectangle:
    """Axis-aligned rectangle in the complex plane."""

    re_lo: float
    re_hi: float
    im_lo: float
    im_hi: float

    def __post_init__(self):
        if not (self.re_lo < self.re_hi and self.im_lo < self.im_hi):
            raise ValidationError(f"rectangle has empty interior: {self}")

    @property
    def width(self) -> float:
        return self.re_hi - self.re_lo

    @property
    def height(self) -> float:
        return self.im_hi - self.im_lo

    @property
    def min_side(self) -> float:
        return min(self.width, self.height)

    @property
    def center(self) -> complex:
        return complex(0.5 * (self.re_lo + self.re_hi), 0.5 * (self.im_lo + self.im_hi))

    def contains(self, z: complex, pad: float = 0.0) -> bool:
        return (
            self.re_lo - pad <= z.real <= self.re_hi + pad
            and self.im_lo - pad <= z.imag <= self.im_hi + pad
        )

    def corners(self) -> list[complex]:
        return [
            complex(self.re_lo, self.im_lo),
            complex(self.re_hi, self.im_lo),
            complex(self.re_hi, self.im_hi),
            complex(self.re_lo, self.im_hi),
        ]

    def grid(self, nx: int, ny: int) -> np.ndarray:
        """Complex (ny, nx) mesh covering the rectangle, endpoints included."""
        xs = np.linspace(self.re_lo, self.re_hi, nx)
        ys = np.linspace(self.im_lo, self.im_hi, ny)
        return xs[None, :] + 1j * ys[:, None]


@dataclass(frozen=True)
class PhaseSpec:
    """One phase: a name, an integer degeneracy, and exponent coefficients c_0..c_k."""

    name: str
    degeneracy: int
    exponent: tuple[complex, ...]

    def __post_init__(self):
        if self.degeneracy < 1:
            raise ValidationError(f"phase {self.name!r}: degeneracy must be >= 1")
        if len(self.exponent) == 0:
            raise ValidationError(f"phase {self.name!r}: empty exponent coefficient list")
        object.__setattr__(self, "exponent", tuple(complex(c) for c in self.exponent))
        for c in self.exponent:
            _require_finite(c, f"phase {self.name!r} coefficient")

    def log_weight(self, z):
        """P(z), scalar or elementwise on arrays."""
        return _polyval(self.exponent, z)

    def log_weight_deriv(self, z):
        """P'(z)."""
        return _polyval(_polyder(self.exponent), z)


def _polyval(coeffs: tuple[complex, ...], z):
    acc = 0j if np.isscalar(z) else np.zeros(np.shape(z), dtype=complex)
    for c in reversed(coeffs):
        acc = acc * z + c
    return acc


def _polyder(coeffs: tuple[complex, ...]) -> tuple[complex, ...]:
    if len(coeffs) == 1:
        return (0j,)
    return tuple(j * c for j, c in enumerate(coeffs) if j > 0)


@dataclass(frozen=True)
class ModelSpec:
    """A family of r >= 2 phases over a rectangular domain.

    coordinate_map records how the field coordinate w is presented: "identity"
    leaves it alone, "exponential" means the display coordinate is z = e^w,
    so the unit circle |z| = 1 is the line Re w = 0. All computations happen
    in the field coordinate.
    """

    phases: tuple[PhaseSpec, ...]
    domain: Rectangle
    alpha_ref: float = 1e-3
    coordinate_map: str = "identity"

    def __post_init__(self):
        object.__setattr__(self, "phases", tuple(self.phases))
        if len(self.phases) < 2:
            raise ValidationError("a model needs at least two phases")
        names = [p.name for p in self.phases]
        if len(set(names)) != len(names):
            raise ValidationError(f"phase names must be unique, got {names}")
        if self.alpha_ref <= 0:
            raise ValidationError("alpha_ref must be positive")
        if self.coordinate_map not in ("identity", "exponential"):
            raise ValidationError(f"unknown coordinate_map {self.coordinate_map!r}")

    @property
    def r(self) -> int:
        return len(self.phases)

    @property
    def degeneracies(self) -> tuple[int, ...]:
        return tuple(p.degeneracy for p in self.phases)

    def log_weights(self, z) -> np.ndarray:
        """All P_m(z) stacked along the first axis."""
        return np.stack([p.log_weight(np.asarray(z)) for p in self.phases])

    def v_values(self, z) -> np.ndarray:
        """All P_m'(z) stacked along the first axis."""
        return np.stack([p.log_weight_deriv(np.asarray(z)) for p in self.phases])

    def check_phase(self, m: int) -> int:
        if not (0 <= m < self.r):
            raise ValidationError(f"phase index {m} out of range 0..{self.r - 1}")
        return m


@dataclass(frozen=True)
class StabilityReport:
    """Which phases are stable (and almost stable) at a query point."""

    z: complex
    log_max: float
    stable_set: frozenset[int]
    eps_stable_sets: dict[float, frozenset[int]] = field(default_factory=dict)


@dataclass
class AssumptionViolation:
    location: complex
    assumption: str
    margin: float


@dataclass
class AssumptionReport:
    """Outcome of the sampled non-degeneracy checks."""

    alpha_estimate: float
    positivity_ok: bool
    positivity_min: float
    pair_samples: dict[tuple[int, int], list[complex]]
    convexity_results: list[tuple[complex, bool, float]]
    violations: list[AssumptionViolation]

    @property
    def ok(self) -> bool:
        return self.positivity_ok and not self.violations


@dataclass(frozen=True)
class FiniteVolumeModel:
    """A model together with volume N = L^d and synthetic finite-volume data.

    The finite-volume exponent of phase m is P_m(z) + e^{-tau L} u_m(z) with
    sup |u_m| <= 1 over the domain, so the log-ratio bound holds by
    construction. The synthetic error term is
    Xi(z) = xi_strength * e^{-tau L} * N * sum_m q_m zeta_m^{(L)}(z)^N,
    analytic and within the admissible envelope.
    """

    base: ModelSpec
    L: int
    d: int
    N: int
    tau: float
    kappa: float
    perturbations: tuple[tuple[complex, ...], ...]
    xi_strength: float

    @property
    def phases(self):
        return self.base.phases

    @property
    def domain(self) -> Rectangle:
        return self.base.domain

    @property
    def degeneracies(self) -> tuple[int, ...]:
        return self.base.degeneracies

    def perturbation_scale(self) -> float:
        return math.exp(-self.tau * self.L)

    def log_weight_L(self, m: int, z):
        """log zeta_m^{(L)}(z) = P_m(z) + e^{-tau L} u_m(z)."""
        self.base.check_phase(m)
        val = self.base.phases[m].log_weight(z)
        u = self.perturbations[m]
        if any(u):
            val = val + self.perturbation_scale() * _polyval(u, z)
        return val

    def log_weight_L_deriv(self, m: int, z):
        self.base.check_phase(m)
        val = self.base.phases[m].log_weight_deriv(z)
        u = self.perturbations[m]
        if any(u):
            val = val + self.perturbation_scale() * _polyval(_polyder(u), z)
        return val

    def log_weights_L(self, z) -> np.ndarray:
        return np.stack([self.log_weight_L(m, np.asarray(z)) for m in range(self.base.r)])


# ---------------------------------------------------------------------------
# Pointwise evaluation


def eval_log_zeta(model: ModelSpec, m: int, z: complex) -> complex:
    """Exponent P_m(z); exp of the result is the phase weight zeta_m(z)."""
    model.check_phase(m)
    z = _require_finite(z)
    return complex(model.phases[m].log_weight(z))


def eval_v(model: ModelSpec, m: int, z: complex) -> complex:
    """Logarithmic derivative v_m(z) = P_m'(z), exact from the coefficients."""
    model.check_phase(m)
    z = _require_finite(z)
    return complex(model.phases[m].log_weight_deriv(z))


def _stab_tol(log_max: float) -> float:
    return TOL_STAB * max(1.0, abs(log_max))


def stability(model: ModelSpec, z: complex, eps_list=()) -> StabilityReport:
    """Classify the phases stable at z, plus almost-stable sets for each eps.

    Raises DomainError if z lies outside the model domain.
    """
    z = _require_finite(z)
    if not model.domain.contains(z):
        raise DomainError(f"{z} outside model domain {model.domain}")
    re_p = np.real(model.log_weights(z))
    log_max = float(re_p.max())
    stable = frozenset(np.flatnonzero(re_p >= log_max - _stab_tol(log_max)).tolist())
    eps_sets = {}
    for eps in eps_list:
        if eps < 0:
            raise ValidationError(f"eps must be >= 0, got {eps}")
        eps_sets[float(eps)] = frozenset(np.flatnonzero(re_p > log_max - eps).tolist())
    return StabilityReport(z=z, log_max=log_max, stable_set=stable, eps_stable_sets=eps_sets)


def almost_stable_set(model: ModelSpec, z: complex, eps: float) -> frozenset[int]:
    """Phases m with Re P_m(z) > log_max - eps (the eps-almost-stable set)."""
    re_p = np.real(model.log_weights(z))
    return frozenset(np.flatnonzero(re_p > re_p.max() - eps).tolist())


def in_stability_region(model: ModelSpec, z: complex, eps: float, q_set) -> bool:
    """True if every phase of q_set is eps-almost-stable at z."""
    re_p = np.real(model.log_weights(z))
    log_max = re_p.max()
    return all(re_p[m] > log_max - eps for m in q_set)


def in_two_phase_region(model: ModelSpec, z: complex, eps: float, q_set) -> bool:
    """True if z lies in the region where exactly the phases of q_set are
    almost stable: all of q_set within eps of the top, everything else
    strictly below the top by more than eps/2."""
    q_set = frozenset(q_set)
    re_p = np.real(model.log_weights(z))
    log_max = re_p.max()
    for m in range(model.r):
        if m in q_set:
            if not re_p[m] > log_max - eps:
                return False
        elif re_p[m] >= log_max - eps / 2:
            return False
    return True


def in_coexistence_strip(model: ModelSpec, z: complex, eps: float) -> bool:
    """True where no single phase dominates by more than eps/2, i.e. the
    second-largest exponent real part is within eps/2 of the largest."""
    re_p = np.sort(np.real(model.log_weights(z)))
    return bool(re_p[-2] >= re_p[-1] - eps / 2)


# ---------------------------------------------------------------------------
# Assumption checks


def _coexistence_seeds(model: ModelSpec, m: int, n: int, grid: np.ndarray):
    """Midpoints of grid edges on which Re(P_m - P_n) changes sign."""
    phi = np.real(model.phases[m].log_weight(grid) - model.phases[n].log_weight(grid))
    seeds = []
    sgn = np.signbit(phi)
    flip_h = sgn[:, 1:] != sgn[:, :-1]
    flip_v = sgn[1:, :] != sgn[:-1, :]
    for i, j in zip(*np.nonzero(flip_h)):
        seeds.append(0.5 * (grid[i, j] + grid[i, j + 1]))
    for i, j in zip(*np.nonzero(flip_v)):
        seeds.append(0.5 * (grid[i, j] + grid[i + 1, j]))
    return seeds


def _multipoint_seeds(model: ModelSpec, grid: np.ndarray, slack: float):
    """Grid points where at least three exponents tie to within slack."""
    re_p = np.real(model.log_weights(gr := grid))
    top = np.max(re_p, axis=0)
    near = np.sum(re_p >= top - slack, axis=0)
    out = []
    for i, j in zip(*np.nonzero(near >= 3)):
        re_here = re_p[:, i, j]
        triple = tuple(int(k) for k in np.argsort(re_here)[::-1][:3])
        out.append((complex(gr[i, j]), triple))
    return out


def convexity_margin(points: list[complex]) -> float:
    """Signed strict-convexity margin of a point family in the plane.

    Orders the points by angle about their centroid and returns the minimum
    cross product of consecutive edge vectors; positive means the points are
    vertices of a strictly convex polygon, zero or negative flags degeneracy.
    """
    if len(points) < 3:
        raise ValidationError("need at least three points for a convexity check")
    c = sum(points) / len(points)
    ordered = sorted(points, key=lambda p: cmath.phase(p - c))
    s = len(ordered)
    margin = math.inf
    for k in range(s):
        a, b, cc = ordered[k], ordered[(k + 1) % s], ordered[(k + 2) % s]
        e1, e2 = b - a, cc - b
        cross = e1.real * e2.imag - e1.imag * e2.real
        margin = min(margin, cross)
    return margin


def check_assumption_A(model: ModelSpec, grid=(41, 41)) -> AssumptionReport:
    """Sample the domain and test positivity, pairwise non-degeneracy of the
    logarithmic derivatives on coexistence sets, and strict convexity of the
    derivative polygon at multiple points."""
    from .diagram import find_coexistence_point, find_multiple_point

    nx, ny = grid
    if nx < 4 or ny < 4:
        raise ValidationError("need at least 4 grid points per axis")
    mesh = model.domain.grid(nx, ny)
    cell = max(model.domain.width / (nx - 1), model.domain.height / (ny - 1))

    log_max_grid = np.max(np.real(model.log_weights(mesh)), axis=0)
    positivity_min = float(np.exp(log_max_grid.min()))
    positivity_ok = positivity_min > 0.0

    violations: list[AssumptionViolation] = []
    pair_samples: dict[tuple[int, int], list[complex]] = {}
    alpha = math.inf
    for m in range(model.r):
        for n in range(m + 1, model.r):
            pts: list[complex] = []
            for seed in _coexistence_seeds(model, m, n, mesh):
                try:
                    z = find_coexistence_point(model, m, n, seed, radius=cell)
                except NoConvergenceError:
                    continue
                if any(abs(z - p) < 0.5 * cell for p in pts):
                    continue
                pts.append(z)
                gap = abs(eval_v(model, m, z) - eval_v(model, n, z))
                alpha = min(alpha, gap)
                if gap < model.alpha_ref:
                    violations.append(AssumptionViolation(z, "A3", gap))
            pair_samples[(m, n)] = pts

    convexity_results: list[tuple[complex, bool, float]] = []
    seen_mp: list[complex] = []
    # Slack scaled to the grid: a triple tie is detectable once the exponent
    # spread across one cell exceeds it.
    v_scale = float(np.abs(model.v_values(model.domain.center)).max()) + 1.0
    for seed, triple in _multipoint_seeds(model, mesh, slack=3.0 * cell * v_scale):
        try:
            mp = find_multiple_point(model, triple, seed)
            z_mp = mp.z
        except NoConvergenceError:
            continue
        except (SingularityError, SpuriousRootError):
            # the tie structure itself is the diagnostic: a degenerate tie
            # set cannot carry a strictly convex derivative polygon
            if not any(abs(seed - p) < 2.0 * cell for p in seen_mp):
                seen_mp.append(seed)
                convexity_results.append((seed, False, 0.0))
                violations.append(AssumptionViolation(seed, "A4", 0.0))
            continue
        if any(abs(z_mp - p) < 1e-8 for p in seen_mp):
            continue
        seen_mp.append(z_mp)
        vs = [eval_v(model, k, z_mp) for k in sorted(mp.stable_set)]
        margin = convexity_margin(vs)
        ok = margin > 0.0
        convexity_results.append((z_mp, ok, margin))
        if not ok:
            violations.append(AssumptionViolation(z_mp, "A4", margin))

    if alpha is math.inf:
        alpha = 0.0  # no coexistence found anywhere; nothing to bound
    return AssumptionReport(
        alpha_estimate=alpha,
        positivity_ok=positivity_ok,
        positivity_min=positivity_min,
        pair_samples=pair_samples,
        convexity_results=convexity_results,
        violations=violations,
    )


# ---------------------------------------------------------------------------
# Finite volume


def finite_volume(
    model: ModelSpec,
    L: int,
    d: int,
    tau: float,
    kappa: float = 1.0,
    perturbation=None,
    xi_strength: float = 0.0,
) -> FiniteVolumeModel:
    """Attach a volume N = L^d and synthetic finite-volume perturbations.

    perturbation is an optional per-phase list of polynomial coefficients
    u_m; each non-zero u_m is rescaled so its sup over the domain grid
    equals 1, which keeps the log-ratio within e^{-tau L} by construction.
    """
    if L < 1 or d < 1:
        raise ValidationError(f"L and d must be positive integers, got L={L}, d={d}")
    if tau <= 0:
        raise ValidationError(f"tau must be positive, got {tau}")
    if kappa <= 0:
        raise ValidationError(f"kappa must be positive, got {kappa}")
    if xi_strength < 0:
        raise ValidationError(f"xi_strength must be >= 0, got {xi_strength}")

    if perturbation is None:
        perturbation = [(0j,)] * model.r
    if len(perturbation) != model.r:
        raise ValidationError(
            f"need one perturbation seed per phase ({model.r}), got {len(perturbation)}"
        )
    mesh = model.domain.grid(_SUP_GRID, _SUP_GRID)
    scaled = []
    for u in perturbation:
        u = tuple(complex(c) for c in u) if len(u) else (0j,)
        sup = float(np.abs(_polyval(u, mesh)).max())
        if sup > 0.0:
            u = tuple(c / sup for c in u)
        scaled.append(u)
    return FiniteVolumeModel(
        base=model,
        L=int(L),
        d=int(d),
        N=int(L) ** int(d),
        tau=float(tau),
        kappa=float(kappa),
        perturbations=tuple(scaled),
        xi_strength=float(xi_strength),
    )


def random_perturbation(model: ModelSpec, seed: int, degree: int = 3):
    """Deterministic per-phase random polynomial seeds for finite_volume."""
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(model.r):
        c = rng.normal(size=degree + 1) + 1j * rng.normal(size=degree + 1)
        out.append(tuple(complex(x) for x in c))
    return out


def symmetric_pair_perturbation(seed: int, degree: int = 3):
    """Two perturbation seeds (u_plus, u_minus) related by the reflection
    u_plus(w) = conj(u_minus(-conj(w))), i.e. coefficient-wise
    c_j = (-1)^j conj(a_j)."""
    rng = np.random.default_rng(seed)
    a = rng.normal(size=degree + 1) + 1j * rng.normal(size=degree + 1)
    u_minus = tuple(complex(x) for x in a)
    u_plus = tuple(((-1) ** j) * complex(x).conjugate() for j, x in enumerate(a))
    return u_plus, u_minus


def xi_normalized(fvm: FiniteVolumeModel, z) -> complex:
    """Synthetic error term divided by zeta(z)^N, evaluated in log space."""
    logw = fvm.log_weights_L(np.asarray(z))
    log_max = np.max(np.real(fvm.base.log_weights(np.asarray(z))), axis=0)
    q = np.asarray(fvm.degeneracies, dtype=float)
    terms = np.exp(fvm.N * (logw - log_max))
    s = np.tensordot(q, terms, axes=(0, 0))
    out = fvm.xi_strength * math.exp(-fvm.tau * fvm.L) * fvm.N * s
    return complex(out) if np.isscalar(z) or np.shape(z) == () else out


# ---------------------------------------------------------------------------
# Model files

_SCHEMA_HINT = (
    'expected {"phases": [{"name": str, "q": int, "coeffs": [[re, im], ...]}, ...], '
    '"domain": {"re": [lo, hi], "im": [lo, hi]}, "coordinate_map": "identity"|"exponential"}'
)


def _pair_to_complex(v, where: str) -> complex:
    if not (isinstance(v, (list, tuple)) and len(v) == 2):
        raise ValidationError(f"{where}: complex numbers are [re, im] pairs; {_SCHEMA_HINT}")
    return complex(float(v[0]), float(v[1]))


def model_from_dict(data: dict) -> ModelSpec:
    """Build a ModelSpec from the JSON-compatible model-file structure."""
    try:
        phases = []
        for k, p in enumerate(data["phases"]):
            coeffs = [_pair_to_complex(c, f"phases[{k}].coeffs") for c in p["coeffs"]]
            phases.append(PhaseSpec(name=str(p["name"]), degeneracy=int(p["q"]), exponent=tuple(coeffs)))
        dom = data["domain"]
        rect = Rectangle(float(dom["re"][0]), float(dom["re"][1]), float(dom["im"][0]), float(dom["im"][1]))
    except (KeyError, TypeError, IndexError) as exc:
        raise ValidationError(f"malformed model file ({exc}); {_SCHEMA_HINT}") from exc
    return ModelSpec(
        phases=tuple(phases),
        domain=rect,
        alpha_ref=float(data.get("alpha_ref", 1e-3)),
        coordinate_map=str(data.get("coordinate_map", "identity")),
    )


def model_to_dict(model: ModelSpec) -> dict:
    return {
        "phases": [
            {"name": p.name, "q": p.degeneracy, "coeffs": [[c.real, c.imag] for c in p.exponent]}
            for p in model.phases
        ],
        "domain": {
            "re": [model.domain.re_lo, model.domain.re_hi],
            "im": [model.domain.im_lo, model.domain.im_hi],
        },
        "alpha_ref": model.alpha_ref,
        "coordinate_map": model.coordinate_map,
    }


def load_model(path) -> ModelSpec:
    """Read a model definition file (JSON)."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ValidationError(f"cannot read model file {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ValidationError(f"model file {path} is not valid JSON (line {exc.lineno}): {exc.msg}") from exc
    return model_from_dict(data)
