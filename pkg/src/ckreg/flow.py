"""Gradient ascent of the registration functional over the rigid motions.

The functional F(h) = sum_ij c_ij k(x_i, h^-1 z_j) is ascended with its
Riemannian gradient under the left-invariant metric

    <(omega, v), (eta, u)> = a^2 <omega, eta> + b^2 <v, u>

(coefficients taken in the orthonormal skew basis, which for n = 3 equals
the cross-product vector dot product).  Each iteration picks the step
length by maximizing a fourth-order Taylor polynomial of t -> F(h exp(t xi))
in closed form, then composes the closed-form exponential on the right.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace

import numpy as np

from .liegroup import BranchCutError, Isometry, Twist, exp_twist, hat, iso_distance
from .rkhs import (
    KernelParams,
    LabeledCloud,
    SparseKernelMatrix,
    VoxelIndex,
    build_kernel_matrix,
    cutoff_radius,
    inner_product,
    pair_coefficients,
)

log = logging.getLogger(__name__)

REASON_TRANSFORM = "transform-eps"
REASON_GRADIENT = "gradient-eps"
REASON_MAX_ITER = "max-iterations"

# Length-scale schedule: (first iteration, ell) pairs.  The scale starts
# coarse to widen the basin of attraction and anneals as the clouds lock in.
DEFAULT_ELL_SCHEDULE = ((0, 0.15), (4, 0.10), (11, 0.06), (21, 0.03))


@dataclass(frozen=True)
class RegistrationConfig:
    kernel: KernelParams = field(default_factory=KernelParams)
    a_sq: float = 7.0
    b_sq: float = 7.0
    ell_schedule: tuple = DEFAULT_ELL_SCHEDULE
    transform_eps: float = 1e-5
    gradient_eps: float = 5e-5
    min_step: float = 0.2
    max_iterations: int = 2000

    def __post_init__(self):
        if not (self.a_sq > 0.0 and self.b_sq > 0.0):
            raise ValueError("metric weights a_sq, b_sq must be positive")
        if not (self.transform_eps > 0.0 and self.gradient_eps > 0.0):
            raise ValueError("convergence thresholds must be positive")
        if not (self.min_step > 0.0):
            raise ValueError("min_step must be positive")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be at least 1")
        sched = tuple((int(k), float(e)) for k, e in self.ell_schedule)
        if not sched or sched[0][0] != 0:
            raise ValueError("ell_schedule must start at iteration 0")
        floors = [k for k, _ in sched]
        if floors != sorted(set(floors)):
            raise ValueError("ell_schedule iteration floors must strictly increase")
        if any(e <= 0.0 for _, e in sched):
            raise ValueError("ell_schedule length-scales must be positive")
        object.__setattr__(self, "ell_schedule", sched)

    def ell_at(self, iteration: int) -> float:
        out = self.ell_schedule[0][1]
        for floor, ell in self.ell_schedule:
            if iteration >= floor:
                out = ell
        return out


@dataclass(frozen=True)
class TaylorCoeffs:
    """Quartic model of t -> F(h exp(t xi)) - F(h): sum_k g[k] t^(k+1)."""

    g1: float
    g2: float
    g3: float
    g4: float

    def value(self, t):
        t = np.asarray(t, dtype=float)
        return self.g1 * t + self.g2 * t**2 + self.g3 * t**3 + self.g4 * t**4


@dataclass(frozen=True)
class IterationRecord:
    iteration: int
    ell: float
    value: float
    grad_norm: float
    step: float
    rot_inc: float
    trans_inc: float


@dataclass(frozen=True)
class RegistrationResult:
    transform: Isometry
    iterations: int
    converged: bool
    reason: str
    final_value: float
    final_gradient_norm: float


def metric_inner(xi1: Twist, xi2: Twist, cfg: RegistrationConfig) -> float:
    """Left-invariant metric pairing of two twists."""
    return float(
        cfg.a_sq * np.dot(xi1.omega, xi2.omega) + cfg.b_sq * np.dot(xi1.v, xi2.v)
    )


def metric_norm(xi: Twist, cfg: RegistrationConfig) -> float:
    return float(np.sqrt(metric_inner(xi, xi, cfg)))


def _entry_gradient(
    m: SparseKernelMatrix,
    c: np.ndarray,
    xs: np.ndarray,
    zs: np.ndarray,
    cfg: RegistrationConfig,
    ell: float,
) -> Twist:
    """Gradient from prebuilt kernel entries; xs, zs are gathered per entry."""
    n = xs.shape[1]
    if m.nnz == 0:
        return Twist(np.zeros(3 if n == 3 else 1), np.zeros(n))
    w = c * m.vals / ell**2
    v = np.array([m.ordered_sum(w * (zs[:, k] - xs[:, k])) for k in range(n)])
    if n == 3:
        cr = np.cross(xs, zs)
        omega = np.array([m.ordered_sum(w * cr[:, k]) for k in range(3)])
    else:
        # single J^12 coefficient
        omega = np.array(
            [m.ordered_sum(w * (xs[:, 1] * zs[:, 0] - xs[:, 0] * zs[:, 1]))]
        )
    return Twist(omega / cfg.a_sq, v / cfg.b_sq)


def gradient(
    x: LabeledCloud, z: LabeledCloud, h: Isometry, cfg: RegistrationConfig
) -> Twist:
    """Riemannian ascent gradient of F at h (left-translated to identity)."""
    p = cfg.kernel
    z_moved = h.inverse_act(z.points)
    m = build_kernel_matrix(x, z_moved, p)
    c = pair_coefficients(m, x, z, p)
    return _entry_gradient(m, c, x.points[m.rows], z_moved[m.cols], cfg, p.ell)


def _entry_taylor(
    m: SparseKernelMatrix,
    c: np.ndarray,
    z_moved: np.ndarray,
    xs: np.ndarray,
    xi: Twist,
    ell: float,
) -> TaylorCoeffs:
    if m.nnz == 0:
        return TaylorCoeffs(0.0, 0.0, 0.0, 0.0)
    w = xi.hat()
    w2 = w @ w
    # derivative chain of the moving points, one row per unique z
    q1 = z_moved @ w.T + xi.v
    q2 = z_moved @ w2.T + w @ xi.v
    q3 = z_moved @ (w2 @ w).T + w2 @ xi.v
    q4 = z_moved @ (w2 @ w2).T + (w2 @ w) @ xi.v
    # dots of q's with each other or with z itself collapse to one value
    # per moving point; only the dot against the entry's x point needs
    # per-entry vectors
    rd = lambda a, b: np.einsum("ij,ij->i", a, b)
    cols = m.cols
    d1 = np.einsum("ij,ij->i", q1[cols], xs) - rd(q1, z_moved)[cols]
    d2 = np.einsum("ij,ij->i", q2[cols], xs) - rd(q2, z_moved)[cols]
    d3 = np.einsum("ij,ij->i", q3[cols], xs) - rd(q3, z_moved)[cols]
    d4 = np.einsum("ij,ij->i", q4[cols], xs) - rd(q4, z_moved)[cols]
    il2 = 1.0 / ell**2
    be = -il2 * d1
    ga = -0.5 * il2 * (rd(q1, q1)[cols] - d2)
    de = il2 / 6.0 * (3.0 * rd(q1, q2)[cols] - d3)
    ep = -il2 / 24.0 * (3.0 * rd(q2, q2)[cols] + 4.0 * rd(q1, q3)[cols] - d4)
    # exp(beta t + gamma t^2 + ...) expanded to fourth order; the entry
    # weight c * k already carries the exp(alpha) factor
    g1 = be
    g2 = ga + 0.5 * be**2
    g3 = de + be * ga + be**3 / 6.0
    g4 = ep + be * de + 0.5 * be**2 * ga + 0.5 * ga**2 + be**4 / 24.0
    e = c * m.vals
    return TaylorCoeffs(
        m.ordered_sum(e * g1),
        m.ordered_sum(e * g2),
        m.ordered_sum(e * g3),
        m.ordered_sum(e * g4),
    )


def taylor_poly(
    x: LabeledCloud, z: LabeledCloud, h: Isometry, xi: Twist, cfg: RegistrationConfig
) -> TaylorCoeffs:
    """Fourth-order expansion of t -> F(h exp(t xi)) around t = 0."""
    p = cfg.kernel
    z_moved = h.inverse_act(z.points)
    m = build_kernel_matrix(x, z_moved, p)
    c = pair_coefficients(m, x, z, p)
    return _entry_taylor(m, c, z_moved, x.points[m.rows], xi, p.ell)


def _real_quadratic_roots(c2: float, c1: float, c0: float) -> list[float]:
    if abs(c2) < 1e-14:
        if abs(c1) < 1e-14:
            return []
        return [-c0 / c1]
    disc = c1 * c1 - 4.0 * c2 * c0
    if disc < 0.0:
        return []
    s = np.sqrt(disc)
    return [(-c1 - s) / (2.0 * c2), (-c1 + s) / (2.0 * c2)]


def _real_cubic_roots(c3: float, c2: float, c1: float, c0: float) -> list[float]:
    """Real roots of c3 t^3 + c2 t^2 + c1 t + c0 = 0, Cardano closed form."""
    scale = max(abs(c3), abs(c2), abs(c1), abs(c0))
    if scale == 0.0:
        return []
    c3, c2, c1, c0 = c3 / scale, c2 / scale, c1 / scale, c0 / scale
    if abs(c3) < 1e-14:
        return _real_quadratic_roots(c2, c1, c0)
    if c0 == 0.0:
        # exact root at zero; deflating keeps it exact instead of letting
        # Cardano round it into a spurious positive step candidate
        return [0.0] + _real_quadratic_roots(c3, c2, c1)
    b, c, d = c2 / c3, c1 / c3, c0 / c3
    shift = -b / 3.0
    p = c - b * b / 3.0
    q = 2.0 * b**3 / 27.0 - b * c / 3.0 + d
    disc = (q / 2.0) ** 2 + (p / 3.0) ** 3
    if disc > 0.0:
        s = np.sqrt(disc)
        return [float(np.cbrt(-q / 2.0 + s) + np.cbrt(-q / 2.0 - s) + shift)]
    if p >= 0.0:
        # disc <= 0 with p >= 0 only happens at the triple root
        return [shift]
    r = np.sqrt(-p / 3.0)
    arg = min(max(3.0 * q / (2.0 * p) * np.sqrt(-3.0 / p), -1.0), 1.0)
    phi = np.arccos(arg)
    return [
        float(2.0 * r * np.cos((phi - 2.0 * np.pi * k) / 3.0) + shift)
        for k in (0, 1, 2)
    ]


def step_size(coeffs: TaylorCoeffs, cfg: RegistrationConfig) -> float:
    """Step length maximizing the quartic model.

    Critical points come from the closed-form cubic; among the positive
    real ones the quartic's argmax wins (smallest t on ties).  If none
    exists or none gives positive growth, fall back to cfg.min_step.
    """
    roots = _real_cubic_roots(
        4.0 * coeffs.g4, 3.0 * coeffs.g3, 2.0 * coeffs.g2, coeffs.g1
    )
    best_t = 0.0
    best_val = 0.0
    for t in sorted(roots):
        if t <= 0.0 or not np.isfinite(t):
            continue
        val = float(coeffs.value(t))
        if val > best_val:
            best_t, best_val = t, val
    if best_val > 0.0:
        return best_t
    return cfg.min_step


def integrate_step(h: Isometry, xi: Twist, t: float) -> Isometry:
    """One flow step: right-compose the exponential of the scaled twist."""
    return h @ exp_twist(xi, t)


def register(
    x: LabeledCloud,
    z: LabeledCloud,
    cfg: RegistrationConfig | None = None,
    initial: Isometry | None = None,
    trace: list | None = None,
    threads: int = 1,
) -> RegistrationResult:
    """Align the moving cloud z against the fixed cloud x.

    Returns h maximizing F, so h^-1 z overlays x (equivalently z is h
    applied to x).  Iterates gradient / Taylor step / exponential until the
    per-step motion or the gradient norm falls under its threshold.
    """
    cfg = cfg or RegistrationConfig()
    if x.dim != z.dim:
        raise ValueError("clouds have different dimensions")
    h = initial if initial is not None else Isometry.identity(x.dim)
    if h.n != x.dim:
        raise ValueError("initial transform dimension does not match clouds")

    index: VoxelIndex | None = None
    index_ell = None
    prev_ell = None
    prev_value = None
    grad_norm = 0.0
    value = 0.0
    iterations = 0

    for k in range(cfg.max_iterations):
        iterations = k + 1
        ell = cfg.ell_at(k)
        p = replace(cfg.kernel, ell=ell)
        r_cut = cutoff_radius(p)
        if np.isfinite(r_cut) and r_cut >= 0.0:
            if index is None or index_ell != ell:
                index = VoxelIndex(x.points, r_cut if r_cut > 0.0 else ell)
                index_ell = ell
            grid = index
        else:
            grid = None

        z_moved = h.inverse_act(z.points)
        m = build_kernel_matrix(x, z_moved, p, index=grid, threads=threads)
        if m.nnz == 0:
            # no overlapping support, the gradient is identically zero
            if trace is not None:
                trace.append(IterationRecord(k, ell, 0.0, 0.0, 0.0, 0.0, 0.0))
            return RegistrationResult(h, iterations, False, REASON_GRADIENT, 0.0, 0.0)
        c = pair_coefficients(m, x, z, p)
        value = m.ordered_sum(c * m.vals)

        if prev_ell == ell and prev_value is not None and value < prev_value - 1e-12:
            log.warning(
                "step-size model failure at iteration %d: value fell %.3e",
                k,
                prev_value - value,
            )
        prev_ell, prev_value = ell, value

        xs = x.points[m.rows]
        zs = z_moved[m.cols]
        xi = _entry_gradient(m, c, xs, zs, cfg, ell)
        grad_norm = metric_norm(xi, cfg)
        if grad_norm < cfg.gradient_eps:
            if trace is not None:
                trace.append(
                    IterationRecord(k, ell, value, grad_norm, 0.0, 0.0, 0.0)
                )
            return RegistrationResult(
                h, iterations, True, REASON_GRADIENT, value, grad_norm
            )

        coeffs = _entry_taylor(m, c, z_moved, xs, xi, ell)
        t = step_size(coeffs, cfg)
        delta = exp_twist(xi, t)
        h_new = h @ delta
        try:
            moved = iso_distance(h_new, h)
        except BranchCutError:
            moved = np.inf

        if trace is not None:
            w_norm, _ = xi.norms()
            trace.append(
                IterationRecord(
                    k,
                    ell,
                    value,
                    grad_norm,
                    t,
                    np.sqrt(2.0) * t * w_norm,
                    float(np.linalg.norm(delta.t)),
                )
            )

        h = h_new
        if moved < cfg.transform_eps:
            final_value = inner_product(x, z, h, p, threads=threads)
            return RegistrationResult(
                h, iterations, True, REASON_TRANSFORM, final_value, grad_norm
            )

    final_ell = cfg.ell_at(cfg.max_iterations - 1)
    final_value = inner_product(
        x, z, h, replace(cfg.kernel, ell=final_ell), threads=threads
    )
    return RegistrationResult(
        h, iterations, False, REASON_MAX_ITER, final_value, grad_norm
    )
