"""Classical Dicke flow: energy, equations of motion, sections, Lyapunov exponents.

States are arrays ``(..., 4)`` ordered ``(p, q, P, Q)``. The integrator works
on the equivalent pole-free representation ``(q, p, X, Y, Z)`` with the Bloch
vector ``X = sqrt(1-P^2) cos Q``, ``Y = sqrt(1-P^2) sin Q``, ``Z = P``, in
which the spin obeys ``dS/dt = (2 xi q, 0, omega0) x S``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dicke_quantum import DickeParams
from .errors import EmptyShellError, NumericalError, PoleError
from .ode import integrate_ensemble, rk_step
from .rng import task_rng

POLE_GUARD = 1e-12
CROSSING_TOL = 1e-10
# tol = 1e-10 drifts by ~1e-7 in energy over t = 3000; 1e-12 keeps it near 3e-10
DEFAULT_TOL = 1e-12


def _pqPQ(s):
    s = np.asarray(s, dtype=float)
    return s[..., 0], s[..., 1], s[..., 2], s[..., 3]


def classical_energy(s, params: DickeParams):
    p, q, P, Q = _pqPQ(s)
    e = (params.omega0 * P + 0.5 * params.omega * (p * p + q * q)
         + 2 * params.xi * q * np.cos(Q) * np.sqrt(np.clip(1 - P * P, 0.0, None)))
    return float(e) if np.ndim(e) == 0 else e


def dicke_rhs(s, params: DickeParams) -> np.ndarray:
    """Canonical equations of motion in ``(p, q, P, Q)``; derivatives in the same order."""
    p, q, P, Q = _pqPQ(s)
    if np.any(np.abs(P) >= 1 - POLE_GUARD):
        raise PoleError("|P| reached 1: the (P, Q) chart is singular at the poles")
    w, w0, xi = params.omega, params.omega0, params.xi
    root = np.sqrt(1 - P * P)
    cq, sq = np.cos(Q), np.sin(Q)
    dq = w * p
    dp = -w * q - 2 * xi * cq * root
    dQ = w0 - 2 * xi * q * P * cq / root
    dP = 2 * xi * q * sq * root
    return np.stack([dp, dq, dP, dQ], axis=-1)


def to_bloch(s) -> np.ndarray:
    p, q, P, Q = _pqPQ(s)
    if np.any(np.abs(P) > 1):
        raise ValueError("|P| must not exceed 1")
    r = np.sqrt(1 - P * P)
    return np.stack([q, p, r * np.cos(Q), r * np.sin(Q), P], axis=-1)


def from_bloch(y) -> np.ndarray:
    y = np.asarray(y, dtype=float)
    q, p, X, Y, Z = (y[..., k] for k in range(5))
    norm = np.sqrt(X * X + Y * Y + Z * Z)
    return np.stack([p, q, np.clip(Z / norm, -1.0, 1.0), np.arctan2(Y, X)], axis=-1)


def bloch_rhs(y: np.ndarray, params: DickeParams) -> np.ndarray:
    q, p, X, Y, Z = (y[..., k] for k in range(5))
    w, w0, c = params.omega, params.omega0, 2 * params.xi
    return np.stack([w * p, -w * q - c * X, -w0 * Y, w0 * X - c * q * Z, c * q * Y], axis=-1)


def normalize_spin(y: np.ndarray) -> np.ndarray:
    """Rescale the Bloch vector (columns 2:5) to unit length; other columns untouched."""
    y = y.copy()
    y[..., 2:5] /= np.linalg.norm(y[..., 2:5], axis=-1, keepdims=True)
    return y


def bloch_jacobian(y: np.ndarray, params: DickeParams) -> np.ndarray:
    q, X, Y, Z = y[..., 0], y[..., 2], y[..., 3], y[..., 4]
    w, w0, c = params.omega, params.omega0, 2 * params.xi
    J = np.zeros(y.shape[:-1] + (5, 5))
    J[..., 0, 1] = w
    J[..., 1, 0] = -w
    J[..., 1, 2] = -c
    J[..., 2, 3] = -w0
    J[..., 3, 0] = -c * Z
    J[..., 3, 2] = w0
    J[..., 3, 4] = -c * q
    J[..., 4, 0] = c * Y
    J[..., 4, 3] = c * q
    return J


def _variational_rhs(params: DickeParams):
    def fun(y):
        x, v = y[:, :5], y[:, 5:]
        return np.concatenate([bloch_rhs(x, params), np.einsum("nij,nj->ni", bloch_jacobian(x, params), v)], axis=1)
    return fun


@dataclass
class DickeTrajectory:
    """Accepted integrator steps; ``at(t)`` re-steps from the enclosing step start."""

    params: DickeParams
    t_steps: np.ndarray  # step start times, plus the final time
    y_steps: np.ndarray  # (n_steps + 1, 5) Bloch-form states at those times
    rtol: float
    atol: float

    @property
    def t_max(self) -> float:
        return float(self.t_steps[-1])

    def states(self) -> np.ndarray:
        return from_bloch(self.y_steps)

    def at(self, t) -> np.ndarray:
        t = np.atleast_1d(np.asarray(t, dtype=float))
        k = np.clip(np.searchsorted(self.t_steps, t, side="right") - 1, 0, len(self.t_steps) - 2)
        y0 = self.y_steps[k]
        fun = lambda y: bloch_rhs(y, self.params)
        y, _, _ = rk_step(fun, y0, fun(y0), t - self.t_steps[k])
        return from_bloch(y)


def integrate(s0, params: DickeParams, t_max: float, tol: float = DEFAULT_TOL) -> DickeTrajectory:
    """Adaptive DOP853 integration of one trajectory with step-level dense output."""
    s0 = np.asarray(s0, dtype=float)
    if abs(s0[2]) >= 1 - POLE_GUARD:
        raise PoleError("initial |P| is at a pole")
    ts, ys = [0.0], [to_bloch(s0)]

    def record(rec):
        ts.append(rec.t0 + rec.h)
        ys.append(rec.y1[0].copy())

    integrate_ensemble(lambda y: bloch_rhs(y, params), to_bloch(s0)[None, :], t_max,
                       rtol=tol, atol=tol, on_step=record)
    return DickeTrajectory(params, np.array(ts), np.stack(ys), tol, tol)


def _refine(params: DickeParams, y0: np.ndarray, h: np.ndarray, tol: float = 1e-13,
            max_iter: int = 60) -> tuple[np.ndarray, np.ndarray]:
    """Solve ``p(tau) = 0`` on ``[0, h]`` for each row by safeguarded Newton.

    ``p(tau)`` is evaluated by a single integrator step of length ``tau`` from
    the step start ``y0``, so crossings carry integrator accuracy.
    """
    fun = lambda y: bloch_rhs(y, params)
    f0 = fun(y0)
    lo, hi = np.zeros(len(y0)), h.copy()
    p_lo = y0[:, 1]
    y1, f1, _ = rk_step(fun, y0, f0, h)
    p_hi = y1[:, 1]
    tau = np.where(p_hi != p_lo, h * p_lo / (p_lo - p_hi), 0.5 * h)
    for _ in range(max_iter):
        y, f, _ = rk_step(fun, y0, f0, tau)
        pt, dp = y[:, 1], f[:, 1]
        if np.all(np.abs(pt) < tol):
            return tau, y
        same = np.sign(pt) == np.sign(p_lo)
        lo, p_lo = np.where(same, tau, lo), np.where(same, pt, p_lo)
        hi = np.where(same, hi, tau)
        with np.errstate(divide="ignore", invalid="ignore"):
            newton = tau - pt / dp
        ok = (newton > lo) & (newton < hi) & np.isfinite(newton)
        tau = np.where(ok, newton, 0.5 * (lo + hi))
    y, _, _ = rk_step(fun, y0, f0, tau)
    if np.any(np.abs(y[:, 1]) >= CROSSING_TOL):
        raise NumericalError("section crossing refinement did not converge")
    return tau, y


@dataclass(frozen=True)
class SectionCrossings:
    """Crossings of ``p = 0`` for one trajectory (arrays of equal length)."""

    t: np.ndarray
    P: np.ndarray
    Q: np.ndarray
    direction: np.ndarray
    states: np.ndarray  # (k, 4) full (p, q, P, Q) at the crossings

    def __len__(self):
        return len(self.t)

    def points(self) -> np.ndarray:
        """Section cloud ``(k, 2)`` as ``(Q, P)``."""
        return np.stack([self.Q, self.P], axis=-1)


def _select(p0, p1, direction: int) -> np.ndarray:
    up = (p0 < 0) & (p1 >= 0)
    down = (p0 > 0) & (p1 <= 0)
    if direction > 0:
        return up
    if direction < 0:
        return down
    return up | down


def poincare_section(traj: DickeTrajectory, direction: int = 1) -> SectionCrossings:
    """Crossings of the ``p = 0`` plane with ``sign(dp/dt) == direction`` (0 keeps both)."""
    y = traj.y_steps
    hit = np.flatnonzero(_select(y[:-1, 1], y[1:, 1], direction))
    return _crossings_from_brackets(traj.params, traj.t_steps[hit], np.diff(traj.t_steps)[hit], y[hit])


def _crossings_from_brackets(params, t0, h, y0) -> SectionCrossings:
    if len(t0) == 0:
        empty = np.empty(0)
        return SectionCrossings(empty, empty, empty, empty, np.empty((0, 4)))
    tau, y = _refine(params, y0, h)
    s = from_bloch(y)
    s[:, 0] = y[:, 1]
    dpdt = bloch_rhs(y, params)[:, 1]
    return SectionCrossings(t0 + tau, s[:, 2], s[:, 3], np.sign(dpdt), s)


def ensemble_sections(states, params: DickeParams, t_max: float, direction: int = 1,
                      tol: float = DEFAULT_TOL, chunk: int = 512) -> list[SectionCrossings]:
    """Integrate a batch of initial states and return each trajectory's crossings."""
    states = np.atleast_2d(np.asarray(states, dtype=float))
    out: list[SectionCrossings] = []
    for start in range(0, len(states), chunk):
        y0 = to_bloch(states[start:start + chunk])
        rows, t0s, hs, ys = [], [], [], []

        def collect(rec):
            sel = np.flatnonzero(_select(rec.y0[:, 1], rec.y1[:, 1], direction))
            if len(sel):
                rows.append(sel)
                t0s.append(np.full(len(sel), rec.t0))
                hs.append(np.full(len(sel), rec.h))
                ys.append(rec.y0[sel])

        integrate_ensemble(lambda y: bloch_rhs(y, params), y0, t_max, rtol=tol, atol=tol,
                           on_step=collect)
        if rows:
            row = np.concatenate(rows)
            allc = _crossings_from_brackets(params, np.concatenate(t0s), np.concatenate(hs), np.concatenate(ys))
        else:
            row = np.empty(0, dtype=int)
            allc = _crossings_from_brackets(params, np.empty(0), np.empty(0), np.empty((0, 5)))
        order = np.lexsort((allc.t, row))
        row = row[order]
        bounds = np.searchsorted(row, np.arange(len(y0) + 1))
        for i in range(len(y0)):
            sl = order[bounds[i]:bounds[i + 1]]
            out.append(SectionCrossings(allc.t[sl], allc.P[sl], allc.Q[sl], allc.direction[sl], allc.states[sl]))
    return out


def traversal_time(sections) -> float:
    """Mean time between successive same-direction crossings, pooled over trajectories."""
    if isinstance(sections, SectionCrossings):
        sections = [sections]
    gaps = [np.diff(s.t) for s in sections if len(s) > 1]
    if not gaps:
        raise ValueError("need at least one trajectory with two crossings")
    return float(np.concatenate(gaps).mean())


def shell_discriminant(P, Q, e: float, params: DickeParams):
    b = 2 * params.xi * np.cos(Q) * np.sqrt(np.clip(1 - np.asarray(P) ** 2, 0.0, None))
    return b * b - 2 * params.omega * (params.omega0 * np.asarray(P) - e)


def solve_q_on_shell(P, Q, e: float, params: DickeParams):
    """Real roots ``(q_lo, q_hi, valid)`` of ``H(p=0, q, P, Q) = e``.

    Rows with negative discriminant are flagged invalid and carry NaN roots.
    """
    a = 0.5 * params.omega
    b = 2 * params.xi * np.cos(Q) * np.sqrt(np.clip(1 - np.asarray(P, dtype=float) ** 2, 0.0, None))
    c = params.omega0 * np.asarray(P, dtype=float) - e
    disc = b * b - 4 * a * c
    valid = disc >= 0
    sq = np.sqrt(np.where(valid, disc, np.nan))
    # cancellation-free pair of roots
    s = -0.5 * (b + np.where(b >= 0, sq, -sq))
    with np.errstate(divide="ignore", invalid="ignore"):
        r1 = s / a
        r2 = np.where(s != 0, c / s, r1)
    return np.minimum(r1, r2), np.maximum(r1, r2), valid


def accessible_fraction(e: float, params: DickeParams, n_grid: int = 1000) -> float:
    """Midpoint-grid estimate of the fraction of [-1,1] x [-pi,pi] where the section is non-empty."""
    P = -1 + (np.arange(n_grid) + 0.5) * 2 / n_grid
    Q = -math.pi + (np.arange(n_grid) + 0.5) * 2 * math.pi / n_grid
    PP, QQ = np.meshgrid(P, Q, indexing="ij")
    return float((shell_discriminant(PP, QQ, e, params) >= 0).mean())


def sample_shell(e: float, params: DickeParams, n: int, seed: int | np.random.Generator,
                 pole_margin: float = 0.0) -> np.ndarray:
    """``n`` states on the section ``p = 0`` at energy ``e``, uniform in ``dP dQ``.

    (P, Q) are drawn uniformly from the rectangle and kept when the section
    is non-empty there; q is one of the two roots, chosen at random.
    """
    rng = seed if isinstance(seed, np.random.Generator) else task_rng(seed, "dicke-shell")
    out = []
    drawn = kept = 0
    while kept < n:
        m = max(2 * (n - kept), 1024)
        P = rng.uniform(-1.0, 1.0, m)
        Q = rng.uniform(-math.pi, math.pi, m)
        lo, hi, ok = solve_q_on_shell(P, Q, e, params)
        if pole_margin > 0:
            ok &= np.abs(P) < 1 - pole_margin
        drawn += m
        kept_now = int(ok.sum())
        if drawn >= 10_000 and (kept + kept_now) / drawn < 1e-4:
            raise EmptyShellError(f"accessible region at E={e} is below 1e-4 of the (P, Q) rectangle")
        pick_hi = rng.random(m) < 0.5
        q = np.where(pick_hi, hi, lo)
        block = np.stack([np.zeros(m), q, P, Q], axis=-1)[ok]
        out.append(block)
        kept += kept_now
    return np.concatenate(out)[:n]


@dataclass(frozen=True)
class LyapunovEstimate:
    mean: float
    stderr: float
    n_samples: int
    t_max: float


def max_lyapunov_dicke(s0, params: DickeParams, t_max: float, renorm_dt: float = 1.0,
                       tol: float = 1e-10, rng: np.random.Generator | None = None):
    """Largest Lyapunov exponent from the variational equations (Benettin).

    The tangent vector lives in the Bloch-form tangent space (spin part
    orthogonal to the Bloch vector) and is renormalized every ``renorm_dt``.
    No transient is discarded.
    """
    s0 = np.asarray(s0, dtype=float)
    scalar = s0.ndim == 1
    x0 = to_bloch(np.atleast_2d(s0))
    n = len(x0)
    v = rng.standard_normal((n, 5)) if rng is not None else np.tile([0.3, -0.2, 0.5, 0.7, -0.4], (n, 1))
    spin = x0[:, 2:]
    v[:, 2:] -= spin * np.sum(v[:, 2:] * spin, axis=1, keepdims=True)
    v /= np.linalg.norm(v, axis=1, keepdims=True)
    log_sum = np.zeros(n)

    def renorm(t, y):
        nv = np.linalg.norm(y[:, 5:], axis=1)
        log_sum[:] += np.log(nv)
        y = y.copy()
        y[:, 5:] /= nv[:, None]
        return y

    fun = _variational_rhs(params)
    sol = integrate_ensemble(fun, np.concatenate([x0, v], axis=1), t_max, rtol=tol, atol=tol,
                             save_every=renorm_dt, stride_hook=renorm)
    # unit norm if t_max was itself a renormalization point
    log_sum += np.log(np.linalg.norm(sol.y_final[:, 5:], axis=1))
    lam = log_sum / t_max
    return float(lam[0]) if scalar else lam


def flow_map(s0, params: DickeParams, t: float, tol: float = 1e-12) -> np.ndarray:
    """Bloch-form state after time ``t`` for a batch ``(n, 5)``."""
    return integrate_ensemble(lambda y: bloch_rhs(y, params), np.atleast_2d(s0), t, rtol=tol, atol=tol).y_final


def variational_flow(y0, params: DickeParams, t: float, tol: float = 1e-12) -> np.ndarray:
    """5x5 derivative of the Bloch-form flow map at ``y0``, from the variational equations."""
    y0 = np.asarray(y0, dtype=float)
    z = np.concatenate([np.tile(y0, (5, 1)), np.eye(5)], axis=1)
    out = integrate_ensemble(_variational_rhs(params), z, t, rtol=tol, atol=tol).y_final
    return out[:, 5:].T


def phase_avg_lyapunov_dicke(params: DickeParams, e: float, n_samples: int, t_max: float,
                             seed: int, renorm_dt: float = 1.0, tol: float = 1e-10,
                             chunk: int = 1024) -> LyapunovEstimate:
    """Area-averaged largest exponent over the accessible part of the section."""
    if n_samples < 100:
        raise ValueError("n_samples must be >= 100")
    s0 = sample_shell(e, params, n_samples, task_rng(seed, "dicke-lyapunov-init"))
    trng = task_rng(seed, "dicke-lyapunov-tangent")
    lams = np.concatenate([max_lyapunov_dicke(s0[i:i + chunk], params, t_max, renorm_dt, tol, trng)
                           for i in range(0, n_samples, chunk)])
    return LyapunovEstimate(float(lams.mean()), float(lams.std(ddof=1) / math.sqrt(n_samples)),
                            n_samples, t_max)
