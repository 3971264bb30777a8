"""Exact minimum-dissipation solver for the classical two-level problem.

The Euler-Lagrange equation for the entropy-production Lagrangian admits
the first integral

    pdot^2 / ((p + pdot)(1 - (p + pdot))) = k,

a nonnegative constant measuring how far the path is from the quasistatic
limit (k -> 0).  Solving the quadratic for pdot (the "+" branch, since the
target population exceeds the initial one), integrating the resulting
separable ODE gives a closed-form time quadrature whose root in k matches
the prescribed duration.  From k the optimal path p(t), the protocol
lam*(t) (with its jumps at both ends) and the minimal entropy production
follow directly.

A finite horizon caps the reachable target: p_f <= 1 - (1 - p_i) e^{-tau},
obtained from the k -> infinity limit of the quadrature.
"""

from dataclasses import dataclass

import numpy as np

from .dynamics import ThermalContext, equilibrium_population

K_CAP = 1e12          # bracketing guard for the root solve
K_SOLVE_TOL = 1e-10   # |F(p_f,k) - F(p_i,k) - tau| at the returned root


class UnreachableTargetError(ValueError):
    """Target equilibrium cannot be reached in the given duration."""

    def __init__(self, message, bound):
        super().__init__(message)
        self.bound = bound


@dataclass(frozen=True)
class ReachabilityBound:
    """Largest reachable target population and the matching control value."""
    p_f_max: float
    lambda_f_max: float


@dataclass
class OracleSolution:
    """Optimal path and protocol between two classical equilibria.

    lambda_path covers the open interior grid only: the optimal control
    jumps at both ends, so the boundary values (lambda_initial, lambda_final
    vs. lambda_star_start, lambda_star_end) are reported separately.
    """
    k: float
    times: np.ndarray
    p_path: np.ndarray
    lambda_times: np.ndarray
    lambda_path: np.ndarray
    sigma_min: float
    reachable: bool
    lambda_initial: float
    lambda_final: float
    lambda_star_start: float
    lambda_star_end: float
    entropy_increments: np.ndarray


def pdot_from_k(p, k):
    """Optimal-path velocity [(1-2p)k + sqrt(k^2 + 4kp(1-p))] / (2(k+1))."""
    disc = k * k + 4.0 * k * p * (1.0 - p)
    return ((1.0 - 2.0 * p) * k + np.sqrt(disc)) / (2.0 * (k + 1.0))


def time_quadrature(p, k):
    """Antiderivative F(p, k) of 1/pdot along the optimal branch.

    dF/dp = 2(k+1) / ((1-2p)k + sqrt(k^2 + 4kp(1-p))).  Diverges as
    k -> 0 (quasistatic limit), hence the strict k > 0 requirement.
    """
    if k <= 0.0:
        raise ValueError("time quadrature requires k > 0")
    disc = k * k + 4.0 * k * p * (1.0 - p)
    root = np.sqrt(disc)
    return (-np.log(1.0 - p)
            + 0.5 * np.log((2.0 * (1.0 - p) + k + root) / (2.0 * p + k + root))
            + np.arctan((2.0 * p - 1.0) * np.sqrt(k) / root) / np.sqrt(k))


def reachability(p_i, tau, ctx=ThermalContext()):
    """Reachable-target bound for a horizon tau starting from p_i."""
    if not 0.5 <= p_i < 1.0:
        raise ValueError("initial population must lie in [0.5, 1)")
    if tau <= 0.0:
        raise ValueError("tau must be positive")
    p_f_max = 1.0 - (1.0 - p_i) * np.exp(-tau)
    # lam = ln(p/(1-p))/beta with 1 - p_f_max = (1-p_i)e^{-tau} taken in logs
    lambda_f_max = (np.log(p_f_max) - np.log(1.0 - p_i) + tau) / ctx.beta
    return ReachabilityBound(float(p_f_max), float(lambda_f_max))


def solve_k(p_i, p_f, tau, ctx=ThermalContext()):
    """Root of F(p_f, k) - F(p_i, k) = tau by bisection.

    The duration is strictly decreasing in k (the target population grows
    with k at fixed tau), so the sign change brackets a unique root.
    """
    if not 0.5 <= p_i < 1.0:
        raise ValueError("initial population must lie in [0.5, 1)")
    if not p_i < p_f < 1.0:
        raise ValueError("target population must lie in (p_i, 1)")
    bound = reachability(p_i, tau, ctx)
    if p_f >= bound.p_f_max:
        raise UnreachableTargetError(
            f"p_f = {p_f} >= reachable maximum {bound.p_f_max:.6f} "
            f"for tau = {tau}", bound)

    def residual(k):
        return time_quadrature(p_f, k) - time_quadrature(p_i, k) - tau

    lo, hi = 1e-12, 1.0
    while residual(lo) < 0.0:
        # target nearly quasistatic: the root sits below the default bracket
        lo /= 16.0
        if lo < 1e-250:
            raise RuntimeError("k bracket underflow; use the p_f == p_i branch")
    while residual(hi) > 0.0:
        hi *= 2.0
        if hi > K_CAP:
            raise UnreachableTargetError(
                f"no bracketing k below {K_CAP:g}; target too close to the "
                f"reachability frontier {bound.p_f_max:.6f}", bound)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid == lo or mid == hi:
            break
        r = residual(mid)
        if abs(r) < K_SOLVE_TOL:
            return mid
        if r > 0.0:
            lo = mid
        else:
            hi = mid
    k = 0.5 * (lo + hi)
    if abs(residual(k)) >= K_SOLVE_TOL:
        raise RuntimeError(f"bisection stalled at k = {k}")
    return k


def dpf_dk(p_i, p_f, k):
    """Closed-form derivative of the reachable target w.r.t. k at fixed tau.

    Nonnegative for 0.5 <= p_i <= p_f < 1, which is what makes the
    bisection in solve_k valid.
    """
    if k <= 0.0:
        raise ValueError("requires k > 0")
    disc_i = k * k + 4.0 * k * p_i * (1.0 - p_i)
    disc_f = k * k + 4.0 * k * p_f * (1.0 - p_f)
    prefactor = ((1.0 - 2.0 * p_f) * k + np.sqrt(disc_f)) \
        / (4.0 * k * np.sqrt(k) * (k + 1.0))
    sweep = np.arctan((2.0 * p_f - 1.0) * np.sqrt(k) / np.sqrt(disc_f)) \
        - np.arctan((2.0 * p_i - 1.0) * np.sqrt(k) / np.sqrt(disc_i))
    return prefactor * sweep


def _lambda_from_omega(omega, beta):
    return (np.log(omega) - np.log1p(-omega)) / beta


def optimal_protocol(p_i, p_f, tau, ctx=ThermalContext(), samples=1000):
    """Solve the boundary-value problem and reconstruct the protocol.

    Integrates pdot(p, k) with fixed-step RK4 on `samples` grid points,
    recovers lam*(t) from omega_t = p + pdot on the interior grid, and
    accumulates the minimal entropy production by the trapezoidal rule.
    """
    if samples < 3:
        raise ValueError("need at least 3 grid points")
    times = np.linspace(0.0, tau, samples)
    lambda_initial = _lambda_from_omega(p_i, ctx.beta) if p_i > 0.5 else 0.0
    lambda_final = _lambda_from_omega(p_f, ctx.beta) if p_f > 0.5 else 0.0

    if p_f == p_i:
        # quasistatic branch: hold the initial equilibrium
        path = np.full(samples, p_i)
        lam = np.full(samples - 2, lambda_initial)
        return OracleSolution(
            k=0.0, times=times, p_path=path,
            lambda_times=times[1:-1], lambda_path=lam,
            sigma_min=0.0, reachable=True,
            lambda_initial=lambda_initial, lambda_final=lambda_final,
            lambda_star_start=lambda_initial, lambda_star_end=lambda_final,
            entropy_increments=np.zeros(samples - 1))

    k = solve_k(p_i, p_f, tau, ctx)
    h = tau / (samples - 1)
    path = np.empty(samples)
    path[0] = p_i
    p = p_i
    for j in range(samples - 1):
        k1 = pdot_from_k(p, k)
        k2 = pdot_from_k(p + 0.5 * h * k1, k)
        k3 = pdot_from_k(p + 0.5 * h * k2, k)
        k4 = pdot_from_k(p + h * k3, k)
        p += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        path[j + 1] = p

    pdot = pdot_from_k(path, k)
    omega = path + pdot
    lam_star = _lambda_from_omega(omega, ctx.beta)
    rate = pdot * (ctx.beta * lam_star + np.log1p(-path) - np.log(path))
    increments = 0.5 * h * (rate[1:] + rate[:-1])
    return OracleSolution(
        k=k, times=times, p_path=path,
        lambda_times=times[1:-1], lambda_path=lam_star[1:-1],
        sigma_min=float(np.sum(increments)), reachable=True,
        lambda_initial=lambda_initial, lambda_final=lambda_final,
        lambda_star_start=float(lam_star[0]), lambda_star_end=float(lam_star[-1]),
        entropy_increments=increments)


def optimal_protocol_for_target(lambda_i, lambda_f, tau, ctx=ThermalContext(),
                                samples=1000):
    """Same solve with the boundary data given as control values."""
    if lambda_i < 0.0 or lambda_f < 0.0:
        raise ValueError("control values must be nonnegative")
    p_i = equilibrium_population(lambda_i, ctx)
    p_f = equilibrium_population(lambda_f, ctx)
    return optimal_protocol(p_i, p_f, tau, ctx, samples)


# --- export -----------------------------------------------------------------

def write_oracle_csv(solution, path):
    """Columns t, p, lambda_star, d_sigma; lambda_star is blank on the
    boundary rows where the protocol jumps to/from the held values."""
    import csv as _csv
    lam_by_index = {i + 1: v for i, v in enumerate(solution.lambda_path)}
    with open(path, "w", newline="") as fh:
        writer = _csv.writer(fh)
        writer.writerow(["t", "p", "lambda_star", "d_sigma"])
        for i, t in enumerate(solution.times):
            lam = lam_by_index.get(i)
            d_sigma = 0.0 if i == 0 else float(solution.entropy_increments[i - 1])
            writer.writerow([format(float(t), ".17g"),
                             format(float(solution.p_path[i]), ".17g"),
                             "" if lam is None else format(float(lam), ".17g"),
                             format(d_sigma, ".17g")])


def write_oracle_metadata(solution, bound, path, extra=None):
    """key=value sidecar with the solve constants and the frontier."""
    lines = {
        "k": solution.k,
        "sigma_min": solution.sigma_min,
        "p_f_max": bound.p_f_max,
        "lambda_f_max": bound.lambda_f_max,
        "reachable": solution.reachable,
        "lambda_initial": solution.lambda_initial,
        "lambda_final": solution.lambda_final,
        "lambda_star_start": solution.lambda_star_start,
        "lambda_star_end": solution.lambda_star_end,
    }
    if extra:
        lines.update(extra)
    with open(path, "w") as fh:
        for key, value in lines.items():
            if isinstance(value, float):
                fh.write(f"{key}={value:.17g}\n")
            else:
                fh.write(f"{key}={value}\n")
