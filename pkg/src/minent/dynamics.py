"""Driven two-level system in a thermal bath.

Hamiltonian H(eps, lam) = (eps*sigma_x + lam*sigma_z)/2 with a pair of
thermal jump operators acting in the instantaneous energy eigenbasis, so
the instantaneous Gibbs state is stationary (detailed balance).  Units:
k_B = hbar = 1, energies dimensionless, beta is the inverse temperature.

The module provides exact equilibrium states, the GKLS generator (both as
a 2x2 superoperator action and as an affine vector field on the Bloch
ball), the classical single-population reduction obtained at eps = 0,
entropy-production rates in both pictures, and a deterministic fixed-step
RK4 propagator for piecewise-constant control protocols.
"""

import csv
from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit

SIGMA_X = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
SIGMA_Y = np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex)
SIGMA_Z = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)
IDENTITY = np.eye(2, dtype=complex)

BLOCH_NORM_SLACK = 1e-6      # tolerated RK4 overshoot before rescaling fails
EIGENVALUE_FLOOR = 1e-12     # floor on density-matrix eigenvalues inside ln(rho)


class IntegrationError(RuntimeError):
    """State left the Bloch ball/probability simplex beyond repair tolerance."""


@dataclass(frozen=True)
class ThermalContext:
    """Bath parameters. beta > 0 is the inverse temperature."""
    beta: float = 1.0

    def __post_init__(self):
        if not (np.isfinite(self.beta) and self.beta > 0):
            raise ValueError(f"beta must be positive and finite, got {self.beta}")


@dataclass(frozen=True)
class ControlParams:
    """Controllable Hamiltonian coefficients (sigma_x and sigma_z halves)."""
    epsilon: float
    lam: float

    def __post_init__(self):
        if not (np.isfinite(self.epsilon) and np.isfinite(self.lam)):
            raise ValueError("control parameters must be finite")


@dataclass(frozen=True)
class BlochState:
    """Density matrix rho = (I + x sx + y sy + z sz)/2 in Bloch coordinates."""
    x: float
    y: float
    z: float

    def vector(self):
        return np.array([self.x, self.y, self.z])

    def norm(self):
        return float(np.sqrt(self.x ** 2 + self.y ** 2 + self.z ** 2))

    def matrix(self):
        return 0.5 * (IDENTITY + self.x * SIGMA_X + self.y * SIGMA_Y
                      + self.z * SIGMA_Z)

    def __post_init__(self):
        if self.norm() > 1.0 + 1e-9:
            raise ValueError(f"Bloch vector norm {self.norm()} exceeds 1")

    @staticmethod
    def from_vector(r):
        return BlochState(float(r[0]), float(r[1]), float(r[2]))

    @staticmethod
    def from_matrix(rho, tol=1e-9):
        if abs(np.trace(rho) - 1.0) > tol or np.linalg.norm(rho - rho.conj().T) > tol:
            raise ValueError("not a unit-trace Hermitian matrix")
        return BlochState(float(np.trace(rho @ SIGMA_X).real),
                          float(np.trace(rho @ SIGMA_Y).real),
                          float(np.trace(rho @ SIGMA_Z).real))


@dataclass(frozen=True)
class ClassicalState:
    """Two-state classical distribution, parametrized by the ground population."""
    p_minus: float

    def __post_init__(self):
        if not (-1e-12 <= self.p_minus <= 1.0 + 1e-12):
            raise ValueError(f"p_minus = {self.p_minus} outside [0, 1]")


@dataclass
class Trajectory:
    """Piecewise-constant protocol run: states on the interval grid plus the
    per-interval entropy increments accumulated on the integrator substeps."""
    times: np.ndarray
    states: list
    controls: list
    entropy_increments: np.ndarray
    sigma_total: float
    mode: str = field(default="classical")

    def __post_init__(self):
        if len(self.states) != len(self.times):
            raise ValueError("one state per time point required")
        if len(self.controls) != len(self.times) - 1:
            raise ValueError("one control per interval required")


def rabi_frequency(c):
    """Half the instantaneous energy gap."""
    return 0.5 * np.hypot(c.epsilon, c.lam)


def field_axis(c):
    """Unit vector along the control field; z-axis at the degenerate point
    so the eigenbasis is continuous along the lam axis."""
    norm = np.hypot(c.epsilon, c.lam)
    if norm == 0.0:
        return np.array([0.0, 0.0, 1.0])
    return np.array([c.epsilon, 0.0, c.lam]) / norm


def build_hamiltonian(c):
    """H = (eps*sigma_x + lam*sigma_z)/2, eigenvalues +-rabi_frequency."""
    return 0.5 * (c.epsilon * SIGMA_X + c.lam * SIGMA_Z)


def energy_eigenbasis(c):
    """Ground and excited eigenvectors (e_minus, e_plus) of H(c).

    Real rotation convention: continuous in (eps, lam) away from the
    negative lam axis; at the degenerate point the sigma_z eigenbasis.
    """
    theta = np.arctan2(c.epsilon, c.lam)
    e_plus = np.array([np.cos(theta / 2), np.sin(theta / 2)], dtype=complex)
    e_minus = np.array([-np.sin(theta / 2), np.cos(theta / 2)], dtype=complex)
    return e_minus, e_plus


def equilibrium_population(lam, ctx):
    """Equilibrium ground-state population omega = 1/(exp(-beta*lam) + 1)."""
    return float(expit(ctx.beta * lam))


def gibbs_state(c, ctx):
    """Instantaneous equilibrium state exp(-beta H)/Z as a BlochState.

    The Bloch vector is -tanh(beta*Omega) along the field axis; the
    ground-state population is 1/(1 + exp(-2*beta*Omega)).
    """
    r = -np.tanh(ctx.beta * rabi_frequency(c)) * field_axis(c)
    return BlochState.from_vector(r)


def gibbs_classical(lam, ctx):
    return ClassicalState(equilibrium_population(lam, ctx))


def jump_operators(c, ctx):
    """Thermal jump pair (V_plus, V_minus) in the instantaneous eigenbasis.

    V_plus deexcites with rate 1/(1+exp(-2*beta*Omega)), V_minus excites
    with rate 1/(1+exp(+2*beta*Omega)); the two rates sum to one and their
    ratio satisfies detailed balance exp(-2*beta*Omega).
    """
    omega = rabi_frequency(c)
    e_minus, e_plus = energy_eigenbasis(c)
    down = expit(2.0 * ctx.beta * omega)
    up = expit(-2.0 * ctx.beta * omega)
    v_plus = np.sqrt(down) * np.outer(e_minus, e_plus.conj())
    v_minus = np.sqrt(up) * np.outer(e_plus, e_minus.conj())
    return v_plus, v_minus


def lindblad_rhs_matrix(rho, c, ctx):
    """GKLS generator applied to a 2x2 density matrix.

    Unitary part -i[H, rho] plus the dissipator
    (1/2) sum_s ([V_s rho, V_s^dag] + [V_s, rho V_s^dag]), which keeps the
    instantaneous Gibbs state stationary and relaxes populations toward it.
    """
    h = build_hamiltonian(c)
    out = -1j * (h @ rho - rho @ h)
    for v in jump_operators(c, ctx):
        vd = v.conj().T
        vrho_vd = v @ rho @ vd
        out += 0.5 * ((vrho_vd - vd @ v @ rho) + (vrho_vd - rho @ vd @ v))
    return out


def bloch_generator(c, ctx):
    """Affine form rdot = A r + d of the GKLS generator at fixed control.

    A combines precession about (eps, 0, lam) with relaxation at rate 1
    along the field axis and 1/2 transverse to it; d restores the
    equilibrium Bloch vector as the unique fixed point.
    """
    eps, lam = c.epsilon, c.lam
    axis = field_axis(c)
    precession = np.array([[0.0, -lam, 0.0],
                           [lam, 0.0, -eps],
                           [0.0, eps, 0.0]])
    relaxation = 0.5 * (np.eye(3) + np.outer(axis, axis))
    a = precession - relaxation
    d = -np.tanh(ctx.beta * rabi_frequency(c)) * axis  # = R @ r_eq
    return a, d


def lindblad_rhs(rho, c, ctx):
    """Time derivative of the Bloch vector under the GKLS generator."""
    a, d = bloch_generator(c, ctx)
    return a @ rho.vector() + d


def trace_distance(a, b):
    """Tr|rho_a - rho_b| (no 1/2 factor); equals the Bloch-vector distance."""
    return float(np.sqrt((a.x - b.x) ** 2 + (a.y - b.y) ** 2 + (a.z - b.z) ** 2))


def l1_distance(a, b):
    """sum_s |p_a(s) - p_b(s)| = 2|p_a - p_b| for two states."""
    return 2.0 * abs(a.p_minus - b.p_minus)


def classical_rhs(p, lam, ctx):
    """pdot_minus = -p_minus + omega(lam) for the eps = 0 reduction."""
    p_minus = p.p_minus if isinstance(p, ClassicalState) else float(p)
    if not 0.0 <= p_minus <= 1.0:
        raise ValueError(f"p_minus = {p_minus} outside [0, 1]")
    return equilibrium_population(lam, ctx) - p_minus


def entropy_rate_classical(p, lam, ctx):
    """Irreversibility rate of the classical relaxation at control lam.

    pdot * ln[(1-p)(p+pdot) / (p (1-(p+pdot)))] with pdot from
    classical_rhs; since p + pdot = omega this reduces to the numerically
    stable form pdot * (beta*lam + ln((1-p)/p)).  Nonnegative on [0,1].
    """
    p_minus = p.p_minus if isinstance(p, ClassicalState) else float(p)
    if not 0.0 < p_minus < 1.0:
        raise ValueError("entropy rate needs 0 < p_minus < 1")
    pdot = equilibrium_population(lam, ctx) - p_minus
    return pdot * (ctx.beta * lam + np.log1p(-p_minus) - np.log(p_minus))


def entropy_rate_classical_wform(p, lam, ctx):
    """Same rate from the jump-rate (master-equation) form
    (1/2) sum_{i != j} (W_ji p_i - W_ij p_j) ln(W_ji p_i / W_ij p_j)."""
    p_minus = p.p_minus if isinstance(p, ClassicalState) else float(p)
    if not 0.0 < p_minus < 1.0:
        raise ValueError("entropy rate needs 0 < p_minus < 1")
    omega = equilibrium_population(lam, ctx)
    p_plus = 1.0 - p_minus
    flux = omega * p_plus - (1.0 - omega) * p_minus
    if flux == 0.0:
        return 0.0
    return flux * (np.log(omega) - np.log1p(-omega)
                   + np.log(p_plus) - np.log(p_minus))


def _atanh_over_r(r):
    # artanh(r)/r, finite at r = 0
    if r < 1e-8:
        return 1.0 + r * r / 3.0
    return np.arctanh(r) / r


def entropy_rate_quantum_info(rho, c, ctx):
    """Entropy production rate -Tr[(L rho)(ln rho - ln rho_eq)] and a flag
    marking whether the spectral floor on rho's eigenvalues was hit.

    ln rho comes from the closed-form eigendecomposition of a qubit state
    (eigenvalues (1 +- |r|)/2); the traceless part of ln rho_eq is exactly
    -beta*H, so the rate is rdot . (artanh(|r|) rhat + (beta/2) b) with
    b = (eps, 0, lam).  Returns (rate, clamped).
    """
    r = rho.vector()
    rdot = lindblad_rhs(rho, c, ctx)
    rnorm = float(np.linalg.norm(r))
    clamped = rnorm > 1.0 - 2.0 * EIGENVALUE_FLOOR
    if clamped:
        rnorm = 1.0 - 2.0 * EIGENVALUE_FLOOR
        r = r * (rnorm / np.linalg.norm(r))
    b = np.array([c.epsilon, 0.0, c.lam])
    rate = -float(rdot @ (_atanh_over_r(rnorm) * r)) \
        - 0.5 * ctx.beta * float(rdot @ b)
    return rate, clamped


def entropy_rate_quantum(rho, c, ctx):
    return entropy_rate_quantum_info(rho, c, ctx)[0]


# ---------------------------------------------------------------------------
# Fixed-step RK4 propagation of piecewise-constant protocols
#
# At constant control the Bloch equation is affine, rdot = A r + d, so one
# RK4 substep of size h is exactly the linear update
#   r' = P(hA) r + (h + h^2/2 A + h^3/6 A^2 + h^4/24 A^3) d,
# with P the degree-4 Taylor polynomial of exp.  Precomputing the pair per
# interval is algebraically identical to the textbook k1..k4 loop and keeps
# per-substep work at one matrix-vector product.
# ---------------------------------------------------------------------------

def _rk4_affine_propagator(a, d, h):
    a2 = a @ a
    a3 = a2 @ a
    m = np.eye(3) + h * a + (h * h / 2) * a2 + (h ** 3 / 6) * a3 \
        + (h ** 4 / 24) * (a3 @ a)
    v = (h * np.eye(3) + (h * h / 2) * a + (h ** 3 / 6) * a2
         + (h ** 4 / 24) * a3) @ d
    return m, v


def _rk4_decay_factor(h):
    # scalar P(-h) for pdot = omega - p
    return 1.0 - h + h * h / 2 - h ** 3 / 6 + h ** 4 / 24


def _repair_bloch(r):
    n2 = r @ r
    if n2 > 1.0:
        n = np.sqrt(n2)
        if n > 1.0 + BLOCH_NORM_SLACK:
            raise IntegrationError(f"Bloch norm {n} exceeds repair tolerance")
        r = r / n
    return r


def quantum_interval(r, c, ctx, dt, substeps):
    """Advance a Bloch vector through one constant-control interval.

    Returns (r_final, d_sigma) with the entropy increment integrated by
    the trapezoidal rule on the RK4 substep grid, so increments inherit
    the pointwise nonnegativity of the rate.
    """
    a, d = bloch_generator(c, ctx)
    h = dt / substeps
    m, v = _rk4_affine_propagator(a, d, h)
    # unrolled 3x3 recurrence: the substep loop dominates training cost
    m00, m01, m02 = m[0]
    m10, m11, m12 = m[1]
    m20, m21, m22 = m[2]
    v0, v1, v2 = v
    r0, r1, r2 = float(r[0]), float(r[1]), float(r[2])
    limit = (1.0 + BLOCH_NORM_SLACK) ** 2
    rows = [(r0, r1, r2)]
    for _ in range(substeps):
        s0 = m00 * r0 + m01 * r1 + m02 * r2 + v0
        s1 = m10 * r0 + m11 * r1 + m12 * r2 + v1
        s2 = m20 * r0 + m21 * r1 + m22 * r2 + v2
        n2 = s0 * s0 + s1 * s1 + s2 * s2
        if n2 > 1.0:
            if n2 > limit:
                raise IntegrationError(
                    f"Bloch norm {np.sqrt(n2)} exceeds repair tolerance")
            scale = 1.0 / np.sqrt(n2)
            s0 *= scale
            s1 *= scale
            s2 *= scale
        r0, r1, r2 = s0, s1, s2
        rows.append((r0, r1, r2))
    grid = np.asarray(rows)
    r = grid[-1]
    # entropy rate at every substep node, vectorized
    rdot = grid @ a.T + d
    rnorm = np.linalg.norm(grid, axis=1)
    clip = np.minimum(rnorm, 1.0 - 2.0 * EIGENVALUE_FLOOR)
    small = rnorm < 1e-8
    factor = np.where(small, 1.0 + clip * clip / 3.0,
                      np.arctanh(clip) / np.where(small, 1.0, clip))
    b = np.array([c.epsilon, 0.0, c.lam])
    rate = -np.einsum("ij,ij->i", rdot, grid * factor[:, None]) \
        - 0.5 * ctx.beta * (rdot @ b)
    d_sigma = h * (np.sum(rate) - 0.5 * (rate[0] + rate[-1]))
    return r, float(d_sigma)


def classical_interval(p, lam, ctx, dt, substeps):
    """Advance the classical population through one constant-lam interval.

    The RK4 recursion for pdot = omega - p is p -> omega + (p-omega)*P(-h),
    so the whole substep grid is a geometric sequence.
    """
    omega = equilibrium_population(lam, ctx)
    h = dt / substeps
    decay = _rk4_decay_factor(h)
    offsets = (p - omega) * np.power(decay, np.arange(substeps + 1))
    grid = omega + offsets
    pdot = -offsets  # omega - p on the grid
    rate = pdot * (ctx.beta * lam + np.log1p(-grid) - np.log(grid))
    d_sigma = h * (np.sum(rate) - 0.5 * (rate[0] + rate[-1]))
    p_final = float(grid[-1])
    if not -1e-9 <= p_final <= 1.0 + 1e-9:
        raise IntegrationError(f"population {p_final} left [0, 1]")
    return min(max(p_final, 0.0), 1.0), float(d_sigma)


def step_quantum(rho, c, ctx, dt, substeps=100):
    """RK4-advance a BlochState by dt under constant control."""
    if dt < 0 or substeps < 1:
        raise ValueError("need dt >= 0 and substeps >= 1")
    if dt == 0:
        return rho
    r, _ = quantum_interval(rho.vector(), c, ctx, dt, substeps)
    return BlochState.from_vector(r)


def evolve_protocol(initial, controls, tau, ctx, substeps=100):
    """Run a piecewise-constant protocol over N equal intervals.

    `initial` is a BlochState or ClassicalState; `controls` holds one
    ControlParams per interval.  Entropy increments use the same substep
    grid as the state integration.
    """
    if len(controls) == 0:
        raise ValueError("need at least one control interval")
    if tau <= 0:
        raise ValueError("tau must be positive")
    n = len(controls)
    dt = tau / n
    times = np.linspace(0.0, tau, n + 1)
    increments = np.empty(n)
    states = [initial]
    if isinstance(initial, ClassicalState):
        p = initial.p_minus
        for j, c in enumerate(controls):
            p, increments[j] = classical_interval(p, c.lam, ctx, dt, substeps)
            states.append(ClassicalState(p))
        mode = "classical"
    else:
        r = initial.vector()
        for j, c in enumerate(controls):
            r, increments[j] = quantum_interval(r, c, ctx, dt, substeps)
            states.append(BlochState.from_vector(r))
        mode = "quantum"
    return Trajectory(times=times, states=states, controls=list(controls),
                      entropy_increments=increments,
                      sigma_total=float(np.sum(increments)), mode=mode)


# ---------------------------------------------------------------------------
# Trajectory CSV export
# ---------------------------------------------------------------------------

CLASSICAL_COLUMNS = ["t", "p_minus", "epsilon", "lam", "d_sigma", "sigma_cum"]
QUANTUM_COLUMNS = ["t", "bloch_x", "bloch_y", "bloch_z",
                   "epsilon", "lam", "d_sigma", "sigma_cum"]


def _fmt(x):
    return format(float(x), ".17g")


def write_trajectory_csv(traj, path):
    """Write one row per time point.

    Row j carries the control applied on the interval starting at t_j (the
    final row repeats the last control) and d_sigma produced on the
    interval ending at t_j (zero on the first row), so summing the
    d_sigma column reproduces the final sigma_cum.
    """
    classical = traj.mode == "classical"
    columns = CLASSICAL_COLUMNS if classical else QUANTUM_COLUMNS
    n = len(traj.controls)
    cum = 0.0
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(columns)
        for j, t in enumerate(traj.times):
            control = traj.controls[min(j, n - 1)]
            d_sigma = 0.0 if j == 0 else float(traj.entropy_increments[j - 1])
            cum += d_sigma
            state = traj.states[j]
            if classical:
                fields = [t, state.p_minus]
            else:
                fields = [t, state.x, state.y, state.z]
            fields += [control.epsilon, control.lam, d_sigma, cum]
            writer.writerow(_fmt(v) for v in fields)


def read_trajectory_csv(path):
    """Read a trajectory CSV back into a dict of column arrays."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = [[float(v) for v in row] for row in reader]
    data = np.array(rows)
    return {name: data[:, i] for i, name in enumerate(header)}


def read_protocol_csv(path):
    """Extract the per-interval controls from a trajectory CSV (rows 0..N-1)."""
    cols = read_trajectory_csv(path)
    eps, lam = cols["epsilon"], cols["lam"]
    return [ControlParams(float(e), float(l)) for e, l in zip(eps[:-1], lam[:-1])]
