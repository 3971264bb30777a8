#!/usr/bin/env python3
"""How far can the classical two-level system be driven in fixed time?

The relaxation rate of the ground population is bounded, so with a
horizon tau the largest reachable target is p_f = 1 - (1 - p_i) e^{-tau}.
This script prints the frontier for a few horizons and then checks that a
brute-force constant drive at a large control value saturates it.
"""

import numpy as np

from minent import (ClassicalState, ControlParams, ThermalContext,
                    evolve_protocol, reachability)

ctx = ThermalContext(beta=1.0)

print("frontier from p_i = 0.5:")
print(f"{'tau':>6} {'p_f_max':>10} {'lambda_f_max':>13}")
for tau in (0.25, 0.5, 1.0, 2.0, 4.0):
    bound = reachability(0.5, tau, ctx)
    print(f"{tau:6.2f} {bound.p_f_max:10.5f} {bound.lambda_f_max:13.5f}")

# saturation: slam the control to lam = 10 and watch the population race
bound = reachability(0.5, 1.0, ctx)
traj = evolve_protocol(ClassicalState(0.5), [ControlParams(0, 10.0)] * 10,
                       1.0, ctx)
reached = traj.states[-1].p_minus
print(f"\nconstant lam = 10 over tau = 1 reaches p = {reached:.5f}")
print(f"frontier value                         p = {bound.p_f_max:.5f}")
print(f"gap: {bound.p_f_max - reached:.2e}  "
      f"(entropy paid: {traj.sigma_total:.4f})")
