"""Coefficient reconstruction by repeated linearisation.

We look for c(x) in u_t = Laplace(u) + c u with u(., 0) = 1 and u = 1 on the
boundary, given the boundary flux F.  Each step freezes the current forward
solution u_n as the factor f of a linear source problem and turns the
recovered source into a coefficient update.

Three update rules are compared on a disk inclusion (c = 3 inside, 1 outside):
  background      residual F - flux(u_n), update c0 + p_n
  increment       residual F - flux(u_n), operator with c_n, update c_n + p_n
  fixed_residual  residual F - flux(u_0) throughout, update c0 + p_n
The internal forward solves run on a 2x finer grid (forward_refinement=2)
and the data on a 4x finer one, so the residual is not dominated by the
discretisation gap between the data and the model.

Run:  python demos/04_coefficient_inversion.py      (a few minutes)
"""

import numpy as np

from parabolic_qr import CipProblem, GridSpec, cip_iterate, generate_cip_data, sample
from parabolic_qr.cip import default_boundary, default_initial

spec = GridSpec(R=1.0, nx=40, nt=30, T=0.2)
c_true = lambda x, y: 1.0 + 2.0 * ((x**2 + y**2) < 0.25**2)
ct = sample(c_true, spec).values
F = generate_cip_data(c_true, spec, refinement=4)


def l2(a):
    return float(np.sqrt(spec.dx**2 * np.sum(a**2)))


for rule in ("background", "increment", "fixed_residual"):
    state = cip_iterate(CipProblem(spec, default_initial, default_boundary, F, c0=1.0, n_star=5,
                                   update_rule=rule, keep_history=True, forward_refinement=2))
    errs = [l2(c.values - ct) for c in state.c_history]
    print(f"\n{rule}")
    print("  ||c_n - c_true||:", " ".join(f"{e:.3f}" for e in errs))
    print("  e_n             :", " ".join(f"{e:.2e}" for e in state.e_history))
    print(f"  max c_5 = {state.c_n.values.max():.3f} (true 3)")

print("\nThe fixed-residual rule settles within a few steps; the literal background")
print("rule keeps oscillating because its residual data and its operator refer to")
print("different base states.")
