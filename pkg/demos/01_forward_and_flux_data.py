"""Forward simulation and the boundary data it produces.

We solve u_t = Laplace(u) + c u + f p with zero initial and boundary values,
read off the outward flux G on the boundary, and look at how the size of
G_t is distributed over time.  Most of the signal arrives early, which is why
a short final time is enough for the inversion.

Run:  python demos/01_forward_and_flux_data.py
"""

import numpy as np

from parabolic_qr import GridSpec, generate_data, sample
from parabolic_qr.forward import ForwardProblem, extract_normal_flux, solve_forward
from parabolic_qr.phantoms import eval_c_background, eval_f, eval_test1

# A long observation window so the decay of the signal is visible.
spec = GridSpec(R=1.0, nx=30, nt=60, T=1.0)

# 1. Plain forward solve: source f(x, t) p(x) with the smooth bump as p.
source = sample(lambda x, y, t: eval_f(x, y, t) * eval_test1(x, y), spec, space_time=True)
zero = sample(lambda x, y: 0 * x, spec)
u = solve_forward(ForwardProblem(spec, sample(eval_c_background, spec), zero, source))
print(f"max u over space-time: {np.max(u.values):.4f} at t = {spec.t[np.argmax(u.values.max(axis=(0, 1)))]:.3f}")

G = extract_normal_flux(u)
print(f"flux range on the boundary: [{G.values.min():.4f}, {G.values.max():.4f}]")

# 2. Data as the inversion sees it: simulated on a 2x finer grid, restricted,
#    then differentiated in time.
Gt = generate_data(eval_test1, eval_f, eval_c_background, spec, refinement=2)
gamma = Gt.l2_norm_in_space()
t = spec.t
early = np.trapezoid(gamma[t <= 0.2 + 1e-12], t[t <= 0.2 + 1e-12]) / np.trapezoid(gamma, t)
print(f"share of the G_t signal carried by t in [0, 0.2]: {early:.1%}")

print("\n  t      ||G_t(., t)||")
for k in range(0, spec.nt + 1, 6):
    bar = "#" * int(40 * gamma[k] / gamma.max())
    print(f"{t[k]:5.2f}  {gamma[k]:9.4f}  {bar}")
