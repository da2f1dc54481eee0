"""When does the linear approximation break down?

Sweeps the hand noise relative to the separation distance and compares the
sampled uncertainty with the first-order one.
"""

from pmusafe import InputSet, mc_vs_analytic_report
from pmusafe.model import Distance3D

names = ["xH", "yH", "zH", "xR", "yR", "zR"]
d = 0.1
print(f"{'sigma/d':>8} {'first-order':>12} {'sampled':>10} {'rel diff':>9}  flag")
for ratio in (0.01, 0.05, 0.1, 0.3, 0.5, 1.0):
    s = ratio * d
    inputs = InputSet.independent(names, [d, 0, 0, 0, 0, 0], [s, s, s, 0, 0, 0])
    rec = mc_vs_analytic_report(Distance3D(), inputs, 100_000, seed=2)
    flag = "nonlinear" if rec.nonlinear else ""
    print(f"{ratio:8.2f} {rec.analytic.u_prop:12.5f} {rec.monte_carlo.u_prop:10.5f} {rec.relative_difference:9.2%}  {flag}")
