"""Convergence on uniform triangle meshes.

Solves the smooth manufactured Brinkman problem for k = 1, 2 with the
weak gradient in P_{k+1} and prints the error/order table for each.  The
velocity L2 error should drop like h^{k+1}, the energy and pressure errors
like h^k.

    python demos/convergence_table.py [max_level]
"""

import sys

from wgbrinkman import RunConfig, run_convergence

top = int(sys.argv[1]) if len(sys.argv) > 1 else 6

for k in (1, 2):
    report, table = run_convergence(RunConfig(family="triangle", k=k, levels=(2, top)))
    print(table)
    o = report.finest_orders()
    print(f"finest-pair orders: velocity {o['velocity_l2']:.2f}, energy {o['energy']:.2f}, pressure {o['pressure_l2']:.2f}\n")
