"""One solve, end to end, through the library and the command line.

Builds an L-pair mesh, solves at k = 2 in the Darcy-dominated regime
(kappa^-1 = 1e4), and samples the discrete fields on a grid.  The last part
runs the equivalent CLI commands, which write a mesh file, a solution CSV
and the saddle-point matrix in Matrix Market format.
"""

import subprocess
import sys
import tempfile
from pathlib import Path

import numpy as np

from wgbrinkman import RunConfig, case_s2d, run_single

case = case_s2d(kappa_inv=1e4)
cfg = RunConfig(family="l_pair", k=2, levels=(4, 4), kappa_inv=1e4, case=case)
samples, coeffs, sample_csv, sol, system = run_single(cfg, n_samples=11)

print(f"DOFs: {system.matrix.shape[0]}, solver residual {sol.residual:.1e}")
ex = case.u(samples["x"], samples["y"])
print(f"max sampled velocity error {np.abs(np.stack([samples['u1'], samples['u2']]) - ex).max():.2e}")
print(f"max sampled pressure error {np.abs(samples['p'] - case.p(samples['x'], samples['y'])).max():.2e}")

with tempfile.TemporaryDirectory() as tmp:
    tmp = Path(tmp)
    cli = [sys.executable, "-m", "wgbrinkman"]
    subprocess.run(cli + ["mesh", "--family", "l_pair", "--level", "3", "--out", str(tmp / "mesh.txt")], check=True)
    subprocess.run(
        cli
        + ["solve", "--family", "l_pair", "--mesh", str(tmp / "mesh.txt"), "--k", "1", "--samples", "5"]
        + ["--out", str(tmp / "sol.csv"), "--export-matrix", str(tmp / "K.mtx")],
        check=True,
    )
    print("\nCLI wrote:", ", ".join(sorted(p.name for p in tmp.iterdir())))
    print((tmp / "sol.csv").read_text().splitlines()[:3])
