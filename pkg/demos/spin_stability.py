"""Small perturbations of a permanent rotation: decay about the axis of largest
moment, growth about the axis of smallest moment.

Both runs use the named presets on a coarser grid so the script finishes in
about a minute.  The measured rates are compared with the slowest eigenvalue
of the full discrete linearized operator.
"""

import tempfile

from gyrostat import spectral as S
from gyrostat.shell.experiments import omega_deviation, perturbation_norm, run_preset
from gyrostat.stability import fit_decay, fit_growth, growth_factor

GRID = (8, 8, 8)

with tempfile.TemporaryDirectory() as out:
    stable = run_preset("kelvin-stable", out, grid=GRID, t_end=30.0)
    unstable = run_preset("kelvin-unstable", out, grid=GRID, t_end=120.0)

t = stable.series.t
v_fit = fit_decay(t, stable.series.column("l2v"), "l2v")
w_fit = fit_decay(t, omega_deviation(stable.series, stable.setup), "omega_dev")
lam = S.refine_spectrum(stable.setup, S.analyze(stable.setup), n_seeds=2)[0]
print(f"spin about e3: {stable.summary['case']} / {stable.summary['verdict']}")
print(f"  |v| decays at {v_fit.rate:.4f} (R^2 {v_fit.r_squared:.4f})")
print(f"  |omega - omega_bar| decays at {w_fit.rate:.4f} (R^2 {w_fit.r_squared:.4f})")
print(f"  slowest eigenvalue {lam.real:.4f} {lam.imag:+.4f}i")

y = perturbation_norm(unstable.series)
g_fit = fit_growth(unstable.series.t, y, "perturbation")
lam = S.refine_spectrum(unstable.setup, S.analyze(unstable.setup), n_seeds=2)[0]
print(f"spin about e1: {unstable.summary['case']} / {unstable.summary['verdict']}")
print(f"  perturbation grows x{growth_factor(y):.3g}, rate {g_fit.rate:.4f}")
print(f"  unstable eigenvalue {lam.real:.4f} {lam.imag:+.4f}i")
