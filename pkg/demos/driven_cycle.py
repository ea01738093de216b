"""A periodically modulated two-level system between two baths.

The level splitting is modulated as 0.3 sin(t) sigma_z. After the transient
the hierarchy settles into a limit cycle. Heat and work are then integrated
over one period, and both the Clausius inequality and the Carnot bound are
checked. Here the modulation dissipates work, W > 0, so the device runs as a
heater rather than an engine.
"""

import math

import numpy as np

from heomheat.dynamics import SolverOptions, propagate, steady_state
from heomheat.models import SIGMA_Z, Drive, two_level_model
from heomheat.observables import cycle_accumulate

base = two_level_model(0.1, n_terms=1)
period = 2 * math.pi
model = base.replace(drives=(Drive(0.3 * SIGMA_Z, "sinusoid", amplitude=1.0,
                                   frequency=1.0),))
start = steady_state(base, SolverOptions(depth=4))
times = np.linspace(0.0, 30 * period, 30 * 200 + 1)
traj = propagate(model, start, times, dt=period / 800)
cyc = cycle_accumulate(traj, period)

print(f"periodicity error   {cyc.periodicity_error:.2e}")
for name, q in cyc.heat.items():
    print(f"Q_{name}                 {q:+.6f}")
print(f"W                   {cyc.work:+.6f}")
print(f"-sum beta Q         {cyc.entropy_production:+.6f}  (>= 0)")
print(f"efficiency          {cyc.efficiency:+.4f}  (Carnot {cyc.carnot:.4f})")
