"""Bath correlation function of a Drude bath at a low and a high temperature.

At low temperature (beta = 5) the real part of C(t) dips below zero within a
few inverse cutoffs; at high temperature (beta = 0.5) it stays positive. The
Pade fits with two and six poles are printed next to the quadrature result.

    python demos/correlation_function.py > correlation.csv
"""

import csv
import sys

import numpy as np

from heomheat.bath import DrudeSpectralDensity, correlation_quadrature, \
    pade_decompose

J = DrudeSpectralDensity(zeta=1.0, gamma=1.0)
t = np.linspace(0.02, 5.0, 250)

out = csv.writer(sys.stdout)
out.writerow(["beta", "t", "re_exact", "im_exact", "re_pade2", "re_pade6"])
for beta in (5.0, 0.5):
    exact = correlation_quadrature(J, beta, t)
    fit2 = pade_decompose(J, beta, 2).correlation(t)
    fit6 = pade_decompose(J, beta, 6).correlation(t)
    for row in zip(t, exact.real, exact.imag, fit2.real, fit6.real):
        out.writerow([beta, *(f"{v:.8g}" for v in row)])
    i = int(np.argmin(exact.real))
    print(f"beta={beta}: min Re C = {exact.real[i]:.4g} at t = {t[i]:.3g}",
          file=sys.stderr)
