#!/usr/bin/env python3
"""Regenerate data/materials/*.csv (energy_eV,n,k) from analytic dispersion models.

aluminium: Lorentz-Drude model (Rakic 1998 parameter set)
quartz:    fused silica Sellmeier (Malitson 1965)
lif:       LiF Sellmeier (Tropf 1995)
"""
import cmath
import math
import os
import sys

HC = 1239.841984  # eV nm


def aluminium(e):
    wp = 14.98
    f = [0.523, 0.227, 0.050, 0.166, 0.030]
    g = [0.047, 0.333, 0.312, 1.351, 3.382]
    w = [0.0, 0.162, 1.544, 1.808, 3.473]
    eps = 1 - f[0] * wp**2 / (e * (e + 1j * g[0]))
    for j in range(1, 5):
        eps += f[j] * wp**2 / (w[j] ** 2 - e**2 - 1j * e * g[j])
    n = cmath.sqrt(eps)
    return n if n.imag >= 0 else -n


def sellmeier(terms):
    def index(e):
        lam = HC / e / 1000.0  # um
        n2 = 1.0 + sum(b * lam**2 / (lam**2 - c**2) for b, c in terms)
        return complex(math.sqrt(n2), 0.0)
    return index


MODELS = {
    "aluminium": aluminium,
    "quartz": sellmeier([(0.6961663, 0.0684043), (0.4079426, 0.1162414), (0.8974794, 9.896161)]),
    "lif": sellmeier([(0.92549, 0.07376), (6.96747, 32.79)]),
}


def main(outdir):
    os.makedirs(outdir, exist_ok=True)
    energies = [round(1.0 + 0.01 * i, 10) for i in range(501)]  # 1.00 .. 6.00 eV
    for name, model in MODELS.items():
        with open(os.path.join(outdir, name + ".csv"), "w") as fh:
            fh.write("energy_eV,n,k\n")
            for e in energies:
                n = model(e)
                fh.write(f"{e!r},{n.real!r},{n.imag!r}\n")


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else os.path.join(os.path.dirname(__file__), "..", "data", "materials"))
