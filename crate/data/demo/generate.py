#!/usr/bin/env python3
"""Generates the synthetic demo scan set: a 33x33 raster of a two-phase
polymer blend look-alike (stiff matrix, soft circular inclusions), with
height in nm, peak adhesive traction in MPa, dissipation in mJ/m^2 and
modulus in MPa. Spacings are in mm; the sample is 5 um across."""

import numpy as np

N = 33
L = 5e-3  # mm
DX = L / (N - 1)

rng = np.random.default_rng(20240811)

x, y = np.meshgrid(np.arange(N) / (N - 1), np.arange(N) / (N - 1), indexing="ij")

# soft circular inclusions on a stiff matrix
centers = [(0.30, 0.35, 0.14), (0.70, 0.60, 0.15), (0.45, 0.82, 0.11)]
inclusion = np.zeros((N, N), dtype=bool)
for cx, cy, r in centers:
    inclusion |= (x - cx) ** 2 + (y - cy) ** 2 < r**2

# height (nm): gentle waviness plus bumps over the inclusions
height = (
    6.0 * np.cos(2 * np.pi * (1.3 * x + 0.4 * y))
    + 4.0 * np.cos(2 * np.pi * (0.7 * x - 1.9 * y) + 1.1)
    + 3.0 * np.cos(2 * np.pi * (2.9 * x + 2.2 * y) + 2.3)
)
for cx, cy, r in centers:
    d2 = ((x - cx) ** 2 + (y - cy) ** 2) / r**2
    height += 14.0 * np.clip(1.0 - d2, 0.0, None)
height += rng.normal(0.0, 0.6, (N, N))
height -= height.min()

# adhesion is stronger on the soft phase; keep delta_gamma/p_max^2 narrow so
# one slope cap serves every pixel
peak = np.where(inclusion, 2.4, 1.6) * (1.0 + rng.normal(0.0, 0.03, (N, N)))
diss = np.where(inclusion, 50.0, 33.0) * (1.0 + rng.normal(0.0, 0.03, (N, N)))

modulus = np.where(inclusion, 65.0, 130.0) * (1.0 + rng.normal(0.0, 0.04, (N, N)))


def write(name, kind, unit, vals):
    with open(name, "w") as f:
        f.write(f"{N} {N}\n{DX!r} {DX!r}\n{kind}\n{unit}\n")
        for j in range(N):
            f.write(" ".join(repr(float(vals[i, j])) for i in range(N)) + "\n")


write("height.dat", "height", "nm", height)
write("peak_force.dat", "peak_force", "MPa", peak)
write("dissipation.dat", "dissipation", "mJ/m^2", diss)
write("modulus.dat", "modulus", "MPa", modulus)
print(f"inclusion fraction: {inclusion.mean():.3f}")
print(f"height range (nm): {height.min():.2f} .. {height.max():.2f}")
