"""Curvature of a circular droplet from a piecewise linear level set.

Compares the weak P1 Laplacian with the H3 reconstruction on a few meshes
and plots the curvature sampled along the discrete interface.

Run with ``python demos/droplet_curvature.py [out_dir]``.
"""

import os
import sys

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from tikhcurv import (
    ReconstructionConfig,
    build_rect_mesh,
    circle_levelset,
    curvature_field,
    extract_interface,
    interpolate,
    make_space,
    reconstruct,
    weak_laplacian,
)
from tikhcurv.analysis import interface_mean, l2_error_interface
from tikhcurv.fem import evaluate


def main(out_dir="."):
    os.makedirs(out_dir, exist_ok=True)
    fig, ax = plt.subplots(figsize=(6, 4))
    for n in (16, 32, 64):
        mesh = build_rect_mesh(-1, 1, -1, 1, n, n)
        phi = interpolate(make_space(mesh, 1), circle_levelset(R=0.5))
        gamma = extract_interface(phi)
        kappa_weak = -weak_laplacian(phi)
        kappa_h3 = curvature_field(reconstruct(phi, ReconstructionConfig.h3(1.0)))
        for name, kappa in (("weak P1", kappa_weak), ("H3, alpha=1", kappa_h3)):
            err = l2_error_interface(kappa, 2.0, gamma)
            print(f"n={n:3d} {name:12s} L2 error {err:.3e}  mean {interface_mean(kappa, gamma):.4f}")
        mid = 0.5 * (gamma.a + gamma.b)
        angle = np.arctan2(mid[:, 1], mid[:, 0])
        order = np.argsort(angle)
        ax.plot(angle[order], evaluate(kappa_h3, mid)[order], label=f"H3, n={n}")
    ax.axhline(2.0, color="k", lw=0.8, ls="--", label="exact")
    ax.set_xlabel("polar angle")
    ax.set_ylabel("curvature")
    ax.legend()
    fig.tight_layout()
    fig.savefig(os.path.join(out_dir, "droplet_curvature.svg"))
    print("wrote", os.path.join(out_dir, "droplet_curvature.svg"))


if __name__ == "__main__":
    main(*sys.argv[1:])
