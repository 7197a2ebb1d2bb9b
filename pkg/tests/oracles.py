"""Brute-force references shared by the symmetrizability tests."""

import numpy as np

from cqavwc import families, qmath
from cqavwc.channel import Distribution
from cqavwc.symmetrize import Symmetrizer

KET0 = families.basis_state(0)
KET1 = families.basis_state(1)
PLUS = np.full((2, 2), 0.5, dtype=complex)
PLUS_I = np.array([[0.5, -0.5j], [0.5j, 0.5]])


def xor_family(tau0, tau1):
    return {(x, t): (tau0, tau1)[int(x) ^ int(t)] for x in "01" for t in "01"}


def rows(u0, u1, states="01"):
    return Symmetrizer({
        "0": Distribution.from_vector(states, u0),
        "1": Distribution.from_vector(states, u1),
    })


def grid_oracle(family, step=0.01):
    """Brute-force verdict for two inputs and two states.

    With u = U(0|0) and v = U(0|1) the defect is
    u rho_10 + (1-u) rho_11 - v rho_00 - (1-v) rho_01, a traceless qubit
    matrix whose trace norm is 2 sqrt(a^2 + |b|^2). A zero within the square
    lies within step/2 of a grid point in each coordinate, so the grid
    minimum is at most (step/2)(c1 + c2) with the coordinate Lipschitz
    constants c1, c2.
    """
    r00, r01, r10, r11 = (family[k] for k in [("0", "0"), ("0", "1"), ("1", "0"), ("1", "1")])
    g = np.linspace(0, 1, int(round(1 / step)) + 1)
    u = g[:, None, None, None]
    v = g[None, :, None, None]
    d = u * r10 + (1 - u) * r11 - v * r00 - (1 - v) * r01
    a = d[..., 0, 0].real
    b = d[..., 0, 1]
    norms = 2 * np.sqrt(a**2 + np.abs(b) ** 2)
    c1 = qmath.trace_norm(r10 - r11)
    c2 = qmath.trace_norm(r00 - r01)
    return bool(norms.min() <= step / 2 * (c1 + c2) + 1e-12)


def random_symmetrizable_family(rng):
    """Draw three states and solve the symmetry identity for the fourth."""
    while True:
        u, v = rng.uniform(0, 0.4), rng.uniform(0, 1)
        r00, r01, r10 = (qmath.random_density(2, rng) for _ in range(3))
        r11 = (v * r00 + (1 - v) * r01 - u * r10) / (1 - u)
        if np.linalg.eigvalsh(r11)[0] > 1e-6:
            return {("0", "0"): r00, ("0", "1"): r01, ("1", "0"): r10, ("1", "1"): qmath.hermitian_part(r11)}


def perturbed_xor_family(rng, eps=0.2):
    """x xor t family depolarised by eps toward four distinct fixed states."""
    anchors = {("0", "0"): KET0, ("0", "1"): KET1, ("1", "0"): PLUS, ("1", "1"): PLUS_I}
    tau = [qmath.random_density(2, rng), qmath.random_density(2, rng)]
    return {k: (1 - eps) * fam + eps * anchors[k] for k, fam in xor_family(*tau).items()}


def random_family(rng, kind):
    if kind == 0:
        return {(x, t): qmath.random_density(2, rng) for x in "01" for t in "01"}
    if kind == 1:
        return random_symmetrizable_family(rng)
    return perturbed_xor_family(rng)
