"""Small named channels used by the examples, the CLI demos and the tests."""

from __future__ import annotations

import numpy as np

from . import qmath
from .channel import CqavwcChannel


def basis_state(k: int, dim: int = 2) -> np.ndarray:
    m = np.zeros((dim, dim), dtype=complex)
    m[k, k] = 1.0
    return m


def depolarized(k: int, q: float, dim: int = 2) -> np.ndarray:
    """``(1 - q)|k><k| + q I/d``."""
    return (1 - q) * basis_state(k, dim) + q * np.eye(dim) / dim


def orthogonal_constant_channel(dim_eve: int = 2) -> CqavwcChannel:
    """One state; the legal receiver sees ``|x><x|``, the eavesdropper a fixed mixed state."""
    legal = {("0", "s"): basis_state(0), ("1", "s"): basis_state(1)}
    eve = {(x, "s"): np.eye(dim_eve) / dim_eve for x in ("0", "1")}
    return CqavwcChannel.from_arrays(["0", "1"], ["s"], legal, eve)


def fully_wiretapped_channel() -> CqavwcChannel:
    """One state; both receivers see ``|x><x|``."""
    ops = {("0", "s"): basis_state(0), ("1", "s"): basis_state(1)}
    return CqavwcChannel.from_arrays(["0", "1"], ["s"], ops, dict(ops))


def xor_channel(tau0=None, tau1=None, eve=None) -> CqavwcChannel:
    """Binary inputs and states with ``rho_{x,t} = tau_{x xor t}``.

    Defaults to the computational basis states; the eavesdropper sees a
    constant maximally mixed qubit unless ``eve`` is given.
    """
    tau = [basis_state(0) if tau0 is None else tau0, basis_state(1) if tau1 is None else tau1]
    sigma = np.eye(2) / 2 if eve is None else eve
    labels = ["0", "1"]
    legal = {(x, t): tau[int(x) ^ int(t)] for x in labels for t in labels}
    return CqavwcChannel.from_arrays(labels, labels, legal, {k: sigma for k in legal})


def state_blind_channel(states_by_input, n_states: int = 2) -> CqavwcChannel:
    """Legal states depend on ``x`` only; the eavesdropper sees a maximally mixed state."""
    inputs = [str(i) for i in range(len(states_by_input))]
    thetas = [str(i) for i in range(n_states)]
    dim = np.asarray(states_by_input[0]).shape[0]
    legal = {(x, t): states_by_input[int(x)] for x in inputs for t in thetas}
    eve = {k: np.eye(dim) / dim for k in legal}
    return CqavwcChannel.from_arrays(inputs, thetas, legal, eve)


def jammer_channel(
    legal_noise=(0.05, 0.15), eve_noise=(0.6, 0.8)
) -> CqavwcChannel:
    """Qubit wiretap channel whose two jammer states set the depolarizing strength.

    State ``t`` depolarizes the legal output by ``legal_noise[t]`` and the
    eavesdropper's output by ``eve_noise[t]``.
    """
    inputs, states = ["0", "1"], ["a", "b"]
    legal = {(x, t): depolarized(int(x), q) for x in inputs for t, q in zip(states, legal_noise)}
    eve = {(x, t): depolarized(int(x), q) for x in inputs for t, q in zip(states, eve_noise)}
    return CqavwcChannel.from_arrays(inputs, states, legal, eve)


def noisy_eve_channel(rng: np.random.Generator, n_inputs: int = 2, n_states: int = 2) -> CqavwcChannel:
    """Random qubit channel with nearly pure legal letters and heavily mixed eavesdropper letters."""
    inputs = [str(i) for i in range(n_inputs)]
    states = [str(i) for i in range(n_states)]
    legal, eve = {}, {}
    for x in inputs:
        for t in states:
            legal[(x, t)] = 0.9 * qmath.random_density(2, rng, rank=1) + 0.05 * np.eye(2)
            eve[(x, t)] = 0.3 * qmath.random_density(2, rng) + 0.35 * np.eye(2)
    return CqavwcChannel.from_arrays(inputs, states, legal, eve)
