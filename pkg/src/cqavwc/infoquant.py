"""Holevo quantities and the secrecy-rate lower bounds.

The multi-letter leakage terms are evaluated by brute force at a declared
finite block length; the whole sequence ``n' = 1 .. n_max`` is reported.
The optimisations over input and state distributions use a deterministic
simplex grid followed by pairwise mass-shift refinement. This is a heuristic
with no global-optimality guarantee.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import qmath, symmetrize
from .channel import (
    DEFAULT_CAPS,
    CqavwcChannel,
    Distribution,
    ResourceCaps,
    state_sequences,
)
from .errors import ResourceError, ShapeError

SYMMETRIZABLE_NOTE = (
    "legal family symmetrizable ({which}); secrecy capacity is 0 with and without CSI (Eq. t3)"
)
CSI_LIMIT_NOTE = (
    "CSI proxy: outer min over (Q, t^n) taken at the single block length n_used; "
    "the interplay of that min with the n -> infinity limit is ambiguous"
)
MAX_GRID_POINTS = 200_000


@dataclass(frozen=True, eq=False)
class ChiEnsemble:
    probs: Distribution
    states: tuple

    def __post_init__(self):
        if len(self.states) != len(self.probs.weights):
            raise ShapeError("ensemble probabilities and states differ in length")


@dataclass(frozen=True)
class SimplexGrid:
    step: float = 1 / 32
    final_step: float = 1 / 1024

    def __post_init__(self):
        if not (0 < self.final_step <= self.step <= 1):
            raise ValueError("need 0 < final_step <= step <= 1")


DEFAULT_GRID = SimplexGrid()


@dataclass(frozen=True, eq=False)
class BoundReport:
    mode: str
    n_used: int
    p_star: Distribution
    q_star: Distribution
    legal_term: float
    leakage_terms: list
    bound_value: float
    raw_value: float
    symmetrizability_note: str
    gate: dict = field(default_factory=dict)
    t_seq_star: tuple | None = None

    def as_dict(self) -> dict:
        return {
            "mode": self.mode,
            "n_used": self.n_used,
            "p_star": self.p_star.as_dict(),
            "q_star": self.q_star.as_dict(),
            "t_seq_star": list(self.t_seq_star) if self.t_seq_star is not None else None,
            "legal_term": self.legal_term,
            "leakage_terms": list(self.leakage_terms),
            "bound_value": self.bound_value,
            "raw_value": self.raw_value,
            "symmetrizability_note": self.symmetrizability_note,
            "gate": self.gate,
        }


def holevo_chi(probs, states: Sequence) -> float:
    """``S(sum_x P(x) rho_x) - sum_x P(x) S(rho_x)`` in bits.

    ``probs`` is a :class:`Distribution` or a plain weight vector aligned
    with ``states``.
    """
    w = probs.weights if isinstance(probs, Distribution) else np.asarray(probs, dtype=float)
    if len(w) != len(states):
        raise ShapeError("ensemble probabilities and states differ in length")
    mats = [qmath.validate_density(s) for s in states]
    if len({m.shape for m in mats}) != 1:
        raise ShapeError("ensemble states have different dimensions")
    return _chi(w, np.stack(mats))


def _chi(w: np.ndarray, stack: np.ndarray) -> float:
    """Unvalidated core; ``stack`` has shape ``(k, d, d)``."""
    avg = np.tensordot(w, stack, axes=1)
    spectra = np.linalg.eigvalsh(np.concatenate([avg[None], stack]))
    s_avg = qmath.entropy_of_spectrum(spectra[0])
    s_each = np.array([qmath.entropy_of_spectrum(s) for s in spectra[1:]])
    return max(s_avg - float(w @ s_each), 0.0)


def chi_of(ensemble: ChiEnsemble) -> float:
    return holevo_chi(ensemble.probs, ensemble.states)


# simplex search -------------------------------------------------------------


def simplex_grid_points(k: int, step: float) -> np.ndarray:
    """All points of the ``k``-simplex with coordinates in multiples of ``step``."""
    m = int(round(1 / step))
    count = math.comb(m + k - 1, k - 1)
    if count > MAX_GRID_POINTS:
        raise ResourceError("simplex_grid_points", count, MAX_GRID_POINTS)
    pts = []
    for bars in itertools.combinations(range(m + k - 1), k - 1):
        edges = (-1,) + bars + (m + k - 1,)
        pts.append([edges[i + 1] - edges[i] - 1 for i in range(k)])
    return np.array(pts, dtype=float) / m


def simplex_search(
    f: Callable[[np.ndarray], float], k: int, grid: SimplexGrid = DEFAULT_GRID, maximize: bool = False
) -> tuple[np.ndarray, float]:
    """Coarse grid then pairwise mass-shift refinement down to ``grid.final_step``.

    Ties keep the earliest point in canonical order, so results do not depend
    on evaluation scheduling.
    """
    sign = -1.0 if maximize else 1.0
    if k == 1:
        x = np.ones(1)
        return x, f(x)
    best_x, best_v = None, math.inf
    for x in simplex_grid_points(k, grid.step):
        v = sign * f(x)
        if v < best_v:
            best_x, best_v = x, v
    h = grid.step / 2
    while h >= grid.final_step * (1 - 1e-12):
        improved = True
        while improved:
            improved = False
            for i, j in itertools.permutations(range(k), 2):
                if best_x[i] < h - 1e-15:
                    continue
                cand = best_x.copy()
                cand[i] -= h
                cand[j] += h
                cand[i] = max(cand[i], 0.0)
                v = sign * f(cand)
                if v < best_v:
                    best_x, best_v = cand, v
                    improved = True
        h /= 2
    return best_x, sign * best_v


# legal and leakage terms ----------------------------------------------------


def _legal_stack(ch: CqavwcChannel) -> np.ndarray:
    """Array ``[x, t, d, d]`` of legal states in declared label order."""
    return np.array([[ch.legal[(x, t)] for t in ch.states] for x in ch.inputs])


def legal_term(
    ch: CqavwcChannel, p: Distribution, grid: SimplexGrid = DEFAULT_GRID
) -> tuple[float, Distribution]:
    """``min_Q chi(P, {rho^Q_x})`` and the minimising ``Q`` found by the search."""
    w = p.reorder(ch.inputs)
    stack = _legal_stack(ch)
    q, value = simplex_search(lambda q: _chi(w, np.tensordot(stack, q, axes=([1], [0]))),
                              len(ch.states), grid)
    return value, Distribution.from_vector(ch.states, q)


def _product_spectrum_chi(w: np.ndarray, letters: list, n: int) -> float:
    """Brute-force ``chi(P^n, {sigma_{x^n, t^n}})`` from explicit product matrices."""
    k = len(w)
    total = None
    s_cond = 0.0
    for idx in itertools.product(range(k), repeat=n):
        weight = float(np.prod(w[list(idx)]))
        if weight == 0.0:
            continue
        m = qmath.tensor(*(letters[i][x] for i, x in enumerate(idx)))
        total = weight * m if total is None else total + weight * m
        s_cond += weight * qmath.entropy_of_spectrum(np.linalg.eigvalsh(m))
    s_avg = qmath.entropy_of_spectrum(np.linalg.eigvalsh(total))
    return max(s_avg - s_cond, 0.0)


def leakage_chi_sequence(
    ch: CqavwcChannel, p: Distribution, t_seq: Sequence, caps: ResourceCaps = DEFAULT_CAPS
) -> float:
    """``chi(P^n, {sigma_{x^n, t^n}: x^n})`` for one state sequence, by enumeration."""
    n = len(t_seq)
    ch.check_state_labels(t_seq)
    caps.check("max_input_seqs", len(ch.inputs), n)
    caps.check("max_dim", ch.dim_eve, n)
    w = p.reorder(ch.inputs)
    letters = [[ch.eve[(x, t)] for x in ch.inputs] for t in t_seq]
    return _product_spectrum_chi(w, letters, n)


def leakage_term_n(
    ch: CqavwcChannel, p: Distribution, n: int, caps: ResourceCaps = DEFAULT_CAPS
) -> float:
    """``(1/n) max_{t^n} chi(P^n, {sigma_{x^n,t^n}})`` by exhaustive enumeration."""
    if n < 1:
        raise ValueError("n must be >= 1")
    caps.check("max_input_seqs", len(ch.inputs), n)
    caps.check("max_dim", ch.dim_eve, n)
    best = 0.0
    for t_seq in state_sequences(ch, n, caps):
        best = max(best, leakage_chi_sequence(ch, p, t_seq, caps))
    return best / n


# bounds ---------------------------------------------------------------------


def _floor(raw: float) -> float:
    return raw if raw > 0 else 0.0


def _gate(ch: CqavwcChannel, tol_sym: float) -> tuple[bool, dict, str]:
    per_t = symmetrize.check_per_state(ch, tol_sym)
    joint = symmetrize.check_joint(ch, tol_sym)
    hits = [f"per-t at t={t}" for t, v in per_t.items() if v.symmetrizable]
    if joint.symmetrizable:
        hits.append("joint")
    gate = {
        "per_t": {t: v.symmetrizable for t, v in per_t.items()},
        "joint": joint.symmetrizable,
        "consulted": ["per_t", "joint"],
    }
    if hits:
        return True, gate, SYMMETRIZABLE_NOTE.format(which=", ".join(hits))
    return False, gate, "legal family not symmetrizable (per-t and joint checks)"


def lower_bound_no_csi(
    ch: CqavwcChannel,
    grid: SimplexGrid = DEFAULT_GRID,
    n_max: int = 1,
    caps: ResourceCaps = DEFAULT_CAPS,
    tol_sym: float = symmetrize.TOL_SYM,
) -> BoundReport:
    """Finite-``n`` proxy of the no-CSI bound, gated by symmetrizability."""
    caps.check("max_state_seqs", len(ch.states), n_max)
    caps.check("max_input_seqs", len(ch.inputs), n_max)
    caps.check("max_dim", ch.dim_eve, n_max)
    symmetrizable, gate, note = _gate(ch, tol_sym)
    if symmetrizable:
        p = Distribution.uniform(ch.inputs)
        leak = [leakage_term_n(ch, p, m, caps) for m in range(1, n_max + 1)]
        q = Distribution.uniform(ch.states)
        return BoundReport("no_csi", n_max, p, q, 0.0, leak, 0.0, 0.0 - leak[-1], note, gate)

    def objective(pv):
        pd = Distribution.from_vector(ch.inputs, pv)
        return legal_term(ch, pd, grid)[0] - leakage_term_n(ch, pd, n_max, caps)

    pv, raw = simplex_search(objective, len(ch.inputs), grid, maximize=True)
    p = Distribution.from_vector(ch.inputs, pv)
    legal, q = legal_term(ch, p, grid)
    leak = [leakage_term_n(ch, p, m, caps) for m in range(1, n_max + 1)]
    raw = legal - leak[-1]
    return BoundReport("no_csi", n_max, p, q, legal, leak, _floor(raw), raw, note, gate)


def lower_bound_csi(
    ch: CqavwcChannel,
    grid: SimplexGrid = DEFAULT_GRID,
    n_max: int = 1,
    caps: ResourceCaps = DEFAULT_CAPS,
    tol_sym: float = symmetrize.TOL_SYM,
) -> BoundReport:
    """``min_{Q, t^n} max_P [chi(P, rho^Q) - (1/n) chi(P^n, sigma_{., t^n})]`` at ``n = n_max``.

    ``leakage_terms[m-1]`` is the per-letter leakage of the optimal state
    sequence's length-``m`` prefix at ``p_star``.
    """
    t_seqs = state_sequences(ch, n_max, caps)
    caps.check("max_input_seqs", len(ch.inputs), n_max)
    caps.check("max_dim", ch.dim_eve, n_max)
    symmetrizable, gate, note = _gate(ch, tol_sym)
    note = f"{note}; {CSI_LIMIT_NOTE}"
    stack = _legal_stack(ch)
    nx = len(ch.inputs)

    if symmetrizable:
        p = Distribution.uniform(ch.inputs)
        t_star = t_seqs[0]
        leak = [leakage_chi_sequence(ch, p, t_star[:m], caps) / m for m in range(1, n_max + 1)]
        q = Distribution.uniform(ch.states)
        return BoundReport("csi", n_max, p, q, 0.0, leak, 0.0, 0.0 - leak[-1], note, gate, t_star)

    best = None
    for t_seq in t_seqs:
        letters = [[ch.eve[(x, t)] for x in ch.inputs] for t in t_seq]
        cache: dict = {}

        def leak_at(pv):
            key = pv.tobytes()
            if key not in cache:
                cache[key] = _product_spectrum_chi(pv, letters, n_max) / n_max
            return cache[key]

        def inner(qv):
            rho_q = np.tensordot(stack, qv, axes=([1], [0]))
            return simplex_search(lambda pv: _chi(pv, rho_q) - leak_at(pv), nx, grid, maximize=True)

        qv, val = simplex_search(lambda qv: inner(qv)[1], len(ch.states), grid)
        if best is None or val < best[0]:
            best = (val, qv, inner(qv)[0], t_seq)

    raw, qv, pv, t_star = best
    p = Distribution.from_vector(ch.inputs, pv)
    q = Distribution.from_vector(ch.states, qv)
    legal = _chi(pv, np.tensordot(stack, qv, axes=([1], [0])))
    leak = [leakage_chi_sequence(ch, p, t_star[:m], caps) / m for m in range(1, n_max + 1)]
    raw = legal - leak[-1]
    return BoundReport("csi", n_max, p, q, legal, leak, _floor(raw), raw, note, gate, t_star)
