"""Symmetrizability of a family ``{rho_{x,t}}`` as a linear feasibility problem.

Unknowns are the rows ``U(.|x)`` of a stochastic matrix. For every unordered
pair ``x != x'`` the matrix identity

    sum_t U(t|x) rho_{x',t} == sum_t U(t|x') rho_{x,t}

is split into real and imaginary entrywise equations. We minimise the largest
entrywise violation over the product of simplices with HiGHS and call the
family symmetrizable when that optimum, and the trace-norm residual of the
recovered certificate, are both below ``tol_sym``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np
from scipy.optimize import linprog

from . import qmath
from .channel import CqavwcChannel, Distribution
from .errors import CqavwcError, LabelError, ShapeError

TOL_SYM = 1e-7


@dataclass(frozen=True)
class Symmetrizer:
    u: dict  # x -> Distribution over Theta

    def row(self, x) -> Distribution:
        return self.u[x]

    def as_dict(self) -> dict:
        return {x: d.as_dict() for x, d in self.u.items()}


@dataclass(frozen=True)
class SymmetrizabilityVerdict:
    symmetrizable: bool
    certificate: Symmetrizer | None
    residual: float
    lp_objective: float

    def as_dict(self) -> dict:
        return {
            "symmetrizable": self.symmetrizable,
            "certificate": self.certificate.as_dict() if self.certificate else None,
            "residual": self.residual,
            "lp_objective": self.lp_objective,
        }


def _labels(family: Mapping, inputs=None, states=None) -> tuple[tuple, tuple]:
    if inputs is None:
        inputs = tuple(dict.fromkeys(x for x, _ in family))
    if states is None:
        states = tuple(dict.fromkeys(t for _, t in family))
    inputs, states = tuple(inputs), tuple(states)
    if not inputs or not states:
        raise ShapeError("symmetrizability needs nonempty input and state sets")
    for x in inputs:
        for t in states:
            if (x, t) not in family:
                raise LabelError(f"family lacks state for (x={x!r}, t={t!r})")
    return inputs, states


def verify_symmetrizer(family: Mapping, u: Symmetrizer, inputs=None, states=None) -> float:
    """Largest trace-norm defect of the symmetry identity over pairs ``x != x'``."""
    inputs, states = _labels(family, inputs, states)
    rows = {x: u.row(x).reorder(states) for x in inputs}
    worst = 0.0
    for x, xp in itertools.combinations(inputs, 2):
        lhs = sum(w * family[(xp, t)] for w, t in zip(rows[x], states))
        rhs = sum(w * family[(x, t)] for w, t in zip(rows[xp], states))
        worst = max(worst, qmath.trace_norm(lhs - rhs))
    return worst


def _constraint_rows(family, inputs: Sequence, states: Sequence):
    """Rows ``a`` with ``a @ u`` equal to one real component of one pair's defect."""
    nx, nt = len(inputs), len(states)
    d = np.asarray(family[(inputs[0], states[0])]).shape[0]
    iu = np.triu_indices(d)
    rows = []
    for a, b in itertools.combinations(range(nx), 2):
        # u[a, t] multiplies rho_{b,t}; u[b, t] multiplies -rho_{a,t}
        block = np.zeros((len(iu[0]), nx * nt), dtype=complex)
        for k, t in enumerate(states):
            block[:, a * nt + k] = np.asarray(family[(inputs[b], t)])[iu]
            block[:, b * nt + k] -= np.asarray(family[(inputs[a], t)])[iu]
        rows.append(block.real)
        off = iu[0] != iu[1]
        rows.append(block.imag[off])
    return np.vstack(rows)


def check_symmetrizable(
    family: Mapping, tol_sym: float = TOL_SYM, inputs=None, states=None
) -> SymmetrizabilityVerdict:
    """Decide symmetrizability and return a certificate or the best residual.

    ``family`` maps ``(x, t)`` to density matrices. Label order defaults to
    first appearance in the mapping.
    """
    inputs, states = _labels(family, inputs, states)
    nx, nt = len(inputs), len(states)
    if nx == 1:
        cert = Symmetrizer({inputs[0]: Distribution.uniform(states)})
        return SymmetrizabilityVerdict(True, cert, 0.0, 0.0)

    a = _constraint_rows(family, inputs, states)
    nu = nx * nt
    # variables: u (row-major by x), then the violation bound s
    c = np.zeros(nu + 1)
    c[-1] = 1.0
    ones = -np.ones((a.shape[0], 1))
    a_ub = np.vstack([np.hstack([a, ones]), np.hstack([-a, ones])])
    b_ub = np.zeros(a_ub.shape[0])
    a_eq = np.zeros((nx, nu + 1))
    for i in range(nx):
        a_eq[i, i * nt:(i + 1) * nt] = 1.0
    b_eq = np.ones(nx)
    bounds = [(0.0, 1.0)] * nu + [(0.0, None)]
    res = linprog(c, A_ub=a_ub, b_ub=b_ub, A_eq=a_eq, b_eq=b_eq, bounds=bounds, method="highs")
    if res.status != 0:
        raise CqavwcError(f"symmetrizability LP failed: {res.message}")

    u = res.x[:nu].reshape(nx, nt)
    best = Symmetrizer({x: Distribution.from_vector(states, u[i]) for i, x in enumerate(inputs)})
    residual = verify_symmetrizer(family, best, inputs, states)
    objective = float(max(res.fun, 0.0))
    ok = objective <= tol_sym and residual <= tol_sym
    return SymmetrizabilityVerdict(ok, best if ok else None, residual, objective)


def check_joint(ch: CqavwcChannel, tol_sym: float = TOL_SYM) -> SymmetrizabilityVerdict:
    """The whole legal family ``{rho_{x,t}: x, t}``."""
    return check_symmetrizable(ch.legal, tol_sym, ch.inputs, ch.states)


def check_per_state(ch: CqavwcChannel, tol_sym: float = TOL_SYM) -> dict:
    """One verdict per ``t`` for the single-state family ``{rho_{x,t}: x}``."""
    return {
        t: check_symmetrizable(ch.family("legal", t), tol_sym, ch.inputs, (t,))
        for t in ch.states
    }
