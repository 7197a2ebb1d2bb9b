"""Frequency-typical sequences and spectral typical projectors.

Windows are oriented as ``2^{-n(c+alpha)} <= l_k <= 2^{-n(c-alpha)}`` where
``c`` is a per-letter entropy centre in bits.
"""

from __future__ import annotations

import itertools
import math
from collections import Counter
from dataclasses import dataclass
from functools import cached_property, reduce
from typing import Sequence

import numpy as np

from . import qmath
from .channel import (
    DEFAULT_CAPS,
    CqavwcChannel,
    Distribution,
    ResourceCaps,
    product_letters,
)
from .errors import DegenerateInputError, ShapeError

FREQ_SLACK = 1e-12


@dataclass(frozen=True, eq=False)
class TypicalSet:
    p: Distribution
    n: int
    delta: float
    members: tuple

    def __len__(self) -> int:
        return len(self.members)

    def __contains__(self, seq) -> bool:
        return tuple(seq) in set(self.members)


def is_typical(seq: Sequence, p: Distribution, delta: float) -> bool:
    n = len(seq)
    counts = Counter(seq)
    for a, pa in zip(p.support, p.weights):
        c = counts.get(a, 0)
        if pa == 0 and c > 0:
            return False
        if abs(c / n - pa) > delta + FREQ_SLACK:
            return False
    return all(a in p.support for a in counts)


def typical_set(p: Distribution, n: int, delta: float, caps: ResourceCaps = DEFAULT_CAPS) -> TypicalSet:
    """Exhaustive enumeration of ``T^n_{P,delta}`` in lexicographic support order."""
    if n < 1 or delta <= 0:
        raise ValueError("need n >= 1 and delta > 0")
    caps.check("max_input_seqs", len(p.support), n)
    members = tuple(s for s in itertools.product(p.support, repeat=n) if is_typical(s, p, delta))
    return TypicalSet(p, n, delta, members)


@dataclass(frozen=True, eq=False)
class RestrictedDistribution:
    """``P^n`` conditioned on the typical set."""

    base: TypicalSet
    weights: np.ndarray

    def sample_index(self, rng: np.random.Generator) -> int:
        return int(rng.choice(len(self.weights), p=self.weights))

    def sample(self, rng: np.random.Generator) -> tuple:
        return self.base.members[self.sample_index(rng)]

    def prob(self, seq) -> float:
        try:
            return float(self.weights[self.base.members.index(tuple(seq))])
        except ValueError:
            return 0.0


def sequence_probability(p: Distribution, seq: Sequence) -> float:
    return math.prod(p[a] for a in seq)


def restricted_distribution(ts: TypicalSet) -> RestrictedDistribution:
    if not ts.members:
        raise DegenerateInputError(
            f"typical set is empty for n={ts.n}, delta={ts.delta}; widen delta"
        )
    w = np.array([sequence_probability(ts.p, s) for s in ts.members])
    w = w / w.sum()
    w.setflags(write=False)
    return RestrictedDistribution(ts, w)


# spectral projectors --------------------------------------------------------


@dataclass(frozen=True, eq=False)
class ProductState:
    """Lazy ``letters[0] (x) letters[1] (x) ...`` that keeps its factor structure."""

    letters: tuple

    def __post_init__(self):
        object.__setattr__(self, "letters", tuple(qmath.validate_density(m) for m in self.letters))
        if not self.letters:
            raise ShapeError("product state needs at least one letter")

    @classmethod
    def trusted(cls, letters) -> ProductState:
        """Skip validation for letters taken from (or mixed within) a validated channel."""
        obj = object.__new__(cls)
        object.__setattr__(obj, "letters", tuple(letters))
        if not obj.letters:
            raise ShapeError("product state needs at least one letter")
        return obj

    @property
    def n(self) -> int:
        return len(self.letters)

    @property
    def dim(self) -> int:
        return math.prod(m.shape[0] for m in self.letters)

    @cached_property
    def spectra(self) -> tuple:
        """Per-letter ``(eigenvalues, eigenvectors)``; repeated letters share one call."""
        seen: dict = {}
        out = []
        for m in self.letters:
            key = m.tobytes()
            if key not in seen:
                seen[key] = np.linalg.eigh(m)
            out.append(seen[key])
        return tuple(out)

    def matrix(self) -> np.ndarray:
        return qmath.tensor(*self.letters)

    def entropy(self) -> float:
        return sum(qmath.entropy_of_spectrum(w) for w, _ in self.spectra)


@dataclass(frozen=True, eq=False)
class TypicalProjector:
    """Sum of the eigenprojectors of a state whose eigenvalues fall in ``window``.

    ``eigenvalues`` is the full source spectrum, aligned with the columns of
    ``kron(*factors)``; ``kept`` marks the selected ones.
    """

    window: tuple
    selected_count: int
    mean_entropy: float
    eigenvalues: np.ndarray
    kept: np.ndarray
    factors: tuple

    @property
    def dim(self) -> int:
        return self.eigenvalues.size

    @cached_property
    def basis(self) -> np.ndarray:
        """Orthonormal columns spanning the projector's range."""
        if len(self.factors) == 1:
            return self.factors[0][:, self.kept]
        return reduce(qmath.kron2, self.factors)[:, self.kept]

    @cached_property
    def projector(self) -> np.ndarray:
        b = self.basis
        return qmath.hermitian_part(b @ b.conj().T)

    @property
    def captured_mass(self) -> float:
        """``tr(state proj)`` read off the spectrum of the source state."""
        return float(np.sum(self.eigenvalues[self.kept]))


def window_for(n: int, alpha: float, center: float) -> tuple[float, float]:
    return 2.0 ** (-n * (center + alpha)), 2.0 ** (-n * (center - alpha))


def _select(eigenvalues: np.ndarray, n: int, alpha: float, center: float):
    lo, hi = window_for(n, alpha, center)
    lam = np.clip(eigenvalues, 0.0, None)
    kept = (lam >= lo) & (lam <= hi) & (lam > 0)
    return (lo, hi), kept


def spectral_projector(state, n: int, alpha: float, center_entropy: float | None = None) -> TypicalProjector:
    """Typical projector of an ``n``-letter state.

    ``state`` is a dense density matrix or a :class:`ProductState`; the latter
    is diagonalised letter by letter. ``center_entropy`` defaults to
    ``S(state) / n``.
    """
    if alpha <= 0:
        raise ValueError(f"alpha must be positive, got {alpha}")
    if n < 1:
        raise ValueError("n must be >= 1")
    if isinstance(state, ProductState):
        spectra = state.spectra
        eigenvalues = reduce(lambda a, b: np.multiply.outer(a, b).ravel(), (w for w, _ in spectra))
        if len(spectra) == 1:
            eigenvalues = eigenvalues.copy()
        factors = tuple(v for _, v in spectra)
        entropy = state.entropy()
    else:
        rho = qmath.validate_density(state)
        eigenvalues, v = np.linalg.eigh(rho)
        factors = (v,)
        entropy = qmath.entropy_of_spectrum(eigenvalues)
    center = entropy / n if center_entropy is None else float(center_entropy)
    window, kept = _select(eigenvalues, n, alpha, center)
    eigenvalues.setflags(write=False)
    kept.setflags(write=False)
    return TypicalProjector(window, int(kept.sum()), center, eigenvalues, kept, factors)


def _letters_for(ch: CqavwcChannel, receiver: str, x_seq: Sequence, t_seq_or_q) -> list:
    """Per-letter states for a state sequence or per-letter state distributions."""
    n = len(x_seq)
    if isinstance(t_seq_or_q, Distribution):
        t_seq_or_q = [t_seq_or_q] * n
    t_seq_or_q = list(t_seq_or_q)
    if t_seq_or_q and isinstance(t_seq_or_q[0], Distribution):
        if len(t_seq_or_q) != n:
            raise ShapeError(f"{len(t_seq_or_q)} letter distributions for length-{n} sequence")
        ch.check_input_labels(x_seq)
        ops = ch.ops(receiver)
        out = []
        for x, q in zip(x_seq, t_seq_or_q):
            w = q.reorder(ch.states)
            out.append(sum(wt * ops[(x, t)] for wt, t in zip(w, ch.states)))
        return out
    return product_letters(ch, receiver, x_seq, t_seq_or_q)


def conditional_state(ch, receiver, x_seq, t_seq_or_q, caps: ResourceCaps = DEFAULT_CAPS) -> ProductState:
    letters = _letters_for(ch, receiver, x_seq, t_seq_or_q)
    caps.check("max_dim", ch.dim(receiver), len(letters))
    return ProductState.trusted(letters)


def average_state(
    ch, receiver, p: Distribution, t_seq_or_q, caps: ResourceCaps = DEFAULT_CAPS
) -> ProductState:
    """``(x)_i sum_x P(x) state^{(i)}_x``: the input-averaged ``n``-letter state."""
    if isinstance(t_seq_or_q, Distribution):
        raise ShapeError("pass a per-letter sequence of distributions or state labels")
    w = p.reorder(ch.inputs)
    per_input = [_letters_for(ch, receiver, [x] * len(t_seq_or_q), t_seq_or_q) for x in ch.inputs]
    n = len(per_input[0])
    caps.check("max_dim", ch.dim(receiver), n)
    letters = [sum(wx * per_input[k][i] for k, wx in enumerate(w)) for i in range(n)]
    return ProductState.trusted(letters)


def conditional_projector(
    ch: CqavwcChannel,
    receiver: str,
    x_seq: Sequence,
    t_seq_or_q,
    alpha: float,
    center="sequence",
    p: Distribution | None = None,
    caps: ResourceCaps = DEFAULT_CAPS,
) -> TypicalProjector:
    """Typical projector of ``state_{x_1,.} (x) ... (x) state_{x_n,.}``.

    ``center`` is ``"sequence"`` for ``(1/n) sum_i S(letter_i)``, ``"ensemble"``
    for ``(1/n) sum_i sum_x P(x) S(state^{(i)}_x)`` (needs ``p``), or a number.
    """
    state = conditional_state(ch, receiver, x_seq, t_seq_or_q, caps)
    n = state.n
    if center == "sequence":
        c = state.entropy() / n
    elif center == "ensemble":
        if p is None:
            raise ValueError('center="ensemble" needs the input distribution p')
        w = p.reorder(ch.inputs)
        per_input = [_letters_for(ch, receiver, [x] * n, t_seq_or_q) for x in ch.inputs]
        c = sum(
            wx * ProductState.trusted(per_input[k]).entropy() for k, wx in enumerate(w)
        ) / n
    else:
        c = float(center)
    return spectral_projector(state, n, alpha, c)


def average_projector(
    ch: CqavwcChannel,
    receiver: str,
    p: Distribution,
    t_seq_or_q,
    alpha: float,
    caps: ResourceCaps = DEFAULT_CAPS,
) -> TypicalProjector:
    state = average_state(ch, receiver, p, t_seq_or_q, caps)
    return spectral_projector(state, state.n, alpha)


# mass, rank and sandwich checks ---------------------------------------------


@dataclass(frozen=True)
class MassReport:
    captured_mass: float
    mass_floor: float
    mass_ok: bool
    widened_mass: float
    widened_floor: float
    widened_ok: bool
    selected_count: int
    log2_rank_bound: float
    rank_ok: bool
    sandwich_max: float
    sandwich_bound: float
    sandwich_ok: bool

    @property
    def all_ok(self) -> bool:
        return self.mass_ok and self.widened_ok and self.rank_ok and self.sandwich_ok

    @property
    def mass_margin(self) -> float:
        return self.captured_mass - self.mass_floor

    def as_dict(self) -> dict:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


SANDWICH_SLACK = 1e-10
MASS_SLACK = 1e-9


def projector_mass_checks(
    state, proj: TypicalProjector, n: int, alpha: float, dim_letter: int, alphabet_size: int = 1
) -> MassReport:
    """Captured-mass floors, the constant-free rank bound and the sandwich bound.

    A dense ``state`` is checked by direct matrix evaluation; a
    :class:`ProductState` through its spectrum. The floors only bind when
    positive.
    """
    a = alphabet_size
    mass_floor = 1 - dim_letter / (4 * n * alpha**2)
    widened_floor = 1 - a * dim_letter / (4 * n * alpha**2)
    widened = spectral_projector(state, n, alpha * math.sqrt(a), proj.mean_entropy)
    lo, hi = proj.window
    if isinstance(state, ProductState):
        mass = proj.captured_mass
        widened_mass = widened.captured_mass
        kept = proj.eigenvalues[proj.kept]
        sandwich_max = float(kept.max()) if kept.size else 0.0
        psd_ok = sandwich_max <= hi + SANDWICH_SLACK
    else:
        rho = qmath.validate_density(state)
        pm = proj.projector
        mass = float(np.real(np.trace(rho @ pm)))
        widened_mass = float(np.real(np.trace(rho @ widened.projector)))
        sand = pm @ rho @ pm
        sandwich_max = float(np.linalg.eigvalsh(qmath.hermitian_part(sand))[-1])
        gap_min = float(np.linalg.eigvalsh(qmath.hermitian_part(hi * pm - sand))[0])
        psd_ok = gap_min >= -SANDWICH_SLACK
    log2_rank_bound = n * (proj.mean_entropy + alpha)
    rank_ok = proj.selected_count == 0 or math.log2(proj.selected_count) <= log2_rank_bound + 1e-12
    return MassReport(
        captured_mass=mass,
        mass_floor=mass_floor,
        mass_ok=mass_floor <= 0 or mass >= mass_floor - MASS_SLACK,
        widened_mass=widened_mass,
        widened_floor=widened_floor,
        widened_ok=widened_floor <= 0 or widened_mass >= widened_floor - MASS_SLACK,
        selected_count=proj.selected_count,
        log2_rank_bound=log2_rank_bound,
        rank_ok=rank_ok,
        sandwich_max=sandwich_max,
        sandwich_bound=hi,
        sandwich_ok=psd_ok and sandwich_max <= hi + SANDWICH_SLACK,
    )
