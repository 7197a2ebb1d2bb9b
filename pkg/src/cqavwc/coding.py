"""Random wiretap codes executed at desk scale.

A codebook holds ``J * L`` codewords indexed ``(j, l)`` (0-based); ``j`` is
the message and ``l`` the secrecy randomisation. The legal receiver decodes
with the square-root measurement built from sandwiched typical projectors and
a decoded pair ``(j, l')`` counts as success for message ``j`` for any ``l'``.
"""

from __future__ import annotations

import contextlib
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import qmath
from .channel import (
    DEFAULT_CAPS,
    CqavwcChannel,
    Distribution,
    ResourceCaps,
    product_state,
    state_sequences,
)
from .errors import CqavwcError, PSDError, ShapeError
from .infoquant import holevo_chi
from .typical import (
    RestrictedDistribution,
    average_projector,
    conditional_projector,
    restricted_distribution,
    typical_set,
)

POVM_TOL = 1e-8


@dataclass(frozen=True, eq=False)
class WiretapCodebook:
    n: int
    J: int
    L: int
    words: tuple  # words[j][l] is a length-n tuple of input labels
    seed: int | None
    p: Distribution  # input distribution used for the decoder's average state

    def __post_init__(self):
        if self.J < 1 or self.L < 1:
            raise ShapeError("need J >= 1 and L >= 1")
        if len(self.words) != self.J or any(len(row) != self.L for row in self.words):
            raise ShapeError("codeword array does not match J x L")
        if any(len(w) != self.n for row in self.words for w in row):
            raise ShapeError(f"every codeword must have length {self.n}")

    @property
    def codewords(self) -> dict:
        return {(j, l): self.words[j][l] for j in range(self.J) for l in range(self.L)}

    def flat(self) -> list:
        """Codewords in ``(j, l)`` row-major order."""
        return [w for row in self.words for w in row]

    @classmethod
    def from_words(cls, words, p: Distribution | None = None, inputs=None) -> WiretapCodebook:
        """Fixed codebook from a ``J x L`` nested list of label sequences."""
        rows = tuple(tuple(tuple(w) for w in row) for row in words)
        n = len(rows[0][0])
        if p is None:
            labels = inputs or sorted({a for row in rows for w in row for a in w})
            p = Distribution.uniform(labels)
        return cls(n, len(rows), len(rows[0]), rows, None, p)


def sample_codebook(rd: RestrictedDistribution, J: int, L: int, seed: int) -> WiretapCodebook:
    """``J * L`` i.i.d. draws from the restricted distribution.

    Codeword ``(j, l)`` uses its own generator seeded by ``(seed, j, l)``, so
    the result does not depend on generation order.
    """
    if J < 1 or L < 1:
        raise ShapeError("need J >= 1 and L >= 1")
    words = tuple(
        tuple(rd.sample(np.random.default_rng([seed, j, l])) for l in range(L)) for j in range(J)
    )
    return WiretapCodebook(rd.base.n, J, L, words, seed, rd.base.p)


@dataclass(frozen=True, eq=False)
class PovmDecoder:
    """Elements ``D_{(j,l)}`` in codebook order plus the completing failure outcome."""

    elements: tuple
    fail_element: np.ndarray
    J: int
    L: int

    def __post_init__(self):
        defect = self.completeness_defect()
        if defect > POVM_TOL:
            raise PSDError(f"POVM does not resolve the identity (defect {defect:.3g})")
        low = self.min_eigenvalue()
        if low < -qmath.TOL_PSD:
            raise PSDError(f"POVM element has negative eigenvalue {low:.3g}")

    @property
    def dim(self) -> int:
        return self.fail_element.shape[0]

    def completeness_defect(self) -> float:
        total = sum(self.elements) + self.fail_element
        return float(np.max(np.abs(total - np.eye(total.shape[0]))))

    def min_eigenvalue(self) -> float:
        mats = list(self.elements) + [self.fail_element]
        return float(min(np.linalg.eigvalsh(m)[0] for m in mats))

    def message_operators(self) -> list:
        """``M_j = sum_l D_{(j,l)}``."""
        return [sum(self.elements[j * self.L:(j + 1) * self.L]) for j in range(self.J)]


def _letter_qs(ch: CqavwcChannel, n: int, q_letters) -> list:
    if q_letters is None:
        return [Distribution.uniform(ch.states)] * n
    if isinstance(q_letters, Distribution):
        return [q_letters] * n
    q_letters = list(q_letters)
    if len(q_letters) != n:
        raise ShapeError(f"{len(q_letters)} letter distributions for block length {n}")
    return q_letters


def pgm_decoder(
    ch: CqavwcChannel,
    codebook: WiretapCodebook,
    q_letters=None,
    delta: float = 0.5,
    center="sequence",
    caps: ResourceCaps = DEFAULT_CAPS,
) -> PovmDecoder:
    """Square-root measurement over sandwiched conditional typical projectors.

    ``D_i = A^{-1/2} Pi Pi_i Pi A^{-1/2}`` with ``A = sum_i Pi Pi_i Pi``;
    ``Pi`` is the typical projector of the input- and state-averaged legal
    output and ``Pi_i`` the conditional typical projector of codeword ``i``
    under the state-averaged channel. ``q_letters`` defaults to uniform.
    """
    n = codebook.n
    caps.check("max_dim", ch.dim_legal, n)
    qs = _letter_qs(ch, n, q_letters)
    big = average_projector(ch, "legal", codebook.p, qs, delta, caps).projector
    cache: dict = {}
    sandwiches = []
    for word in codebook.flat():
        if word not in cache:
            pc = conditional_projector(ch, "legal", word, qs, delta, center, codebook.p, caps).projector
            cache[word] = qmath.hermitian_part(big @ pc @ big)
        sandwiches.append(cache[word])
    total = sum(sandwiches)
    try:
        root = qmath.psd_power(total, -0.5)
    except PSDError as exc:
        w = np.linalg.eigvalsh(qmath.hermitian_part(total))
        raise PSDError(f"{exc}; sum operator spectrum [{w[0]:.3g}, {w[-1]:.3g}]") from None
    elements = tuple(qmath.hermitian_part(root @ s @ root) for s in sandwiches)
    fail = qmath.hermitian_part(np.eye(total.shape[0]) - sum(elements))
    return PovmDecoder(elements, fail, codebook.J, codebook.L)


def _success_terms(ch, codebook, dec, t_seq, caps) -> float:
    ops = dec.message_operators()
    cache: dict = {}
    total = 0.0
    for j, row in enumerate(codebook.words):
        for word in row:
            if word not in cache:
                cache[word] = product_state(ch, "legal", word, t_seq, caps)
            # tr(rho M) for Hermitian rho, M
            total += float(np.real(np.sum(cache[word].T * ops[j])))
    return total / (codebook.J * codebook.L)


def error_probability(
    ch: CqavwcChannel,
    codebook: WiretapCodebook,
    dec: PovmDecoder,
    t_seq: Sequence,
    caps: ResourceCaps = DEFAULT_CAPS,
) -> float:
    """Average message error ``1 - (1/JL) sum_{j,l} tr(rho_{x_{j,l}, t^n} M_j)``."""
    if len(dec.elements) != codebook.J * codebook.L or (dec.J, dec.L) != (codebook.J, codebook.L):
        raise ShapeError("decoder does not match codebook index set")
    if len(t_seq) != codebook.n:
        raise ShapeError(f"state sequence length {len(t_seq)} != block length {codebook.n}")
    err = 1.0 - _success_terms(ch, codebook, dec, tuple(t_seq), caps)
    return min(max(err, 0.0), 1.0)


def adversarial_error(
    ch: CqavwcChannel, codebook: WiretapCodebook, dec: PovmDecoder, caps: ResourceCaps = DEFAULT_CAPS
) -> tuple[float, tuple, dict]:
    """Worst error over ``Theta^n``; ties go to the lexicographically first sequence.

    Also returns the full ``t^n -> error`` map.
    """
    by_t = {}
    best, arg = -1.0, None
    for t_seq in state_sequences(ch, codebook.n, caps):
        e = error_probability(ch, codebook, dec, t_seq, caps)
        by_t[t_seq] = e
        if e > best:
            best, arg = e, t_seq
    return best, arg, by_t


# eavesdropper side ----------------------------------------------------------


@dataclass(frozen=True, eq=False)
class SandwichedState:
    state: np.ndarray
    distance: float      # ||sigma_bar - sigma||_1
    trace: float
    composite: np.ndarray  # X = Pi_inner Pi_outer Pi_inner, with tr(sigma X) = tr(sigma_bar)


class _EveSandwicher:
    """Shares the outer projector across codewords for one state sequence."""

    def __init__(self, ch, t_seq, alpha, projector_source, p, caps):
        if projector_source not in ("eve", "legal"):
            raise ValueError("projector_source must be 'eve' or 'legal'")
        self.ch, self.t_seq, self.alpha = ch, tuple(t_seq), alpha
        self.source, self.p, self.caps = projector_source, p, caps
        a = len(ch.inputs)
        self.outer = average_projector(
            ch, projector_source, p, self.t_seq, alpha * math.sqrt(a), caps
        ).projector
        self._cache: dict = {}

    def __call__(self, x_seq) -> SandwichedState:
        x_seq = tuple(x_seq)
        if x_seq not in self._cache:
            ch = self.ch
            sigma = product_state(ch, "eve", x_seq, self.t_seq, self.caps)
            inner = conditional_projector(
                ch, self.source, x_seq, self.t_seq, self.alpha, "sequence", None, self.caps
            ).projector
            op = self.outer @ inner
            bar = qmath.hermitian_part(op @ sigma @ op.conj().T)
            self._cache[x_seq] = SandwichedState(
                bar,
                qmath.trace_norm(bar - sigma),
                float(np.real(np.trace(bar))),
                qmath.hermitian_part(op.conj().T @ op),
            )
        return self._cache[x_seq]


def sandwiched_eve_state(
    ch: CqavwcChannel,
    x_seq: Sequence,
    t_seq: Sequence,
    alpha: float,
    projector_source: str = "eve",
    p: Distribution | None = None,
    caps: ResourceCaps = DEFAULT_CAPS,
) -> SandwichedState:
    """``Pi_avg Pi_cond sigma_{x^n,t^n} Pi_cond Pi_avg`` with its trace-norm damage.

    The outer projector has width ``alpha * sqrt(|X|)`` around the averaged
    output (input distribution ``p``, uniform by default); the inner one has
    width ``alpha`` around the codeword's own output. ``projector_source``
    picks whose statistics define both projectors.
    """
    p = p or Distribution.uniform(ch.inputs)
    return _EveSandwicher(ch, t_seq, alpha, projector_source, p, caps)(x_seq)


def _covering_gap_from(states_by_word, codebook) -> float:
    msgs = [sum(states_by_word[w] for w in row) / codebook.L for row in codebook.words]
    grand = sum(msgs) / codebook.J if codebook.J > 1 else msgs[0]
    return max(qmath.trace_norm(grand - m) for m in msgs)


def covering_gap(
    ch: CqavwcChannel,
    codebook: WiretapCodebook,
    t_seq: Sequence,
    alpha: float,
    projector_source: str = "eve",
    caps: ResourceCaps = DEFAULT_CAPS,
) -> float:
    """``max_j' || grand average - message-j' average ||_1`` over sandwiched eve states."""
    sw = _EveSandwicher(ch, t_seq, alpha, projector_source, codebook.p, caps)
    states = {w: sw(w).state for w in set(codebook.flat())}
    return _covering_gap_from(states, codebook)


def _leakage_from(states_by_word, codebook) -> float:
    msgs = [sum(states_by_word[w] for w in row) / codebook.L for row in codebook.words]
    if codebook.J == 1:
        return 0.0
    return holevo_chi(np.full(codebook.J, 1.0 / codebook.J), msgs)


def leakage_chi(
    ch: CqavwcChannel, codebook: WiretapCodebook, t_seq: Sequence, caps: ResourceCaps = DEFAULT_CAPS
) -> float:
    """Holevo quantity between a uniform message and the message-averaged eve state."""
    states = {w: product_state(ch, "eve", w, t_seq, caps) for w in set(codebook.flat())}
    return _leakage_from(states, codebook)


# experiment -----------------------------------------------------------------


@contextlib.contextmanager
def _stage(name: str):
    try:
        yield
    except CqavwcError as exc:
        if exc.stage is None:
            exc.stage = name
        raise


@dataclass(frozen=True, eq=False)
class SecrecyExperimentReport:
    n: int
    J: int
    L: int
    seed: int
    max_error: float
    argmax_t_seq: tuple
    error_by_t: dict
    leakage_by_t: dict
    covering_gap_by_t: dict
    sandwich_distance_by_t: dict
    rate_message: float
    rate_total: float
    codewords: tuple
    gentle_checks: int
    gentle_worst_margin: float
    gentle_violations: int
    parameters: dict = field(default_factory=dict)

    @property
    def max_leakage(self) -> float:
        return max(self.leakage_by_t.values())

    @property
    def max_covering_gap(self) -> float:
        return max(self.covering_gap_by_t.values())

    def as_dict(self) -> dict:
        def keyed(d):
            return {"|".join(k): v for k, v in d.items()}

        return {
            "n": self.n,
            "J": self.J,
            "L": self.L,
            "seed": self.seed,
            "parameters": self.parameters,
            "max_error": self.max_error,
            "argmax_t_seq": list(self.argmax_t_seq),
            "max_leakage_bits": self.max_leakage,
            "max_covering_gap": self.max_covering_gap,
            "rate_message": self.rate_message,
            "rate_total": self.rate_total,
            "error_by_t": keyed(self.error_by_t),
            "leakage_by_t": keyed(self.leakage_by_t),
            "covering_gap_by_t": keyed(self.covering_gap_by_t),
            "sandwich_distance_by_t": keyed(self.sandwich_distance_by_t),
            "gentle_checks": self.gentle_checks,
            "gentle_worst_margin": self.gentle_worst_margin,
            "gentle_violations": self.gentle_violations,
            "codewords": [["".join(w) if all(len(a) == 1 for a in w) else list(w) for w in row]
                          for row in self.codewords],
        }


def run_secrecy_experiment(
    ch: CqavwcChannel,
    p: Distribution,
    n: int,
    J: int,
    L: int,
    seed: int,
    alpha: float = 0.5,
    delta: float = 0.5,
    q_letters=None,
    projector_source: str = "eve",
    caps: ResourceCaps = DEFAULT_CAPS,
) -> SecrecyExperimentReport:
    """Sample a wiretap code and measure error, leakage and covering gap for every ``t^n``.

    ``delta`` sets both the typical-set tolerance and the decoder's projector
    width; ``alpha`` sets the eavesdropper sandwich width.
    """
    with _stage("typical_set"):
        caps.check("max_state_seqs", len(ch.states), n)
        caps.check("max_dim", max(ch.dim_legal, ch.dim_eve), n)
        p = Distribution(ch.inputs, p.reorder(ch.inputs))
        rd = restricted_distribution(typical_set(p, n, delta, caps))
    with _stage("codebook"):
        cb = sample_codebook(rd, J, L, seed)
    with _stage("decoder"):
        dec = pgm_decoder(ch, cb, q_letters, delta, caps=caps)
    with _stage("adversarial_error"):
        max_err, arg, err_by_t = adversarial_error(ch, cb, dec, caps)

    leak, gap, dist = {}, {}, {}
    checks, violations, worst = 0, 0, math.inf
    words = sorted(set(cb.flat()))
    with _stage("eavesdropper"):
        for t_seq in state_sequences(ch, n, caps):
            sw = _EveSandwicher(ch, t_seq, alpha, projector_source, cb.p, caps)
            plain = {w: product_state(ch, "eve", w, t_seq, caps) for w in words}
            bars = {w: sw(w) for w in words}
            leak[t_seq] = _leakage_from(plain, cb)
            gap[t_seq] = _covering_gap_from({w: b.state for w, b in bars.items()}, cb)
            dist[t_seq] = max(b.distance for b in bars.values())
            for w in words:
                d, bound = qmath.gentle_damage(plain[w], bars[w].composite)
                checks += 1
                worst = min(worst, bound - d)
                violations += d > bound + qmath.TOL_PSD
    return SecrecyExperimentReport(
        n=n, J=J, L=L, seed=seed,
        max_error=max_err,
        argmax_t_seq=arg,
        error_by_t=err_by_t,
        leakage_by_t=leak,
        covering_gap_by_t=gap,
        sandwich_distance_by_t=dist,
        rate_message=math.log2(J) / n,
        rate_total=math.log2(J * L) / n,
        codewords=cb.words,
        gentle_checks=checks,
        gentle_worst_margin=worst,
        gentle_violations=int(violations),
        parameters={
            "p": p.as_dict(),
            "alpha": alpha,
            "delta": delta,
            "projector_source": projector_source,
            "q_letters": "uniform" if q_letters is None else "custom",
        },
    )
