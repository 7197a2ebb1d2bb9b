"""Classical-quantum arbitrarily varying wiretap channel data model."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from . import qmath
from .errors import (
    ChannelValidationError,
    LabelError,
    ResourceError,
    ShapeError,
    ValidationError,
)

RECEIVERS = ("legal", "eve")
LABEL_FORBIDDEN = "|"


@dataclass(frozen=True)
class ResourceCaps:
    """Desk-scale guardrails for the exponential enumerations."""

    max_dim: int = 4096          # dim ** n
    max_input_seqs: int = 4096   # |X| ** n
    max_state_seqs: int = 4096   # |Theta| ** n

    def check(self, cap: str, base: int, n: int) -> None:
        limit = getattr(self, cap)
        required = base**n
        if required > limit:
            raise ResourceError(cap, required, limit, n)


DEFAULT_CAPS = ResourceCaps()


@dataclass(frozen=True, eq=False)
class Distribution:
    """Probability vector over an ordered tuple of labels."""

    support: tuple
    weights: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float).ravel()
        object.__setattr__(self, "support", tuple(self.support))
        object.__setattr__(self, "weights", w)
        if len(self.support) != w.size or w.size == 0:
            raise ValidationError("distribution_shape", "support and weights differ in length")
        if len(set(self.support)) != len(self.support):
            raise ValidationError("distribution_labels", "duplicate support labels")
        if np.any(w < 0) or not np.all(np.isfinite(w)):
            raise ValidationError("nonnegative", "negative or non-finite weight", float(w.min()))
        if abs(w.sum() - 1.0) > 1e-12:
            raise ValidationError("normalized", f"weights sum to {w.sum()!r}", float(w.sum()))
        w.setflags(write=False)

    @classmethod
    def uniform(cls, support: Sequence) -> Distribution:
        k = len(support)
        return cls(tuple(support), np.full(k, 1.0 / k))

    @classmethod
    def point_mass(cls, support: Sequence, label) -> Distribution:
        support = tuple(support)
        w = np.zeros(len(support))
        w[support.index(label)] = 1.0
        return cls(support, w)

    @classmethod
    def from_vector(cls, support: Sequence, weights) -> Distribution:
        """Build from a near-normalized vector, cleaning float noise."""
        w = np.clip(np.asarray(weights, dtype=float), 0.0, None)
        return cls(tuple(support), w / w.sum())

    def __eq__(self, other) -> bool:
        if not isinstance(other, Distribution):
            return NotImplemented
        return self.support == other.support and np.array_equal(self.weights, other.weights)

    def __hash__(self) -> int:
        return hash((self.support, self.weights.tobytes()))

    def __getitem__(self, label) -> float:
        try:
            return float(self.weights[self.support.index(label)])
        except ValueError:
            raise LabelError(f"label {label!r} not in support {self.support}") from None

    def as_dict(self) -> dict:
        return {s: float(w) for s, w in zip(self.support, self.weights)}

    def reorder(self, support: Sequence) -> np.ndarray:
        """Weights aligned to ``support``; labels must match exactly."""
        support = tuple(support)
        if set(support) != set(self.support) or len(support) != len(self.support):
            raise LabelError(f"distribution support {self.support} does not match {support}")
        return np.array([self[s] for s in support])


@dataclass(frozen=True)
class Violation:
    receiver: str | None
    x: str | None
    t: str | None
    invariant: str
    measured: float | None = None
    detail: str = ""

    def __str__(self) -> str:
        where = f"{self.receiver}[{self.x}|{self.t}]" if self.receiver else "channel"
        m = f" (measured {self.measured:.6g})" if self.measured is not None else ""
        d = f": {self.detail}" if self.detail else ""
        return f"{where} {self.invariant}{m}{d}"

    def as_dict(self) -> dict:
        return {
            "receiver": self.receiver,
            "x": self.x,
            "t": self.t,
            "invariant": self.invariant,
            "measured": self.measured,
            "detail": self.detail,
        }


@dataclass(frozen=True)
class CqavwcChannel:
    """The family ``{(rho_{x,t}, sigma_{x,t})}``. Build through :func:`validate_channel`."""

    inputs: tuple
    states: tuple
    dim_legal: int
    dim_eve: int
    legal: Mapping = field(repr=False)
    eve: Mapping = field(repr=False)

    def ops(self, receiver: str) -> Mapping:
        if receiver == "legal":
            return self.legal
        if receiver == "eve":
            return self.eve
        raise LabelError(f"receiver must be one of {RECEIVERS}, got {receiver!r}")

    def dim(self, receiver: str) -> int:
        return self.dim_legal if receiver == "legal" else self.dim_eve

    def family(self, receiver: str = "legal", t=None) -> dict:
        """The ``(x, t) -> state`` map, optionally restricted to one state ``t``."""
        ops = self.ops(receiver)
        if t is None:
            return dict(ops)
        self.check_state_labels([t])
        return {(x, t): ops[(x, t)] for x in self.inputs}

    def check_input_labels(self, labels: Iterable) -> None:
        for x in labels:
            if x not in self.inputs:
                raise LabelError(f"input label {x!r} not in {self.inputs}")

    def check_state_labels(self, labels: Iterable) -> None:
        for t in labels:
            if t not in self.states:
                raise LabelError(f"state label {t!r} not in {self.states}")

    @classmethod
    def from_arrays(cls, inputs, states, legal: Mapping, eve: Mapping) -> CqavwcChannel:
        raw = {"inputs": list(inputs), "states": list(states), "rho": legal, "sigma": eve}
        return validate_channel(raw)


def _matrix_from_raw(value) -> np.ndarray:
    """Accept numeric arrays or the file encoding (rows of ``[re, im]`` pairs)."""
    if isinstance(value, np.ndarray):
        return value.astype(complex)
    arr = np.asarray(value, dtype=float) if _is_pair_encoded(value) else None
    if arr is not None:
        return arr[..., 0] + 1j * arr[..., 1]
    return np.asarray(value, dtype=complex)


def _is_pair_encoded(value) -> bool:
    try:
        first = value[0][0]
    except (TypeError, IndexError, KeyError):
        return False
    return isinstance(first, (list, tuple)) and len(first) == 2


def _lookup(block: Mapping, x: str, t: str):
    for key in (f"{x}|{t}", (x, t)):
        if key in block:
            return block[key]
    return None


def validate_channel(raw: Mapping) -> CqavwcChannel:
    """Validate a parsed channel description and build the channel.

    ``raw`` follows the channel-file layout: ``inputs``, ``states``, ``rho``
    and ``sigma`` (keyed ``"x|t"`` or by tuple), optionally ``dim_legal`` and
    ``dim_eve``. Every violated invariant is collected before raising
    :class:`ChannelValidationError`.
    """
    violations: list[Violation] = []
    inputs = tuple(str(x) for x in raw.get("inputs", ()))
    states = tuple(str(t) for t in raw.get("states", ()))
    if not inputs:
        violations.append(Violation(None, None, None, "nonempty_inputs"))
    if not states:
        violations.append(Violation(None, None, None, "nonempty_states"))
    for name, labels in (("inputs", inputs), ("states", states)):
        if len(set(labels)) != len(labels):
            violations.append(Violation(None, None, None, "unique_labels", detail=name))
        for lab in labels:
            if LABEL_FORBIDDEN in lab or not lab:
                violations.append(Violation(None, None, None, "label_syntax", detail=repr(lab)))

    maps: dict[str, dict] = {}
    dims: dict[str, int | None] = {}
    for receiver, block_name, dim_key in (("legal", "rho", "dim_legal"), ("eve", "sigma", "dim_eve")):
        block = raw.get(block_name) or {}
        declared = raw.get(dim_key)
        dims[receiver] = int(declared) if declared is not None else None
        out = {}
        for x in inputs:
            for t in states:
                value = _lookup(block, x, t)
                if value is None:
                    violations.append(
                        Violation(receiver, x, t, "missing_key", detail=f'{block_name} lacks "{x}|{t}"')
                    )
                    continue
                try:
                    m = qmath.as_matrix(_matrix_from_raw(value))
                except (ShapeError, ValueError, TypeError) as exc:
                    violations.append(Violation(receiver, x, t, "square_matrix", detail=str(exc)))
                    continue
                if dims[receiver] is None:
                    dims[receiver] = m.shape[0]
                if m.shape[0] != dims[receiver]:
                    violations.append(
                        Violation(receiver, x, t, "dimension", float(m.shape[0]),
                                  f"expected {dims[receiver]}")
                    )
                    continue
                for name, measured in qmath.density_violations(m):
                    violations.append(Violation(receiver, x, t, name, measured))
                out[(x, t)] = m
        maps[receiver] = out

    if violations:
        raise ChannelValidationError(violations)

    def freeze(d):
        frozen = {}
        for k, m in d.items():
            m = qmath.hermitian_part(m)
            m.setflags(write=False)
            frozen[k] = m
        return frozen

    return CqavwcChannel(
        inputs=inputs,
        states=states,
        dim_legal=int(dims["legal"]),
        dim_eve=int(dims["eve"]),
        legal=freeze(maps["legal"]),
        eve=freeze(maps["eve"]),
    )


def averaged_states(ch: CqavwcChannel, q: Distribution, receiver: str = "legal") -> dict:
    """Map ``x -> sum_t Q(t) state_{x,t}`` for the chosen receiver."""
    w = q.reorder(ch.states)
    ops = ch.ops(receiver)
    return {x: sum(wt * ops[(x, t)] for wt, t in zip(w, ch.states)) for x in ch.inputs}


def averaged_legal_states(ch: CqavwcChannel, q: Distribution) -> dict:
    return averaged_states(ch, q, "legal")


def _check_seq(ch: CqavwcChannel, x_seq: Sequence, t_seq: Sequence) -> None:
    if len(x_seq) != len(t_seq):
        raise ShapeError(f"input sequence length {len(x_seq)} != state sequence length {len(t_seq)}")
    if len(t_seq) == 0:
        raise ShapeError("sequences must have length >= 1")
    ch.check_input_labels(x_seq)
    ch.check_state_labels(t_seq)


def product_letters(ch: CqavwcChannel, receiver: str, x_seq: Sequence, t_seq: Sequence) -> list:
    """Per-letter factors of the product state, validated and cap-checked."""
    _check_seq(ch, x_seq, t_seq)
    ops = ch.ops(receiver)
    return [ops[(x, t)] for x, t in zip(x_seq, t_seq)]


def product_state(
    ch: CqavwcChannel,
    receiver: str,
    x_seq: Sequence,
    t_seq: Sequence,
    caps: ResourceCaps = DEFAULT_CAPS,
) -> np.ndarray:
    """``state_{x_1,t_1} (x) ... (x) state_{x_n,t_n}``."""
    letters = product_letters(ch, receiver, x_seq, t_seq)
    caps.check("max_dim", ch.dim(receiver), len(letters))
    return qmath.tensor(*letters)


def state_sequences(ch: CqavwcChannel, n: int, caps: ResourceCaps = DEFAULT_CAPS):
    """All of ``Theta^n`` in lexicographic order of the declared state labels."""
    caps.check("max_state_seqs", len(ch.states), n)
    return list(itertools.product(ch.states, repeat=n))


def input_sequences(ch: CqavwcChannel, n: int, caps: ResourceCaps = DEFAULT_CAPS):
    caps.check("max_input_seqs", len(ch.inputs), n)
    return list(itertools.product(ch.inputs, repeat=n))


def channel_to_dict(ch: CqavwcChannel) -> dict:
    """Serialize to the channel-file layout (``schema_version`` 1)."""

    def enc(m):
        return [[[float(z.real), float(z.imag)] for z in row] for row in np.asarray(m)]

    return {
        "schema_version": 1,
        "dim_legal": ch.dim_legal,
        "dim_eve": ch.dim_eve,
        "inputs": list(ch.inputs),
        "states": list(ch.states),
        "rho": {f"{x}|{t}": enc(ch.legal[(x, t)]) for x in ch.inputs for t in ch.states},
        "sigma": {f"{x}|{t}": enc(ch.eve[(x, t)]) for x in ch.inputs for t in ch.states},
    }


def random_channel(
    rng: np.random.Generator,
    n_inputs: int = 2,
    n_states: int = 2,
    dim_legal: int = 2,
    dim_eve: int = 2,
) -> CqavwcChannel:
    """Channel with independent Hilbert-Schmidt random letters; labels ``"0", "1", ...``."""
    inputs = [str(i) for i in range(n_inputs)]
    states = [str(i) for i in range(n_states)]
    legal = {(x, t): qmath.random_density(dim_legal, rng) for x in inputs for t in states}
    eve = {(x, t): qmath.random_density(dim_eve, rng) for x in inputs for t in states}
    return CqavwcChannel.from_arrays(inputs, states, legal, eve)

