"""Hermitian matrix arithmetic and entropic functionals.

Matrices are plain ``numpy`` complex arrays. Density operators are validated
on entry to every public function that requires one; nothing is mutated.
All logarithms are base 2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import reduce

import numpy as np
from scipy.stats import unitary_group

from .errors import OperatorRangeError, PSDError, ShapeError, ValidationError

TOL_HERM = 1e-9
TOL_TRACE = 1e-9
TOL_PSD = 1e-9
TOL_SPEC = 1e-8
TOL_KERNEL = 1e-10


def as_matrix(a) -> np.ndarray:
    """Coerce to a square complex array, raising ShapeError otherwise."""
    m = np.asarray(a, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] == 0:
        raise ShapeError(f"expected a non-empty square matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ShapeError("matrix has non-finite entries")
    return m


def hermitian_part(a: np.ndarray) -> np.ndarray:
    return (a + a.conj().T) / 2


def density_violations(a) -> list[tuple[str, float]]:
    """List every violated density-operator invariant as ``(name, measured)``.

    ``measured`` is the offending quantity: the Hermiticity defect, the most
    negative eigenvalue, or the trace.
    """
    m = as_matrix(a)
    out = []
    herm_defect = float(np.max(np.abs(m - m.conj().T)))
    if herm_defect > TOL_HERM:
        out.append(("hermiticity", herm_defect))
    lam_min = float(np.linalg.eigvalsh(hermitian_part(m))[0])
    if lam_min < -TOL_PSD:
        out.append(("positivity", lam_min))
    tr = complex(np.trace(m))
    if abs(tr - 1.0) > TOL_TRACE:
        out.append(("unit_trace", float(tr.real)))
    return out


def validate_density(a) -> np.ndarray:
    """Return ``a`` as a Hermitian complex array or raise on the first violation."""
    m = as_matrix(a)
    bad = density_violations(m)
    if bad:
        name, value = bad[0]
        raise ValidationError(name, f"not a density operator (measured {value:.3g})", value)
    return hermitian_part(m)


@dataclass(frozen=True)
class SpectralDecomposition:
    eigenvalues: np.ndarray   # descending
    eigenvectors: np.ndarray  # columns, matching eigenvalues

    def reconstruct(self) -> np.ndarray:
        v = self.eigenvectors
        return (v * self.eigenvalues) @ v.conj().T


def spectral_decomposition(a) -> SpectralDecomposition:
    m = as_matrix(a)
    if np.max(np.abs(m - m.conj().T)) > TOL_HERM:
        raise ValidationError("hermiticity", "spectral decomposition needs a Hermitian matrix")
    w, v = np.linalg.eigh(hermitian_part(m))
    order = np.argsort(w)[::-1]
    return SpectralDecomposition(w[order], v[:, order])


def entropy_of_spectrum(eigenvalues) -> float:
    """Shannon entropy in bits of a (clipped) spectrum, with 0 log 0 = 0."""
    lam = np.clip(np.asarray(eigenvalues, dtype=float), 0.0, 1.0)
    lam = lam[lam > 0]
    return float(-np.sum(lam * np.log2(lam)))


def von_neumann_entropy(rho) -> float:
    rho = validate_density(rho)
    return entropy_of_spectrum(np.linalg.eigvalsh(rho))


def trace_norm(a) -> float:
    m = as_matrix(a)
    if np.max(np.abs(m - m.conj().T), initial=0.0) <= 1e-14:
        return float(np.sum(np.abs(np.linalg.eigvalsh(hermitian_part(m)))))
    return float(np.sum(np.linalg.svd(m, compute_uv=False)))


def kron2(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Kronecker product of two 2-D arrays without ``np.kron``'s generic overhead."""
    ra, ca = a.shape
    rb, cb = b.shape
    return (a[:, None, :, None] * b[None, :, None, :]).reshape(ra * rb, ca * cb)


def tensor(*mats) -> np.ndarray:
    """Kronecker product of one or more square matrices, left to right."""
    if not mats:
        raise ShapeError("tensor needs at least one factor")
    return reduce(kron2, (as_matrix(m) for m in mats))


def psd_power(a, exponent: float) -> np.ndarray:
    """Apply ``l -> l**exponent`` on the support of a PSD matrix.

    Eigenvalues below ``TOL_KERNEL`` are sent to zero, which makes negative
    exponents act as pseudo-inverses.
    """
    m = as_matrix(a)
    if np.max(np.abs(m - m.conj().T)) > TOL_HERM:
        raise PSDError("psd_power needs a Hermitian matrix")
    w, v = np.linalg.eigh(hermitian_part(m))
    if w[0] < -TOL_PSD:
        raise PSDError(f"matrix has negative eigenvalue {w[0]:.3g}")
    f = np.zeros_like(w)
    keep = w > TOL_KERNEL
    f[keep] = w[keep] ** exponent
    return (v * f) @ v.conj().T


def gentle_damage(rho, x) -> tuple[float, float]:
    """Disturbance of ``rho`` by the measurement operator ``x`` and its gentle bound.

    Returns ``(||rho - sqrt(x) rho sqrt(x)||_1, sqrt(8 * lam))`` with
    ``lam = 1 - tr(rho x)``.
    """
    rho = validate_density(rho)
    x = as_matrix(x)
    if x.shape != rho.shape:
        raise ShapeError(f"operator shape {x.shape} does not match state {rho.shape}")
    if np.max(np.abs(x - x.conj().T)) > TOL_HERM:
        raise OperatorRangeError("measurement operator is not Hermitian")
    w = np.linalg.eigvalsh(hermitian_part(x))
    if w[0] < -TOL_PSD or w[-1] > 1 + TOL_PSD:
        raise OperatorRangeError(f"operator spectrum [{w[0]:.3g}, {w[-1]:.3g}] not within [0, 1]")
    root = psd_power(x, 0.5)
    lam = 1.0 - float(np.real(np.trace(rho @ x)))
    lam = min(max(lam, 0.0), 1.0)
    distance = trace_norm(rho - root @ rho @ root)
    return distance, math.sqrt(8 * lam)


def fannes_gap(x, y) -> tuple[float, float | None]:
    """Entropy difference of two states and the continuity bound when it applies.

    The bound ``mu log d - mu log mu`` with ``mu = ||x - y||_1`` is only
    returned for ``mu < 1/e``; otherwise the second element is ``None``.
    """
    x = validate_density(x)
    y = validate_density(y)
    if x.shape != y.shape:
        raise ShapeError(f"dimension mismatch {x.shape} vs {y.shape}")
    d = x.shape[0]
    gap = abs(von_neumann_entropy(x) - von_neumann_entropy(y))
    mu = trace_norm(x - y)
    if mu >= 1 / math.e:
        return gap, None
    bound = mu * math.log2(d) - (mu * math.log2(mu) if mu > 0 else 0.0)
    return gap, bound


def random_density(dim: int, rng: np.random.Generator, rank: int | None = None) -> np.ndarray:
    """Hilbert-Schmidt (Ginibre) random density operator."""
    k = dim if rank is None else rank
    g = rng.standard_normal((dim, k)) + 1j * rng.standard_normal((dim, k))
    rho = g @ g.conj().T
    return hermitian_part(rho / np.trace(rho).real)


def random_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    return unitary_group.rvs(dim, random_state=rng)


def pure_state(vec) -> np.ndarray:
    v = np.asarray(vec, dtype=complex).ravel()
    v = v / np.linalg.norm(v)
    return np.outer(v, v.conj())
