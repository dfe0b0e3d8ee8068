"""Generalized SVD of a channel pair built from a chain of ordinary SVDs.

For two m x n matrices H1, H2 this builds unitary U, V (m x m) and a
nonsingular Q (n x n) with ``U H1 Q = Sigma1`` and ``V H2 Q = Sigma2``.
The block layout of Sigma1/Sigma2 depends on the regime:

* ``TALL`` (m >= n): Sigma1 = [S1; 0], Sigma2 = [0; S2], S1^2 + S2^2 = I_n.
* ``OVERLAP`` (m < n < 2m), with r = n - m, q = 2m - n::

      Sigma1 = [I_r 0  0  ]      Sigma2 = [0 S2 0  ]
               [0   S1 0  ]               [0 0  I_r]

* ``WIDE`` (2m < n): Sigma1 = [I_m 0], Sigma2 = [0 I_m].

Every SVD below follows the ``U A V = diag`` convention, so with
``A = W s X^H`` from LAPACK the left factor is ``W^H`` and the right is ``X``.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy.linalg

from .errors import DegenerateChannelError, NormalizationDivergenceError

RANK_RTOL = 1e-12


class Regime(str, enum.Enum):
    TALL = "TallOrSquare"
    OVERLAP = "Overlap"
    WIDE = "Wide"

    @classmethod
    def of(cls, m: int, n: int) -> "Regime":
        if n == 2 * m:
            raise NormalizationDivergenceError(
                f"n = 2m = {n} is excluded: long-term power normalization diverges"
            )
        if m >= n:
            return cls.TALL
        if n < 2 * m:
            return cls.OVERLAP
        return cls.WIDE


def n_generalized_values(m: int, n: int) -> int:
    """Number k of nontrivial generalized singular values."""
    if m >= n:
        return n
    if n < 2 * m:
        return 2 * m - n
    return 0


@dataclass(frozen=True)
class GsvdFactors:
    u: np.ndarray
    v: np.ndarray
    q: np.ndarray
    sigma1: np.ndarray
    sigma2: np.ndarray
    alpha: np.ndarray
    beta: np.ndarray
    regime: Regime

    @property
    def w_sq(self) -> np.ndarray:
        """Squared generalized singular values alpha^2 / beta^2, descending."""
        return (self.alpha / self.beta) ** 2

    @property
    def m(self) -> int:
        return self.sigma1.shape[0]

    @property
    def n(self) -> int:
        return self.sigma1.shape[1]

    @property
    def k(self) -> int:
        return self.alpha.size


def _svd(a, driver):
    w, s, xh = scipy.linalg.svd(a, full_matrices=True, lapack_driver=driver)
    return w.conj().T, s, xh.conj().T


def _check_rank(s, what):
    if s.size == 0:
        return
    if not s[-1] > RANK_RTOL * s[0]:
        raise DegenerateChannelError(
            f"{what} is rank deficient (smallest singular value {s[-1]:.3e}, largest {s[0]:.3e})"
        )


def _sigma_tall(alpha, beta, m, n):
    s1 = np.zeros((m, n))
    s2 = np.zeros((m, n))
    s1[np.arange(n), np.arange(n)] = alpha
    s2[m - n + np.arange(n), np.arange(n)] = beta
    return s1, s2


def _sigma_overlap(alpha, beta, m, n):
    r, q = n - m, 2 * m - n
    s1 = np.zeros((m, n))
    s2 = np.zeros((m, n))
    s1[np.arange(r), np.arange(r)] = 1.0
    s1[r + np.arange(q), r + np.arange(q)] = alpha
    s2[np.arange(q), r + np.arange(q)] = beta
    s2[q + np.arange(r), m + np.arange(r)] = 1.0
    return s1, s2


def _sigma_wide(m, n):
    s1 = np.zeros((m, n))
    s2 = np.zeros((m, n))
    s1[np.arange(m), np.arange(m)] = 1.0
    s2[np.arange(m), n - m + np.arange(m)] = 1.0
    return s1, s2


def sigma_template(alpha, beta, m: int, n: int):
    """Exact Sigma1/Sigma2 block layout for given alpha/beta diagonals."""
    regime = Regime.of(m, n)
    if regime is Regime.TALL:
        return _sigma_tall(alpha, beta, m, n)
    if regime is Regime.OVERLAP:
        return _sigma_overlap(alpha, beta, m, n)
    return _sigma_wide(m, n)


def _check_pair(h1, h2):
    h1 = np.asarray(h1, dtype=complex)
    h2 = np.asarray(h2, dtype=complex)
    if h1.ndim != 2 or h1.shape != h2.shape:
        raise ValueError(f"h1 and h2 must be matrices of equal shape, got {h1.shape} and {h2.shape}")
    return h1, h2


def _reduce_h2_wide(h2, driver):
    """SVD of a short-fat H2 with the null space ordered first.

    Returns U2, V2 with ``U2 H2 V2 = [0_{m x (n-m)}  diag(z)]`` and z.
    """
    m, n = h2.shape
    u2, z, x = _svd(h2, driver)
    _check_rank(z, "H2")
    v2 = np.concatenate([x[:, m:], x[:, :m]], axis=1)
    return u2, v2, z


def gsvd_tall(h1, h2, *, driver: str = "gesdd") -> GsvdFactors:
    """GSVD for m >= n."""
    h1, h2 = _check_pair(h1, h2)
    m, n = h1.shape
    if m < n:
        raise ValueError(f"gsvd_tall needs m >= n, got m={m}, n={n}")
    w2, z, v2 = _svd(h2, driver)
    _check_rank(z, "H2")
    # Put the m - n null rows first so that U2 H2 V2 = [0; diag(z)].
    u2 = np.concatenate([w2[n:], w2[:n]], axis=0)
    q1 = v2 / z
    u3, w, v3 = _svd(h1 @ q1, driver)
    _check_rank(w, "H1")
    beta = 1.0 / np.sqrt(1.0 + w**2)
    alpha = w * beta
    q = q1 @ (v3 * beta)
    v = np.eye(m, dtype=complex)
    v[m - n:, m - n:] = v3.conj().T
    v = v @ u2
    s1, s2 = _sigma_tall(alpha, beta, m, n)
    return GsvdFactors(u3, v, q, s1, s2, alpha, beta, Regime.TALL)


def gsvd_overlap(h1, h2, *, driver: str = "gesdd") -> GsvdFactors:
    """GSVD for m < n < 2m."""
    h1, h2 = _check_pair(h1, h2)
    m, n = h1.shape
    if not m < n < 2 * m:
        raise ValueError(f"gsvd_overlap needs m < n < 2m, got m={m}, n={n}")
    r, q_dim = n - m, 2 * m - n
    u2, v2, z = _reduce_h2_wide(h2, driver)
    q1 = v2 * np.concatenate([np.ones(r), 1.0 / z])
    h1p = h1 @ q1
    h11, h12 = h1p[:, :r], h1p[:, r:]

    u11, t, v11 = _svd(h11, driver)
    _check_rank(t, "H1 (leading block)")
    q2 = np.eye(n, dtype=complex)
    q2[:r, :r] = v11 / t

    a = u11 @ h12
    a13, a23 = a[:r], a[r:]
    u23, w, v23 = _svd(a23, driver)
    _check_rank(w, "H1 (trailing block)")
    beta = 1.0 / np.sqrt(1.0 + w**2)
    alpha = w * beta

    # Q3 = [[I, -A13], [0, I]] diag(I_r, V23) diag(I_r, S2, I_r)
    q3 = np.eye(n, dtype=complex)
    q3[:r, r:] = -a13 @ v23
    q3[r:, r:] = v23
    q3 = q3 * np.concatenate([np.ones(r), beta, np.ones(r)])

    q = q1 @ q2 @ q3
    u = np.eye(m, dtype=complex)
    u[r:, r:] = u23
    u = u @ u11
    v = v23.conj().T @ u2
    s1, s2 = _sigma_overlap(alpha, beta, m, n)
    return GsvdFactors(u, v, q, s1, s2, alpha, beta, Regime.OVERLAP)


def gsvd_wide(h1, h2, *, driver: str = "gesdd") -> GsvdFactors:
    """GSVD for 2m < n; Sigma1 = [I 0] and Sigma2 = [0 I] regardless of the channel."""
    h1, h2 = _check_pair(h1, h2)
    m, n = h1.shape
    if n == 2 * m:
        raise NormalizationDivergenceError(
            f"n = 2m = {n} is excluded: long-term power normalization diverges"
        )
    if n < 2 * m:
        raise ValueError(f"gsvd_wide needs 2m < n, got m={m}, n={n}")
    p = n - m
    u2, v2, z = _reduce_h2_wide(h2, driver)
    q1 = v2 * np.concatenate([np.ones(p), 1.0 / z])
    h1p = h1 @ q1
    h11, h12 = h1p[:, :p], h1p[:, p:]

    u11, t, v11 = _svd(h11, driver)
    _check_rank(t, "H1")
    q2 = np.eye(n, dtype=complex)
    q2[:p, :p] = v11 * np.concatenate([1.0 / t, np.ones(p - m)])

    q3 = np.eye(n, dtype=complex)
    q3[:m, p:] = -(u11 @ h12)

    q = q1 @ q2 @ q3
    s1, s2 = _sigma_wide(m, n)
    empty = np.zeros(0)
    return GsvdFactors(u11, u2, q, s1, s2, empty, empty, Regime.WIDE)


def gsvd(h1, h2, *, driver: str = "gesdd") -> GsvdFactors:
    """GSVD of (h1, h2), dispatching on the (m, n) regime.

    ``driver`` selects the LAPACK SVD routine ("gesdd" or "gesvd").
    Raises DegenerateChannelError on numerical rank deficiency and
    NormalizationDivergenceError when n = 2m.
    """
    h1, h2 = _check_pair(h1, h2)
    m, n = h1.shape
    regime = Regime.of(m, n)
    if regime is Regime.TALL:
        return gsvd_tall(h1, h2, driver=driver)
    if regime is Regime.OVERLAP:
        return gsvd_overlap(h1, h2, driver=driver)
    return gsvd_wide(h1, h2, driver=driver)


@dataclass(frozen=True)
class GsvdResidual:
    """Per-invariant residuals of a factorization; see verify_gsvd."""

    unitary_u: float
    unitary_v: float
    reconstruction1: float
    reconstruction2: float
    alpha_beta: float
    ordering: float
    structure: float
    sigma_gram: float
    tol_unitary: float = 1e-10
    tol_reconstruction: float = 1e-9
    tol_alpha_beta: float = 1e-12

    @property
    def max_residual(self) -> float:
        return max(self.unitary_u, self.unitary_v, self.reconstruction1, self.reconstruction2,
                   self.alpha_beta, self.ordering, self.structure, self.sigma_gram)

    @property
    def passed(self) -> bool:
        return (
            self.unitary_u < self.tol_unitary
            and self.unitary_v < self.tol_unitary
            and self.reconstruction1 < self.tol_reconstruction
            and self.reconstruction2 < self.tol_reconstruction
            and self.alpha_beta < self.tol_alpha_beta
            and self.ordering == 0.0
            and self.structure == 0.0
            and self.sigma_gram < self.tol_unitary
        )


def _rel(a, b):
    scale = np.linalg.norm(b)
    return float(np.linalg.norm(a - b) / (scale if scale > 0 else 1.0))


def verify_gsvd(h1, h2, f: GsvdFactors) -> GsvdResidual:
    """Measure every GsvdFactors invariant against the inputs.

    ``ordering`` is the largest ascent in alpha (0 when descending and within
    [0, 1]); ``structure`` is the largest deviation of Sigma1/Sigma2 from the
    exact regime template; ``sigma_gram`` checks Sigma^H Sigma = I_n when
    2m > n (0 otherwise).
    """
    h1, h2 = _check_pair(h1, h2)
    m, n = h1.shape
    eye = np.eye(m)
    alpha, beta = np.asarray(f.alpha), np.asarray(f.beta)
    if alpha.size:
        ascent = max(0.0, float(np.max(np.diff(alpha))) if alpha.size > 1 else 0.0)
        bounds = max(0.0, float(alpha.max() - 1.0), float(-alpha.min()))
        ordering = max(ascent, bounds)
        alpha_beta = float(np.max(np.abs(alpha**2 + beta**2 - 1.0)))
    else:
        ordering = alpha_beta = 0.0
    t1, t2 = sigma_template(alpha, beta, m, n)
    structure = float(max(np.max(np.abs(f.sigma1 - t1)), np.max(np.abs(f.sigma2 - t2))))
    if 2 * m > n:
        gram = f.sigma1.T @ f.sigma1 + f.sigma2.T @ f.sigma2
        sigma_gram = float(np.linalg.norm(gram - np.eye(n)))
    else:
        sigma_gram = 0.0
    return GsvdResidual(
        unitary_u=float(np.linalg.norm(f.u @ f.u.conj().T - eye)),
        unitary_v=float(np.linalg.norm(f.v @ f.v.conj().T - eye)),
        reconstruction1=_rel(f.u @ h1 @ f.q, f.sigma1),
        reconstruction2=_rel(f.v @ h2 @ f.q, f.sigma2),
        alpha_beta=alpha_beta,
        ordering=ordering,
        structure=structure,
        sigma_gram=sigma_gram,
    )


def precoder_power(f: GsvdFactors) -> float:
    """trace(Q E[ss^H] Q^H): trace(QQ^H) if 2m > n, else trace(QBQ^H).

    B = diag(I_m, 0, I_m) masks the muted middle streams of the wide regime.
    """
    if f.regime is Regime.WIDE:
        m = f.m
        return float(np.sum(np.abs(f.q[:, :m]) ** 2) + np.sum(np.abs(f.q[:, f.n - m:]) ** 2))
    return float(np.sum(np.abs(f.q) ** 2))


def stacked_inverse_trace(h1, h2) -> float:
    """trace((H^H H)^-1) for 2m > n, trace((H H^H)^-1) for 2m < n, H = [H1; H2].

    Both equal the sum of 1/s^2 over the singular values of H.
    """
    s = np.linalg.svd(np.vstack([h1, h2]), compute_uv=False)
    return float(np.sum(1.0 / s**2))


def dump_matrix(path: str | Path, a) -> None:
    """Write a complex matrix as text: header ``rows cols``, then one row per line of ``re,im`` pairs."""
    a = np.atleast_2d(np.asarray(a, dtype=complex))
    lines = [f"{a.shape[0]} {a.shape[1]}"]
    for row in a:
        lines.append(" ".join(f"{float(x.real)!r},{float(x.imag)!r}" for x in row))
    Path(path).write_text("\n".join(lines) + "\n")


def load_matrix(path: str | Path) -> np.ndarray:
    lines = Path(path).read_text().split("\n")
    rows, cols = (int(x) for x in lines[0].split())
    out = np.empty((rows, cols), dtype=complex)
    for i in range(rows):
        pairs = lines[1 + i].split()
        if len(pairs) != cols:
            raise ValueError(f"row {i}: expected {cols} entries, got {len(pairs)}")
        for j, pair in enumerate(pairs):
            re, im = pair.split(",")
            out[i, j] = complex(float(re), float(im))
    return out
