"""exp(Theta) v for skew-Hermitian Theta: Lanczos and dense exponentials."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import eigh_tridiagonal, expm

DENSE_LIMIT = 512


class LanczosBreakdown(RuntimeError):
    pass


@dataclass
class LanczosWorkspace:
    """Krylov basis and real tridiagonal of ``H = -i Theta``."""

    m_max: int
    tol: float = 1e-14
    basis: list = field(default_factory=list)
    alpha: list = field(default_factory=list)
    beta: list = field(default_factory=list)
    breakdown: bool = False

    def orthogonality_loss(self) -> float:
        """``max |V^* V - I|`` over the stored basis."""
        if not self.basis:
            return 0.0
        V = np.array(self.basis)
        G = V.conj() @ V.T
        return float(np.max(np.abs(G - np.eye(len(V)))))

    def small_exponential(self) -> np.ndarray:
        """First column of ``exp(i T)``."""
        a = np.asarray(self.alpha, dtype=float)
        if len(a) == 1:
            return np.array([np.exp(1j * a[0])])
        lam, Q = eigh_tridiagonal(a, np.asarray(self.beta[: len(a) - 1], dtype=float))
        return Q @ (np.exp(1j * lam) * Q[0])


def lanczos(apply, u, m: int, tol: float = 1e-14, reorthogonalize: bool = False) -> tuple[LanczosWorkspace, float]:
    """Run up to ``m`` steps of the three-term recurrence on ``H = -i apply``."""
    if m <= 0:
        raise ValueError(f"Lanczos iteration count must be positive, got {m}")
    u = np.asarray(u, dtype=complex)
    norm_u = float(np.linalg.norm(u))
    if norm_u == 0:
        raise ValueError("cannot build a Krylov space from the zero vector")
    ws = LanczosWorkspace(m, tol)
    v = u / norm_u
    v_prev = None
    b_prev = 0.0
    scale = 0.0
    for j in range(m):
        ws.basis.append(v)
        w = -1j * np.asarray(apply(v), dtype=complex)
        a = float(np.real(np.vdot(v, w)))
        ws.alpha.append(a)
        w = w - a * v
        if v_prev is not None:
            w = w - b_prev * v_prev
        if reorthogonalize:
            V = np.array(ws.basis)
            w = w - V.T @ (V.conj() @ w)
        b = float(np.linalg.norm(w))
        scale = max(scale, abs(a), b)
        if j == m - 1:
            ws.beta.append(b)
            break
        if b <= tol * max(scale, 1.0):
            ws.beta.append(0.0)
            ws.breakdown = True
            break
        ws.beta.append(b)
        v_prev, v, b_prev = v, w / b, b
    return ws, norm_u


def lanczos_expm(apply, u, m: int, tol: float = 1e-14, reorthogonalize: bool = False) -> np.ndarray:
    """``V_m exp(T_m) (||u|| e_1)``, the m-step Lanczos approximation of ``exp(Theta) u``.

    ``apply(v)`` must realise a skew-Hermitian ``Theta``. An invariant
    subspace found before ``m`` steps ends the iteration early.
    """
    ws, norm_u = lanczos(apply, u, m, tol, reorthogonalize)
    y = ws.small_exponential()
    return norm_u * (y @ np.array(ws.basis))


def lanczos_expm_adaptive(apply, u, m_max: int = 100, tol: float = 1e-12, m_min: int = 4):
    """Grow ``m`` until ``|beta_m [exp(iT_m)]_{m,1}| < tol ||u||``.

    Returns ``(result, m_used)``.
    """
    if m_max <= 0:
        raise ValueError("m_max must be positive")
    ws, norm_u = lanczos(apply, u, m_max)
    n = len(ws.alpha)
    for k in range(min(m_min, n), n + 1):
        sub = LanczosWorkspace(k, alpha=ws.alpha[:k], beta=ws.beta[:k])
        y = sub.small_exponential()
        if k == n and ws.breakdown or ws.beta[k - 1] * abs(y[-1]) < tol:
            return norm_u * (y @ np.array(ws.basis[:k])), k
    return norm_u * (y @ np.array(ws.basis)), n


def dense_expm(A, check: bool = False) -> np.ndarray:
    """Scaling-and-squaring Pade exponential (``scipy.linalg.expm``)."""
    A = np.asarray(A)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"need a square matrix, got shape {A.shape}")
    if A.shape[0] > DENSE_LIMIT:
        raise ValueError(f"dense exponential limited to {DENSE_LIMIT} rows, got {A.shape[0]}")
    E = expm(A)
    if check:
        gap = np.max(np.abs(E @ expm(-A) - np.eye(A.shape[0])))
        if gap > 1e-10:
            raise ArithmeticError(f"exp(A) exp(-A) deviates from I by {gap:.3e}")
    return E


def skew_hermitian_expm(A) -> np.ndarray:
    """``exp(A)`` for skew-Hermitian ``A`` through the eigendecomposition of ``-iA``.

    Exactly unitary up to roundoff and several times faster than Pade for the
    sizes used here.
    """
    A = np.asarray(A, dtype=complex)
    if A.shape[0] > DENSE_LIMIT:
        raise ValueError(f"dense exponential limited to {DENSE_LIMIT} rows, got {A.shape[0]}")
    H = -0.5j * (A - A.conj().T)
    lam, Q = np.linalg.eigh(H)
    return (Q * np.exp(1j * lam)) @ Q.conj().T
