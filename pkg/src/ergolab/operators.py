"""Operator utilities: Pauli matrices, lattice embedding, hermitian bases."""

from __future__ import annotations

import numpy as np

from .states import LatticeSpec
from .tolerances import TOL

PAULI = {
    "I": np.eye(2),
    "X": np.array([[0.0, 1.0], [1.0, 0.0]]),
    "Y": np.array([[0.0, -1.0j], [1.0j, 0.0]]),
    "Z": np.array([[1.0, 0.0], [0.0, -1.0]]),
}


def pauli(axis: str) -> np.ndarray:
    try:
        return PAULI[axis.upper()]
    except KeyError:
        raise ValueError(f"unknown Pauli axis {axis!r}") from None


def is_hermitian(m: np.ndarray, tol: float | None = None) -> bool:
    tol = TOL.normalization if tol is None else tol
    return bool(np.abs(m - np.conj(m.T)).max() <= tol)


def operator_norm(m: np.ndarray) -> float:
    """Spectral norm; hermitian operators take the cheap eigenvalue route."""
    if is_hermitian(m, 1e-12):
        return float(np.abs(np.linalg.eigvalsh(m)).max())
    return float(np.linalg.norm(m, 2))


def embed_operator(op: np.ndarray, sites, lattice: LatticeSpec) -> np.ndarray:
    """Embed an operator acting on the given sites into the full chain.

    Supports are arbitrary (non-contiguous allowed); the operator's axes
    must be ordered by ascending site index, matching the global
    convention that site 0 is the most significant digit.
    """
    sites = tuple(sorted(int(s) for s in sites))
    if len(set(sites)) != len(sites):
        raise ValueError("duplicate sites in support")
    if sites and (sites[0] < 0 or sites[-1] >= lattice.num_sites):
        raise ValueError("support outside lattice")
    d, n = lattice.local_dim, lattice.num_sites
    m = len(sites)
    if op.shape != (d**m, d**m):
        raise ValueError(f"operator shape {op.shape} does not fit {m} sites")
    if m == n:
        return op
    # contiguous supports embed without any axis shuffle
    if m > 0 and sites[-1] - sites[0] + 1 == m:
        left, right = sites[0], n - sites[-1] - 1
        out = np.kron(np.kron(np.eye(d**left), op), np.eye(d**right))
        return out
    rest = [s for s in range(n) if s not in sites]
    full = np.kron(op, np.eye(d ** (n - m)))
    order = list(sites) + rest  # axis p of `full` carries site order[p]
    perm = np.argsort(order)
    t = full.reshape([d] * (2 * n))
    t = np.transpose(t, list(perm) + [n + p for p in perm])
    return np.ascontiguousarray(t).reshape(lattice.dim, lattice.dim)


def hermitian_site_basis(d: int) -> list[tuple[str, np.ndarray]]:
    """Hermitian operator basis with unit spectral norm for one qudit.

    For d=2 this is exactly {I, X, Y, Z}.  For larger d: the identity,
    the symmetric and antisymmetric pair operators, and the diagonal
    traceless generators rescaled to unit spectral norm.  The elements
    are mutually orthogonal under the Hilbert-Schmidt inner product.
    """
    if d < 2:
        raise ValueError("local dimension must be at least 2")
    basis: list[tuple[str, np.ndarray]] = [("I", np.eye(d))]
    for j in range(d):
        for k in range(j + 1, d):
            x = np.zeros((d, d), dtype=complex)
            x[j, k] = x[k, j] = 1.0
            basis.append((f"X{j}{k}", x))
            y = np.zeros((d, d), dtype=complex)
            y[j, k] = -1.0j
            y[k, j] = 1.0j
            basis.append((f"Y{j}{k}", y))
    for l in range(1, d):
        diag = np.zeros(d)
        diag[:l] = 1.0
        diag[l] = -float(l)
        diag /= np.abs(diag).max()
        basis.append((f"D{l}", np.diag(diag).astype(complex)))
    return basis


def random_hermitian(dim: int, rng: np.random.Generator, norm: float = 1.0) -> np.ndarray:
    g = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    h = 0.5 * (g + g.conj().T)
    return norm * h / operator_norm(h)


def random_density(dim: int, rng: np.random.Generator) -> np.ndarray:
    g = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    rho = g @ g.conj().T
    return rho / np.trace(rho).real
