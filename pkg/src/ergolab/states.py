"""Pure states and density matrices on finite qudit chains.

Index convention: site 0 is the most significant digit of the base-d
computational index, so ``amplitudes.reshape([d] * num_sites)`` exposes
site ``s`` on axis ``s``.  Every reduction and embedding in the package
relies on this single convention.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .tolerances import TOL


class ResourceGuardError(RuntimeError):
    """Raised when a request exceeds the dense-representation budget."""

GEOMETRIES = ("chain-open", "chain-periodic")

_MAGIC = b"ERGS"


@dataclass(frozen=True)
class LatticeSpec:
    """A one-dimensional arrangement of qudits."""

    num_sites: int
    local_dim: int = 2
    geometry: str = "chain-open"

    def __post_init__(self) -> None:
        # single-site lattices arise as partial-trace targets
        if self.num_sites < 1:
            raise ValueError("lattice needs at least one site")
        if self.local_dim < 2:
            raise ValueError("local dimension must be at least 2")
        if self.geometry not in GEOMETRIES:
            raise ValueError(f"unknown geometry {self.geometry!r}")
        # total dimension must stay addressable as a platform integer
        if self.num_sites * np.log2(self.local_dim) > 62:
            raise ResourceGuardError(
                "total Hilbert-space dimension exceeds index range"
            )

    @property
    def dim(self) -> int:
        return self.local_dim**self.num_sites

    def distance(self, i: int, j: int) -> int:
        """Lattice distance between two sites, ring-aware."""
        d = abs(i - j)
        if self.geometry == "chain-periodic":
            d = min(d, self.num_sites - d)
        return d


@dataclass(frozen=True)
class SiteSet:
    """A non-empty subset of lattice sites, stored sorted."""

    lattice: LatticeSpec
    sites: tuple[int, ...]

    def __post_init__(self) -> None:
        sites = tuple(sorted(set(int(s) for s in self.sites)))
        if not sites:
            raise ValueError("site set must be non-empty")
        if sites[0] < 0 or sites[-1] >= self.lattice.num_sites:
            raise ValueError(f"sites {sites} outside lattice of {self.lattice.num_sites}")
        object.__setattr__(self, "sites", sites)

    def __len__(self) -> int:
        return len(self.sites)

    def __iter__(self):
        return iter(self.sites)

    @property
    def dim(self) -> int:
        return self.lattice.local_dim ** len(self.sites)

    def complement(self) -> "SiteSet":
        rest = tuple(s for s in range(self.lattice.num_sites) if s not in set(self.sites))
        if not rest:
            raise ValueError("complement of the full lattice is empty")
        return SiteSet(self.lattice, rest)

    def bitmask(self) -> int:
        mask = 0
        for s in self.sites:
            mask |= 1 << s
        return mask

    def is_contiguous(self) -> bool:
        n = self.lattice.num_sites
        span = self.sites[-1] - self.sites[0] + 1
        if span == len(self.sites):
            return True
        if self.lattice.geometry == "chain-periodic":
            # a contiguous ring window wrapped around the origin has a
            # contiguous complement
            comp = sorted(set(range(n)) - set(self.sites))
            return comp[-1] - comp[0] + 1 == len(comp)
        return False


def site_set(lattice: LatticeSpec, sites: SiteSet | Iterable[int]) -> SiteSet:
    """Coerce an iterable of site indices into a validated SiteSet."""
    if isinstance(sites, SiteSet):
        if sites.lattice != lattice:
            raise ValueError("site set belongs to a different lattice")
        return sites
    return SiteSet(lattice, tuple(sites))


@dataclass(frozen=True)
class PureState:
    lattice: LatticeSpec
    amplitudes: np.ndarray

    def __post_init__(self) -> None:
        amps = np.asarray(self.amplitudes, dtype=complex).reshape(-1)
        if amps.shape != (self.lattice.dim,):
            raise ValueError(
                f"amplitude vector of length {amps.size} does not match "
                f"lattice dimension {self.lattice.dim}"
            )
        norm = np.linalg.norm(amps)
        if abs(norm - 1.0) > TOL.normalization:
            raise ValueError(f"state norm {norm!r} is not 1 within tolerance")
        object.__setattr__(self, "amplitudes", amps)

    def tensor(self) -> np.ndarray:
        d, n = self.lattice.local_dim, self.lattice.num_sites
        return self.amplitudes.reshape([d] * n)


@dataclass(frozen=True)
class DensityMatrix:
    lattice: LatticeSpec
    matrix: np.ndarray

    def __post_init__(self) -> None:
        m = np.asarray(self.matrix, dtype=complex)
        dim = self.lattice.dim
        if m.shape != (dim, dim):
            raise ValueError(f"matrix shape {m.shape} does not match dimension {dim}")
        if np.abs(m - m.conj().T).max() > TOL.normalization:
            raise ValueError("density matrix is not hermitian within tolerance")
        tr = np.trace(m).real
        if abs(tr - 1.0) > TOL.normalization:
            raise ValueError(f"trace {tr!r} is not 1 within tolerance")
        low = float(np.linalg.eigvalsh(m).min())
        if low < -TOL.psd_clamp:
            raise ValueError(f"matrix has negative eigenvalue {low!r}")
        object.__setattr__(self, "matrix", m)

    @property
    def dim(self) -> int:
        return self.lattice.dim


def density_from_pure(state: PureState) -> DensityMatrix:
    amps = state.amplitudes
    return DensityMatrix(state.lattice, np.outer(amps, amps.conj()))


def _sublattice(lattice: LatticeSpec, num_sites: int) -> LatticeSpec:
    # reduced states live on an abstract open chain of the kept sites
    return LatticeSpec(num_sites, lattice.local_dim, "chain-open")


def bipartition_matrix(
    amplitudes: np.ndarray, keep: tuple[int, ...], lattice: LatticeSpec
) -> np.ndarray:
    """Reshape an amplitude vector into a (kept, traced) matrix M.

    The reduced state on the kept sites is ``M @ M.conj().T``; the kept
    axes are ordered by ascending site index.  The full density matrix is
    never materialised.
    """
    d, n = lattice.local_dim, lattice.num_sites
    rest = [s for s in range(n) if s not in set(keep)]
    t = np.asarray(amplitudes).reshape([d] * n)
    t = np.transpose(t, list(keep) + rest)
    return np.ascontiguousarray(t).reshape(d ** len(keep), -1)


def _ptrace_dense(
    matrix: np.ndarray, keep: tuple[int, ...], lattice: LatticeSpec
) -> np.ndarray:
    """Partial trace of an arbitrary (not necessarily unit-trace) matrix."""
    d, n = lattice.local_dim, lattice.num_sites
    rest = [s for s in range(n) if s not in set(keep)]
    t = matrix.reshape([d] * (2 * n))
    order = list(keep) + rest
    t = np.transpose(t, order + [n + a for a in order])
    dk, dr = d ** len(keep), d ** len(rest)
    t = np.ascontiguousarray(t).reshape(dk, dr, dk, dr)
    return np.einsum("arbr->ab", t)


def partial_trace(state: PureState | DensityMatrix, keep: SiteSet | Iterable[int]) -> DensityMatrix:
    """Reduce a state to the given sites (contiguous or not).

    Parameters
    ----------
    state
        Pure state or density matrix on the full lattice.
    keep
        Sites to retain.  Output axes are ordered by ascending site index.
    """
    keep = site_set(state.lattice, keep)
    kept = keep.sites
    if len(kept) == state.lattice.num_sites:
        if isinstance(state, PureState):
            return density_from_pure(state)
        return state
    if isinstance(state, PureState):
        m = bipartition_matrix(state.amplitudes, kept, state.lattice)
        rho = m @ m.conj().T
    else:
        rho = _ptrace_dense(state.matrix, kept, state.lattice)
    # guard against accumulated round-off before validation
    rho = 0.5 * (rho + rho.conj().T)
    return DensityMatrix(_sublattice(state.lattice, len(kept)), rho)


def overlap(a: PureState, b: PureState) -> complex:
    if a.lattice != b.lattice:
        raise ValueError("states live on different lattices")
    return complex(np.vdot(a.amplitudes, b.amplitudes))


def _psd_sqrt(matrix: np.ndarray) -> np.ndarray:
    vals, vecs = np.linalg.eigh(matrix)
    vals = np.where(vals < 0.0, 0.0, vals)
    return (vecs * np.sqrt(vals)) @ vecs.conj().T


def fidelity(rho: DensityMatrix | PureState, sigma: DensityMatrix | PureState) -> float:
    """Uhlmann fidelity tr sqrt(sqrt(rho) sigma sqrt(rho)), in [0, 1].

    For two pure states this reduces to |<a|b>|.
    """
    if isinstance(rho, PureState) and isinstance(sigma, PureState):
        return abs(overlap(rho, sigma))
    r = density_from_pure(rho) if isinstance(rho, PureState) else rho
    s = density_from_pure(sigma) if isinstance(sigma, PureState) else sigma
    if r.lattice.dim != s.lattice.dim:
        raise ValueError("dimension mismatch")
    root = _psd_sqrt(r.matrix)
    inner = root @ s.matrix @ root
    vals = np.linalg.eigvalsh(0.5 * (inner + inner.conj().T))
    vals = np.where(vals < 0.0, 0.0, vals)
    f = float(np.sum(np.sqrt(vals)))
    return min(f, 1.0)


def _as_matrix(state) -> np.ndarray:
    if isinstance(state, PureState):
        return density_from_pure(state).matrix
    if isinstance(state, DensityMatrix):
        return state.matrix
    return np.asarray(state)


def trace_distance(rho, sigma) -> float:
    """Trace norm ||rho - sigma||_1 (sum of absolute eigenvalues).

    Accepts pure states, density matrices, or raw hermitian arrays.
    """
    r = _as_matrix(rho)
    s = _as_matrix(sigma)
    if r.shape != s.shape:
        raise ValueError("dimension mismatch")
    return float(np.abs(np.linalg.eigvalsh(r - s)).sum())


def random_product_state(
    lattice: LatticeSpec, seed: int | np.random.Generator = 0
) -> PureState:
    """Haar-random single-site factors, deterministic under the seed."""
    rng = np.random.default_rng(seed) if not isinstance(seed, np.random.Generator) else seed
    d = lattice.local_dim
    amps = None
    for _ in range(lattice.num_sites):
        v = rng.normal(size=d) + 1j * rng.normal(size=d)
        v /= np.linalg.norm(v)
        amps = v if amps is None else np.kron(amps, v)
    return PureState(lattice, amps)


def basis_product_state(lattice: LatticeSpec, digits: Iterable[int]) -> PureState:
    """Computational basis state |digits[0], digits[1], ...>."""
    digits = list(digits)
    if len(digits) != lattice.num_sites:
        raise ValueError("one digit per site required")
    d = lattice.local_dim
    idx = 0
    for g in digits:
        if not 0 <= g < d:
            raise ValueError(f"digit {g} outside local dimension {d}")
        idx = idx * d + g
    amps = np.zeros(lattice.dim, dtype=complex)
    amps[idx] = 1.0
    return PureState(lattice, amps)


def maximally_entangled(lattice: LatticeSpec, region: SiteSet | Iterable[int]) -> PureState:
    """Maximally entangled state between a region and its complement.

    Site ``region[k]`` is paired with the k-th complement site, in
    ascending order; complement sites beyond the pairing are left in
    |0>.  The reduced state on the region is maximally mixed, so its
    min-entropy equals log of the region dimension.
    """
    region = site_set(lattice, region)
    comp = region.complement()
    m = len(region)
    if m > len(comp):
        raise ValueError("region larger than half the lattice is unsupported")
    d, n = lattice.local_dim, lattice.num_sites
    d_a = d**m
    place = d ** (n - 1 - np.arange(n, dtype=np.int64))
    k = np.arange(d_a, dtype=np.int64)
    idx = np.zeros(d_a, dtype=np.int64)
    for pos in range(m):
        digit = (k // d ** (m - 1 - pos)) % d
        idx += digit * place[region.sites[pos]]
        idx += digit * place[comp.sites[pos]]
    amps = np.zeros(lattice.dim, dtype=complex)
    amps[idx] = 1.0 / np.sqrt(d_a)
    return PureState(lattice, amps)


def tensor_product(a: PureState, b: PureState) -> PureState:
    """Concatenate two chains; the second state's sites are appended."""
    if a.lattice.local_dim != b.lattice.local_dim:
        raise ValueError("local dimensions differ")
    lat = LatticeSpec(
        a.lattice.num_sites + b.lattice.num_sites, a.lattice.local_dim, "chain-open"
    )
    return PureState(lat, np.kron(a.amplitudes, b.amplitudes))


def save_state(path: str, state: PureState) -> None:
    """Binary dump: magic, sites, local dim, little-endian re/im pairs."""
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<II", state.lattice.num_sites, state.lattice.local_dim))
        inter = np.empty(2 * state.lattice.dim, dtype="<f8")
        inter[0::2] = state.amplitudes.real
        inter[1::2] = state.amplitudes.imag
        fh.write(inter.tobytes())


def load_state(path: str, geometry: str = "chain-open") -> PureState:
    with open(path, "rb") as fh:
        if fh.read(4) != _MAGIC:
            raise ValueError("not a state file")
        n, d = struct.unpack("<II", fh.read(8))
        lat = LatticeSpec(n, d, geometry)
        inter = np.frombuffer(fh.read(), dtype="<f8")
        if inter.size != 2 * lat.dim:
            raise ValueError("truncated state file")
        return PureState(lat, inter[0::2] + 1j * inter[1::2])


def state_to_json(state: PureState) -> str:
    pairs = [[float(a.real), float(a.imag)] for a in state.amplitudes]
    return json.dumps(
        {
            "num_sites": state.lattice.num_sites,
            "local_dim": state.lattice.local_dim,
            "geometry": state.lattice.geometry,
            "amplitudes": pairs,
        }
    )


def state_from_json(text: str) -> PureState:
    doc = json.loads(text)
    lat = LatticeSpec(doc["num_sites"], doc["local_dim"], doc.get("geometry", "chain-open"))
    amps = np.array([complex(re, im) for re, im in doc["amplitudes"]])
    return PureState(lat, amps)
