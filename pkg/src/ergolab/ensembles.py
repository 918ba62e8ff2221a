"""Diagonal ensembles, infinite-time variances, and equilibration bounds."""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .entropy import renyi_entropy
from .hamiltonians import SpectralData, degenerate_groups
from .operators import embed_operator, is_hermitian, operator_norm, pauli, random_hermitian
from .states import DensityMatrix, LatticeSpec, PureState, SiteSet, partial_trace, site_set, trace_distance

DEGENERACY_TOL = 1e-10


@dataclass(frozen=True)
class Observable:
    lattice: LatticeSpec
    matrix: np.ndarray
    label: str = "A"

    def __post_init__(self) -> None:
        m = np.asarray(self.matrix)
        if m.shape != (self.lattice.dim,) * 2:
            raise ValueError("observable dimension mismatch")
        if not is_hermitian(m, 1e-10):
            raise ValueError("observable must be hermitian")
        object.__setattr__(self, "matrix", m)

    @cached_property
    def norm(self) -> float:
        return operator_norm(self.matrix)


def site_observable(lattice: LatticeSpec, site: int, axis: str = "Z") -> Observable:
    op = embed_operator(pauli(axis), (site,), lattice)
    return Observable(lattice, op, f"{axis.lower()}[{site}]")


def bond_observable(lattice: LatticeSpec, site: int, axis: str = "Z") -> Observable:
    op = embed_operator(
        np.kron(pauli(axis), pauli(axis)).real, (site, site + 1), lattice
    )
    return Observable(lattice, op, f"{axis.lower()}{axis.lower()}[{site},{site + 1}]")


def random_local_observable(
    lattice: LatticeSpec, sites: tuple[int, ...], seed: int = 0
) -> Observable:
    d = lattice.local_dim ** len(sites)
    block = random_hermitian(d, np.random.default_rng(seed), norm=1.0)
    op = embed_operator(block, sites, lattice)
    return Observable(lattice, op, f"rand{list(sites)}")


class DiagonalEnsemble:
    """Time-averaged (dephased) state of a pure state under a spectrum.

    Populations are aggregated over degenerate energy blocks, so entropies
    and the dense matrix are exact even when the spectrum has coincident
    levels.
    """

    def __init__(
        self,
        spectral: SpectralData,
        state: PureState,
        degeneracy_tolerance: float = DEGENERACY_TOL,
    ) -> None:
        if state.lattice != spectral.lattice:
            raise ValueError("state and spectrum live on different lattices")
        self.spectral = spectral
        self.degeneracy_tolerance = degeneracy_tolerance
        c = spectral.coefficients(state.amplitudes)
        self.coefficients = c
        self.blocks = degenerate_groups(spectral.energies, degeneracy_tolerance)
        pops = np.array(
            [float(np.sum(np.abs(c[a:b]) ** 2)) for a, b in self.blocks]
        )
        total = pops.sum()
        if abs(total - 1.0) > 1e-10:
            raise ValueError(f"populations sum to {total!r}")
        self.populations = pops / total
        self.block_energies = np.array(
            [float(np.mean(spectral.energies[a:b])) for a, b in self.blocks]
        )

    @property
    def num_blocks(self) -> int:
        return len(self.blocks)

    @property
    def is_pure(self) -> bool:
        return bool(np.max(self.populations) > 1.0 - 1e-12)

    def entropy(self, order: float) -> float:
        return renyi_entropy(self.populations, order)

    @property
    def effective_dimension(self) -> float:
        return float(np.exp(self.entropy(2.0)))

    def block_vectors(self) -> np.ndarray:
        """Columns w_k = P_k |psi>, one per energy block (unnormalized)."""
        v = self.spectral.eigenvectors
        cols = [v[:, a:b] @ self.coefficients[a:b] for a, b in self.blocks]
        return np.stack(cols, axis=1)

    def matrix(self) -> DensityMatrix:
        w = self.block_vectors()
        m = w @ w.conj().T
        return DensityMatrix(self.spectral.lattice, 0.5 * (m + m.conj().T))

    def reduced(self, region: SiteSet | tuple[int, ...]) -> DensityMatrix:
        keep = site_set(self.spectral.lattice, region)
        full = self.matrix()
        return partial_trace(full, keep)


def evolve(spectral: SpectralData, state: PureState, time: float) -> PureState:
    c = spectral.coefficients(state.amplitudes)
    amps = spectral.eigenvectors @ (np.exp(-1j * spectral.energies * time) * c)
    return PureState(spectral.lattice, amps)


def expectation_trajectory(
    spectral: SpectralData,
    state: PureState,
    observable: Observable,
    times: np.ndarray,
) -> np.ndarray:
    """<A>(t) on a grid of times, via the eigenbasis."""
    c = spectral.coefficients(state.amplitudes)
    a_tilde = spectral.eigenvectors.conj().T @ observable.matrix @ spectral.eigenvectors
    phases = np.exp(-1j * np.outer(spectral.energies, np.asarray(times, dtype=float)))
    ct = phases * c[:, None]
    return np.real(np.einsum("it,ij,jt->t", ct.conj(), a_tilde, ct, optimize=True))


def ensemble_expectation(ens: DiagonalEnsemble, observable: Observable) -> float:
    w = ens.block_vectors()
    return float(np.real(np.einsum("ik,ij,jk->", w.conj(), observable.matrix, w)))


def variance_exact(
    ens: DiagonalEnsemble, observable: Observable
) -> float:
    """Infinite-time variance of <A>(t), exact under non-degenerate gaps.

    Computed as the off-diagonal weight of A between energy blocks,
    sum_{k != l} |w_k^dag A w_l|^2.  Validity requires the differences of
    distinct block energies to be non-coincident; certify with gap_report.
    """
    w = ens.block_vectors()
    m = w.conj().T @ observable.matrix @ w
    off = np.abs(m) ** 2
    np.fill_diagonal(off, 0.0)
    return float(off.sum())


@dataclass(frozen=True)
class SampledVariance:
    value: float
    stderr: float
    horizon: float
    samples: int


def variance_sampled(
    spectral: SpectralData,
    state: PureState,
    observable: Observable,
    horizon: float | None = None,
    samples: int = 2000,
    seed: int = 0,
) -> SampledVariance:
    """Monte-Carlo estimate of the infinite-time variance of <A>(t).

    Times are uniform on [0, horizon].  The default horizon is
    1e4 * dim / ||H||: dephasing between the closest typical levels needs
    times of order dim / (spectral width), well beyond 1 / ||H||.
    """
    if horizon is None:
        horizon = 1e4 * spectral.dim / max(spectral.norm, 1e-12)
    rng = np.random.default_rng(seed)
    times = rng.uniform(0.0, horizon, size=samples)
    traj = expectation_trajectory(spectral, state, observable, times)
    mean = ensemble_expectation(DiagonalEnsemble(spectral, state), observable)
    dev = (traj - mean) ** 2
    return SampledVariance(
        value=float(dev.mean()),
        stderr=float(dev.std(ddof=1) / np.sqrt(samples)),
        horizon=float(horizon),
        samples=samples,
    )


@dataclass(frozen=True)
class VarianceBoundReport:
    variance: float
    observable_norm: float
    s2: float
    s_inf_trimmed: float
    bound_s2: float
    bound_trimmed: float
    fully_equilibrated: bool
    passed: bool

    def margin(self) -> float:
        return self.variance / min(self.bound_s2, self.bound_trimmed) if self.variance else 0.0


def check_variance_bounds(
    ens: DiagonalEnsemble, observable: Observable
) -> VarianceBoundReport:
    """Exact variance against both ensemble-entropy bounds.

    bound_s2 uses exp(-S_2) of the dephased populations; bound_trimmed
    uses 3 exp(-S_inf) of the populations with the largest one replaced
    by zero (not renormalized).  A pure ensemble cannot fluctuate at all
    and is reported as fully equilibrated.
    """
    var = variance_exact(ens, observable)
    norm2 = observable.norm**2
    s2 = ens.entropy(2.0)
    p = np.sort(ens.populations)[::-1]
    if ens.is_pure or p.size == 1:
        s_inf_trim = np.inf
        bound_trim = 0.0
    else:
        s_inf_trim = float(-np.log(p[1]))
        bound_trim = 3.0 * norm2 * float(p[1])
    bound_s2 = norm2 * float(np.exp(-s2))
    slack = 1e-12 * max(norm2, 1.0)
    passed = var <= bound_s2 + slack and var <= bound_trim + slack
    return VarianceBoundReport(
        variance=var,
        observable_norm=observable.norm,
        s2=s2,
        s_inf_trimmed=s_inf_trim,
        bound_s2=bound_s2,
        bound_trimmed=bound_trim,
        fully_equilibrated=bool(ens.is_pure),
        passed=bool(passed),
    )


@dataclass(frozen=True)
class SubsystemReport:
    region: tuple[int, ...]
    subsystem_dim: int
    mean_distance: float
    max_distance: float
    bound: float
    s2: float
    samples: int
    horizon: float
    passed: bool


def subsystem_equilibration(
    spectral: SpectralData,
    state: PureState,
    region: SiteSet | tuple[int, ...],
    samples: int = 200,
    horizon: float | None = None,
    seed: int = 0,
) -> SubsystemReport:
    """Sampled time-average of || rho_S(t) - omega_S ||_1 against
    2 d_S exp(-S_2 / 2).

    The left side is a Monte-Carlo mean over uniform times, so it sits
    strictly below the rigorous bound with the margin expected from the
    derivation, not within floating-point tolerance of it.
    """
    keep = site_set(spectral.lattice, region)
    ens = DiagonalEnsemble(spectral, state)
    omega_s = ens.reduced(keep)
    if horizon is None:
        horizon = 1e4 * spectral.dim / max(spectral.norm, 1e-12)
    rng = np.random.default_rng(seed)
    times = rng.uniform(0.0, horizon, size=samples)
    dists = np.empty(samples)
    for i, t in enumerate(times):
        rho_s = partial_trace(evolve(spectral, state, float(t)), keep)
        dists[i] = trace_distance(rho_s, omega_s)
    s2 = ens.entropy(2.0)
    bound = 2.0 * keep.dim * float(np.exp(-0.5 * s2))
    mean = float(dists.mean())
    return SubsystemReport(
        region=tuple(keep.sites),
        subsystem_dim=keep.dim,
        mean_distance=mean,
        max_distance=float(dists.max()),
        bound=bound,
        s2=s2,
        samples=samples,
        horizon=float(horizon),
        passed=bool(mean <= bound),
    )
