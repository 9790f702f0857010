"""Finite-scale Lyapunov exponents: phase averages of cocycle growth.

L_n(E) is the theta-average of (1/n) log ||M_n(theta)||.  It is subadditive
in n, so the sequence decreases (along divisors) to the Lyapunov exponent;
shift averages along the orbit of a diophantine frequency reproduce the same
number, and the whole graph of theta -> (1/n) log ||M_n|| stays within a
power-law neighborhood of L_n from above.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .model import Frequency, TrigPotential, strip_norm
from .transfer import cocycle_batch, _phases

DEFAULT_SIGMA_1D = 1.0 / 3.0
DEFAULT_SIGMA_2D = 0.1
_CHUNK = 1 << 15


@dataclass(frozen=True)
class SamplerSpec:
    """How to sample theta for phase averages.

    quadrature "grid" uses an equispaced (product) grid; "monte_carlo" draws
    stratified uniform samples.  ``samples=None`` picks the dimension default:
    max(4096, 8n) grid points for d=1, 4096 stratified points for d=2.
    """

    quadrature: str = "grid"
    samples: Optional[int] = None
    seed: int = 0

    def resolve_samples(self, dim: int, n: int) -> int:
        if self.samples is not None:
            return int(self.samples)
        if dim == 1:
            return max(4096, 8 * n)
        return 4096


def default_sampler(dim: int) -> SamplerSpec:
    return SamplerSpec(quadrature="grid" if dim == 1 else "monte_carlo")


def theta_samples(dim: int, sampler: SamplerSpec, n: int) -> np.ndarray:
    m = sampler.resolve_samples(dim, n)
    if sampler.quadrature == "grid":
        if dim == 1:
            return (np.arange(m) + 0.5) / m
        side = max(2, int(round(math.sqrt(m))))
        g = (np.arange(side) + 0.5) / side
        return np.stack(np.meshgrid(g, g, indexing="ij"), axis=-1).reshape(-1, 2)
    if sampler.quadrature != "monte_carlo":
        raise ValueError(f"unknown quadrature {sampler.quadrature!r}")
    rng = np.random.default_rng(sampler.seed)
    if dim == 1:
        return rng.random(m)
    # Stratified: jitter inside the cells of the largest square grid that
    # fits, then top up uniformly.
    side = int(math.sqrt(m))
    cells = side * side
    g = np.stack(np.meshgrid(np.arange(side), np.arange(side),
                             indexing="ij"), axis=-1).reshape(-1, 2)
    pts = (g + rng.random((cells, 2))) / side
    extra = rng.random((m - cells, 2))
    return np.concatenate([pts, extra], axis=0)


@dataclass(frozen=True)
class LyapunovEstimate:
    """theta-averaged finite-scale exponent with its sampling error."""

    n: int
    value: float
    samples: int
    std_error: float
    quadrature: str
    energy: float = 0.0

    def csv_row(self) -> str:
        return (f"{self.n},{self.energy!r},{self.value!r},{self.std_error!r},"
                f"{self.samples},{self.quadrature}")

    @staticmethod
    def csv_header() -> str:
        return "n,E,value,std_error,samples,quadrature"


def _phi_values(omega: Frequency, thetas: np.ndarray, energy, n: int,
                v: TrigPotential) -> np.ndarray:
    """(1/n) log ||M_n|| over a batch, chunked to bound memory."""
    total = thetas.shape[0]
    out = np.empty(total)
    e_arr = np.asarray(energy, dtype=float)
    for lo in range(0, total, _CHUNK):
        hi = min(lo + _CHUNK, total)
        e_part = e_arr if e_arr.ndim == 0 else e_arr[lo:hi]
        out[lo:hi] = cocycle_batch(omega, thetas[lo:hi], e_part, n, v) / n
    return out


def lyapunov_n(omega: Frequency, energy: float, n: int, v: TrigPotential,
               sampler: Optional[SamplerSpec] = None) -> LyapunovEstimate:
    """Estimate L_n(E) by the configured phase quadrature."""
    if n < 1:
        raise ValueError("n must be >= 1")
    sampler = sampler or default_sampler(omega.dim)
    thetas = theta_samples(omega.dim, sampler, n)
    phi = _phi_values(omega, thetas, energy, n, v)
    m = phi.shape[0]
    value = float(np.mean(phi))
    std_error = float(np.std(phi, ddof=1) / math.sqrt(m)) if m > 1 else 0.0
    return LyapunovEstimate(n=n, value=value, samples=m, std_error=std_error,
                            quadrature=sampler.quadrature, energy=float(energy))


def lyapunov_scan(omega: Frequency, energies: Sequence[float], n: int,
                  v: TrigPotential,
                  sampler: Optional[SamplerSpec] = None) -> List[LyapunovEstimate]:
    """L_n over an energy grid, batching (energy, theta) pairs jointly."""
    sampler = sampler or default_sampler(omega.dim)
    thetas = theta_samples(omega.dim, sampler, n)
    m = thetas.shape[0]
    energies = np.asarray(list(energies), dtype=float)
    if omega.dim == 1:
        th_all = np.tile(thetas, energies.shape[0])
    else:
        th_all = np.tile(thetas, (energies.shape[0], 1))
    e_all = np.repeat(energies, m)
    phi = _phi_values(omega, th_all, e_all, n, v)
    out = []
    for i, e in enumerate(energies):
        block = phi[i * m:(i + 1) * m]
        se = float(np.std(block, ddof=1) / math.sqrt(m)) if m > 1 else 0.0
        out.append(LyapunovEstimate(n=n, value=float(np.mean(block)), samples=m,
                                    std_error=se, quadrature=sampler.quadrature,
                                    energy=float(e)))
    return out


@dataclass(frozen=True)
class SubadditivityReport:
    residual: float
    tolerance: float
    ok: bool
    parts: Tuple[LyapunovEstimate, LyapunovEstimate, LyapunovEstimate]


def check_subadditivity(omega: Frequency, energy: float, n1: int, n2: int,
                        v: TrigPotential,
                        sampler: Optional[SamplerSpec] = None) -> SubadditivityReport:
    """L_{n1+n2} must not exceed the step-weighted mean of L_{n1}, L_{n2}."""
    if n1 < 1 or n2 < 1:
        raise ValueError("both block lengths must be >= 1")
    est1 = lyapunov_n(omega, energy, n1, v, sampler)
    est2 = lyapunov_n(omega, energy, n2, v, sampler)
    est12 = lyapunov_n(omega, energy, n1 + n2, v, sampler)
    w1 = n1 / (n1 + n2)
    w2 = n2 / (n1 + n2)
    residual = est12.value - (w1 * est1.value + w2 * est2.value)
    combined = math.sqrt(est12.std_error ** 2 + (w1 * est1.std_error) ** 2
                         + (w2 * est2.std_error) ** 2)
    tolerance = 3.0 * combined + 1e-9
    return SubadditivityReport(residual=residual, tolerance=tolerance,
                               ok=residual <= tolerance,
                               parts=(est1, est2, est12))


@dataclass(frozen=True)
class LimitReport:
    estimate: float
    table: Tuple[LyapunovEstimate, ...]
    doubling_ok: bool


def lyapunov_limit(omega: Frequency, energy: float, v: TrigPotential,
                   schedule: Sequence[int],
                   sampler: Optional[SamplerSpec] = None) -> LimitReport:
    """min over an increasing n-schedule, with the doubling monotonicity check."""
    sched = [int(n) for n in schedule]
    if not sched or any(b <= a for a, b in zip(sched, sched[1:])):
        raise ValueError("schedule must be nonempty and strictly increasing")
    table = tuple(lyapunov_n(omega, energy, n, v, sampler) for n in sched)
    by_n: Dict[int, LyapunovEstimate] = {e.n: e for e in table}
    doubling_ok = True
    for e in table:
        half = by_n.get(e.n // 2)
        if e.n % 2 == 0 and half is not None:
            slack = 3.0 * math.sqrt(e.std_error ** 2 + half.std_error ** 2) + 1e-9
            if e.value > half.value + slack:
                doubling_ok = False
    return LimitReport(estimate=min(e.value for e in table), table=table,
                       doubling_ok=doubling_ok)


def shift_average(omega: Frequency, theta, energy: float, n: int, J: int,
                  v: TrigPotential) -> float:
    """Average of (1/n) log ||M_n|| along J consecutive orbit shifts of theta."""
    if J < 1:
        raise ValueError("J must be >= 1")
    js = np.arange(1, J + 1)
    shifted = _phases(theta, omega, js)
    phi = _phi_values(omega, shifted, energy, n, v)
    return float(np.mean(phi))


@dataclass(frozen=True)
class UpperBoundReport:
    """Largest excess of the pointwise exponent above L_n over a phase grid."""

    max_excess: float
    sigma: float
    reference: float          # C * n^{-sigma} with C = 2 log(1 + sup|v| + |E|)
    margin: float             # reference - max_excess
    l_n: float

    @property
    def ok(self) -> bool:
        return self.max_excess <= self.reference


def upper_bound_check(omega: Frequency, energy: float, n: int, v: TrigPotential,
                      grid: int = 4096, sigma: Optional[float] = None,
                      sampler: Optional[SamplerSpec] = None) -> UpperBoundReport:
    if sigma is None:
        sigma = DEFAULT_SIGMA_1D if omega.dim == 1 else DEFAULT_SIGMA_2D
    ref_est = lyapunov_n(omega, energy, n, v, sampler)
    probe = SamplerSpec(quadrature="grid", samples=grid)
    thetas = theta_samples(omega.dim, probe, n)
    phi = _phi_values(omega, thetas, energy, n, v)
    excess = float(np.max(phi - ref_est.value))
    const = 2.0 * math.log(1.0 + strip_norm(v, rho_eff=0.0).bound + abs(energy))
    reference = const * n ** (-sigma)
    return UpperBoundReport(max_excess=excess, sigma=sigma, reference=reference,
                            margin=reference - excess, l_n=ref_est.value)
