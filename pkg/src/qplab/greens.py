"""Finite-box operators, their Green's functions, decay fits, and paving.

Green's function entries are kept in signed-log form throughout: with a
positive Lyapunov exponent the off-diagonal entries of a few-hundred-site box
underflow doubles, while their logs stay perfectly representable.  Two
independent routes produce the entries: the minor/continuant factorization
(`green_cramer*`) and a pivoted banded solve (`green_solve`).  `pave`
assembles the Green's function of a long interval from overlapping good
windows by iterating the resolvent identity to its fixed point.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
import scipy.linalg

from . import slog
from .errors import IterationDiverged, PavingFailed, SingularEnergy
from .model import Frequency, LogScalar, TrigPotential
from .transfer import _phases, det_sequence

DEFAULT_DET_FLOOR = -700.0


@dataclass(frozen=True)
class FiniteOperator:
    """Restriction of the lattice operator to an integer interval.

    Symmetric tridiagonal: potential values on the diagonal, ones off it.
    """

    interval: Tuple[int, int]
    diagonal: np.ndarray

    def __post_init__(self):
        a, b = self.interval
        object.__setattr__(self, "interval", (int(a), int(b)))
        d = np.asarray(self.diagonal, dtype=float)
        if d.shape != (self.interval[1] - self.interval[0] + 1,):
            raise ValueError("diagonal length does not match the interval")
        object.__setattr__(self, "diagonal", d)

    @property
    def size(self) -> int:
        return self.interval[1] - self.interval[0] + 1

    def dense(self, energy: float = 0.0) -> np.ndarray:
        n = self.size
        m = np.zeros((n, n))
        np.fill_diagonal(m, self.diagonal - energy)
        idx = np.arange(n - 1)
        m[idx, idx + 1] = 1.0
        m[idx + 1, idx] = 1.0
        return m

    def sites(self) -> np.ndarray:
        return np.arange(self.interval[0], self.interval[1] + 1)


def build_operator(interval: Tuple[int, int], omega: Frequency, theta,
                   v: TrigPotential) -> FiniteOperator:
    """Operator on [a, b] with diagonal v(theta + j omega), j = a..b."""
    a, b = int(interval[0]), int(interval[1])
    if b < a:
        raise ValueError("interval is empty")
    sites = np.arange(a, b + 1)
    diag = v.eval_batch(_phases(theta, omega, sites))
    return FiniteOperator(interval=(a, b), diagonal=diag)


@dataclass
class GreenMatrix:
    """Inverse of (A_box - E) with entries stored as (sign, log magnitude)."""

    interval: Tuple[int, int]
    signs: np.ndarray
    logs: np.ndarray
    energy: float

    @property
    def size(self) -> int:
        return self.interval[1] - self.interval[0] + 1

    def _local(self, site: int) -> int:
        a, b = self.interval
        if not a <= site <= b:
            raise IndexError(f"site {site} outside box {self.interval}")
        return site - a

    def entry(self, site1: int, site2: int) -> LogScalar:
        i, j = self._local(site1), self._local(site2)
        return LogScalar(int(self.signs[i, j]), float(self.logs[i, j]))

    def values(self) -> np.ndarray:
        return slog.to_values(self.signs, self.logs)

    def symmetry_defect(self) -> float:
        live = (self.signs != 0) & (self.signs.T != 0)
        if not live.any():
            return 0.0
        if np.any((self.signs != self.signs.T) & live):
            return math.inf
        return float(np.max(np.abs(self.logs[live] - self.logs.T[live])))

    def residual(self, op: FiniteOperator, max_log: float = 300.0) -> float:
        """max-norm defect of (A - E) G - I over columns with bounded entries."""
        col_ok = np.max(self.logs, axis=0) <= max_log
        if not col_ok.any():
            return math.nan
        g = slog.to_values(self.signs[:, col_ok], self.logs[:, col_ok])
        d = op.diagonal - self.energy
        prod = d[:, None] * g
        prod[:-1] += g[1:]
        prod[1:] += g[:-1]
        eye = np.zeros_like(prod)
        rows = np.arange(self.size)[col_ok]
        for out_col, row in enumerate(rows):
            eye[row, out_col] = 1.0
        return float(np.max(np.abs(prod - eye)))

    def csv_lines(self) -> List[str]:
        a, _ = self.interval
        out = ["n1,n2,sign,log_mag"]
        n = self.size
        for i in range(n):
            for j in range(n):
                out.append(f"{a + i},{a + j},{int(self.signs[i, j])},"
                           f"{self.logs[i, j]!r}")
        return out


# ---------------------------------------------------------------------------
# Cramer route: minors are products of leading/trailing continuants


def _continuants(interval, omega, theta, energy, v):
    lead_s, lead_l = det_sequence(interval, omega, theta, energy, v)
    trail_s, trail_l = det_sequence(interval, omega, theta, energy, v, trailing=True)
    return lead_s, lead_l, trail_s, trail_l


def _check_det(interval, sign: int, logmag: float, det_floor: float):
    if sign == 0 or logmag < det_floor:
        raise SingularEnergy(interval, logmag if sign != 0 else -math.inf)


def green_cramer(interval: Tuple[int, int], omega: Frequency, theta,
                 energy: float, v: TrigPotential, site1: int, site2: int,
                 det_floor: float = DEFAULT_DET_FLOOR) -> LogScalar:
    """Single Green's function entry from the minor factorization.

    The (i, j) minor of a unit-off-diagonal tridiagonal box splits into the
    leading continuant before i and the trailing continuant after j, so the
    entry is their product over the full determinant with the checkerboard
    sign from Cramer's rule.
    """
    a, b = int(interval[0]), int(interval[1])
    n = b - a + 1
    i = site1 - a + 1
    j = site2 - a + 1
    if not (1 <= i <= n and 1 <= j <= n):
        raise IndexError("requested sites outside the box")
    if i > j:
        i, j = j, i
    lead_s, lead_l, trail_s, trail_l = _continuants((a, b), omega, theta, energy, v)
    _check_det((a, b), int(lead_s[n]), float(lead_l[n]), det_floor)
    sign = (-1) ** (i + j) * int(lead_s[i - 1]) * int(trail_s[n - j]) * int(lead_s[n])
    if sign == 0:
        return LogScalar(0, -math.inf)
    logmag = float(lead_l[i - 1] + trail_l[n - j] - lead_l[n])
    return LogScalar(sign, logmag)


def green_cramer_matrix(interval: Tuple[int, int], omega: Frequency, theta,
                        energy: float, v: TrigPotential,
                        det_floor: float = DEFAULT_DET_FLOOR) -> GreenMatrix:
    """All entries of the Cramer route at once (shared continuant arrays)."""
    a, b = int(interval[0]), int(interval[1])
    n = b - a + 1
    lead_s, lead_l, trail_s, trail_l = _continuants((a, b), omega, theta, energy, v)
    _check_det((a, b), int(lead_s[n]), float(lead_l[n]), det_floor)
    i = np.arange(1, n + 1)
    lg_i = lead_l[i - 1]
    sg_i = lead_s[i - 1].astype(np.int64)
    tg_j = trail_l[n - i]
    ts_j = trail_s[n - i].astype(np.int64)
    checker = np.where(((i[:, None] + i[None, :]) % 2) == 0, 1, -1)
    signs = checker * sg_i[:, None] * ts_j[None, :] * int(lead_s[n])
    logs = lg_i[:, None] + tg_j[None, :] - float(lead_l[n])
    upper = np.triu(np.ones((n, n), dtype=bool))
    signs = np.where(upper, signs, signs.T).astype(np.int8)
    logs = np.where(upper, logs, logs.T)
    logs = np.where(signs == 0, -math.inf, logs)
    return GreenMatrix(interval=(a, b), signs=signs, logs=logs,
                       energy=float(energy))


def green_solve(interval: Tuple[int, int], omega: Frequency, theta,
                energy: float, v: TrigPotential,
                det_floor: float = DEFAULT_DET_FLOOR) -> GreenMatrix:
    """Full inverse via a pivoted banded factorization (independent of Cramer)."""
    op = build_operator(interval, omega, theta, v)
    n = op.size
    lead_s, lead_l = det_sequence(interval, omega, theta, energy, v)
    _check_det(op.interval, int(lead_s[n]), float(lead_l[n]), det_floor)
    ab = np.zeros((3, n))
    ab[0, 1:] = 1.0
    ab[1, :] = op.diagonal - energy
    ab[2, :-1] = 1.0
    try:
        inv = scipy.linalg.solve_banded((1, 1), ab, np.eye(n),
                                        overwrite_ab=True, overwrite_b=True)
    except scipy.linalg.LinAlgError:
        raise SingularEnergy(op.interval, float(lead_l[n]))
    signs, logs = slog.from_values(inv)
    return GreenMatrix(interval=op.interval, signs=signs, logs=logs,
                       energy=float(energy))


# ---------------------------------------------------------------------------
# exponential-decay fit


@dataclass(frozen=True)
class DecayFit:
    rate: float
    intercept: float
    residual: float
    pairs: int


def decay_fit(green: GreenMatrix, min_sep: int) -> DecayFit:
    """Least-squares slope of -log|G(i,j)| against |i - j| at separation >= min_sep."""
    n = green.size
    if n < 4 * min_sep:
        raise ValueError("box too small for the requested separation")
    idx = np.arange(n)
    sep = np.abs(idx[:, None] - idx[None, :])
    mask = (sep >= min_sep) & (green.signs != 0) & np.isfinite(green.logs)
    if np.count_nonzero(mask) < 2:
        return DecayFit(rate=0.0, intercept=0.0, residual=math.inf, pairs=0)
    x = sep[mask].astype(float)
    y = -green.logs[mask]
    rate, intercept = np.polyfit(x, y, 1)
    resid = float(np.sqrt(np.mean((y - (rate * x + intercept)) ** 2)))
    return DecayFit(rate=float(rate), intercept=float(intercept),
                    residual=resid, pairs=int(mask.sum()))


# ---------------------------------------------------------------------------
# paving


@dataclass(frozen=True)
class MultiscaleParams:
    """Reporting constants when paving serves the multiscale recursion."""

    rho: float
    gamma: float
    n0: int
    log_norm_bound: float     # log(1 + sup|v|)


@dataclass
class PavingCertificate:
    rate: float
    intercept: float
    required_rate: float
    rate_ok: bool
    sup_logmag: float
    window_rate: float
    beta: float
    windows: List[Tuple[int, int]]
    failures: List[int]
    contraction: float
    iterations: int
    multiscale: Optional[dict] = None

    def to_json(self) -> dict:
        out = {
            "rate": self.rate,
            "intercept": self.intercept,
            "required_rate": self.required_rate,
            "rate_ok": self.rate_ok,
            "sup_logmag": self.sup_logmag,
            "window_rate": self.window_rate,
            "beta": self.beta,
            "windows_used": [list(w) for w in self.windows],
            "failures": list(self.failures),
            "contraction": self.contraction,
            "iterations": self.iterations,
        }
        if self.multiscale is not None:
            out["multiscale"] = self.multiscale
        return out


@dataclass(frozen=True)
class PaveResult:
    green: GreenMatrix
    certificate: PavingCertificate


def _window_admissible(gw: GreenMatrix, c: float, budget: float,
                       sep_min: int) -> bool:
    n = gw.size
    idx = np.arange(n)
    sep = np.abs(idx[:, None] - idx[None, :])
    mask = sep >= sep_min
    if not mask.any():
        return True
    worst = np.max(gw.logs[mask] + c * sep[mask]) - budget
    return bool(worst <= 0.0)


def default_window_candidates(x: int, interval: Tuple[int, int], n: int,
                              margin: int) -> List[Tuple[int, int]]:
    """Centered size-n window clipped into the interval, plus trimmed variants.

    Every candidate still covers the protected neighborhood of x, mirroring
    the family of one-site trims used near interval endpoints.
    """
    a, b = interval
    lo = min(max(x - n // 2, a), max(b - n + 1, a))
    hi = min(lo + n - 1, b)
    cands = [(lo, hi), (lo + 1, hi), (lo, hi - 1), (lo + 1, hi - 1)]
    need_lo = max(a, x - margin + 1)
    need_hi = min(b, x + margin - 1)
    out = []
    for w in cands:
        if w[0] <= need_lo and w[1] >= need_hi and w[1] > w[0]:
            out.append(w)
    return out


def pave(interval: Tuple[int, int], n: int, omega: Frequency, theta,
         energy: float, v: TrigPotential, c: float,
         window_oracle: Optional[Callable[[int], Sequence[Tuple[int, int]]]] = None,
         beta: float = 0.1, det_floor: float = DEFAULT_DET_FLOOR,
         multiscale: Optional[MultiscaleParams] = None,
         max_iterations: Optional[int] = None,
         tol: float = 1e-12) -> PaveResult:
    """Assemble G on a long interval from size-n windows with decay rate c.

    Each window's Green's function must obey log|G(i,j)| <= -c|i-j| + beta*n
    at separations past n/10; the assembled entries come from iterating the
    resolvent identity (direct window term plus hops through window edges)
    until the fixed point, and the certificate reports the fitted decay rate
    against the halved target c/2.
    """
    a, b = int(interval[0]), int(interval[1])
    big = b - a + 1
    if n < 2:
        raise ValueError("window size must be >= 2")
    margin = max(1, n // 10)

    if n >= big:
        g = green_solve((a, b), omega, theta, energy, v, det_floor)
        cert = _certificate(g, c, beta, n, [(a, b)], 0.0, 0, multiscale)
        return PaveResult(green=g, certificate=cert)

    oracle = window_oracle or (
        lambda x: default_window_candidates(x, (a, b), n, margin))

    cache: Dict[Tuple[int, int], Optional[GreenMatrix]] = {}
    assignment: List[Optional[Tuple[int, int]]] = [None] * big
    failures: List[int] = []
    for x in range(a, b + 1):
        found = None
        for w in oracle(x):
            gw = cache.get(w, False)
            if gw is False:
                try:
                    cand = green_solve(w, omega, theta, energy, v, det_floor)
                    ok = _window_admissible(cand, c, beta * n, margin)
                    gw = cand if ok else None
                except SingularEnergy:
                    gw = None
                cache[w] = gw
            if gw is not None:
                found = w
                break
        if found is None:
            failures.append(x)
        assignment[x - a] = found
    if failures:
        raise PavingFailed(failures)

    # Row-wise data: direct window term and up to two edge hops.
    d_signs = np.zeros((big, big), dtype=np.int8)
    d_logs = np.full((big, big), slog.LOG_ZERO)
    hop_idx = np.full((big, 2), -1, dtype=int)
    hop_sign = np.zeros((big, 2), dtype=np.int8)
    hop_log = np.full((big, 2), slog.LOG_ZERO)
    for r in range(big):
        x = a + r
        w = assignment[r]
        gw = cache[w]
        lo, hi = w
        row = x - lo
        d_signs[r, lo - a:hi - a + 1] = gw.signs[row, :]
        d_logs[r, lo - a:hi - a + 1] = gw.logs[row, :]
        if lo > a:
            hop_idx[r, 0] = lo - 1 - a
            hop_sign[r, 0] = gw.signs[row, 0]
            hop_log[r, 0] = gw.logs[row, 0]
        if hi < b:
            hop_idx[r, 1] = hi + 1 - a
            hop_sign[r, 1] = gw.signs[row, hi - lo]
            hop_log[r, 1] = gw.logs[row, hi - lo]

    with np.errstate(over="ignore"):
        weights = np.where(hop_idx >= 0, np.exp(hop_log), 0.0)
    contraction = float(np.max(np.sum(weights, axis=1)))
    if contraction >= 0.5:
        raise IterationDiverged(contraction)

    g_signs = d_signs.copy()
    g_logs = d_logs.copy()
    hops = hop_idx >= 0
    idx_safe = np.where(hops, hop_idx, 0)
    cap = max_iterations or (8 * math.ceil(big / max(margin, 1)) + 100)
    iterations = 0
    for iterations in range(1, cap + 1):
        term_signs = []
        term_logs = []
        for side in (0, 1):
            rows = idx_safe[:, side]
            s = (-hop_sign[:, side, None] * g_signs[rows, :]).astype(np.int8)
            l = hop_log[:, side, None] + g_logs[rows, :]
            s[~hops[:, side], :] = 0
            l[~hops[:, side], :] = slog.LOG_ZERO
            term_signs.append(s)
            term_logs.append(l)
        new_signs, new_logs = slog.add(
            np.stack([d_signs, term_signs[0], term_signs[1]]),
            np.stack([d_logs, term_logs[0], term_logs[1]]))
        both = (new_signs != 0) & (g_signs != 0)
        flipped = np.any(new_signs != g_signs)
        if both.any():
            delta = float(np.max(np.abs(new_logs[both] - g_logs[both])))
        else:
            delta = 0.0
        g_signs, g_logs = new_signs, new_logs
        if not flipped and delta < tol:
            break
    else:
        raise IterationDiverged(
            contraction,
            f"no fixed point after {cap} sweeps (contraction {contraction:.3g})")

    green = GreenMatrix(interval=(a, b), signs=g_signs, logs=g_logs,
                        energy=float(energy))
    windows = sorted({w for w in assignment if w is not None})
    cert = _certificate(green, c, beta, n, windows, contraction, iterations,
                        multiscale)
    return PaveResult(green=green, certificate=cert)


def _certificate(green: GreenMatrix, c: float, beta: float, n: int,
                 windows: List[Tuple[int, int]], contraction: float,
                 iterations: int,
                 multiscale: Optional[MultiscaleParams]) -> PavingCertificate:
    min_sep = min(max(1, n), max(1, green.size // 4))
    try:
        fit = decay_fit(green, min_sep)
    except ValueError:
        fit = DecayFit(rate=math.nan, intercept=math.nan, residual=math.inf,
                       pairs=0)
    sup_log = float(np.max(green.logs[green.signs != 0])) \
        if (green.signs != 0).any() else -math.inf
    ms = None
    if multiscale is not None:
        p = multiscale
        sup_bound = math.log(2.0) + 7.0 * p.rho * p.n0 * p.log_norm_bound
        refined = p.gamma * (1.0 - 300.0 / p.n0)
        ms = {
            "rho": p.rho,
            "gamma": p.gamma,
            "n0": p.n0,
            "sup_bound_log": sup_bound,
            "sup_ok": sup_log <= sup_bound,
            "refined_rate_target": refined,
            "refined_rate_ok": fit.rate >= refined,
        }
    return PavingCertificate(
        rate=fit.rate, intercept=fit.intercept, required_rate=c / 2.0,
        rate_ok=fit.rate >= c / 2.0, sup_logmag=sup_log, window_rate=c,
        beta=beta, windows=windows, failures=[], contraction=contraction,
        iterations=iterations, multiscale=ms)
