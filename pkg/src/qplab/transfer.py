"""Transfer-matrix cocycles, tridiagonal determinants, and their exact link.

The one-step matrix is [[v - E, 1], [-1, 0]].  Products are renormalized
every step so norms of order exp(c n) never overflow; accumulated log scales
carry the growth.  The entries of the n-step product coincide with signed
determinants of trailing tridiagonal truncations, which `verify_det_identity`
checks to floating-point accuracy.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence, Tuple

import numpy as np

from .errors import StripExceeded
from .model import Frequency, LogScalar, ScaledMatrix2, TrigPotential


@dataclass(frozen=True)
class CocycleResult:
    """log of the spectral norm of an n-step product plus its direction."""

    log_norm: float
    direction: ScaledMatrix2
    steps: int

    def log_det(self) -> LogScalar:
        return self.direction.log_det()

    def log_inv_norm(self) -> float:
        return self.direction.log_inv_opnorm()


@dataclass(frozen=True)
class DetTriple:
    """Determinants of a box operator minus E and its two trailing truncations."""

    d_n: LogScalar
    d_n1: LogScalar
    d_n2: LogScalar


def step_matrix(v_val: float, energy: float) -> np.ndarray:
    """One-step factor [[v - E, 1], [-1, 0]]; determinant exactly 1."""
    return np.array([[v_val - energy, 1.0], [-1.0, 0.0]])


def _phases(theta, omega: Frequency, j):
    """Torus points theta + j*omega for integer (array) j."""
    w = omega.as_array()
    th = np.asarray(theta, dtype=float)
    j = np.asarray(j, dtype=float)
    if omega.dim == 1:
        return (th + j * w[0]) % 1.0
    return (th + j[..., np.newaxis] * w) % 1.0


def cocycle_batch(omega: Frequency, thetas, energy, n: int, v: TrigPotential,
                  start: int = 0, return_matrices: bool = False):
    """Vectorized n-step cocycle over a batch of phases (and energies).

    ``thetas`` has shape (B,) for d=1 or (B, 2); ``energy`` is a scalar or a
    length-B array.  Returns the array of log spectral norms, and optionally
    the unit-scale entry arrays with their log scales.
    """
    if n < 1:
        raise ValueError("need at least one step")
    th = np.asarray(thetas, dtype=float)
    if omega.dim == 1:
        th = np.atleast_1d(th)
        batch = th.shape[0]
    else:
        th = th.reshape(-1, 2)
        batch = th.shape[0]
    energy = np.asarray(energy, dtype=float)

    m00 = np.ones(batch)
    m01 = np.zeros(batch)
    m10 = np.zeros(batch)
    m11 = np.ones(batch)
    ls = np.zeros(batch)
    w = omega.as_array()
    for j in range(start + 1, start + n + 1):
        if omega.dim == 1:
            ph = (th + j * w[0]) % 1.0
        else:
            ph = (th + j * w) % 1.0
        a = v.eval_batch(ph) - energy
        n00 = a * m00 + m10
        n01 = a * m01 + m11
        n10 = -m00
        n11 = -m01
        # Scale by the max entry first so squaring cannot overflow even for
        # couplings near the float ceiling.
        mx = np.maximum(np.maximum(np.abs(n00), np.abs(n01)),
                        np.maximum(np.abs(n10), np.abs(n11)))
        inv = 1.0 / mx
        s00 = n00 * inv
        s01 = n01 * inv
        s10 = n10 * inv
        s11 = n11 * inv
        f = np.sqrt(s00 * s00 + s01 * s01 + s10 * s10 + s11 * s11)
        finv = 1.0 / f
        m00 = s00 * finv
        m01 = s01 * finv
        m10 = s10 * finv
        m11 = s11 * finv
        ls += np.log(mx) + np.log(f)

    det = m00 * m11 - m01 * m10
    t = m00 * m00 + m01 * m01 + m10 * m10 + m11 * m11
    disc = np.maximum(t * t - 4.0 * det * det, 0.0)
    smax = np.sqrt(0.5 * (t + np.sqrt(disc)))
    log_norms = ls + np.log(smax)
    if return_matrices:
        entries = np.stack([np.stack([m00, m01], axis=-1),
                            np.stack([m10, m11], axis=-1)], axis=-2)
        return log_norms, entries, ls
    return log_norms


def cocycle(omega: Frequency, theta, energy: float, n: int, v: TrigPotential,
            start: int = 0) -> CocycleResult:
    """n-step transfer-matrix product at a single phase."""
    th = np.asarray([theta], dtype=float) if omega.dim == 1 else \
        np.asarray(theta, dtype=float).reshape(1, 2)
    log_norms, entries, ls = cocycle_batch(omega, th, energy, n, v,
                                           start=start, return_matrices=True)
    direction = ScaledMatrix2(entries[0], float(ls[0]))
    return CocycleResult(float(log_norms[0]), direction, n)


def cocycle_complex(omega: Frequency, z: complex, energy: float, n: int,
                    v: TrigPotential, start: int = 0) -> CocycleResult:
    """Cocycle along the complexified phase line (d=1 only)."""
    if omega.dim != 1:
        raise ValueError("complexified cocycles are 1-frequency only")
    if abs(z.imag) >= v.strip_width / 10.0:
        raise StripExceeded(
            f"|Im z| = {abs(z.imag):g} >= strip_width/10 = {v.strip_width / 10.0:g}"
        )
    w = omega.scalar()
    m = np.eye(2, dtype=complex)
    ls = 0.0
    for j in range(start + 1, start + n + 1):
        zz = complex((z.real + j * w) % 1.0, z.imag)
        a = complex(v.eval_complex_batch(np.asarray(zz)).reshape(()))
        step = np.array([[a - energy, 1.0], [-1.0, 0.0]], dtype=complex)
        m = step @ m
        mx = float(np.max(np.abs(m)))
        m = m / mx
        f = math.sqrt(float(np.sum((m * m.conj()).real)))
        m = m / f
        ls += math.log(mx) + math.log(f)
    direction = ScaledMatrix2(m, ls)
    return CocycleResult(direction.log_opnorm(), direction, n)


# ---------------------------------------------------------------------------
# tridiagonal determinants


def _renorm_pair(cur: float, prev: float, acc: float) -> Tuple[float, float, float]:
    # Joint power-of-two rescale: the (cur, prev) ratio is preserved exactly.
    m = max(abs(cur), abs(prev))
    if m == 0.0:
        return cur, prev, acc
    e = math.frexp(m)[1]
    scale = math.ldexp(1.0, -e)
    return cur * scale, prev * scale, acc + e * math.log(2.0)


def det_sequence(interval: Tuple[int, int], omega: Frequency, theta,
                 energy: float, v: TrigPotential, trailing: bool = False):
    """Signed-log determinants of all leading (or trailing) truncations.

    For interval [a, b] the leading sequence has length b-a+2 and entry i is
    det over sites [a, a+i-1] (entry 0 is the empty determinant, +1).  The
    trailing sequence entry i is det over sites [b-i+1, b].
    """
    a, b = int(interval[0]), int(interval[1])
    if b < a:
        raise ValueError("empty interval")
    sites = np.arange(a, b + 1)
    diag = v.eval_batch(_phases(theta, omega, sites)) - energy
    if trailing:
        diag = diag[::-1]
    n = diag.shape[0]
    signs = np.empty(n + 1, dtype=np.int8)
    logs = np.empty(n + 1, dtype=float)
    signs[0], logs[0] = 1, 0.0
    prev, cur, acc = 0.0, 1.0, 0.0
    for i in range(n):
        prev, cur = cur, diag[i] * cur - prev
        cur, prev, acc = _renorm_pair(cur, prev, acc)
        if cur == 0.0:
            signs[i + 1], logs[i + 1] = 0, -math.inf
        else:
            signs[i + 1] = 1 if cur > 0 else -1
            logs[i + 1] = acc + math.log(abs(cur))
    return signs, logs


def det_recurrence(interval: Tuple[int, int], omega: Frequency, theta,
                   energy: float, v: TrigPotential) -> DetTriple:
    """det(A - E) over [a,b] plus the determinants with the last 1 or 2 rows dropped."""
    signs, logs = det_sequence(interval, omega, theta, energy, v)
    n = signs.shape[0] - 1

    def pick(i: int) -> LogScalar:
        if i < 0:
            return LogScalar(0, -math.inf)
        return LogScalar(int(signs[i]), float(logs[i]))

    return DetTriple(pick(n), pick(n - 1), pick(n - 2))


def verify_det_identity(n: int, omega: Frequency, theta, energy: float,
                        v: TrigPotential) -> float:
    """Max signed-log residual between cocycle entries and recurrence determinants.

    The four entries of the n-step product equal, with signs, the
    determinants of the box [1,n], its two phase-shifted trailing
    sub-boxes [2,n], [2,n-1], and the leading sub-box [1,n-1].
    """
    if n < 3:
        raise ValueError("identity check needs n >= 3")
    res = cocycle(omega, theta, energy, n, v)
    s_full, l_full = det_sequence((1, n), omega, theta, energy, v)
    s_shift, l_shift = det_sequence((2, n), omega, theta, energy, v)
    expected = [
        (int(s_full[n]), float(l_full[n])),            # top-left
        (int(s_shift[n - 1]), float(l_shift[n - 1])),  # top-right
        (-int(s_full[n - 1]), float(l_full[n - 1])),   # bottom-left
        (-int(s_shift[n - 2]), float(l_shift[n - 2])),  # bottom-right
    ]
    entries = res.direction.entries
    ls = res.direction.log_scale
    worst = 0.0
    for (i, j), (es, el) in zip(((0, 0), (0, 1), (1, 0), (1, 1)), expected):
        val = entries[i, j]
        if val == 0.0 and es == 0:
            continue
        if val == 0.0 or es == 0:
            worst = math.inf
            continue
        sign = 1 if val > 0 else -1
        if sign != es:
            worst = math.inf
            continue
        worst = max(worst, abs((ls + math.log(abs(val))) - el))
    return worst


# ---------------------------------------------------------------------------
# growth bookkeeping


@dataclass(frozen=True)
class GrowthEnvelope:
    """Per-step log-norm trace and the phase-shift stability check."""

    log_norms: np.ndarray           # log ||M_j|| for j = 1..n at the base phase
    shifts: np.ndarray              # the tested r values
    deviations: np.ndarray          # |phi(theta + r w) - phi(theta)| per shift
    bound_constant: float           # C in the C|r|/n comparison
    ok: bool

    def bounds(self) -> np.ndarray:
        return self.bound_constant * np.abs(self.shifts) / float(len(self.log_norms))


def growth_envelope(n: int, omega: Frequency, theta, energy: float,
                    v: TrigPotential, shifts: Sequence[int]) -> GrowthEnvelope:
    """Check that one-step conjugations move the finite-scale exponent by at most C|r|/n."""
    if n < 1:
        raise ValueError("need n >= 1")
    from .model import strip_norm  # local import to avoid cycle at module load

    sup = strip_norm(v, rho_eff=0.0).bound
    const = 2.0 * math.log(1.0 + sup + abs(energy))

    # Per-step trace at the base phase.
    trace = _log_norm_trace(n, omega, theta, energy, v)

    shifts_arr = np.asarray(list(shifts), dtype=int)
    # Evaluate the base and shifted phases through the same code path so the
    # r = 0 deviation is exactly zero.
    all_shifts = np.concatenate([[0], shifts_arr])
    log_norms = cocycle_batch(omega, _phases(theta, omega, all_shifts), energy, n, v)
    base = log_norms[0] / n
    deviations = np.abs(log_norms[1:] / n - base)
    ok = bool(np.all(deviations <= const * np.abs(shifts_arr) / n + 1e-12))
    return GrowthEnvelope(trace, shifts_arr, deviations, const, ok)


def _log_norm_trace(n: int, omega: Frequency, theta, energy, v) -> np.ndarray:
    th = np.asarray([theta], dtype=float) if omega.dim == 1 else \
        np.asarray(theta, dtype=float).reshape(1, 2)
    w = omega.as_array()
    m00, m01 = np.ones(1), np.zeros(1)
    m10, m11 = np.zeros(1), np.ones(1)
    ls = np.zeros(1)
    trace = np.empty(n)
    for j in range(1, n + 1):
        ph = (th + j * w[0]) % 1.0 if omega.dim == 1 else (th + j * w) % 1.0
        a = v.eval_batch(ph) - energy
        n00 = a * m00 + m10
        n01 = a * m01 + m11
        n10, n11 = -m00, -m01
        mx = np.maximum(np.maximum(np.abs(n00), np.abs(n01)),
                        np.maximum(np.abs(n10), np.abs(n11)))
        inv = 1.0 / mx
        s00, s01, s10, s11 = n00 * inv, n01 * inv, n10 * inv, n11 * inv
        f = np.sqrt(s00 ** 2 + s01 ** 2 + s10 ** 2 + s11 ** 2)
        finv = 1.0 / f
        m00, m01, m10, m11 = s00 * finv, s01 * finv, s10 * finv, s11 * finv
        ls = ls + np.log(mx) + np.log(f)
        det = m00 * m11 - m01 * m10
        t = m00 ** 2 + m01 ** 2 + m10 ** 2 + m11 ** 2
        disc = np.maximum(t * t - 4.0 * det * det, 0.0)
        trace[j - 1] = float((ls + 0.5 * np.log(0.5 * (t + np.sqrt(disc))))[0])
    return trace
