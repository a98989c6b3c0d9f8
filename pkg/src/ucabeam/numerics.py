"""Special functions, delay transforms and grid utilities.

Bessel functions of integer order are computed with Miller's downward
recurrence normalised by ``J_0 + 2 * sum(J_2k) = 1``. A single pass yields
every order from 0 up to the requested maximum, which is what the phase-mode
compensation filter needs (hundreds of orders at ``kr ~ 300``, a regime where
the upward recurrence is unstable).

The delay transform pair uses the convention

    x[i] = (1/L) * sum_l X[l] * exp(+j 2 pi f_l tau_i),   tau_i = i / (K df)
    X[l] = (L/K) * sum_i x[i] * exp(-j 2 pi f_l tau_i)

so that a unit-amplitude path on the delay grid produces a unit-magnitude
impulse, and ``forward_ft(inverse_ft(X))`` returns ``X`` for any ``K >= L``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

MAX_BESSEL_ORDER = 2000
MAX_BESSEL_ARGUMENT = 1e5

_RESCALE_ABOVE = 1e200


@dataclass(frozen=True)
class DelayGrid:
    """Uniform delay axis ``tau_i = i * spacing`` for ``i in [0, count)``."""

    count: int
    spacing: float

    def __post_init__(self):
        if self.count < 1:
            raise ValueError(f"delay grid needs a positive count, got {self.count}")
        if not self.spacing > 0:
            raise ValueError(f"delay spacing must be > 0, got {self.spacing}")

    @classmethod
    def for_spectrum(cls, n_freqs: int, df: float, zero_pad_factor: int = 4) -> "DelayGrid":
        if zero_pad_factor < 1:
            raise ValueError("zero_pad_factor must be >= 1")
        count = n_freqs * zero_pad_factor
        return cls(count=count, spacing=1.0 / (count * df))

    @property
    def delays(self) -> np.ndarray:
        return np.arange(self.count) * self.spacing

    @property
    def span(self) -> float:
        """Unambiguous delay range ``1/df``."""
        return self.count * self.spacing

    def nearest_index(self, tau: float) -> int:
        return int(round(tau / self.spacing)) % self.count


# ---------------------------------------------------------------------------
# Bessel functions
# ---------------------------------------------------------------------------


def _check_bessel_args(order_max: int, x: np.ndarray) -> None:
    if np.any(np.isnan(x)):
        raise ValueError("bessel: domain error, argument is NaN")
    if order_max > MAX_BESSEL_ORDER:
        raise ValueError(f"bessel: |order| {order_max} exceeds {MAX_BESSEL_ORDER}")
    if np.any(x < 0) or np.any(x > MAX_BESSEL_ARGUMENT):
        raise ValueError(f"bessel: argument outside [0, {MAX_BESSEL_ARGUMENT:g}]")


def _miller_start(order_max: int, x_max: float) -> int:
    top = max(order_max, x_max)
    # The transition region around order ~ x has width ~ x**(1/3); starting
    # well past it makes the discarded minimal solution negligible.
    start = int(top + 30 + 12 * top ** (1.0 / 3.0) + math.sqrt(40 * (order_max + 1)))
    return start + (start % 2)


def bessel_j_orders(order_max: int, x) -> np.ndarray:
    """``J_m(x)`` for every ``m in [0, order_max]``.

    Parameters
    ----------
    order_max : int
        Highest order returned (non-negative).
    x : array_like
        Arguments in ``[0, 1e5]``.

    Returns
    -------
    ndarray
        Shape ``(order_max + 1,) + np.shape(x)``.
    """
    if order_max < 0:
        raise ValueError("order_max must be non-negative")
    x = np.asarray(x, dtype=float)
    shape = x.shape
    x = x.ravel()
    _check_bessel_args(order_max, x)

    out = np.zeros((order_max + 1, x.size))
    zero = x == 0.0
    out[0, zero] = 1.0
    live = ~zero
    if not np.any(live):
        return out.reshape((order_max + 1,) + shape)

    xs = x[live]
    start = _miller_start(order_max, float(xs.max()))
    inv = 2.0 / xs

    j_next = np.zeros_like(xs)   # J_{k+1}
    j_cur = np.full_like(xs, 1e-300)  # J_k, arbitrary seed at k = start
    norm = np.zeros_like(xs)
    kept = np.zeros((order_max + 1, xs.size))
    if start <= order_max:
        kept[start] = j_cur
    for k in range(start, 0, -1):
        j_prev = k * inv * j_cur - j_next
        j_next, j_cur = j_cur, j_prev
        m = k - 1
        if m % 2 == 0 and m > 0:
            norm += j_cur
        if m <= order_max:
            kept[m] = j_cur
        big = np.abs(j_cur) > _RESCALE_ABOVE
        if np.any(big):
            scale = 1.0 / _RESCALE_ABOVE
            j_cur[big] *= scale
            j_next[big] *= scale
            norm[big] *= scale
            if m <= order_max:
                kept[m:, big] *= scale
    norm = 2.0 * norm + j_cur
    out[:, live] = kept / norm
    return out.reshape((order_max + 1,) + shape)


def bessel_j(order: int, x: float) -> float:
    """Bessel function of the first kind ``J_order(x)``."""
    if isinstance(x, float) and math.isnan(x):
        raise ValueError("bessel: domain error, argument is NaN")
    m = abs(int(order))
    value = float(bessel_j_orders(m, x)[m])
    if order < 0 and m % 2:
        value = -value
    return value


def bessel_j_prime(order: int, x: float) -> float:
    """Derivative ``J'_m(x) = (J_{m-1}(x) - J_{m+1}(x)) / 2``."""
    return 0.5 * (bessel_j(order - 1, x) - bessel_j(order + 1, x))


def bessel_j_and_prime(orders, x) -> tuple[np.ndarray, np.ndarray]:
    """``J_m(x)`` and ``J'_m(x)`` on the outer product of integer ``orders`` and ``x``.

    Returns two arrays of shape ``(len(orders),) + np.shape(x)``.
    """
    orders = np.asarray(orders, dtype=int)
    top = int(np.abs(orders).max()) + 1
    table = bessel_j_orders(top, x)

    def signed(ms):
        vals = table[np.abs(ms)]
        odd_negative = (ms < 0) & (ms % 2 == 1)
        vals[odd_negative] *= -1.0
        return vals

    j = signed(orders)
    jp = 0.5 * (signed(orders - 1) - signed(orders + 1))
    return j, jp


# ---------------------------------------------------------------------------
# Delay transforms
# ---------------------------------------------------------------------------


def raised_cosine(n: int, pedestal: float = 0.0) -> np.ndarray:
    """Strictly positive raised-cosine taper of length ``n``.

    ``pedestal = 0`` gives a Hann shape sampled without its zero end points;
    ``pedestal = 0.08`` gives a Hamming-like shape.
    """
    if not 0.0 <= pedestal < 1.0:
        raise ValueError("pedestal must lie in [0, 1)")
    a = 0.5 + 0.5 * pedestal
    t = 2.0 * np.pi * np.arange(1, n + 1) / (n + 1)
    return a - (1.0 - a) * np.cos(t)


def _validate_finite(values: np.ndarray, name: str) -> None:
    if not np.all(np.isfinite(values)):
        raise ValueError(f"{name} contains NaN or Inf")


def _start_phase(f_start: float, df: float, k: int) -> np.ndarray:
    """``exp(+j 2 pi f_start tau_i)`` with the whole-cycle part reduced exactly."""
    n0 = f_start / df
    whole = math.floor(n0)
    i = np.arange(k, dtype=np.int64)
    cycles = ((whole % k) * i % k) / k + (n0 - whole) * i / k
    return np.exp(2j * np.pi * np.mod(cycles, 1.0))


def inverse_ft(spectrum, zero_pad_to: int, *, f_start: float = 0.0, df: float = 1.0,
               axis: int = -1, window=None) -> np.ndarray:
    """Frequency response to impulse response on a zero-padded delay grid.

    ``out[i] = sum_l w_l X_l exp(+j 2 pi f_l tau_i) / sum_l w_l`` with
    ``f_l = f_start + l df`` and ``tau_i = i / (K df)``. Without a window
    ``w_l = 1`` and the normalisation is ``1/L``.
    """
    x = np.asarray(spectrum, dtype=complex)
    _validate_finite(x, "spectrum")
    x = np.moveaxis(x, axis, -1)
    n = x.shape[-1]
    k = int(zero_pad_to)
    if k < n:
        raise ValueError(f"zero_pad_to ({k}) must be >= spectrum length ({n})")
    if window is not None:
        window = np.asarray(window, dtype=float)
        if window.shape != (n,):
            raise ValueError("window length must match the spectrum length")
        x = x * window
        norm = window.sum()
    else:
        norm = float(n)
    out = np.fft.ifft(x, n=k, axis=-1) * (k / norm)
    if f_start:
        out = out * _start_phase(f_start, df, k)
    return np.moveaxis(out, -1, axis)


def forward_ft(cir, truncate_to: int, *, f_start: float = 0.0, df: float = 1.0,
               axis: int = -1, window=None) -> np.ndarray:
    """Exact inverse of :func:`inverse_ft` back onto the ``L``-point frequency grid."""
    h = np.asarray(cir, dtype=complex)
    _validate_finite(h, "cir")
    h = np.moveaxis(h, axis, -1)
    k = h.shape[-1]
    n = int(truncate_to)
    if n > k:
        raise ValueError(f"truncate_to ({n}) must be <= CIR length ({k})")
    if f_start:
        h = h * np.conj(_start_phase(f_start, df, k))
    spec = np.fft.fft(h, axis=-1)[..., :n]
    if window is not None:
        window = np.asarray(window, dtype=float)
        if window.shape != (n,) or np.any(window <= 0):
            raise ValueError("window must be strictly positive with length truncate_to")
        spec = spec * (window.sum() / k) / window
    else:
        spec = spec * (n / k)
    return np.moveaxis(spec, -1, axis)


def find_global_peak(grid) -> tuple[int, int, float]:
    """Row, column and value of the largest entry of a real 2-D grid.

    Ties resolve to the smallest row (delay) index, then the smallest column.
    """
    g = np.asarray(grid, dtype=float)
    if g.ndim != 2 or g.size == 0:
        raise ValueError("find_global_peak needs a non-empty 2-D grid")
    if not np.all(np.isfinite(g)):
        raise ValueError("grid contains NaN or Inf")
    flat = int(np.argmax(g))
    row, col = divmod(flat, g.shape[1])
    return row, col, float(g[row, col])
