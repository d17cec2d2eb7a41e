"""Excitation signals for identification experiments.

Every signal is sampled on ``t = k * dt`` for ``k = 0 .. round(duration / dt) - 1``
and bounded by ``amplitude`` (itself at most 1, the normalized stick range).
Seeded signals are reproducible bit for bit.
"""

from __future__ import annotations

import numpy as np
from scipy import signal as sps

KINDS = ("doublet", "chirp", "prbs", "multisine", "white")


def input_signal(kind: str, duration: float, dt: float, amplitude: float = 0.1, seed=None,
                 **opts) -> np.ndarray:
    """Sampled excitation sequence.

    Options per kind:

    * ``doublet``: ``t1``, ``t2`` (s). ``+a`` on ``[t1, t2)``, ``-a`` on ``[t2, 2 t2 - t1)``.
    * ``chirp``: ``f0``, ``f1`` (Hz), linear sweep over the whole duration.
    * ``prbs``: ``hold`` (samples per bit, default 1), ``nbits`` (default 10).
    * ``multisine``: ``band = (f_lo, f_hi)`` in Hz, random phases from ``seed``.
    * ``white``: uniform on ``[-a, a]``.
    """
    if not duration > 0 or not dt > 0:
        raise ValueError("duration and dt must be positive")
    if not 0.0 <= amplitude <= 1.0:
        raise ValueError(f"amplitude {amplitude} outside [0, 1]")
    n = int(round(duration / dt))
    t = dt * np.arange(n)
    rng = np.random.default_rng(seed)

    if kind == "doublet":
        t1 = float(opts.get("t1", 1.0))
        t2 = float(opts.get("t2", 2.0))
        x = np.where((t >= t1) & (t < t2), 1.0, 0.0) - np.where((t >= t2) & (t < 2 * t2 - t1), 1.0, 0.0)
    elif kind == "chirp":
        f0 = float(opts.get("f0", 0.05))
        f1 = float(opts.get("f1", 0.5 / dt * 0.5))
        x = sps.chirp(t, f0=f0, t1=t[-1] if n > 1 else dt, f1=f1, method="linear", phi=-90)
    elif kind == "prbs":
        hold = int(opts.get("hold", 1))
        nbits = int(opts.get("nbits", 10))
        state = rng.integers(0, 2, size=nbits)
        if not state.any():
            state[0] = 1
        n_bits_needed = -(-n // hold)
        period = 2**nbits - 1
        seq = sps.max_len_seq(nbits, state=state, length=min(n_bits_needed, period))[0]
        seq = np.resize(seq, n_bits_needed)
        x = np.repeat(2.0 * seq - 1.0, hold)[:n]
    elif kind == "multisine":
        f_lo, f_hi = opts.get("band", (0.05, 0.25 / dt))
        df = 1.0 / (n * dt)
        freqs = np.arange(max(1, int(np.ceil(f_lo / df))), int(np.floor(f_hi / df)) + 1) * df
        if freqs.size == 0:
            raise ValueError("multisine band contains no frequency lines")
        phases = rng.uniform(0.0, 2 * np.pi, size=freqs.size)
        x = np.sin(2 * np.pi * np.outer(t, freqs) + phases).sum(axis=1)
        peak = np.max(np.abs(x))
        x = x / peak if peak > 0 else x
    elif kind == "white":
        x = rng.uniform(-1.0, 1.0, size=n)
    else:
        raise ValueError(f"unknown signal kind {kind!r}; choose from {KINDS}")
    return amplitude * np.asarray(x, dtype=float)
