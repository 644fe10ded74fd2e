"""Lazy renewal clocks and vectorized renewal-process statistics.

A :class:`RenewalClock` materializes the marks S_1 < S_2 < ... of one renewal
process on demand, in blocks, from a dedicated random stream.  The mark
sequence is a deterministic function of (spec, stream) alone: block sizes and
query patterns never change which uniforms map to which gap, so two clocks on
the same stream agree exactly no matter how they are driven.

Batch helpers walk many independent clocks at once in numpy for the Monte
Carlo campaigns (excess-time samples, window counts).
"""

from __future__ import annotations

import numpy as np

from .heavytail import ExponentialRate, HeavyTailSpec


class ClockStateError(RuntimeError):
    """Query at a time whose straddling marks are no longer known."""


class RenewalClock:
    """Single renewal process with lazily materialized marks.

    With S_0 = 0, the clock tracks N(now), the last mark <= now and the first
    mark > now.  ``retain=True`` keeps all consumed marks for trace replay;
    otherwise only the straddle is held.
    """

    def __init__(self, spec, rng: np.random.Generator, retain: bool = False):
        self.spec = spec
        self.rng = rng
        self.now = 0.0
        self.count = 0
        self.last_mark = 0.0
        self._history = [] if retain else None
        self._pending = np.empty(0)
        self._cur = 0
        self._frontier = 0.0
        self._block = 64
        self._ensure_pending()

    @property
    def next_mark(self) -> float:
        return float(self._pending[self._cur])

    def _ensure_pending(self):
        if self._cur < self._pending.size:
            return
        if not np.isfinite(self._frontier):
            # beyond TIME_CAP: no further cure before any horizon
            self._pending = np.array([np.inf])
            self._cur = 0
            return
        u = self.rng.random(self._block)
        gaps = self.spec.sample_many(u)
        self._pending = self._frontier + np.cumsum(gaps)
        self._frontier = float(self._pending[-1])
        self._cur = 0
        self._block = min(self._block * 2, 1 << 20)

    def advance_to(self, t: float, collect: bool = True):
        """Move the frontier to t; return the marks in (old now, t], in order."""
        t = float(t)
        if t < self.now:
            raise ValueError(f"clocks never rewind: t={t} < now={self.now}")
        pieces = [] if collect else None
        while True:
            self._ensure_pending()
            tail = self._pending[self._cur:]
            k = int(np.searchsorted(tail, t, side="right"))
            if k > 0:
                taken = tail[:k]
                if collect:
                    pieces.append(taken)
                if self._history is not None:
                    self._history.append(taken)
                self.count += k
                self.last_mark = float(taken[-1])
                self._cur += k
            if self._cur < self._pending.size:
                break
        self.now = t
        if collect:
            return np.concatenate(pieces) if pieces else np.empty(0)
        return None

    def excess(self, t: float) -> float:
        """E(t) = S_{N(t)+1} - t."""
        if self._in_straddle(t):
            return self.next_mark - t
        marks = self.history
        i = int(np.searchsorted(marks, t, side="right"))
        return float(marks[i]) - t  # i < len: last_mark > t lives in history

    def current_age(self, t: float) -> float:
        """C(t) = t - S_{N(t)}, with S_0 = 0."""
        if self._in_straddle(t):
            return t - self.last_mark
        marks = self.history
        i = int(np.searchsorted(marks, t, side="right"))
        return t - (float(marks[i - 1]) if i else 0.0)

    def count_at(self, t: float) -> int:
        """N(t), the number of marks <= t."""
        if self._in_straddle(t):
            return self.count
        return int(np.searchsorted(self.history, t, side="right"))

    def _in_straddle(self, t) -> bool:
        if t > self.now:
            raise ValueError(f"advance_to({t}) before querying (now={self.now})")
        if t >= self.last_mark:
            return True
        if self._history is None:
            raise ClockStateError(
                f"t={t} predates the straddle (last mark {self.last_mark}) and "
                "history retention is off"
            )
        return False

    @property
    def history(self) -> np.ndarray:
        if self._history is None:
            raise ClockStateError("clock was built without retain=True")
        return np.concatenate(self._history) if self._history else np.empty(0)


def marks_through(spec, rng: np.random.Generator, horizon: float) -> np.ndarray:
    """All marks <= horizon plus the first mark beyond it (or +inf).

    Bit-identical to the sequence a RenewalClock on the same stream emits:
    the block schedule (64 doubling) must match the clock's, because the
    grouping frontier + cumsum(gaps) decides float rounding.
    """
    pieces = []
    frontier = 0.0
    block = 64
    while frontier <= horizon and np.isfinite(frontier):
        gaps = spec.sample_many(rng.random(block))
        marks = frontier + np.cumsum(gaps)
        pieces.append(marks)
        frontier = float(marks[-1])
        block = min(block * 2, 1 << 20)
    all_marks = np.concatenate(pieces) if pieces else np.empty(0)
    k = int(np.searchsorted(all_marks, horizon, side="right"))
    if k < all_marks.size:
        return all_marks[: k + 1]
    return np.append(all_marks[:k], np.inf)


def _block_size(n_active: int) -> int:
    # keep temporary matrices around ~2.4e7 doubles
    return max(64, min(2048, int(3e7) // max(n_active, 1)))


def excess_batch(spec, t: float, n: int, rng: np.random.Generator) -> np.ndarray:
    """E(t) sampled from n independent clocks (vectorized walk)."""
    exc, _ = _walk(spec, t, n, rng, count_thresholds=())
    return exc


def window_counts(spec, t: float, h: float, n: int, rng: np.random.Generator) -> np.ndarray:
    """Number of marks in (t, t+h] for n independent clocks."""
    _, counts = _walk(spec, t + h, n, rng, count_thresholds=(t, t + h))
    return counts[1] - counts[0]


def counts_at(spec, t: float, n: int, rng: np.random.Generator) -> np.ndarray:
    """N(t) for n independent clocks."""
    _, counts = _walk(spec, t, n, rng, count_thresholds=(t,))
    return counts[0]


def excess_batch_targets(spec, targets: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """E(t_i) for one fresh clock per row, row i walked to targets[i]."""
    targets = np.asarray(targets, dtype=float)
    exc, _ = _walk(spec, targets, targets.size, rng, count_thresholds=())
    return exc


def _walk(spec, target, n, rng, count_thresholds):
    """Walk n clocks to (per-row) target; return (excess at target, counts)."""
    target = np.broadcast_to(np.asarray(target, dtype=float), (n,)).copy()
    pos = np.zeros(n)
    exc = np.full(n, np.nan)
    counts = [np.zeros(n, dtype=np.int64) for _ in count_thresholds]
    thr = [np.broadcast_to(np.asarray(c, dtype=float), (n,)) for c in count_thresholds]
    active = np.arange(n)
    while active.size:
        block = _block_size(active.size)
        gaps = spec.sample_many(rng.random((active.size, block)))
        cs = pos[active, None] + np.cumsum(gaps, axis=1)
        t_act = target[active]
        below = (cs <= t_act[:, None]).sum(axis=1)
        for c, th in zip(counts, thr):
            c[active] += (cs <= th[active, None]).sum(axis=1)
        crossed = cs[:, -1] > t_act
        idx = np.where(crossed)[0]
        if idx.size:
            exc[active[idx]] = cs[idx, below[idx]] - t_act[idx]
        pos[active] = cs[:, -1]
        active = active[~crossed]
    return exc, counts


def estimate_renewal_increment(spec, t: float, h: float, n_runs: int, seed: int,
                               shard_key=()) -> dict:
    """Monte Carlo estimate of U(t+h) - U(t), the mean number of marks in (t, t+h].

    Uses n_runs independent clocks on the stream (seed, *shard_key).
    """
    if h <= 0:
        raise ValueError("window h must be > 0")
    if n_runs < 100:
        raise ValueError("n_runs must be >= 100")
    if not np.isfinite(t + h):
        raise ValueError("t + h must be finite")
    from . import rngstream

    rng = rngstream.stream(seed, rngstream.SHARD, *shard_key)
    m = window_counts(spec, t, h, n_runs, rng)
    est = float(m.mean())
    return {"estimate": est, "stderr": float(m.std(ddof=1) / np.sqrt(n_runs))}
