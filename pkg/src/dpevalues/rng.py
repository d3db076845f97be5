"""Seed derivation, Laplace sampling and lazily extended observation streams."""

import numpy as np


def derive_seed(root_seed, *path):
    """Deterministic child seed for ``(root_seed, *path)``, e.g. trial i."""
    entropy = [int(root_seed)] + [int(p) for p in path]
    return int(np.random.SeedSequence(entropy).generate_state(1, dtype=np.uint64)[0])


def laplace_from_uniform(u, scale):
    """Inverse-CDF transform of U(0, 1) draws into Laplace(0, scale)."""
    u = np.asarray(u, dtype=float)
    z = np.where(u < 0.5, np.log(2.0 * u), -np.log(2.0 * (1.0 - u)))
    z = scale * z
    return float(z) if z.ndim == 0 else z


class LaplaceSource:
    """Seeded stream of Laplace draws, one uniform per draw."""

    def __init__(self, seed):
        self.seed = seed
        self._rng = np.random.default_rng(seed)

    def draw(self, scale, size=None):
        return laplace_from_uniform(self._rng.random(size), scale)


class ObservationStream:
    """I.i.d. draws from a distribution, generated once and cached.

    Observations come from inverse-CDF transforms of a single seeded uniform
    stream, so the first ``n`` values do not depend on how the stream was
    extended. Two methods reading the same stream see identical data.
    """

    def __init__(self, dist, seed, chunk=1024):
        self.dist = dist
        self.seed = seed
        self._rng = np.random.default_rng(seed)
        self._data = np.empty(0, dtype=float)
        self._chunk = chunk

    def __len__(self):
        return len(self._data)

    def take(self, n):
        """First ``n`` observations."""
        n = int(n)
        if n > len(self._data):
            grow = max(n - len(self._data), len(self._data), self._chunk)
            fresh = self.dist.sample_from_uniform(self._rng.random(grow))
            self._data = np.concatenate([self._data, fresh])
        return self._data[:n]

    def __getitem__(self, item):
        if isinstance(item, slice):
            stop = item.stop if item.stop is not None else len(self._data)
            return self.take(stop)[item]
        return self.take(item + 1)[item]


def as_stream(stream, dist=None, seed=None):
    """Accept either an ObservationStream or an array of observations."""
    if isinstance(stream, ObservationStream):
        return stream
    if stream is None:
        return ObservationStream(dist, seed)
    return _ArrayStream(np.asarray(stream, dtype=float))


class _ArrayStream:
    def __init__(self, data):
        self._data = data

    def __len__(self):
        return len(self._data)

    def take(self, n):
        return self._data[: int(n)]
