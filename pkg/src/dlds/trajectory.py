"""Uniformly sampled multichannel time series."""

from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError


@dataclass(frozen=True)
class Trajectory:
    """``T`` samples of a ``k``-channel signal taken every ``dt``.

    ``samples`` has shape ``(T, k)``: rows are time, columns channels.
    ``labels`` optionally tags each sample with a regime value (speed,
    rotation angle, segment id, ...). ``segment_starts`` lists the sample
    indices at which an independent segment begins; the transition into
    such a sample is not a dynamics transition and is skipped by training.
    Index 0 is always a segment start.
    """

    samples: np.ndarray
    dt: float = 1.0
    labels: np.ndarray = None
    segment_starts: tuple = field(default=(0,))

    def __post_init__(self):
        Y = np.asarray(self.samples, dtype=float)
        if Y.ndim == 1:
            Y = Y[:, None]
        if Y.ndim != 2:
            raise DomainError(f"samples must be 2-D (T, k), got shape {Y.shape}")
        if Y.shape[0] < 2:
            raise DomainError(f"a trajectory needs at least 2 samples, got {Y.shape[0]}")
        if not np.all(np.isfinite(Y)):
            raise DomainError("trajectory has non-finite samples")
        if not (np.isfinite(self.dt) and self.dt > 0):
            raise DomainError(f"dt must be positive, got {self.dt}")
        Y.setflags(write=False)
        object.__setattr__(self, "samples", Y)
        if self.labels is not None:
            labels = np.asarray(self.labels)
            if labels.shape[0] != Y.shape[0]:
                raise DomainError("labels must have one entry per sample")
            object.__setattr__(self, "labels", labels)
        starts = tuple(sorted({0, *(int(s) for s in self.segment_starts)}))
        if starts[-1] >= Y.shape[0]:
            raise DomainError("segment start beyond the end of the trajectory")
        object.__setattr__(self, "segment_starts", starts)

    @property
    def T(self):
        return self.samples.shape[0]

    @property
    def k(self):
        return self.samples.shape[1]

    def transition_mask(self):
        """Boolean array of length ``T - 1``; entry ``t - 1`` says whether
        sample ``t`` follows from sample ``t - 1`` by the dynamics."""
        mask = np.ones(self.T - 1, dtype=bool)
        for s in self.segment_starts:
            if s > 0:
                mask[s - 1] = False
        return mask
