"""Datasets, fit reports and the RMSE protocol."""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field

import numpy as np

from ..errors import InvalidInput

#: samples discarded before computing reported RMSE values
TRANSIENT_SKIP = 1000


@dataclass(frozen=True, eq=False)
class Dataset:
    """Sampled input/output record.

    ``split`` is the index where the validation part starts (``None`` means
    the whole record is estimation data). Both parts are treated as separate
    experiments that start at rest.
    """

    u: np.ndarray
    y: np.ndarray
    sample_period: float = None
    split: int = None
    transient_skip: int = TRANSIENT_SKIP

    def __post_init__(self):
        u = np.array(self.u, dtype=float).reshape(-1)
        y = np.array(self.y, dtype=float).reshape(-1)
        if u.shape != y.shape:
            raise InvalidInput(f"u and y lengths differ ({u.size} vs {y.size})")
        if not (np.all(np.isfinite(u)) and np.all(np.isfinite(y))):
            raise InvalidInput("dataset contains non-finite values")
        if self.split is not None and not 0 < self.split <= u.size:
            raise InvalidInput(f"split {self.split} outside (0, {u.size}]")
        if not 0 <= self.transient_skip < u.size:
            raise InvalidInput(
                f"transient_skip {self.transient_skip} must lie in [0, {u.size})")
        u.flags.writeable = False
        y.flags.writeable = False
        object.__setattr__(self, "u", u)
        object.__setattr__(self, "y", y)

    def __len__(self):
        return self.u.size

    def estimation(self):
        if self.split is None:
            return self
        return Dataset(self.u[:self.split], self.y[:self.split], self.sample_period,
                       None, min(self.transient_skip, self.split - 1))

    def validation(self):
        if self.split is None or self.split == self.u.size:
            return None
        n = self.u.size - self.split
        return Dataset(self.u[self.split:], self.y[self.split:], self.sample_period,
                       None, min(self.transient_skip, n - 1))

    @classmethod
    def concatenate(cls, estimation, validation, transient_skip=TRANSIENT_SKIP,
                    sample_period=None):
        """Join separate estimation and validation records into one split dataset."""
        u = np.concatenate([estimation.u, validation.u])
        y = np.concatenate([estimation.y, validation.y])
        return cls(u, y, sample_period, estimation.u.size, transient_skip)


@dataclass
class FitReport:
    rmse_est: float
    rmse_val: float = None
    cost_history: list = field(default_factory=list)
    iterations: int = 0
    model_ref: str = ""
    noise_floor_estimate: float = None
    status: str = ""

    def to_dict(self):
        d = asdict(self)
        d["cost_history"] = [float(c) for c in self.cost_history]
        return d

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_dict(cls, d):
        return cls(**d)

    def cost_history_csv(self):
        lines = ["iteration,cost"]
        lines += [f"{i},{c!r}" for i, c in enumerate(self.cost_history)]
        return "\n".join(lines) + "\n"


def compute_rmse(y_model, y_measured, transient_skip=TRANSIENT_SKIP):
    """Root mean square of the simulation error after discarding a transient."""
    a = np.asarray(y_model, dtype=float).reshape(-1)
    b = np.asarray(y_measured, dtype=float).reshape(-1)
    if a.shape != b.shape:
        raise InvalidInput(f"length mismatch ({a.size} vs {b.size})")
    if not 0 <= transient_skip < a.size:
        raise InvalidInput(f"need more than {transient_skip} samples, got {a.size}")
    e = a[transient_skip:] - b[transient_skip:]
    return float(np.sqrt(np.mean(e * e)))
