"""Forecasting helpers: weighted moving average and an elliptic envelope.

The WMA weights the most recent of n observations by n, the next by n-1, down
to 1, over the triangular denominator n(n+1)/2. The envelope is an
axis-aligned ellipse fitted over (jobs, VMs) scatter; substituting a job
count into it predicts the VM count on the chosen branch, and scaled copies
of the ellipse describe the admissible elastic operating range.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Iterable, Sequence


def wma_predict(history: Sequence[float], n: int) -> float | None:
    """Weighted moving average of the n most recent observations.

    history is ordered most recent first. Returns None until n observations
    are available, which callers treat as a not-ready signal.
    """
    if n < 1:
        raise ValueError(f"window size must be at least 1, got {n!r}")
    if len(history) < n:
        return None
    weighted = sum((n - i) * float(history[i]) for i in range(n))
    return weighted / (n * (n + 1) / 2)


class WmaWindow:
    """Rolling observation window feeding wma_predict."""

    def __init__(self, n: int):
        if n < 1:
            raise ValueError(f"window size must be at least 1, got {n!r}")
        self.n = n
        self._values: list[float] = []  # most recent first

    def observe(self, value: float) -> None:
        self._values.insert(0, float(value))
        del self._values[self.n :]

    @property
    def ready(self) -> bool:
        return len(self._values) >= self.n

    def predict(self) -> float | None:
        return wma_predict(self._values, self.n)


class Branch(enum.Enum):
    UPPER = "upper"
    LOWER = "lower"


@dataclass(frozen=True)
class EllipseModel:
    """Axis-aligned ellipse (x-h)^2/a^2 + (y-k)^2/b^2 = 1."""

    center_x: float
    center_y: float
    semi_x: float
    semi_y: float

    def __post_init__(self):
        for name in ("center_x", "center_y", "semi_x", "semi_y"):
            value = float(getattr(self, name))
            if not math.isfinite(value):
                raise ValueError(f"{name} must be finite, got {value!r}")
            object.__setattr__(self, name, value)
        if self.semi_x <= 0.0 or self.semi_y <= 0.0:
            raise ValueError(
                f"semi-axes must be positive, got ({self.semi_x!r}, {self.semi_y!r})"
            )

    def level(self, x: float, y: float) -> float:
        """Quadratic form value; 1.0 on the boundary, below 1 inside."""
        dx = (x - self.center_x) / self.semi_x
        dy = (y - self.center_y) / self.semi_y
        return dx * dx + dy * dy


def fit_ellipse(points: Iterable[tuple[float, float]]) -> EllipseModel:
    """Fit a containing ellipse around a scatter.

    Center is the coordinate-wise mean. The semi-axes keep the aspect ratio of
    the coordinate extents and are scaled together just enough that every
    point lies inside or on the ellipse, with the extreme point landing on the
    boundary. Fewer than 3 points or a zero extent is degenerate.
    """
    pts = [(float(x), float(y)) for x, y in points]
    if len(pts) < 3:
        raise ValueError(f"need at least 3 points to fit, got {len(pts)}")
    h = sum(x for x, _ in pts) / len(pts)
    k = sum(y for _, y in pts) / len(pts)
    extent_x = max(abs(x - h) for x, _ in pts)
    extent_y = max(abs(y - k) for _, y in pts)
    if extent_x == 0.0 or extent_y == 0.0:
        raise ValueError("degenerate scatter: zero extent along an axis")
    scale = max(
        math.sqrt(((x - h) / extent_x) ** 2 + ((y - k) / extent_y) ** 2) for x, y in pts
    )
    return EllipseModel(h, k, extent_x * scale, extent_y * scale)


def predict_vm(model: EllipseModel, jobs: float, branch: Branch = Branch.LOWER) -> float:
    """VM count on the ellipse at a given job count.

    jobs must fall within the model's horizontal span; the lower branch is the
    default read-off.
    """
    dx = (jobs - model.center_x) / model.semi_x
    if abs(dx) > 1.0:
        raise ValueError(
            f"job count {jobs!r} outside the model span "
            f"[{model.center_x - model.semi_x!r}, {model.center_x + model.semi_x!r}]"
        )
    half = model.semi_y * math.sqrt(1.0 - dx * dx)
    if branch is Branch.UPPER:
        return model.center_y + half
    return model.center_y - half


def concentric_family(model: EllipseModel, scales: Iterable[float]) -> list[EllipseModel]:
    """Scaled copies sharing the center; scales must be positive."""
    family = []
    for s in scales:
        if s <= 0.0:
            raise ValueError(f"scale factors must be positive, got {s!r}")
        family.append(
            EllipseModel(model.center_x, model.center_y, model.semi_x * s, model.semi_y * s)
        )
    return family
