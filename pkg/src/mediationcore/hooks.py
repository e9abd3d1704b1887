from __future__ import annotations

import asyncio
import dataclasses
import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Callable

logger = logging.getLogger("mediationcore")

# Handler type: sync or async callable accepting an Event
Handler = Callable[["Event"], Any]


class EventType(Enum):
    EXPERIMENT_START = "experiment_start"
    EXPERIMENT_END = "experiment_end"
    CELL_START = "cell_start"
    CELL_END = "cell_end"
    REPLICATION_START = "replication_start"
    REPLICATION_END = "replication_end"
    ESTIMATOR_START = "estimator_start"
    ESTIMATOR_END = "estimator_end"
    ESTIMATOR_ERROR = "estimator_error"
    TRAINING_END = "training_end"
    FAIRNESS_START = "fairness_start"
    FAIRNESS_END = "fairness_end"


# ---------------------------------------------------------------------------
# Typed event data classes
# ---------------------------------------------------------------------------


@dataclass
class _EventDataBase:
    """Base for typed event data with dict-like access."""

    def get(self, key: str, default: Any = None) -> Any:
        return getattr(self, key, default)

    def __getitem__(self, key: str) -> Any:
        try:
            return getattr(self, key)
        except AttributeError:
            raise KeyError(key) from None

    def __iter__(self):  # type: ignore[override]
        """Iterate over field names (dict-key protocol for logging ``extra=``)."""
        return iter(f.name for f in dataclasses.fields(self))

    def __contains__(self, key: str) -> bool:
        return key in {f.name for f in dataclasses.fields(self)}

    def items(self) -> list[tuple[str, Any]]:
        return list(dataclasses.asdict(self).items())


@dataclass
class ExperimentStartData(_EventDataBase):
    experiment: str
    dgp: str
    cell_count: int
    reps: int
    estimators: list[str]


@dataclass
class ExperimentEndData(_EventDataBase):
    experiment: str
    duration_seconds: float
    cell_count: int
    error_count: int = 0


@dataclass
class CellStartData(_EventDataBase):
    cell: int
    label: str


@dataclass
class CellEndData(_EventDataBase):
    cell: int
    label: str
    duration_seconds: float
    error_count: int = 0


@dataclass
class ReplicationStartData(_EventDataBase):
    cell: int
    rep: int
    seed: int


@dataclass
class ReplicationEndData(_EventDataBase):
    cell: int
    rep: int
    duration_seconds: float


@dataclass
class EstimatorStartData(_EventDataBase):
    cell: int
    rep: int
    estimator: str


@dataclass
class EstimatorEndData(_EventDataBase):
    cell: int
    rep: int
    estimator: str
    duration_seconds: float
    acme1: float
    acde0: float
    ate: float


@dataclass
class EstimatorErrorData(_EventDataBase):
    cell: int
    rep: int
    estimator: str
    error: str


@dataclass
class TrainingEndData(_EventDataBase):
    cell: int
    rep: int
    epochs: int
    steps: int
    final_objective: float | None
    duration_seconds: float


@dataclass
class FairnessStartData(_EventDataBase):
    n_train: int
    n_test: int


@dataclass
class FairnessEndData(_EventDataBase):
    duration_seconds: float
    ate: float
    classifier_dp: float
    ground_truth_dp: float


EventData = (
    ExperimentStartData
    | ExperimentEndData
    | CellStartData
    | CellEndData
    | ReplicationStartData
    | ReplicationEndData
    | EstimatorStartData
    | EstimatorEndData
    | EstimatorErrorData
    | TrainingEndData
    | FairnessStartData
    | FairnessEndData
)


@dataclass
class Event:
    type: EventType
    data: EventData | dict[str, Any] = field(default_factory=dict)


class Hooks:
    """Lightweight callback system for experiment events."""

    def __init__(self) -> None:
        self._handlers: dict[EventType, list[Handler]] = {}
        self._global_handlers: list[Handler] = []

    def on(self, event_type: EventType, handler: Handler) -> None:
        """Register a handler for a specific event type."""
        self._handlers.setdefault(event_type, []).append(handler)

    def on_all(self, handler: Handler) -> None:
        """Register a handler that receives all events."""
        self._global_handlers.append(handler)

    def extend(self, other: Hooks) -> None:
        """Adopt every handler registered on ``other``."""
        self._global_handlers.extend(other._global_handlers)
        for event_type, handlers in other._handlers.items():
            self._handlers.setdefault(event_type, []).extend(handlers)

    @property
    def is_active(self) -> bool:
        """True when at least one handler is registered."""
        return bool(self._global_handlers) or any(self._handlers.values())

    async def emit(self, event: Event) -> None:
        """Dispatch an event to registered handlers.

        Supports both sync and async handlers. Handler exceptions are
        logged and swallowed so they never break a run.
        """
        handlers = list(self._global_handlers)
        handlers.extend(self._handlers.get(event.type, []))

        for handler in handlers:
            try:
                result = handler(event)
                if asyncio.iscoroutine(result):
                    await result
            except Exception:
                logger.exception(
                    "Hook handler %r failed for event %s", handler, event.type.value
                )
