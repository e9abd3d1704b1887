from __future__ import annotations

import dataclasses
import logging
from typing import Any, Callable

from mediationcore.hooks import Event, EventType, Hooks

_DEBUG_EVENTS = {
    EventType.REPLICATION_START,
    EventType.REPLICATION_END,
    EventType.ESTIMATOR_START,
    EventType.ESTIMATOR_END,
    EventType.TRAINING_END,
}

_ERROR_EVENTS = {
    EventType.ESTIMATOR_ERROR,
}

# One line per event; missing payload keys fall back to "?"
_MESSAGES: dict[EventType, Callable[[Callable[[str], Any]], str]] = {
    EventType.EXPERIMENT_START: lambda d: (
        f"experiment {d('experiment')}: {d('cell_count')} cells x {d('reps')} reps "
        f"of {d('dgp')}"
    ),
    EventType.EXPERIMENT_END: lambda d: (
        f"experiment {d('experiment')} finished in {d('duration_seconds')}s "
        f"with {d('error_count')} failures"
    ),
    EventType.CELL_START: lambda d: f"cell {d('cell')} ({d('label')}) started",
    EventType.CELL_END: lambda d: (
        f"cell {d('cell')} ({d('label')}) finished in {d('duration_seconds')}s"
    ),
    EventType.REPLICATION_START: lambda d: (
        f"cell {d('cell')} rep {d('rep')} started with seed {d('seed')}"
    ),
    EventType.REPLICATION_END: lambda d: (
        f"cell {d('cell')} rep {d('rep')} finished in {d('duration_seconds')}s"
    ),
    EventType.ESTIMATOR_START: lambda d: f"{d('estimator')} on cell {d('cell')} rep {d('rep')}",
    EventType.ESTIMATOR_END: lambda d: (
        f"{d('estimator')} on cell {d('cell')} rep {d('rep')}: "
        f"acme1={d('acme1')} acde0={d('acde0')} ate={d('ate')}"
    ),
    EventType.ESTIMATOR_ERROR: lambda d: (
        f"{d('estimator')} failed on cell {d('cell')} rep {d('rep')}: {d('error')}"
    ),
    EventType.TRAINING_END: lambda d: (
        f"trained {d('epochs')} epochs ({d('steps')} steps), "
        f"final objective {d('final_objective')}"
    ),
    EventType.FAIRNESS_START: lambda d: (
        f"fairness study on {d('n_train')} train / {d('n_test')} test rows"
    ),
    EventType.FAIRNESS_END: lambda d: (
        f"fairness study finished: ate={d('ate')} classifier_dp={d('classifier_dp')} "
        f"observed_dp={d('ground_truth_dp')}"
    ),
}


class LoggingHandler:
    """Hook handler that logs events via Python's ``logging`` module.

    Experiment, cell and fairness lifecycle events are logged at ``INFO``,
    replication, estimator and training detail at ``DEBUG``, and estimator
    failures at ``ERROR``. Event data is passed via the ``extra`` dict for
    structured log formatters.
    """

    def __init__(self) -> None:
        self._logger = logging.getLogger("mediationcore")

    @staticmethod
    def _as_extra(data: Any) -> dict[str, Any]:
        if isinstance(data, dict):
            return data
        if dataclasses.is_dataclass(data) and not isinstance(data, type):
            return dataclasses.asdict(data)
        return {}

    def __call__(self, event: Event) -> None:
        extra = self._as_extra(event.data)
        message = _MESSAGES[event.type](lambda key: extra.get(key, "?"))

        if event.type in _ERROR_EVENTS:
            level = logging.ERROR
        elif event.type in _DEBUG_EVENTS:
            level = logging.DEBUG
        else:
            level = logging.INFO
        self._logger.log(level, "[%s] %s", event.type.value, message, extra=extra)


def enable_logging(level: int = logging.INFO) -> Hooks:
    """Configure ``logging.basicConfig`` and return hooks that log every event."""
    logging.basicConfig(level=level)
    hooks = Hooks()
    hooks.on_all(LoggingHandler())
    return hooks
