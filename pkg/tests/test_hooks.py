from __future__ import annotations

import logging

import pytest

from mediationcore.hooks import Event, EventType, Hooks


async def test_on_dispatches_to_specific_handler():
    received: list[Event] = []

    def handler(event: Event) -> None:
        received.append(event)

    hooks = Hooks()
    hooks.on(EventType.CELL_START, handler)

    await hooks.emit(Event(EventType.CELL_START, {"cell": 0, "label": "n=500"}))
    await hooks.emit(Event(EventType.CELL_END, {"cell": 0}))

    assert len(received) == 1
    assert received[0].type is EventType.CELL_START


async def test_on_all_receives_every_event():
    received: list[EventType] = []

    hooks = Hooks()
    hooks.on_all(lambda e: received.append(e.type))

    await hooks.emit(Event(EventType.EXPERIMENT_START))
    await hooks.emit(Event(EventType.ESTIMATOR_START))
    await hooks.emit(Event(EventType.EXPERIMENT_END))

    assert received == [
        EventType.EXPERIMENT_START,
        EventType.ESTIMATOR_START,
        EventType.EXPERIMENT_END,
    ]


def test_is_active_false_when_empty():
    assert Hooks().is_active is False


def test_is_active_true_with_specific_handler():
    hooks = Hooks()
    hooks.on(EventType.TRAINING_END, lambda e: None)
    assert hooks.is_active is True


def test_is_active_true_with_global_handler():
    hooks = Hooks()
    hooks.on_all(lambda e: None)
    assert hooks.is_active is True


async def test_async_handler():
    called: list[str] = []

    async def handler(event: Event) -> None:
        called.append(event.type.value)

    hooks = Hooks()
    hooks.on_all(handler)
    await hooks.emit(Event(EventType.REPLICATION_END))

    assert called == ["replication_end"]


async def test_mixed_sync_async_handlers():
    called: list[str] = []

    async def async_handler(event: Event) -> None:
        called.append("async")

    hooks = Hooks()
    hooks.on_all(lambda e: called.append("sync"))
    hooks.on_all(async_handler)
    await hooks.emit(Event(EventType.FAIRNESS_START))

    assert sorted(called) == ["async", "sync"]


async def test_handler_exception_is_swallowed(caplog: pytest.LogCaptureFixture):
    called_after: list[bool] = []

    def bad_handler(event: Event) -> None:
        raise ValueError("boom")

    hooks = Hooks()
    hooks.on_all(bad_handler)
    hooks.on_all(lambda e: called_after.append(True))

    with caplog.at_level(logging.ERROR, logger="mediationcore"):
        await hooks.emit(Event(EventType.ESTIMATOR_ERROR, {"error": "test"}))

    assert called_after == [True]
    assert any("estimator_error" in r.getMessage() for r in caplog.records)


async def test_multiple_handlers_same_event_keep_order():
    results: list[int] = []

    hooks = Hooks()
    hooks.on(EventType.EXPERIMENT_START, lambda e: results.append(1))
    hooks.on(EventType.EXPERIMENT_START, lambda e: results.append(2))
    await hooks.emit(Event(EventType.EXPERIMENT_START))

    assert results == [1, 2]


async def test_extend_adopts_global_and_specific_handlers():
    seen: list[str] = []
    other = Hooks()
    other.on_all(lambda e: seen.append("all"))
    other.on(EventType.CELL_END, lambda e: seen.append("cell"))

    hooks = Hooks()
    hooks.extend(other)
    await hooks.emit(Event(EventType.CELL_END))

    assert hooks.is_active is True
    assert seen == ["all", "cell"]
