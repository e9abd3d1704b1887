"""Optional OpenTelemetry integration.

Requires the ``opentelemetry-api`` and ``opentelemetry-sdk`` packages::

    pip install mediationcore[otel]
"""

from __future__ import annotations

from typing import Any

try:
    from opentelemetry import trace  # pyright: ignore[reportMissingImports]
except ImportError as exc:
    raise ImportError(
        "OpenTelemetry packages are required for OTelHandler. "
        "Install them with: pip install mediationcore[otel]"
    ) from exc

from mediationcore.hooks import Event, EventType

_tracer = trace.get_tracer("mediationcore")


class OTelHandler:
    """Hook handler that creates OpenTelemetry spans for experiment events.

    Produces a span hierarchy::

        experiment.run
        └── cell[0]
            ├── replication[0]
            │   ├── estimator.cmavae
            │   └── estimator.lsem
            └── replication[1]

    Replications of one cell may run concurrently, so active spans are
    keyed on composite string identifiers.
    """

    def __init__(self) -> None:
        self._spans: dict[str, Any] = {}

    def _key(self, *parts: str | int) -> str:
        return ":".join(str(p) for p in parts)

    def _child(self, name: str, parent_key: str) -> Any:
        parent = self._spans.get(parent_key)
        ctx = trace.set_span_in_context(parent) if parent else None
        return _tracer.start_span(name, context=ctx)

    def _end(self, key: str, **attributes: Any) -> None:
        span = self._spans.pop(key, None)
        if span:
            for name, value in attributes.items():
                span.set_attribute(name, value)
            span.end()

    def __call__(self, event: Event) -> None:
        data = event.data
        cell = data.get("cell", 0)
        rep = data.get("rep", 0)

        if event.type is EventType.EXPERIMENT_START:
            span = _tracer.start_span("experiment.run")
            span.set_attribute("experiment.name", data.get("experiment", ""))
            span.set_attribute("experiment.dgp", data.get("dgp", ""))
            span.set_attribute("experiment.cell_count", data.get("cell_count", 0))
            self._spans["experiment"] = span

        elif event.type is EventType.EXPERIMENT_END:
            self._end(
                "experiment",
                **{
                    "experiment.duration_seconds": data.get("duration_seconds", 0),
                    "experiment.error_count": data.get("error_count", 0),
                },
            )

        elif event.type is EventType.CELL_START:
            span = self._child(f"cell[{cell}]", "experiment")
            span.set_attribute("cell.label", data.get("label", ""))
            self._spans[self._key("cell", cell)] = span

        elif event.type is EventType.CELL_END:
            self._end(
                self._key("cell", cell),
                **{"cell.duration_seconds": data.get("duration_seconds", 0)},
            )

        elif event.type is EventType.REPLICATION_START:
            span = self._child(f"replication[{rep}]", self._key("cell", cell))
            span.set_attribute("replication.seed", data.get("seed", 0))
            self._spans[self._key("rep", cell, rep)] = span

        elif event.type is EventType.REPLICATION_END:
            self._end(self._key("rep", cell, rep))

        elif event.type is EventType.ESTIMATOR_START:
            name = data.get("estimator", "")
            span = self._child(f"estimator.{name}", self._key("rep", cell, rep))
            self._spans[self._key("estimator", cell, rep, name)] = span

        elif event.type is EventType.ESTIMATOR_END:
            self._end(
                self._key("estimator", cell, rep, data.get("estimator", "")),
                **{
                    "estimator.duration_seconds": data.get("duration_seconds", 0),
                    "estimator.acme1": data.get("acme1", 0.0),
                    "estimator.acde0": data.get("acde0", 0.0),
                },
            )

        elif event.type is EventType.ESTIMATOR_ERROR:
            self._end(
                self._key("estimator", cell, rep, data.get("estimator", "")),
                **{"error": True, "error.message": data.get("error", "")},
            )

        elif event.type is EventType.FAIRNESS_START:
            span = _tracer.start_span("fairness.run")
            span.set_attribute("fairness.n_train", data.get("n_train", 0))
            self._spans["fairness"] = span

        elif event.type is EventType.FAIRNESS_END:
            self._end(
                "fairness",
                **{
                    "fairness.classifier_dp": data.get("classifier_dp", 0.0),
                    "fairness.ground_truth_dp": data.get("ground_truth_dp", 0.0),
                },
            )
