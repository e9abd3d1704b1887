from __future__ import annotations

import sys
from typing import TextIO

from mediationcore.hooks import Event, EventType, Hooks

# ANSI escape sequences
_GREEN = "\033[92m"
_YELLOW = "\033[93m"
_RED = "\033[91m"
_DIM = "\033[2m"
_BOLD = "\033[1m"
_RESET = "\033[0m"


class ConsoleReporter:
    """Hook handler that prints experiment progress to the terminal.

    Parameters
    ----------
    color:
        Enable ANSI color output. Set to ``False`` for plain text.
    verbose:
        When ``True``, prints one line per estimator and replication.
        When ``False``, only cells, failures and the final tally.
    file:
        Output stream. Defaults to ``sys.stderr`` so ``stdout`` stays
        free for machine-readable output.
    """

    def __init__(
        self,
        *,
        color: bool = True,
        verbose: bool = False,
        file: TextIO | None = None,
    ) -> None:
        self._color = color
        self._verbose = verbose
        self._file = file or sys.stderr

    # -- Color helpers ------------------------------------------------

    def _c(self, code: str, text: str) -> str:
        if not self._color:
            return text
        return f"{code}{text}{_RESET}"

    def _bold(self, text: str) -> str:
        return self._c(_BOLD, text)

    def _dim(self, text: str) -> str:
        return self._c(_DIM, text)

    def _green(self, text: str) -> str:
        return self._c(_GREEN, text)

    def _yellow(self, text: str) -> str:
        return self._c(_YELLOW, text)

    def _red(self, text: str) -> str:
        return self._c(_RED, text)

    # -- Output helpers -----------------------------------------------

    def _print(self, text: str = "") -> None:
        print(text, file=self._file, flush=True)

    def _section(self, title: str) -> None:
        rule = "─" * 70
        self._print(f"\n{self._bold(rule)}")
        self._print(f"  {self._bold(title)}")
        self._print(self._bold(rule))

    # -- Event dispatch -----------------------------------------------

    def __call__(self, event: Event) -> None:
        d = event.data
        match event.type:
            case EventType.EXPERIMENT_START:
                estimators = ", ".join(d.get("estimators", []))
                self._print(
                    self._bold(str(d.get("experiment", "?")))
                    + f" ({d.get('dgp', '?')}): {d.get('cell_count', '?')} cells"
                    + f" x {d.get('reps', '?')} reps [{estimators}]"
                )
            case EventType.EXPERIMENT_END:
                errors = d.get("error_count", 0)
                tally = self._red(f", {errors} failed") if errors else ""
                self._print(
                    f"\n  {self._bold('Done')}: {d.get('cell_count', '?')} cells in "
                    f"{d.get('duration_seconds', '?')}s{tally}"
                )
            case EventType.CELL_START:
                self._section(f"Cell {d.get('cell', 0)}: {d.get('label', '')}")
            case EventType.CELL_END:
                dur = d.get("duration_seconds", "?")
                if d.get("error_count", 0):
                    self._print("  " + self._yellow(f"! cell done with failures ({dur}s)"))
                else:
                    self._print("  " + self._green(f"✓ cell done ({dur}s)"))
            case EventType.REPLICATION_START:
                if self._verbose:
                    self._print(
                        "  " + self._dim(f"rep {d.get('rep', '?')} (seed {d.get('seed', '?')})")
                    )
            case EventType.ESTIMATOR_END:
                if self._verbose:
                    self._print(
                        f"  │ {d.get('estimator', '?')}: "
                        f"acme={d.get('acme1', 0.0):.4f} acde={d.get('acde0', 0.0):.4f} "
                        + self._dim(f"({d.get('duration_seconds', '?')}s)")
                    )
            case EventType.TRAINING_END:
                if self._verbose:
                    final = d.get("final_objective")
                    shown = "n/a" if final is None else f"{final:.4f}"
                    self._print(
                        "  │   "
                        + self._dim(f"{d.get('steps', '?')} steps, objective {shown}")
                    )
            case EventType.ESTIMATOR_ERROR:
                self._print(
                    "  "
                    + self._red(
                        f"✗ {d.get('estimator', '?')} rep {d.get('rep', '?')}: "
                        f"{d.get('error', 'unknown')}"
                    )
                )
            case EventType.FAIRNESS_START:
                self._section(
                    f"Fairness: {d.get('n_train', '?')} train / {d.get('n_test', '?')} test"
                )
            case EventType.FAIRNESS_END:
                self._print(
                    "  "
                    + self._green(
                        f"✓ classifier DP {d.get('classifier_dp', 0.0):.4f}, "
                        f"ground truth DP {d.get('ground_truth_dp', 0.0):.4f}"
                    )
                )
            case _:
                pass


def console_hooks(
    *,
    color: bool = True,
    verbose: bool = False,
    file: TextIO | None = None,
) -> Hooks:
    """Return a :class:`Hooks` instance with a :class:`ConsoleReporter` registered."""
    hooks = Hooks()
    hooks.on_all(ConsoleReporter(color=color, verbose=verbose, file=file))
    return hooks
