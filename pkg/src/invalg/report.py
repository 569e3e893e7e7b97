"""Check reports: named residuals, tolerances, pass/fail, deterministic serialization."""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Optional


@dataclass(frozen=True)
class CheckResult:
    name: str
    samples: int
    seed: Optional[int]
    max_residual: float
    tolerance: float
    passed: bool
    worst_input: object = None

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "samples": self.samples,
            "seed": self.seed,
            "max_residual": self.max_residual,
            "tolerance": self.tolerance,
            "passed": self.passed,
            "worst_input": self.worst_input,
        }


@dataclass
class Report:
    results: list = field(default_factory=list)

    def add(self, result: CheckResult) -> None:
        self.results.append(result)

    def extend(self, other: "Report") -> None:
        self.results.extend(other.results)

    def __getitem__(self, name: str) -> CheckResult:
        for r in self.results:
            if r.name == name:
                return r
        raise KeyError(name)

    def names(self) -> list:
        return [r.name for r in self.results]

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.results)

    def to_dict(self) -> dict:
        return {
            "passed": self.passed,
            "checks": [r.to_dict() for r in self.results],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))

    def to_text(self) -> str:
        lines = []
        for r in self.results:
            status = "pass" if r.passed else "FAIL"
            lines.append(
                "%-28s %s  max_residual=%s  tolerance=%s  samples=%d"
                % (r.name, status, repr(r.max_residual), repr(r.tolerance), r.samples)
            )
        lines.append("overall: %s" % ("pass" if self.passed else "FAIL"))
        return "\n".join(lines)

    def to_csv(self) -> str:
        lines = ["name,passed,max_residual,tolerance,samples,seed"]
        for r in self.results:
            lines.append(
                "%s,%s,%s,%s,%d,%s"
                % (
                    r.name,
                    "true" if r.passed else "false",
                    repr(r.max_residual),
                    repr(r.tolerance),
                    r.samples,
                    "" if r.seed is None else str(r.seed),
                )
            )
        return "\n".join(lines)


def run_check(
    name: str,
    inputs: list,
    evaluate: Callable[[object], float],
    tolerance: float,
    seed: Optional[int],
    serialize: Callable[[object], object] = None,
    workers: int = 1,
) -> CheckResult:
    """Evaluate a residual over pre-drawn inputs and fold into a CheckResult.

    Inputs are drawn before any fan-out, and the worst case is the lowest-index
    maximizer, so the result is identical for every worker count.
    """
    if not inputs:
        return CheckResult(name, 0, seed, 0.0, tolerance, True, None)
    if workers > 1 and len(inputs) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            residuals = list(pool.map(evaluate, inputs))
    else:
        residuals = [evaluate(x) for x in inputs]
    worst_idx = 0
    for i, r in enumerate(residuals):
        if r > residuals[worst_idx]:
            worst_idx = i
    worst = residuals[worst_idx]
    worst_input = None
    if serialize is not None:
        worst_input = serialize(inputs[worst_idx])
    return CheckResult(
        name=name,
        samples=len(inputs),
        seed=seed,
        max_residual=float(worst),
        tolerance=tolerance,
        passed=bool(worst <= tolerance),
        worst_input=worst_input,
    )
