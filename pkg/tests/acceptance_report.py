"""Collects one pass/fail line per acceptance criterion."""

REPORT: dict[int, str] = {}


def record(number: int, ok: bool, detail: str) -> None:
    line = f"criterion {number}: {'PASS' if ok else 'FAIL'}  {detail}"
    REPORT[number] = line
    print(line)
