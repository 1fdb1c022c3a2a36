"""Collects one PASS/FAIL line per acceptance criterion for the summary."""
LINES: list[str] = []


def record(number: int, title: str, ok: bool, detail: str) -> str:
    line = f"CRITERION {number} {'PASS' if ok else 'FAIL'}: {title} ({detail})"
    LINES.append(line)
    print(line)
    return line
