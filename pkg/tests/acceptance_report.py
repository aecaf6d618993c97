"""Collects one pass/fail line per acceptance criterion for the terminal summary."""
RESULTS = []


def record(number, title, passed, detail):
    line = f"[{'PASS' if passed else 'FAIL'}] criterion {number:>2}: {title} | {detail}"
    RESULTS.append((number, line))
    print(line)
    return passed
