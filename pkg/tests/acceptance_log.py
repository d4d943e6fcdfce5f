"""Collects one verdict per acceptance criterion for the terminal summary."""

RESULTS = {}


def record(number, title, passed, detail):
    RESULTS[number] = (title, bool(passed), detail)
    line = format_line(number)
    print(line)
    return passed


def format_line(number):
    title, passed, detail = RESULTS[number]
    return f"criterion {number} [{'PASS' if passed else 'FAIL'}] {title}: {detail}"


def lines():
    return [format_line(n) for n in sorted(RESULTS)]
