import os
from pathlib import Path

import numpy as np
import pytest

from hitsc.data import TimeSeriesDataset


def ucr_dir(name):
    """Directory of a UCR dataset under $UCR_ROOT, or skip."""
    root = os.environ.get("UCR_ROOT")
    if not root or not (Path(root) / name).is_dir():
        pytest.skip(f"UCR archive dataset {name} not available (set UCR_ROOT)")
    return Path(root) / name


def write_lines(path, lines):
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
    return Path(path)


def blob_dataset(c=3, n=10, length=24, gap=4.0, noise=0.3, seed=0):
    """Classes carry a Gaussian bump at class-specific positions."""
    rng = np.random.default_rng(seed)
    t = np.arange(length)
    rows, labels = [], []
    for k in range(c):
        centre = (k + 0.5) * length / c
        template = gap * np.exp(-0.5 * ((t - centre) / 1.5) ** 2)
        rows.append(template + rng.normal(0, noise, size=(n, length)))
        labels += [k] * n
    return TimeSeriesDataset("blobs", np.vstack(rows), np.array(labels))


ACCEPTANCE_LINES: list[str] = []


def acceptance_line(number, title, ok, detail, elapsed):
    line = f"ACCEPTANCE {number} {title}: {'PASS' if ok else 'FAIL'} ({detail}; {elapsed:.1f}s)"
    print(line)
    ACCEPTANCE_LINES.append(line)
    return line


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
