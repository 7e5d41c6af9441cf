"""
Progress reporting for long training stages.
"""

import sys
import time
from typing import TextIO


class ProgressReporter:
    """Single-line terminal progress bar for a fixed number of iterations."""

    def __init__(self, total: int, description: str = "Training",
                 stream: TextIO = None, min_interval: float = 0.1):
        self.total = total
        self.description = description
        self.stream = stream if stream is not None else sys.stderr
        self.min_interval = min_interval
        self.current = 0
        self.start_time = time.time()
        self.last_update = 0.0

    def __enter__(self):
        self._print_progress()
        return self

    def __exit__(self, exc_type, exc_val, exc_tb):
        self._print_final(failed=exc_type is not None)

    def update(self, increment: int = 1) -> None:
        """Advance by increment iterations."""
        self.current = min(self.current + increment, self.total)

        now = time.time()
        if now - self.last_update > self.min_interval:
            self._print_progress()
            self.last_update = now

    def _print_progress(self) -> None:
        if self.total == 0:
            return

        percentage = (self.current / self.total) * 100
        elapsed = time.time() - self.start_time
        rate = self.current / elapsed if elapsed > 0 else 0

        bar_width = 30
        filled = int(bar_width * self.current / self.total)
        bar = "#" * filled + "-" * (bar_width - filled)
        parts = [f"\r{self.description}: [{bar}] {percentage:5.1f}% {self.current}/{self.total}"]

        if rate > 0:
            parts.append(f" ({rate:.0f} it/s)")
            remaining = (self.total - self.current) / rate
            if remaining < 60:
                parts.append(f" ETA: {remaining:.0f}s")
            else:
                parts.append(f" ETA: {remaining / 60:.1f}m")

        self.stream.write("".join(parts))
        self.stream.flush()

    def _print_final(self, failed: bool = False) -> None:
        elapsed = time.time() - self.start_time
        status = "stopped" if failed else "completed"
        self.stream.write(f"\n{self.description} {status}: {self.current} iterations in {elapsed:.2f}s\n")
        self.stream.flush()
