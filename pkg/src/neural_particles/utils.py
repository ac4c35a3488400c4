"""
Utility functions for the Neural Particle Method.

Formatting helpers and the progress printer shared by the scenarios and
the command line.
"""

import math
from typing import Optional

from .constants import EMOJI


def format_number(num: int) -> str:
    """Format a number with thousands separators."""
    return f"{num:,}"


def format_duration(seconds: float) -> str:
    """Format a duration as 1h02m03s, 2m03s or 3.2s."""
    if seconds < 60:
        return f"{seconds:.1f}s"
    minutes, secs = divmod(int(round(seconds)), 60)
    if minutes < 60:
        return f"{minutes}m{secs:02d}s"
    hours, minutes = divmod(minutes, 60)
    return f"{hours}h{minutes:02d}m{secs:02d}s"


def format_loss(value: float) -> str:
    if value is None or not math.isfinite(value):
        return str(value)
    return f"{value:.3e}"


class Progress:
    """Icon-prefixed progress lines, silenced when ``enabled`` is False."""

    def __init__(self, enabled: bool = True):
        self.enabled = enabled

    def say(self, message: str, icon: Optional[str] = None, indent: int = 0) -> None:
        if not self.enabled:
            return
        prefix = f"{EMOJI[icon]} " if icon else ""
        print(f"{'  ' * indent}{prefix}{message}")

    def warn(self, message: str) -> None:
        # Warnings are printed even in quiet mode
        print(f"  {EMOJI['warning']}  {message}")

    def step(self, index: int, total: int, t: float, loss: float,
             iterations: int, reason: str) -> None:
        self.say(
            f"step {index + 1}/{total}  t={t:.4g}  loss={format_loss(loss)}  "
            f"iters={format_number(iterations)}  ({reason})",
            icon="clock", indent=1,
        )
