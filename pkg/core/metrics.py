from __future__ import annotations

from collections import Counter
from threading import Lock
from typing import Any


class MetricsRegistry:
    def __init__(self) -> None:
        self._counters: Counter[str] = Counter()
        self._lock = Lock()

    @staticmethod
    def _key(name: str, labels: dict[str, Any] | None = None) -> str:
        if not labels:
            return name
        parts = ",".join(f"{k}={labels[k]}" for k in sorted(labels))
        return f"{name}|{parts}"

    def inc(self, name: str, value: int = 1, labels: dict[str, Any] | None = None) -> None:
        with self._lock:
            self._counters[self._key(name, labels)] += value

    def get(self, name: str, labels: dict[str, Any] | None = None) -> int:
        return self._counters.get(self._key(name, labels), 0)

    def snapshot(self) -> dict[str, int]:
        with self._lock:
            return dict(sorted(self._counters.items()))

