"""Counters that drive every comparison in the benchmark harness.

Wall-clock time is recorded but never asserted on; the reproducible
signals are the expansion/hit counters and the modeled byte sizes.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass


@dataclass
class Metrics:
    public_hit: int = 0
    private_hit: int = 0
    otf_expansion: int = 0
    frames: int = 0
    decode_seconds: float = 0.0
    bytes_private: int = 0

    def snapshot(self) -> "Metrics":
        return dataclasses.replace(self)

    def delta(self, before: "Metrics") -> "Metrics":
        """Counters accumulated since `before` was snapshotted."""
        return Metrics(
            public_hit=self.public_hit - before.public_hit,
            private_hit=self.private_hit - before.private_hit,
            otf_expansion=self.otf_expansion - before.otf_expansion,
            frames=self.frames - before.frames,
            decode_seconds=self.decode_seconds - before.decode_seconds,
            bytes_private=self.bytes_private,
        )

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)
