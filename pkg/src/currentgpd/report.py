"""Machine-readable certificates and check records.

Certificates are first-class values: the negative results (winding
obstruction, equicontinuity failure, chart-component obstruction) are the
sharpest computable content and must survive serialization.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field


def _plain(obj):
    """Recursively convert numpy scalars/arrays to JSON-safe values."""
    import numpy as np
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_plain(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    return obj


@dataclass
class Certificate:
    kind: str
    inputs: dict
    witness_data: dict
    verdict: str
    max_residual: float

    def to_dict(self):
        return {
            "kind": self.kind,
            "inputs": _plain(self.inputs),
            "witness_data": _plain(self.witness_data),
            "verdict": self.verdict,
            "max_residual": float(self.max_residual),
        }

    def to_json(self, **kwargs):
        kwargs.setdefault("sort_keys", True)
        return json.dumps(self.to_dict(), **kwargs)


@dataclass
class CheckRecord:
    check_name: str
    paper_anchor: str
    status: str              # "pass" | "fail" | "obstructed-as-expected"
    max_residual: float
    n_samples: int
    seed: int
    wall_time_ms: float = 0.0
    details: dict = field(default_factory=dict)
    certificates: list = field(default_factory=list)

    def to_dict(self):
        out = {
            "check_name": self.check_name,
            "paper_anchor": self.paper_anchor,
            "status": self.status,
            "max_residual": float(self.max_residual),
            "n_samples": int(self.n_samples),
            "seed": int(self.seed),
            "wall_time_ms": float(self.wall_time_ms),
        }
        if self.details:
            out["details"] = _plain(self.details)
        if self.certificates:
            out["certificates"] = [c.to_dict() for c in self.certificates]
        return out
