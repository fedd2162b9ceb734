from dataclasses import dataclass, asdict
from typing import Any, Dict, List, Optional, Tuple
import json

import numpy as np

@dataclass(frozen=True)
class RoundRecord:
    """Per-round trace of one agent"""
    t: int
    phase: str
    items: Tuple[int, ...]
    position: int
    inst_regret: float
    sigma_sq: float
    kappa_star: float
    elapsed: float
    kappa_floor: float = 0.0
    alpha_hat: Optional[float] = None

class RunHistory:
    """Round records of one (replica, algorithm) pair"""

    def __init__(self, algorithm: str, replica: int):
        self.algorithm = algorithm
        self.replica = replica
        self.records: List[RoundRecord] = []
        self.stream_hash = ""

    def add_record(self, record: RoundRecord):
        """Append the next round; rounds must arrive in order"""
        expected = len(self.records) + 1
        if record.t != expected:
            raise ValueError(f"Expected round {expected}, got {record.t}")
        self.records.append(record)

    def __len__(self) -> int:
        return len(self.records)

    def cumulative_regret(self) -> np.ndarray:
        return np.cumsum([r.inst_regret for r in self.records])

    def elapsed_ms(self) -> np.ndarray:
        return 1000.0 * np.array([r.elapsed for r in self.records])

    def warmup_flags(self) -> np.ndarray:
        return np.array([r.phase == "warmup" for r in self.records])

    def max_alpha_hat(self) -> Optional[float]:
        values = [r.alpha_hat for r in self.records if r.alpha_hat is not None]
        return max(values) if values else None

    def get_statistics(self) -> Dict[str, Any]:
        """Summary of the run"""
        if not self.records:
            return {"rounds": 0, "cumulative_regret": 0.0, "warmup_rounds": 0}

        kappas = np.array([r.kappa_star for r in self.records])
        return {
            "algorithm": self.algorithm,
            "replica": self.replica,
            "rounds": len(self.records),
            "cumulative_regret": float(self.cumulative_regret()[-1]),
            "warmup_rounds": int(self.warmup_flags().sum()),
            "mean_sigma_sq": float(np.mean([r.sigma_sq for r in self.records])),
            "min_kappa_star": float(kappas.min()),
            "min_kappa_floor": float(min(r.kappa_floor for r in self.records)),
            "mean_round_ms": float(self.elapsed_ms().mean()),
            "max_alpha_hat": self.max_alpha_hat(),
            "stream_hash": self.stream_hash
        }

    def export_records(self) -> str:
        """Export the round trace as JSON"""
        return json.dumps([asdict(r) for r in self.records], indent=2)
