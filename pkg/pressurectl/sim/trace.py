import logging
from dataclasses import dataclass, field
from typing import List

import numpy as np
import pandas as pd

from pressurectl.util.errors import ConfigError

logger = logging.getLogger(__name__)

BASE_COLUMNS = ["t", "r", "y_m", "y_p", "u", "e1"]


@dataclass
class SimTrace:
    """One row per controller tick."""
    label: str = ""
    dt: float = 0.05
    t: List[float] = field(default_factory=list)
    r: List[float] = field(default_factory=list)
    y_m: List[float] = field(default_factory=list)
    y_p: List[float] = field(default_factory=list)
    u: List[float] = field(default_factory=list)
    e1: List[float] = field(default_factory=list)
    theta: List[np.ndarray] = field(default_factory=list)
    d0: List[float] = field(default_factory=list)
    sat: List[bool] = field(default_factory=list)
    aborted: bool = False
    diagnostic: str = ""

    def append(self, t: float, r: float, y_m: float, y_p: float, u: float, e1: float,
               theta: np.ndarray, d0: float, sat: bool) -> None:
        self.t.append(t)
        self.r.append(r)
        self.y_m.append(y_m)
        self.y_p.append(y_p)
        self.u.append(u)
        self.e1.append(e1)
        self.theta.append(np.asarray(theta, dtype=float).copy())
        self.d0.append(d0)
        self.sat.append(bool(sat))

    def __len__(self) -> int:
        return len(self.t)

    def column(self, name: str) -> np.ndarray:
        if name.startswith("theta_"):
            return self.theta_matrix()[:, int(name.split("_", 1)[1])]
        return np.asarray(getattr(self, name), dtype=float)

    def theta_matrix(self) -> np.ndarray:
        if not self.theta:
            return np.zeros((0, 0))
        return np.vstack(self.theta)

    def theta_norms(self) -> np.ndarray:
        mat = self.theta_matrix()
        return np.linalg.norm(mat, axis=1) if mat.size else np.zeros(0)

    def total_variation(self, name: str = "u") -> float:
        return float(np.sum(np.abs(np.diff(self.column(name)))))

    def peak_abs(self, name: str = "e1") -> float:
        values = self.column(name)
        return float(np.max(np.abs(values))) if values.size else 0.0

    def to_frame(self) -> pd.DataFrame:
        data = {name: getattr(self, name) for name in BASE_COLUMNS}
        mat = self.theta_matrix()
        for j in range(mat.shape[1] if mat.size else 0):
            data[f"theta_{j}"] = mat[:, j]
        data["d0"] = self.d0
        data["sat"] = [int(s) for s in self.sat]
        return pd.DataFrame(data)

    def to_csv(self, path: str) -> None:
        self.to_frame().to_csv(path, index=False, float_format="%.10g")
        logger.info("TRACE_WRITE path=%s rows=%d aborted=%s", path, len(self), self.aborted)

    @classmethod
    def from_csv(cls, path: str, label: str = "") -> "SimTrace":
        frame = pd.read_csv(path)
        missing = [c for c in BASE_COLUMNS + ["d0", "sat"] if c not in frame.columns]
        if missing:
            raise ConfigError(f"trace is missing columns {missing}", path=path)
        theta_cols = sorted((c for c in frame.columns if c.startswith("theta_")), key=lambda c: int(c[6:]))
        trace = cls(label=label)
        if len(frame) > 1:
            trace.dt = float(frame["t"].iloc[1] - frame["t"].iloc[0])
        thetas = frame[theta_cols].to_numpy(dtype=float) if theta_cols else np.zeros((len(frame), 0))
        for i, row in enumerate(frame.itertuples(index=False)):
            trace.append(row.t, row.r, row.y_m, row.y_p, row.u, row.e1, thetas[i], row.d0, bool(row.sat))
        return trace
