"""
CSV and JSON writers. Floats go out in shortest round-trip form so reruns can
be compared byte for byte.
"""
import logging
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Dict, Optional

import numpy as np
import orjson
import pandas as pd

from simulation.chaos import DivergenceSeries
from simulation.ensemble import SweepResult
from simulation.trajectory import TrajectoryRecord
from spin_cli.version import __version__
from spin_types.errors import ConfigError
from spin_types.types import RootConfig

logger = logging.getLogger(__name__)

SWEEP_COLUMNS = ["mean_theta", "n_up", "n_down", "n_unsettled", "fraction_up", "predicted_up", "residual"]
DIVERGENCE_COLUMNS = ["t", "ln_separation"]


def trajectory_frame(record: TrajectoryRecord) -> pd.DataFrame:
    n = record.final_state.n_sites
    columns = ["t"] + [f"theta_{i}" for i in range(n)] + [f"omega_{i}" for i in range(n)] + ["energy"]
    rows = [np.concatenate(([s.t], s.theta, s.omega, [s.energy])) for s in record.samples]
    data = np.vstack(rows) if rows else np.empty((0, len(columns)))
    return pd.DataFrame(data, columns=columns)


def sweep_frame(result: SweepResult) -> pd.DataFrame:
    frame = pd.DataFrame(
        {
            "mean_theta": [s.mean_theta for s in result.stats],
            "n_up": [s.n_up for s in result.stats],
            "n_down": [s.n_down for s in result.stats],
            "n_unsettled": [s.n_unsettled for s in result.stats],
            "fraction_up": [s.fraction_up for s in result.stats],
            "predicted_up": [s.predicted for s in result.stats],
            "residual": [s.residual for s in result.stats],
        },
        columns=SWEEP_COLUMNS,
    )
    # None -> NaN -> empty cell for angles where every trial was Unsettled
    return frame.astype({"fraction_up": float, "residual": float})


def divergence_frame(series: DivergenceSeries) -> pd.DataFrame:
    return pd.DataFrame({"t": series.times, "ln_separation": series.ln_separation}, columns=DIVERGENCE_COLUMNS)


def read_divergence_csv(path: Path) -> DivergenceSeries:
    """Load a t,ln_separation series, e.g. a fixture or an earlier lyapunov output"""
    try:
        frame = pd.read_csv(path)
    except (OSError, ValueError) as e:
        raise ConfigError(f"{path}: cannot read series: {e}") from e
    missing = [c for c in DIVERGENCE_COLUMNS if c not in frame.columns]
    if missing:
        raise ConfigError(f"{path}: missing column(s) {', '.join(missing)}")
    times = frame["t"].to_numpy(dtype=float)
    values = frame["ln_separation"].to_numpy(dtype=float)
    if times.size and not np.all(np.diff(times) > 0):
        raise ConfigError(f"{path}: t must be strictly increasing")
    if not np.all(np.isfinite(values)):
        raise ConfigError(f"{path}: ln_separation must be finite")
    return DivergenceSeries(times, values)


def write_csv(frame: pd.DataFrame, path: Path) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(path, index=False, lineterminator="\n")
    logger.info(f"Wrote {path}")
    return path


def write_json(payload: Dict[str, Any], path: Path) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(
        orjson.dumps(payload, option=orjson.OPT_INDENT_2 | orjson.OPT_SORT_KEYS | orjson.OPT_SERIALIZE_NUMPY)
        + b"\n"
    )
    logger.info(f"Wrote {path}")
    return path


class Manifest:
    """Command echo, resolved config, version and timing attached to every output set"""

    def __init__(self, command: str, config: RootConfig, arguments: Optional[Dict[str, Any]] = None):
        self.command = command
        self.config = config
        self.arguments = arguments or {}
        self.started_at = datetime.now(timezone.utc)

    def to_dict(self) -> Dict[str, Any]:
        elapsed = (datetime.now(timezone.utc) - self.started_at).total_seconds()
        return {
            "command": self.command,
            "arguments": self.arguments,
            "config": self.config.model_dump(mode="json"),
            "tool_version": __version__,
            "started_at": self.started_at.isoformat(),
            "elapsed_seconds": elapsed,
        }

    def write_resolved_config(self, out_dir: Path) -> Path:
        return write_json(self.config.model_dump(mode="json"), out_dir / "config.resolved.json")
