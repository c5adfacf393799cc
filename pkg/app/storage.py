"""
Persistence of run artifacts: CSV tables, run manifests and network checkpoints.
"""

import json
import logging
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from app.config import settings
from app.exceptions import ConfigError, ShapeError
from app.models.net import ShallowNet

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]


def _fmt() -> str:
    return f"%.{settings.csv_precision}g"


def write_csv(path: PathLike, columns: Dict[str, np.ndarray]) -> Path:
    """Write equal-length columns with a header row; values use full precision."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    arrays = [np.asarray(col, dtype=float).reshape(-1) for col in columns.values()]
    lengths = {a.size for a in arrays}
    if len(lengths) != 1:
        raise ShapeError(f"CSV columns have different lengths: {sorted(lengths)}")
    np.savetxt(path, np.column_stack(arrays), fmt=_fmt(), delimiter=",", header=",".join(columns), comments="")
    logger.info(f"Wrote {path} ({arrays[0].size} rows, {len(arrays)} columns)")
    return path


def read_csv(path: PathLike) -> Tuple[List[str], np.ndarray]:
    """Read a headed numeric CSV into (column names, (rows, cols) array)."""
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"no such file: {path}")
    with path.open() as handle:
        names = handle.readline().strip().split(",")
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    if data.shape[1] != len(names):
        raise ShapeError(f"{path}: header has {len(names)} names but rows have {data.shape[1]} values")
    return names, data


def write_manifest(path: PathLike, manifest: dict) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    logger.info(f"Wrote manifest {path}")
    return path


def save_checkpoint(path: PathLike, net: ShallowNet, family: str, seed: Optional[int] = None) -> Path:
    """
    Header lines ``L=``, ``d=``, ``seed=``, ``family=`` followed by one value per line
    in block order w_in (row-major), b_in, w_out, b_out.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    seed = net.seed if seed is None else seed
    header = [f"L={net.hidden}", f"d={net.dim}", f"seed={'' if seed is None else seed}", f"family={family}"]
    values = [_fmt() % v for v in net.flat()]
    path.write_text("\n".join(header + values) + "\n")
    return path


def load_checkpoint(path: PathLike) -> Tuple[ShallowNet, str]:
    lines = Path(path).read_text().splitlines()
    if len(lines) < 4:
        raise ConfigError(f"{path}: truncated checkpoint header")
    fields = dict(line.split("=", 1) for line in lines[:4])
    hidden, dim = int(fields["L"]), int(fields["d"])
    seed = int(fields["seed"]) if fields["seed"] else None
    flat = np.array([float(v) for v in lines[4:]])
    expected = hidden * dim + 2 * hidden + 1
    if flat.size != expected:
        raise ShapeError(f"{path}: expected {expected} values for L={hidden} d={dim}, got {flat.size}")
    w_in = flat[: hidden * dim].reshape(hidden, dim)
    b_in = flat[hidden * dim : hidden * dim + hidden]
    w_out = flat[hidden * dim + hidden : hidden * dim + 2 * hidden]
    return ShallowNet(w_in, b_in, w_out, flat[-1], seed=seed), fields["family"]


def cost_columns(histories: Sequence[Tuple[str, np.ndarray]]) -> Dict[str, np.ndarray]:
    """Iteration column plus one cost column per estimator."""
    if not histories:
        return {}
    iters = max(h.size for _, h in histories)
    columns = {"iteration": np.arange(1, iters + 1, dtype=float)}
    for name, history in histories:
        padded = np.full(iters, np.nan)
        padded[: history.size] = history
        columns[name] = padded
    return columns
