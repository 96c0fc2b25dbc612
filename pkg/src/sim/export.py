"""
Trajectory Export

Delimited-text output of a trajectory and the reverse import used by the
audit command. Column order:

    trajectory.csv: t, j, x0..x{n-1}, z0..z{m-1}, xhat0.., zhat0.., V, V1, V2, sigma
    events.csv:     t, j, agent, causes

`sigma` is a 0/1 string over the n primal components; `causes` joins cause
codes with commas in the order E, ZERO, SIGMA, REQUEST, SEND, SYNCH.
"""

import logging
from pathlib import Path
from typing import Tuple

import numpy as np
import pandas as pd

from src.errors import ProblemFormatError
from src.sim.trajectory import BroadcastEvent, HybridTime, HybridTrajectory, Sample, SampleKind

logger = logging.getLogger(__name__)

TRAJECTORY_FILE = "trajectory.csv"
EVENTS_FILE = "events.csv"
FLOAT_FORMAT = "%.17g"


def write_trajectory(traj: HybridTrajectory, out_dir: Path) -> Tuple[Path, Path]:
    """Write trajectory.csv and events.csv into out_dir (created if missing)."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    samples_path = out_dir / TRAJECTORY_FILE
    events_path = out_dir / EVENTS_FILE
    traj.samples_frame().to_csv(samples_path, index=False, float_format=FLOAT_FORMAT)
    traj.events_frame().to_csv(events_path, index=False, float_format=FLOAT_FORMAT)
    logger.info(f"wrote {len(traj.samples)} samples and {len(traj.events)} events to {out_dir}")
    return samples_path, events_path


def _columns(frame: pd.DataFrame, prefix: str) -> list:
    cols = []
    k = 0
    while f"{prefix}{k}" in frame.columns:
        cols.append(f"{prefix}{k}")
        k += 1
    return cols


def load_trajectory(run_dir: Path) -> HybridTrajectory:
    """
    Rebuild a trajectory from a run directory.

    Bookkeeping clocks and request flags are not exported; they come back as
    fresh values. Samples whose j exceeds the previous one are marked as jumps.

    Raises:
        ProblemFormatError: if the files are missing or malformed
    """
    run_dir = Path(run_dir)
    try:
        frame = pd.read_csv(run_dir / TRAJECTORY_FILE, dtype={"sigma": str})
        events = pd.read_csv(run_dir / EVENTS_FILE, dtype={"causes": str})
    except (OSError, pd.errors.ParserError, pd.errors.EmptyDataError) as exc:
        raise ProblemFormatError(f"cannot read trajectory from {run_dir}: {exc}") from exc

    x_cols, z_cols = _columns(frame, "x"), _columns(frame, "z")
    xh_cols, zh_cols = _columns(frame, "xhat"), _columns(frame, "zhat")
    if {"t", "j"} - set(frame.columns) or len(xh_cols) != len(x_cols) or len(zh_cols) != len(z_cols):
        raise ProblemFormatError(f"{run_dir / TRAJECTORY_FILE}: unexpected columns {list(frame.columns)}")

    n, m = len(x_cols), len(z_cols)
    traj = HybridTrajectory(n=n, m=m)
    X = frame[x_cols].to_numpy(dtype=float)
    Z = frame[z_cols].to_numpy(dtype=float).reshape(len(frame), m)
    X_hat = frame[xh_cols].to_numpy(dtype=float)
    Z_hat = frame[zh_cols].to_numpy(dtype=float).reshape(len(frame), m)
    times = frame["t"].to_numpy(dtype=float)
    jumps = frame["j"].to_numpy(dtype=int)

    for k in range(len(frame)):
        if k == 0:
            kind = SampleKind.INIT
        elif jumps[k] > jumps[k - 1]:
            kind = SampleKind.JUMP
        elif k == len(frame) - 1:
            kind = SampleKind.END
        else:
            kind = SampleKind.CADENCE
        traj.samples.append(Sample(
            time=HybridTime(float(times[k]), int(jumps[k])),
            kind=kind,
            x=X[k], z=Z[k], x_hat=X_hat[k], z_hat=Z_hat[k],
            s=np.zeros(n + m), r=-np.ones(n + m), q=frozenset(),
            fired=np.zeros(n + m, dtype=bool),
        ))

    for row in events.itertuples(index=False):
        traj.events.append(BroadcastEvent(float(row.t), int(row.j), int(row.agent), str(row.causes)))
    seen = set()
    for ev in traj.events:
        if (ev.t, ev.j) not in seen:
            seen.add((ev.t, ev.j))
            traj.jump_times.append(ev.t)
    return traj
