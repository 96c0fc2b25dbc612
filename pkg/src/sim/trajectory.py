"""
Hybrid Trajectory

Samples of the extended state on a hybrid time domain together with the
broadcast log and the persistence/Zeno flags set by the executor.
"""

from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, FrozenSet, List, Optional, Tuple

import numpy as np
import pandas as pd

from src.dynamics.flow import active_mask, flow_f_batch
from src.dynamics.lyapunov import SaddleReference, default_penalty, lyapunov_batch, penalty_bound
from src.lp.problem import StandardLP
from src.triggers.state import NetworkState

PERSISTENCE_RECURRENCES = 10
DWELL_THRESHOLD = 1e-9


@dataclass(frozen=True, order=True)
class HybridTime:
    t: float
    j: int


class SampleKind(str, Enum):
    INIT = "init"
    JUMP = "jump"
    CADENCE = "sample"
    BREAKPOINT = "breakpoint"
    END = "end"


class Persistence(str, Enum):
    PFI = "PFi"
    PFII = "PFii"
    UNDETERMINED = "undetermined"


@dataclass(frozen=True)
class PersistenceWitness:
    kind: Persistence
    tau_p: Optional[float] = None

    def __str__(self) -> str:
        if self.kind is Persistence.PFII:
            return f"PFii(tau_P={self.tau_p:.6g})"
        return self.kind.value


@dataclass(frozen=True)
class BroadcastEvent:
    t: float
    j: int
    agent: int
    causes: str


@dataclass(eq=False)
class Sample:
    """Snapshot of the extended state; `fired` marks agents that broadcast in the jump that produced it."""

    time: HybridTime
    kind: SampleKind
    x: np.ndarray
    z: np.ndarray
    x_hat: np.ndarray
    z_hat: np.ndarray
    s: np.ndarray
    r: np.ndarray
    q: FrozenSet[Tuple[int, int]]
    fired: np.ndarray


@dataclass(eq=False)
class Diagnostics:
    """Per-sample V1, V2 and active sets, evaluated once after the run."""

    v1: np.ndarray
    v2: np.ndarray
    sigma: np.ndarray
    sigma_hat: np.ndarray
    f: np.ndarray

    @property
    def v(self) -> np.ndarray:
        return self.v1 + self.v2


@dataclass(eq=False)
class HybridTrajectory:
    n: int
    m: int
    samples: List[Sample] = field(default_factory=list)
    events: List[BroadcastEvent] = field(default_factory=list)
    jump_times: List[float] = field(default_factory=list)
    zeno_suspected: bool = False
    truncated: bool = False
    final_dt_inf: bool = False
    noise_enabled: bool = False
    persistence: PersistenceWitness = PersistenceWitness(Persistence.UNDETERMINED)
    diagnostics: Optional[Diagnostics] = None
    saddle: Optional[SaddleReference] = None

    def record(self, t: float, j: int, state: NetworkState, kind: SampleKind,
               fired: Optional[np.ndarray] = None) -> None:
        if fired is None:
            fired = np.zeros(self.n + self.m, dtype=bool)
        self.samples.append(Sample(
            time=HybridTime(float(t), int(j)),
            kind=SampleKind(kind),
            x=state.x.copy(),
            z=state.z.copy(),
            x_hat=state.hat.x_hat.copy(),
            z_hat=state.hat.z_hat.copy(),
            s=state.book.s.copy(),
            r=state.book.r.copy(),
            q=state.book.q,
            fired=fired,
        ))

    def log_jump(self, t: float, j: int, codes: Dict[int, str]) -> None:
        self.jump_times.append(float(t))
        for agent in sorted(codes):
            self.events.append(BroadcastEvent(float(t), int(j), int(agent), codes[agent]))

    @property
    def t(self) -> np.ndarray:
        return np.array([s.time.t for s in self.samples])

    @property
    def j(self) -> np.ndarray:
        return np.array([s.time.j for s in self.samples], dtype=int)

    @property
    def kinds(self) -> List[SampleKind]:
        return [s.kind for s in self.samples]

    def _stack(self, name: str, width: int) -> np.ndarray:
        if not self.samples:
            return np.zeros((0, width))
        return np.vstack([getattr(s, name) for s in self.samples])

    @property
    def X(self) -> np.ndarray:
        return self._stack("x", self.n)

    @property
    def Z(self) -> np.ndarray:
        return self._stack("z", self.m)

    @property
    def X_hat(self) -> np.ndarray:
        return self._stack("x_hat", self.n)

    @property
    def Z_hat(self) -> np.ndarray:
        return self._stack("z_hat", self.m)

    @property
    def final(self) -> Sample:
        return self.samples[-1]

    @property
    def t_end(self) -> float:
        return self.samples[-1].time.t if self.samples else 0.0

    @property
    def n_jumps(self) -> int:
        return len(self.jump_times)

    def attach_diagnostics(self, lp: StandardLP, saddle: Optional[SaddleReference]) -> Diagnostics:
        """Evaluate V1, V2, sigma(x, z) and sigma(x_hat, z_hat) for all samples."""
        X, Z = self.X, self.Z
        v1, v2, sigma = lyapunov_batch(lp, saddle, X, Z)
        X_hat = self.X_hat
        sigma_hat = active_mask(X_hat, flow_f_batch(lp, X_hat, self.Z_hat))
        self.saddle = saddle
        self.diagnostics = Diagnostics(v1=v1, v2=v2, sigma=sigma, sigma_hat=sigma_hat, f=flow_f_batch(lp, X, Z))
        return self.diagnostics

    def event_instants(self) -> np.ndarray:
        """Distinct jump times; same-instant cascades count once."""
        return np.unique(np.asarray(self.jump_times, dtype=float))

    def flow_lengths(self) -> np.ndarray:
        """Lengths of flow intervals between distinct event instants, final flow included."""
        instants = self.event_instants()
        edges = np.concatenate(([0.0], instants, [self.t_end]))
        lengths = np.diff(edges)
        return lengths[lengths > 0.0]

    def final_flow_length(self) -> float:
        last = self.jump_times[-1] if self.jump_times else 0.0
        return self.t_end - last

    def min_inter_event_time(self) -> float:
        """Smallest positive gap between distinct event instants (inf with fewer than two)."""
        gaps = np.diff(self.event_instants())
        return float(gaps.min()) if gaps.size else np.inf

    def classify_persistence(self) -> PersistenceWitness:
        """
        PFi when the run ends in a flow with no event ahead that lasted longer
        than the dwell threshold; otherwise PFii with tau_P the largest flow
        length recurring PERSISTENCE_RECURRENCES times, if there are enough flows.
        """
        if self.final_dt_inf and self.final_flow_length() > DWELL_THRESHOLD:
            self.persistence = PersistenceWitness(Persistence.PFI)
        else:
            lengths = np.sort(self.flow_lengths())[::-1]
            if lengths.size >= PERSISTENCE_RECURRENCES:
                tau_p = float(lengths[PERSISTENCE_RECURRENCES - 1])
                self.persistence = PersistenceWitness(Persistence.PFII, tau_p)
            else:
                self.persistence = PersistenceWitness(Persistence.UNDETERMINED)
        return self.persistence

    def zero_event_separation(self) -> float:
        """delta_P: minimum time between consecutive ZERO broadcasts of the same agent."""
        last: Dict[int, float] = {}
        best = np.inf
        for ev in self.events:
            if "ZERO" not in ev.causes.split(","):
                continue
            if ev.agent in last:
                best = min(best, ev.t - last[ev.agent])
            last[ev.agent] = ev.t
        return float(best)

    def cause_counts(self) -> Dict[str, int]:
        counts: Dict[str, int] = {}
        for ev in self.events:
            for code in ev.causes.split(","):
                counts[code] = counts.get(code, 0) + 1
        return dict(sorted(counts.items()))

    def agent_counts(self) -> np.ndarray:
        counts = np.zeros(self.n + self.m, dtype=int)
        for ev in self.events:
            counts[ev.agent] += 1
        return counts

    def broadcast_r2(self) -> float:
        """
        R^2 of a linear fit to cumulative broadcasts over [T/2, T].

        NaN when fewer than three broadcasts fall in the window.
        """
        times = np.array([ev.t for ev in self.events])
        half = 0.5 * self.t_end
        window = times >= half
        if window.sum() < 3:
            return float("nan")
        t = times[window]
        cumulative = np.arange(1, times.size + 1)[window].astype(float)
        if np.ptp(t) == 0.0:
            return float("nan")
        slope, intercept = np.polyfit(t, cumulative, 1)
        resid = cumulative - (slope * t + intercept)
        total = np.sum((cumulative - cumulative.mean()) ** 2)
        return float(1.0 - resid @ resid / total) if total > 0.0 else 1.0

    def containment_breaches(self) -> int:
        """Flow samples where sigma(x_hat, z_hat) is not contained in sigma(x, z)."""
        if self.diagnostics is None:
            return 0
        flow = np.array([k in (SampleKind.CADENCE, SampleKind.BREAKPOINT, SampleKind.END) for k in self.kinds])
        if not flow.any():
            return 0
        outside = self.diagnostics.sigma_hat & ~self.diagnostics.sigma
        return int(np.any(outside[flow], axis=1).sum())

    def metrics(self, lp: StandardLP, x_star: Optional[np.ndarray] = None) -> Dict[str, object]:
        """Summary numbers for metrics.txt and the CLI report."""
        X, Z = self.X, self.Z
        k_bar = penalty_bound(lp, X, Z)
        final = self.final
        out: Dict[str, object] = {
            "t_end": self.t_end,
            "jumps": self.n_jumps,
            "broadcasts": len(self.events),
            "event_instants": int(self.event_instants().size),
            "min_inter_event_time": self.min_inter_event_time(),
            "delta_p": self.zero_event_separation(),
            "persistence": str(self.persistence),
            "tau_p": self.persistence.tau_p,
            "zeno_suspected": self.zeno_suspected,
            "truncated": self.truncated,
            "broadcasts_by_cause": self.cause_counts(),
            "broadcasts_by_agent": self.agent_counts().tolist(),
            "broadcast_r2": self.broadcast_r2(),
            "k_bar": k_bar,
            "K": default_penalty(k_bar),
            "containment_breaches": self.containment_breaches(),
            "final_x": final.x.tolist(),
            "final_z": final.z.tolist(),
            "min_x": float(X.min(initial=np.inf)) if X.size else 0.0,
        }
        if self.diagnostics is not None:
            out["V_initial"] = float(self.diagnostics.v[0])
            out["V_final"] = float(self.diagnostics.v[-1])
        if x_star is not None:
            x_star = np.asarray(x_star, dtype=float)
            rounded = np.round(final.x)
            out["x_star"] = x_star.tolist()
            out["final_error_inf"] = float(np.abs(final.x - x_star).max(initial=0.0))
            out["rounded_x"] = rounded.tolist()
            out["rounded_matches_oracle"] = bool(np.allclose(rounded, x_star, atol=1e-6))
        return out

    def samples_frame(self) -> pd.DataFrame:
        """One row per sample: t, j, x*, z*, xhat*, zhat*, V, V1, V2, sigma."""
        frame = pd.DataFrame({"t": self.t, "j": self.j})
        for name, block, width in (("x", self.X, self.n), ("z", self.Z, self.m),
                                   ("xhat", self.X_hat, self.n), ("zhat", self.Z_hat, self.m)):
            for k in range(width):
                frame[f"{name}{k}"] = block[:, k]
        if self.diagnostics is not None:
            d = self.diagnostics
            frame["V"] = d.v
            frame["V1"] = d.v1
            frame["V2"] = d.v2
            frame["sigma"] = ["".join("1" if b else "0" for b in row) for row in d.sigma]
        return frame

    def events_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            [(ev.t, ev.j, ev.agent, ev.causes) for ev in self.events],
            columns=["t", "j", "agent", "causes"],
        )
