"""Lyapunov spectra of flat bundles over the geodesic flow on Gamma(2)\\H.

The cocycle uses the constant norm: a fiber vector keeps its Euclidean
coordinates while the basepoint stays in the fundamental domain, and picks up
``rho(gamma)`` whenever the frame is pulled back by ``gamma``.  Exponents come
from Benettin-style re-orthonormalization of a full fiber frame.

Trajectories are independent.  Trajectory ``i`` draws its starting direction
from a PCG64 stream seeded with ``splitmix64(seed, i)``; aggregation is
ordered by trajectory index, so results do not depend on the worker count.
"""

from __future__ import annotations

import hashlib
import json
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import _kernel
from .errors import CorruptSnapshot, InvalidParams, NonTermination, NotIntegrable, PrecisionAlarm
from .hodge import main_bound
from .monodromy import ASSIGNMENTS, MonodromyRep, check_nonexpanding, float_generators

log = logging.getLogger(__name__)

SNAPSHOT_FORMAT = "hyperlyap-snapshot"
SNAPSHOT_VERSION = 1
DEFAULT_CHUNK = 250_000

_MASK64 = (1 << 64) - 1


def splitmix64(seed: int, index: int) -> int:
    z = (seed + (index + 1) * 0x9E3779B97F4A7C15) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def trajectory_rng(seed: int, index: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(splitmix64(seed, index)))


@dataclass(frozen=True)
class SimulationConfig:
    dt: float = 0.1
    steps: int = 2_000_000
    burn_in: int = 10_000
    qr_interval: int = 10
    trajectories: int = 8
    seed: int = 0
    y_guard: float = 1e-12
    assignment: tuple[str, str] = ("0", "1")

    def __post_init__(self):
        object.__setattr__(self, "assignment", tuple(self.assignment))
        if not 0 < self.dt <= 1:
            raise InvalidParams(f"dt must lie in (0, 1], got {self.dt}")
        if self.qr_interval < 1:
            raise InvalidParams("qr_interval must be >= 1")
        if not 0 <= self.burn_in < self.steps:
            raise InvalidParams("need 0 <= burn_in < steps")
        if self.trajectories < 1:
            raise InvalidParams("need at least one trajectory")
        if not 0 < self.y_guard < 1:
            raise InvalidParams("y_guard must lie in (0, 1)")
        if self.assignment not in ASSIGNMENTS:
            raise InvalidParams(f"assignment must be one of {ASSIGNMENTS}")
        if not 0 <= self.seed <= _MASK64:
            raise InvalidParams("seed must be a 64-bit unsigned integer")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["assignment"] = list(self.assignment)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> SimulationConfig:
        return cls(**d)


@dataclass
class CocycleState:
    index: int
    frame: np.ndarray  # (a, b, c, d)
    B: np.ndarray
    logsums: np.ndarray
    step: int = 0
    rng_state: dict = field(default_factory=dict)

    def elapsed(self, cfg: SimulationConfig) -> float:
        return max(0, self.step - cfg.burn_in) * cfg.dt


@dataclass
class LyapunovEstimate:
    lambdas: tuple[float, ...]
    stderr: tuple[float, ...]
    total_time: float
    symmetry_defect: float
    per_trajectory: tuple[tuple[float, ...], ...]

    def to_dict(self) -> dict:
        return {
            "lambda": list(self.lambdas),
            "stderr": list(self.stderr),
            "total_time": self.total_time,
            "symmetry_defect": self.symmetry_defect,
            "per_trajectory": [list(v) for v in self.per_trajectory],
        }


@dataclass
class EngineState:
    """Everything needed to continue an interrupted estimate."""

    config: SimulationConfig
    fingerprint: str
    realified: bool
    trajectories: list[CocycleState]


def _fingerprint(gens: np.ndarray) -> str:
    return hashlib.sha256(np.ascontiguousarray(gens, dtype=np.float64).tobytes()).hexdigest()


def _prepare(rep: MonodromyRep, cfg: SimulationConfig) -> tuple[np.ndarray, bool]:
    spectrum = check_nonexpanding(rep)
    if not spectrum.non_expanding:
        raise NotIntegrable(
            "cusp monodromy has eigenvalues off the unit circle; the cocycle is not "
            f"integrable (moduli: {spectrum.moduli})"
        )
    return float_generators(rep, cfg.assignment)


def init_state(index: int, dim: int, rng: np.random.Generator) -> CocycleState:
    """Start at i with a uniformly random direction; fiber frame = identity."""
    theta = rng.uniform(0.0, 2.0 * math.pi)
    co, si = math.cos(theta), math.sin(theta)
    return CocycleState(
        index=index,
        frame=np.array([co, -si, si, co]),
        B=np.eye(dim),
        logsums=np.zeros(dim),
        step=0,
        rng_state=rng.bit_generator.state,
    )


def advance_state(state: CocycleState, gens: np.ndarray, cfg: SimulationConfig, nsteps: int) -> CocycleState:
    nsteps = min(nsteps, cfg.steps - state.step)
    if nsteps <= 0:
        return state
    work = _kernel.new_work(state.B.shape[0])
    step, status = _kernel.advance(
        state.frame, state.B, state.logsums, gens, state.step, nsteps,
        cfg.burn_in, cfg.steps, cfg.qr_interval, cfg.dt, cfg.y_guard, work,
    )
    state.step = int(step)
    if status == _kernel.STATUS_PRECISION:
        raise PrecisionAlarm(
            f"trajectory {state.index}: basepoint left [{cfg.y_guard:g}, {1 / cfg.y_guard:g}] "
            f"at step {state.step}"
        )
    if status == _kernel.STATUS_NONTERMINATION:
        raise NonTermination(f"trajectory {state.index}: domain reduction did not terminate at step {state.step}")
    return state


def _collapse(values: np.ndarray, realified: bool) -> np.ndarray:
    values = np.sort(values)[::-1]
    if realified:
        values = values.reshape(-1, 2).mean(axis=1)
    return values


def state_exponents(state: CocycleState, cfg: SimulationConfig, realified: bool) -> np.ndarray:
    elapsed = state.elapsed(cfg)
    if elapsed <= 0:
        raise InvalidParams("no post-burn-in time accumulated")
    return _collapse(state.logsums / elapsed, realified)


def run_trajectory(rep: MonodromyRep, cfg: SimulationConfig, rng: np.random.Generator, index: int = 0) -> np.ndarray:
    """Exponents of one trajectory, sorted descending."""
    gens, realified = _prepare(rep, cfg)
    state = init_state(index, gens.shape[1], rng)
    advance_state(state, gens, cfg, cfg.steps)
    return state_exponents(state, cfg, realified)


def symmetry_defect(e) -> float:
    lambdas = e.lambdas if isinstance(e, LyapunovEstimate) else tuple(e)
    r = len(lambdas)
    return max((abs(lambdas[i] + lambdas[r - 1 - i]) for i in range(r)), default=0.0)


def aggregate(per_trajectory: list[np.ndarray], total_time: float) -> LyapunovEstimate:
    data = np.array(per_trajectory)
    n = data.shape[0]
    lambdas = data.mean(axis=0)
    if n > 1:
        stderr = data.std(axis=0, ddof=1) / math.sqrt(n)
    else:
        stderr = np.zeros(data.shape[1])
    lam = tuple(float(v) for v in lambdas)
    return LyapunovEstimate(
        lambdas=lam,
        stderr=tuple(float(v) for v in stderr),
        total_time=total_time,
        symmetry_defect=symmetry_defect(lam),
        per_trajectory=tuple(tuple(float(v) for v in row) for row in data),
    )


def new_engine(rep: MonodromyRep, cfg: SimulationConfig) -> tuple[EngineState, np.ndarray]:
    gens, realified = _prepare(rep, cfg)
    states = [init_state(i, gens.shape[1], trajectory_rng(cfg.seed, i)) for i in range(cfg.trajectories)]
    return EngineState(cfg, _fingerprint(gens), realified, states), gens


def checkpoint(engine: EngineState) -> dict:
    return {
        "format": SNAPSHOT_FORMAT,
        "version": SNAPSHOT_VERSION,
        "config": engine.config.to_dict(),
        "fingerprint": engine.fingerprint,
        "realified": engine.realified,
        "trajectories": [
            {
                "index": s.index,
                "step": s.step,
                "frame": s.frame.tolist(),
                "B": s.B.tolist(),
                "logsums": s.logsums.tolist(),
                "rng_state": s.rng_state,
            }
            for s in engine.trajectories
        ],
    }


def resume(snapshot: dict) -> EngineState:
    try:
        if snapshot.get("format") != SNAPSHOT_FORMAT:
            raise CorruptSnapshot(f"not a snapshot: format={snapshot.get('format')!r}")
        if snapshot.get("version") != SNAPSHOT_VERSION:
            raise CorruptSnapshot(f"unsupported snapshot version {snapshot.get('version')!r}")
        cfg = SimulationConfig.from_dict(snapshot["config"])
        states = [
            CocycleState(
                index=int(t["index"]),
                frame=np.array(t["frame"], dtype=np.float64),
                B=np.array(t["B"], dtype=np.float64),
                logsums=np.array(t["logsums"], dtype=np.float64),
                step=int(t["step"]),
                rng_state=t["rng_state"],
            )
            for t in snapshot["trajectories"]
        ]
        engine = EngineState(cfg, str(snapshot["fingerprint"]), bool(snapshot["realified"]), states)
    except CorruptSnapshot:
        raise
    except (KeyError, TypeError, ValueError, AttributeError) as exc:
        raise CorruptSnapshot(f"malformed snapshot: {exc}") from None
    if [s.index for s in states] != list(range(cfg.trajectories)):
        raise CorruptSnapshot("trajectory list does not match the configuration")
    dims = {s.B.shape for s in states} | {(len(s.logsums),) * 2 for s in states}
    if len(dims) != 1 or any(s.frame.shape != (4,) for s in states):
        raise CorruptSnapshot("inconsistent state shapes")
    return engine


def save_snapshot(engine: EngineState, path) -> None:
    path = Path(path)
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_text(json.dumps(checkpoint(engine)))
    tmp.replace(path)


def load_snapshot(path) -> EngineState:
    try:
        data = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise CorruptSnapshot(f"cannot read snapshot {path}: {exc}") from None
    return resume(data)


def run_engine(engine: EngineState, gens: np.ndarray, threads: int = 1, on_chunk=None,
               chunk_steps: int = DEFAULT_CHUNK, stop_after_chunks: int | None = None) -> LyapunovEstimate | None:
    """Drive every trajectory to completion in chunks.

    ``on_chunk(engine)`` runs after every chunk (used for checkpointing).
    ``stop_after_chunks`` interrupts the run early and returns None.
    """
    cfg = engine.config
    if _fingerprint(gens) != engine.fingerprint:
        raise CorruptSnapshot("snapshot was taken for a different representation")
    chunks = 0
    pool = ThreadPoolExecutor(max_workers=threads) if threads > 1 else None
    try:
        while any(s.step < cfg.steps for s in engine.trajectories):
            pending = [s for s in engine.trajectories if s.step < cfg.steps]
            if pool is None:
                for s in pending:
                    advance_state(s, gens, cfg, chunk_steps)
            else:
                list(pool.map(lambda s: advance_state(s, gens, cfg, chunk_steps), pending))
            chunks += 1
            if on_chunk is not None:
                on_chunk(engine)
            if stop_after_chunks is not None and chunks >= stop_after_chunks:
                return None
    finally:
        if pool is not None:
            pool.shutdown()
    per = [state_exponents(s, cfg, engine.realified) for s in engine.trajectories]
    total = sum(s.elapsed(cfg) for s in engine.trajectories)
    return aggregate(per, total)


def estimate(rep: MonodromyRep, cfg: SimulationConfig | None = None, threads: int = 1,
             checkpoint_path=None, resume_from=None, chunk_steps: int = DEFAULT_CHUNK) -> LyapunovEstimate:
    cfg = cfg or SimulationConfig()
    gens, _ = _prepare(rep, cfg)
    if resume_from is not None:
        engine = resume_from if isinstance(resume_from, EngineState) else load_snapshot(resume_from)
        if engine.config != cfg:
            raise CorruptSnapshot("snapshot configuration differs from the requested one")
    else:
        engine, gens = new_engine(rep, cfg)
    on_chunk = None
    if checkpoint_path is not None:
        def on_chunk(eng):
            save_snapshot(eng, checkpoint_path)
    result = run_engine(engine, gens, threads=threads, on_chunk=on_chunk, chunk_steps=chunk_steps)
    log.debug("estimate for %s: %s", rep.name, result.lambdas)
    return result


@dataclass(frozen=True)
class BoundComparison:
    k: int
    bound: float
    bound_exact: Fraction
    partial_sum: float
    slack: float


def compare_bound(e: LyapunovEstimate, k: int, deg_par, g: int = 0, cusps: int = 3) -> BoundComparison:
    if not 1 <= k <= len(e.lambdas):
        raise InvalidParams(f"k must lie in 1..{len(e.lambdas)}")
    exact = main_bound(deg_par, g, cusps)
    partial = float(sum(e.lambdas[:k]))
    return BoundComparison(k, float(exact), exact, partial, partial - float(exact))
