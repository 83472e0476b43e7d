"""Synthetic, seed-reproducible decode scenarios.

A scenario is a bank of unit-norm key embeddings plus a phase schedule of
planted relevant regions. Per-step queries are the scaled centroid of the
active phase's region plus seeded isotropic noise, so the full-attention
oracle re-anchors onto each phase's region as decoding progresses. Every
operation is a pure function of (config, seed, step).

Config file schema (JSON, all keys shown with defaults)::

    {
      "n_visual": 144, "dim": 64, "steps": 128,
      "beta": 256.0, "sigma": 0.3, "overlap": 0.0,
      "phases": [{"start": 0, "region_size": 8}, ...],
      "seed": 0, "regime": "shifting", "n_text": 0
    }

A phase entry may give an explicit ``"region": [ids...]`` instead of
``region_size``. ``regime`` is optional and validated against the phase
count (static means exactly one phase). ``n_text`` is metadata only and
never participates in attention.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .linalg import AttentionWeights, scaled_dot_attention

# rng sub-stream tags; keeps every draw a pure function of (seed, purpose, step)
_KEYS_STREAM = 0
_REGION_STREAM = 1
_NOISE_STREAM = 2
DETECTOR_STREAM = 3  # consumed by the engine's random detector


@dataclass(frozen=True)
class VisualTokenBank:
    """Unit-normalized key embeddings for token ids 0..n_visual-1."""

    keys: np.ndarray  # (n_visual, dim)

    @property
    def n_visual(self) -> int:
        return int(self.keys.shape[0])

    @property
    def dim(self) -> int:
        return int(self.keys.shape[1])

    @property
    def token_ids(self) -> np.ndarray:
        return np.arange(self.n_visual, dtype=np.int64)


@dataclass(frozen=True)
class Phase:
    start_step: int
    region: np.ndarray  # sorted token ids


@dataclass(frozen=True)
class ScenarioConfig:
    n_visual: int = 144
    dim: int = 64
    steps: int = 128
    beta: float = 256.0
    sigma: float = 0.3
    overlap: float = 0.0
    phases: tuple = (dict(start=0, region_size=8),)
    seed: int = 0
    regime: str | None = None
    n_text: int = 0

    def validate(self) -> None:
        if self.n_visual < 2:
            raise ValueError("n_visual: must be >= 2")
        if self.dim < 2:
            raise ValueError("dim: must be >= 2")
        if self.steps < 1:
            raise ValueError("steps: must be >= 1")
        if self.beta <= 0:
            raise ValueError("beta: must be > 0")
        if self.sigma < 0:
            raise ValueError("sigma: must be >= 0")
        if not 0.0 <= self.overlap < 1.0:
            raise ValueError("overlap: must be in [0, 1)")
        if not self.phases:
            raise ValueError("phases: at least one phase required")
        if self.regime not in (None, "static", "shifting"):
            raise ValueError("regime: must be 'static' or 'shifting'")

    def to_dict(self) -> dict:
        return dict(
            n_visual=self.n_visual,
            dim=self.dim,
            steps=self.steps,
            beta=self.beta,
            sigma=self.sigma,
            overlap=self.overlap,
            phases=[dict(p) for p in self.phases],
            seed=self.seed,
            regime=self.regime,
            n_text=self.n_text,
        )

    @classmethod
    def from_dict(cls, raw: dict) -> "ScenarioConfig":
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(raw) - known
        if unknown:
            raise ValueError(f"scenario config: unknown keys {sorted(unknown)}")
        kwargs = dict(raw)
        if "phases" in kwargs:
            kwargs["phases"] = tuple(dict(p) for p in kwargs["phases"])
        return cls(**kwargs)


class StepQuery(NamedTuple):
    step: int
    query: np.ndarray


@dataclass(frozen=True)
class Scenario:
    """Immutable generated instance; safe for concurrent read."""

    config: ScenarioConfig
    seed: int
    bank: VisualTokenBank
    phases: tuple[Phase, ...] = field(default=())

    @property
    def total_steps(self) -> int:
        return self.config.steps

    @property
    def regime_tag(self) -> str:
        return "static" if len(self.phases) == 1 else "shifting"

    def phase_at(self, step: int) -> Phase:
        active = self.phases[0]
        for p in self.phases:
            if p.start_step <= step:
                active = p
            else:
                break
        return active


def scenario_id(config: ScenarioConfig) -> str:
    """Stable identifier for a scenario family (seed excluded)."""
    payload = config.to_dict()
    payload.pop("seed")
    blob = json.dumps(payload, sort_keys=True)
    return hashlib.sha1(blob.encode()).hexdigest()[:12]


def _build_phases(config: ScenarioConfig, rng: np.random.Generator) -> tuple[Phase, ...]:
    phases: list[Phase] = []
    used: set[int] = set()
    prev_region: np.ndarray | None = None
    last_start = -1
    for entry in config.phases:
        start = int(entry["start"])
        if start <= last_start:
            raise ValueError("phases: start steps must be strictly increasing")
        last_start = start
        if "region" in entry:
            region = np.unique(np.asarray(entry["region"], dtype=np.int64))
            if region.size == 0:
                raise ValueError("phases: region must be non-empty")
            if region.min() < 0 or region.max() >= config.n_visual:
                raise ValueError("phases: region ids out of range")
        else:
            size = int(entry.get("region_size", 0))
            if size < 1:
                raise ValueError("phases: region_size must be >= 1")
            if size > config.n_visual:
                raise ValueError("phases: region_size exceeds n_visual")
            carry = np.empty(0, dtype=np.int64)
            if prev_region is not None and config.overlap > 0.0:
                n_carry = min(int(round(config.overlap * size)), prev_region.size)
                if n_carry > 0:
                    carry = rng.choice(prev_region, size=n_carry, replace=False)
            pool = np.setdiff1d(
                np.arange(config.n_visual, dtype=np.int64), np.fromiter(used, np.int64, len(used))
            )
            n_fresh = size - carry.size
            if n_fresh > pool.size:
                raise ValueError(
                    "phases: not enough unused tokens for disjoint regions"
                )
            fresh = rng.choice(pool, size=n_fresh, replace=False)
            region = np.sort(np.concatenate([carry, fresh]).astype(np.int64))
        phases.append(Phase(start, region))
        used.update(int(i) for i in region)
        prev_region = region
    if phases[0].start_step != 0:
        raise ValueError("phases: phase 0 must start at step 0")
    if phases[-1].start_step >= config.steps:
        raise ValueError("phases: last phase must start before the final step")
    if config.regime == "static" and len(phases) != 1:
        raise ValueError("regime: static requires exactly one phase")
    if config.regime == "shifting" and len(phases) < 2:
        raise ValueError("regime: shifting requires at least two phases")
    return tuple(phases)


def build_scenario(config: ScenarioConfig, seed: int | None = None) -> Scenario:
    """Generate the bank and phase regions for (config, seed).

    Identical inputs produce bit-identical scenarios. Keys are drawn from a
    seeded isotropic normal and unit-normalized; regions default to random
    mutually disjoint subsets (partially shared when overlap > 0).
    """
    config.validate()
    use_seed = config.seed if seed is None else int(seed)
    key_rng = np.random.default_rng([use_seed, _KEYS_STREAM])
    keys = key_rng.standard_normal((config.n_visual, config.dim))
    keys /= np.linalg.norm(keys, axis=1, keepdims=True)
    region_rng = np.random.default_rng([use_seed, _REGION_STREAM])
    phases = _build_phases(config, region_rng)
    return Scenario(config=config, seed=use_seed, bank=VisualTokenBank(keys), phases=phases)


def query_at(scenario: Scenario, step: int) -> StepQuery:
    """Query for `step`: beta * centroid(region of active phase) + sigma * noise.

    Deterministic per (scenario, step); sigma = 0 makes all same-phase
    queries identical.
    """
    if not 0 <= step < scenario.total_steps:
        raise ValueError(f"step {step} out of range [0, {scenario.total_steps})")
    cfg = scenario.config
    region = scenario.phase_at(step).region
    q = cfg.beta * scenario.bank.keys[region].mean(axis=0)
    if cfg.sigma > 0.0:
        noise_rng = np.random.default_rng([scenario.seed, _NOISE_STREAM, step])
        q = q + cfg.sigma * noise_rng.standard_normal(cfg.dim)
    return StepQuery(step, q)


def oracle_attention(scenario: Scenario, step: int) -> AttentionWeights:
    """Ground-truth full attention over all tokens at `step`."""
    q = query_at(scenario, step).query
    return scaled_dot_attention(q, scenario.bank.keys)


def judge_success(scenario: Scenario, trace, rho: float = 0.5) -> bool:
    """True iff at each phase's start step the active set covers the region.

    Coverage means at least rho * |region| of the phase's planted tokens are
    in the active set at that step; step 0 is judged against the prefill
    active set. Phase starts are the moments where a stale set matters, so
    intermediate steps are not judged.
    """
    if not 0.0 < rho <= 1.0:
        raise ValueError("rho: must be in (0, 1]")
    if trace.scenario_seed != scenario.seed:
        raise ValueError("trace/scenario mismatch: different seeds")
    if trace.total_steps != scenario.total_steps:
        raise ValueError("trace/scenario mismatch: different step counts")
    by_step = {rec.step: rec for rec in trace.records}
    for phase in scenario.phases:
        if phase.start_step == 0:
            active = trace.prefill_active
        else:
            active = by_step[phase.start_step].active
        covered = np.intersect1d(active, phase.region).size
        if covered < rho * phase.region.size - 1e-9:
            return False
    return True
