"""The sparse beta-model: edge probabilities, parameter designs, sparsity
diagnostics and seeded graph sampling."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import _kernels
from .errors import DomainError, MuParseError
from .graph import GraphSample
from .vecnorm import HeterogeneityVector, VectorLike, as_vector, norm_pow

SEED_MASK = (1 << 64) - 1


def edge_probability(mu_i: float, mu_j: float) -> float:
    """p_ij = mu_i mu_j / (1 + mu_i mu_j)."""
    if not (mu_i > 0 and mu_j > 0):
        raise DomainError(f"propensities must be positive, got {mu_i!r}, {mu_j!r}")
    x = mu_i * mu_j
    return x / (1.0 + x)


def probability_matrix(mu: VectorLike) -> np.ndarray:
    """Dense n x n matrix of p_ij with zero diagonal."""
    m = as_vector(mu).entries
    x = np.multiply.outer(m, m)
    p = x / (1.0 + x)
    np.fill_diagonal(p, 0.0)
    return p


def mu_from_beta(beta: Sequence[float]) -> HeterogeneityVector:
    """mu_i = exp(beta_i)."""
    b = np.asarray(beta, dtype=np.float64)
    if not np.all(np.isfinite(b)):
        raise DomainError("beta entries must be finite")
    with np.errstate(over="raise", under="ignore"):
        try:
            mu = np.exp(b)
        except FloatingPointError as exc:
            raise OverflowError("exp(beta) overflows float64") from exc
    if np.any(mu == 0):
        raise OverflowError("exp(beta) underflows to zero")
    return HeterogeneityVector(mu)


@dataclass(frozen=True)
class ModelSpec:
    mu: HeterogeneityVector
    label: Optional[str] = None

    def __post_init__(self):
        mu = as_vector(self.mu)
        object.__setattr__(self, "mu", mu)
        # mu_max^2 / (1 + mu_max^2) rounds to 1.0 once mu_max ~ 1e8
        top = mu.max * mu.max
        low = mu.min * mu.min
        if not (top / (1.0 + top) < 1.0 and low / (1.0 + low) > 0.0):
            raise DomainError("edge probabilities must lie strictly in (0, 1)")

    @property
    def n(self) -> int:
        return self.mu.n


@dataclass(frozen=True)
class BlockDesign:
    """Blockwise-constant scaling mu_i = theta_r * n**(-alpha/2) for i in block r."""

    theta: tuple
    alpha: float
    pi: tuple = field(default=None)

    def __post_init__(self):
        theta = tuple(float(t) for t in self.theta)
        k = len(theta)
        if k < 1:
            raise DomainError("design needs at least one block")
        pi = self.pi
        if pi is None:
            pi = tuple(1.0 / k for _ in range(k))
        pi = tuple(float(p) for p in pi)
        if len(pi) != k:
            raise DomainError(f"pi has {len(pi)} entries but theta has {k}")
        if any(not t > 0 for t in theta):
            raise DomainError("theta entries must be positive")
        if any(not p > 0 for p in pi):
            raise DomainError("pi entries must be positive")
        if abs(math.fsum(pi) - 1.0) > 1e-12:
            raise DomainError(f"pi must sum to 1, sums to {math.fsum(pi)!r}")
        if not 0 < self.alpha < 1:
            raise DomainError(f"alpha must lie in (0, 1), got {self.alpha!r}")
        object.__setattr__(self, "theta", theta)
        object.__setattr__(self, "pi", pi)
        object.__setattr__(self, "alpha", float(self.alpha))

    @property
    def K(self) -> int:
        return len(self.theta)

    def block_sizes(self, n: int) -> list[int]:
        """Largest-remainder apportionment of n vertices by pi.

        Each block gets floor(pi_r n); the leftover vertices go one each to the
        largest fractional parts (ties: larger pi, then lower index). Every
        size is then within 1 of pi_r n. A block whose share is below one
        vertex still receives one, taken from the block with most surplus.
        """
        if n < self.K:
            raise DomainError(f"n={n} is smaller than the number of blocks {self.K}")
        target = [p * n for p in self.pi]
        sizes = [int(math.floor(t)) for t in target]
        order = sorted(range(self.K), key=lambda r: (sizes[r] - target[r], -self.pi[r], r))
        for r in order[: n - sum(sizes)]:
            sizes[r] += 1
        for r in range(self.K):
            if sizes[r] == 0:
                donor = max((q for q in range(self.K) if sizes[q] > 1),
                            key=lambda q: (sizes[q] - target[q], -q))
                sizes[donor] -= 1
                sizes[r] = 1
        return sizes

    def to_dict(self) -> dict:
        return {"K": self.K, "pi": list(self.pi), "theta": list(self.theta), "alpha": self.alpha}


def block_mu(design: BlockDesign, n: int) -> HeterogeneityVector:
    sizes = design.block_sizes(n)
    scale = float(n) ** (-design.alpha / 2)
    vals = np.repeat(np.array(design.theta) * scale, sizes)
    return HeterogeneityVector(vals)


def block_labels(design: BlockDesign, n: int) -> np.ndarray:
    return np.repeat(np.arange(design.K), design.block_sizes(n))


@dataclass(frozen=True)
class ConditionReport:
    """Finite-n surrogates for the sparsity and heterogeneity conditions.

    These are numbers to watch across a sequence of n, not verdicts.
    """

    mu_max: float
    l2_norm: float
    l32_ratio: float
    ratio_cond: float

    def to_dict(self) -> dict:
        return {
            "mu_max": self.mu_max,
            "l2_norm": self.l2_norm,
            "l32_ratio": self.l32_ratio,
            "ratio_cond": self.ratio_cond,
        }


def diagnose_conditions(mu: VectorLike) -> ConditionReport:
    mu = as_vector(mu)
    l2sq = norm_pow(mu, 2)
    return ConditionReport(
        mu_max=mu.max,
        l2_norm=math.sqrt(l2sq),
        l32_ratio=norm_pow(mu, 1.5) / l2sq**3,
        ratio_cond=(mu.max / mu.min) / l2sq**0.75,
    )


def graph_key(seed: int) -> np.uint64:
    """Stream key for a graph seed."""
    return np.uint64(_kernels.splitmix64_py(int(seed) & SEED_MASK))


def sample_graph(spec: ModelSpec, seed: int) -> GraphSample:
    """Draw one graph; each edge (i, j) is decided by its own keyed uniform."""
    if not isinstance(spec, ModelSpec):
        spec = ModelSpec(spec)
    src, dst = _kernels.sample_edges(spec.mu.entries, graph_key(seed))
    return GraphSample.from_edges(spec.n, src, dst, seed=int(seed))


# ---------------------------------------------------------------- file input


def parse_mu_text(text: str, source: Optional[str] = None) -> HeterogeneityVector:
    """Parse a JSON array or one-float-per-line text into a vector.

    Blank lines and lines starting with '#' are skipped in line format.
    """
    stripped = text.strip()
    if not stripped:
        raise MuParseError("empty input", source=source)
    if stripped.startswith("["):
        try:
            values = json.loads(stripped)
        except json.JSONDecodeError as exc:
            raise MuParseError(f"invalid JSON: {exc.msg}", line=exc.lineno, source=source)
        if not isinstance(values, list):
            raise MuParseError("JSON input must be an array of numbers", source=source)
        out = []
        for pos, v in enumerate(values, start=1):
            if isinstance(v, bool) or not isinstance(v, (int, float)):
                raise MuParseError(f"entry {pos} is not a number: {v!r}", source=source)
            if not (math.isfinite(v) and v > 0):
                raise MuParseError(f"entry {pos} must be a positive finite number, got {v!r}",
                                   source=source)
            out.append(float(v))
        entries = out
    else:
        entries = []
        for lineno, raw in enumerate(text.splitlines(), start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            try:
                v = float(line)
            except ValueError:
                raise MuParseError(f"not a number: {line!r}", line=lineno, source=source)
            if not (math.isfinite(v) and v > 0):
                raise MuParseError(f"entry must be a positive finite number, got {line!r}",
                                   line=lineno, source=source)
            entries.append(v)
    if len(entries) < 2:
        raise MuParseError(f"need at least 2 entries, found {len(entries)}", source=source)
    return HeterogeneityVector(entries)


def load_mu(path) -> HeterogeneityVector:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise MuParseError(f"cannot read file: {exc.strerror}", source=str(path)) from exc
    return parse_mu_text(text, source=str(path))
