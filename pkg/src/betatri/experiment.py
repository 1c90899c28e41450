"""Monte Carlo harness: normal approximation, law of large numbers, rate sweeps.

Replicate r at size n draws its graph from the seed
``derive_seed(master_seed, n, r)``, and every edge decision within that graph
is keyed by (seed, i, j). Results therefore do not depend on the number of
worker threads or on the order replicates finish in.
"""

from __future__ import annotations

import configparser
import csv
import io
import json
import math
import os
import re
import tempfile
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
from scipy import special, stats

from . import _kernels
from .bounds import eta
from .errors import DomainError
from .model import BlockDesign, block_mu, graph_key, load_mu
from .moments import MomentReport, moment_report, normalize
from .vecnorm import HeterogeneityVector, VectorLike, as_vector, norm_pow

SCHEMA_VERSION = 1
MASK64 = (1 << 64) - 1


def derive_seed(master_seed: int, n: int, r: int) -> int:
    """64-bit replicate seed: SplitMix64 folded over (master_seed, n, r)."""
    h = _kernels.splitmix64_py(int(master_seed) & MASK64)
    h = _kernels.splitmix64_py(h ^ (int(n) & MASK64))
    return _kernels.splitmix64_py(h ^ (int(r) & MASK64))


def std_normal_cdf(x):
    """Phi(x) = erfc(-x / sqrt 2) / 2."""
    return 0.5 * special.erfc(-np.asarray(x, dtype=np.float64) / math.sqrt(2.0))


# ------------------------------------------------------------------ config


def parse_design(text: str) -> BlockDesign:
    """Parse "K=2,pi=0.5,0.5,theta=1,2,alpha=0.4" (list values may also use ':')."""
    pairs = re.findall(r"(\w+)\s*=\s*([^=]+?)(?=,\s*\w+\s*=|$)", text.strip())
    if not pairs:
        raise DomainError(f"cannot parse design {text!r}")
    fields = {}
    for key, value in pairs:
        key = key.strip().lower()
        vals = [v for v in re.split(r"[,:;\s]+", value.strip()) if v]
        try:
            fields[key] = [float(v) for v in vals]
        except ValueError:
            raise DomainError(f"design field {key!r} is not numeric: {value!r}")
    unknown = set(fields) - {"k", "pi", "theta", "alpha"}
    if unknown:
        raise DomainError(f"unknown design fields: {sorted(unknown)}")
    if "theta" not in fields or "alpha" not in fields:
        raise DomainError("design needs theta and alpha")
    if len(fields["alpha"]) != 1:
        raise DomainError("alpha takes a single value")
    theta = tuple(fields["theta"])
    if "k" in fields:
        k = fields["k"]
        if len(k) != 1 or k[0] != int(k[0]) or int(k[0]) != len(theta):
            raise DomainError(f"K={fields['k']} does not match {len(theta)} theta values")
    pi = tuple(fields["pi"]) if "pi" in fields else None
    return BlockDesign(theta=theta, alpha=fields["alpha"][0], pi=pi)


@dataclass
class ExperimentConfig:
    """What to simulate. Exactly one of ``design``, ``mu_path`` or ``mu`` is set."""

    n_list: list
    replicates: int
    master_seed: int
    design: Optional[BlockDesign] = None
    mu_path: Optional[str] = None
    use_exact_moments: bool = True
    output: Optional[str] = None
    mu: Optional[HeterogeneityVector] = None

    def __post_init__(self):
        given = [x is not None for x in (self.design, self.mu_path, self.mu)]
        if sum(given) != 1:
            raise DomainError("give exactly one of a block design, a mu file or a mu vector")
        if self.mu is not None:
            self.mu = as_vector(self.mu)
        if self.replicates < 1:
            raise DomainError("replicates must be >= 1")
        if not self.n_list:
            raise DomainError("n_list must be nonempty")
        self.n_list = [int(n) for n in self.n_list]
        if any(b <= a for a, b in zip(self.n_list, self.n_list[1:])):
            raise DomainError("n_list must be strictly ascending")
        if self.n_list[0] < 2:
            raise DomainError("sizes must be >= 2")
        if not 0 <= int(self.master_seed) <= MASK64:
            raise DomainError("master_seed must fit in 64 unsigned bits")
        self.master_seed = int(self.master_seed)
        self._mu_cache = self.mu

    def mu_for(self, n: int) -> HeterogeneityVector:
        if self.design is not None:
            return block_mu(self.design, n)
        if self._mu_cache is None:
            self._mu_cache = load_mu(self.mu_path)
        if self._mu_cache.n != n:
            raise DomainError(f"mu file has {self._mu_cache.n} entries, size {n} requested")
        return self._mu_cache

    def to_dict(self) -> dict:
        return {
            "design": self.design.to_dict() if self.design else None,
            "mu_path": self.mu_path,
            "mu": None if self.mu is None else self.mu.entries.tolist(),
            "n_list": list(self.n_list),
            "replicates": self.replicates,
            "master_seed": self.master_seed,
            "use_exact_moments": self.use_exact_moments,
        }

    @classmethod
    def from_file(cls, path, **overrides) -> "ExperimentConfig":
        """Read an INI-style ``[experiment]`` section.

        Keys: design, mu_file, n (comma-separated sizes), replicates, seed,
        moments (exact|asymptotic), output. Keyword overrides win over the file.
        """
        parser = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
        try:
            with open(path, encoding="utf-8") as fh:
                parser.read_file(fh)
        except OSError as exc:
            raise DomainError(f"{path}: cannot read config: {exc.strerror}") from exc
        except configparser.Error as exc:
            raise DomainError(f"{path}: {exc}") from exc
        if "experiment" not in parser:
            raise DomainError(f"{path}: missing [experiment] section")
        sec = parser["experiment"]
        known = {"design", "mu_file", "n", "replicates", "seed", "moments", "output"}
        unknown = set(sec) - known
        if unknown:
            raise DomainError(f"{path}: unknown keys {sorted(unknown)}")
        kw = {}
        try:
            if "design" in sec:
                kw["design"] = parse_design(sec["design"])
            if "mu_file" in sec:
                mu_file = Path(sec["mu_file"])
                if not mu_file.is_absolute():
                    mu_file = Path(path).parent / mu_file
                kw["mu_path"] = str(mu_file)
            if "n" in sec:
                kw["n_list"] = [int(v) for v in sec["n"].replace(",", " ").split()]
            if "replicates" in sec:
                kw["replicates"] = int(sec["replicates"])
            if "seed" in sec:
                kw["master_seed"] = int(sec["seed"], 0)
            if "moments" in sec:
                mode = sec["moments"].strip().lower()
                if mode not in ("exact", "asymptotic"):
                    raise DomainError(f"moments must be exact or asymptotic, got {mode!r}")
                kw["use_exact_moments"] = mode == "exact"
            if "output" in sec:
                kw["output"] = sec["output"]
        except ValueError as exc:
            raise DomainError(f"{path}: {exc}") from exc
        overrides = {k: v for k, v in overrides.items() if v is not None}
        if overrides.keys() & {"design", "mu_path", "mu"}:
            # a source given explicitly replaces whichever one the file names
            for key in ("design", "mu_path", "mu"):
                kw.pop(key, None)
        kw.update(overrides)
        missing = {"n_list", "replicates", "master_seed"} - set(kw)
        if missing:
            raise DomainError(f"{path}: missing keys {sorted(missing)}")
        return cls(**kw)


# ------------------------------------------------------------- replicates


def _count_chunk(mu_entries, master_seed, n, rs):
    out = np.empty(len(rs), dtype=np.int64)
    for t, r in enumerate(rs):
        key = graph_key(derive_seed(master_seed, n, r))
        out[t] = _kernels.sample_and_count(mu_entries, key)
    return out


def replicate_counts(mu: VectorLike, master_seed: int, replicates: int,
                     threads: int = 1, n_tag: Optional[int] = None) -> np.ndarray:
    """Triangle counts of ``replicates`` independent graphs, in replicate order."""
    mu = as_vector(mu)
    n = mu.n if n_tag is None else n_tag
    entries = np.ascontiguousarray(mu.entries)
    threads = max(1, int(threads))
    rs = list(range(replicates))
    if threads == 1 or replicates < 2:
        return _count_chunk(entries, master_seed, n, rs)
    chunks = [rs[k::threads] for k in range(threads)]
    out = np.empty(replicates, dtype=np.int64)
    with ThreadPoolExecutor(max_workers=threads) as pool:
        results = pool.map(lambda c: _count_chunk(entries, master_seed, n, c), chunks)
        for chunk, vals in zip(chunks, results):
            out[chunk] = vals
    return out


def run_replicates(config: ExperimentConfig, n: int, threads: int = 1) -> np.ndarray:
    return replicate_counts(config.mu_for(n), config.master_seed, config.replicates, threads)


# ------------------------------------------------------------- statistics


def empirical_kolmogorov(samples: Sequence[float]) -> float:
    """sup_z |ECDF(z) - Phi(z)|, exact for the sample (ties included)."""
    x = np.sort(np.asarray(samples, dtype=np.float64).ravel())
    r = x.size
    if r == 0:
        raise DomainError("empty sample")
    phi = std_normal_cdf(x)
    i = np.arange(1, r + 1, dtype=np.float64)
    upper = np.abs(i / r - phi)
    lower = np.abs((i - 1) / r - phi)
    return float(max(upper.max(), lower.max()))


def lln_check(samples: Sequence[float], mu: VectorLike) -> dict:
    """Mean and sd of 6 T_n / ||mu||_2^6 across replicates (concentrates at 1)."""
    t = np.asarray(samples, dtype=np.float64).ravel()
    if t.size == 0:
        raise DomainError("empty sample")
    ratio = 6.0 * t / norm_pow(mu, 2) ** 3
    sd = float(np.std(ratio, ddof=1)) if t.size > 1 else 0.0
    return {"mean": float(np.mean(ratio)), "sd": sd}


def loglog_slope(n_list: Sequence[float], d_list: Sequence[float]) -> tuple[float, float]:
    """Least-squares slope of log d on log n, with its standard error."""
    if len(n_list) != len(d_list):
        raise DomainError("size and distance lists differ in length")
    if len(n_list) < 3:
        raise DomainError("need at least 3 sizes for a slope")
    x = np.log(np.asarray(n_list, dtype=np.float64))
    d = np.asarray(d_list, dtype=np.float64)
    if np.any(d <= 0):
        raise DomainError("distances must be positive for a log-log fit")
    fit = stats.linregress(x, np.log(d))
    return float(fit.slope), float(fit.stderr)


# ----------------------------------------------------------------- reports


@dataclass
class SizeResult:
    n: int
    d_k: float
    moments: MomentReport
    lln: dict
    counts: np.ndarray = field(repr=False)
    normalized: np.ndarray = field(repr=False)
    seconds: float = 0.0

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "d_k": self.d_k,
            "moments": self.moments.to_dict(),
            "lln_ratio": self.lln,
            "mean_count": float(np.mean(self.counts)),
        }


@dataclass
class CltReport:
    sizes: list
    slope: Optional[float] = None
    slope_stderr: Optional[float] = None
    eta: Optional[float] = None
    noise_floor: float = 0.0

    def to_dict(self) -> dict:
        return {
            "sizes": [s.to_dict() for s in self.sizes],
            "rate_slope": self.slope,
            "rate_slope_stderr": self.slope_stderr,
            "eta": self.eta,
            "minus_eta": None if self.eta is None else -self.eta,
            "mc_noise_floor": self.noise_floor,
        }


def run_size(config: ExperimentConfig, n: int, threads: int = 1) -> SizeResult:
    start = time.perf_counter()
    mu = config.mu_for(n)
    counts = replicate_counts(mu, config.master_seed, config.replicates, threads)
    report = moment_report(mu)
    f = normalize(counts, report, use_exact=config.use_exact_moments)
    return SizeResult(
        n=n,
        d_k=empirical_kolmogorov(f),
        moments=report,
        lln=lln_check(counts, mu),
        counts=counts,
        normalized=f,
        seconds=time.perf_counter() - start,
    )


def run_experiment(config: ExperimentConfig, threads: int = 1, progress=None) -> CltReport:
    sizes = []
    for n in config.n_list:
        res = run_size(config, n, threads)
        sizes.append(res)
        if progress is not None:
            progress(res)
    report = CltReport(sizes=sizes, noise_floor=1.0 / math.sqrt(config.replicates))
    if config.design is not None:
        report.eta = eta(config.design.alpha)
    if len(sizes) >= 3:
        report.slope, report.slope_stderr = loglog_slope(
            [s.n for s in sizes], [s.d_k for s in sizes]
        )
    return report


def rate_sweep(config: ExperimentConfig, threads: int = 1) -> tuple[float, float]:
    if len(config.n_list) < 3:
        raise DomainError("rate sweep needs at least 3 sizes")
    report = run_experiment(config, threads)
    return report.slope, report.slope_stderr


# ------------------------------------------------------------- persistence


def atomic_write_text(path, text: str) -> None:
    """Write via a temporary sibling file, then rename over the target."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        # mkstemp creates 0600; give the report ordinary permissions
        umask = os.umask(0)
        os.umask(umask)
        os.chmod(tmp, 0o666 & ~umask)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def dump_json(doc: dict) -> str:
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def report_document(config: ExperimentConfig, report: CltReport, metadata: dict) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "kind": "clt",
        "config": config.to_dict(),
        "report": report.to_dict(),
        "metadata": metadata,
    }


def samples_csv(report: CltReport) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["n", "replicate", "T_n", "F_n"])
    for s in report.sizes:
        for r, (t, f) in enumerate(zip(s.counts.tolist(), s.normalized.tolist())):
            w.writerow([s.n, r, t, repr(f)])
    return buf.getvalue()


def rate_csv(report: CltReport) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["log_n", "log_d_k"])
    for s in report.sizes:
        w.writerow([repr(math.log(s.n)), repr(math.log(s.d_k))])
    return buf.getvalue()
