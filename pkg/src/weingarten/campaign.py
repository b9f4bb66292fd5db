"""Randomized campaign plumbing: deterministic block streams and report records.

Samples are drawn in fixed-size blocks; block b uses the stream seeded by
SeedSequence([master_seed, b]).  Results therefore do not depend on how many
worker threads process the blocks.
"""
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
import os

import numpy as np

BLOCK_SIZE = 4096


def block_rng(seed, block):
    """Stream for one block; ``seed`` is an int or a tuple of ints naming a sub-campaign."""
    key = [int(s) for s in np.atleast_1d(seed)]
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(key + [int(block)])))


def resolve_threads(threads):
    if threads is None or threads <= 0:
        return os.cpu_count() or 1
    return int(threads)


def _blocks(samples, block_size):
    out = []
    start = 0
    b = 0
    while start < samples:
        count = min(block_size, samples - start)
        out.append((b, count))
        start += count
        b += 1
    return out


def map_blocks(fn, samples, seed, threads=1, block_size=BLOCK_SIZE):
    """Apply fn(rng, count) to every block; results come back in block order."""
    blocks = _blocks(int(samples), block_size)
    threads = resolve_threads(threads)

    def run(item):
        b, count = item
        return fn(block_rng(seed, b), count)

    if threads == 1 or len(blocks) == 1:
        return [run(item) for item in blocks]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(run, blocks))


def _plain(value):
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, dict):
        return {k: _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    return value


@dataclass
class CampaignReport:
    """Outcome of one randomized campaign.

    ``min_gap`` is the smallest normalized gap (gap divided by the scale of the
    compared quantities); the campaign passes when it is >= -tolerance.
    """
    lemma: str
    params: dict
    samples: int
    min_gap: float
    tolerance: float
    passed: bool
    argmin: dict = field(default_factory=dict)
    constants: dict = field(default_factory=dict)
    extra: dict = field(default_factory=dict)

    def to_dict(self):
        return _plain(asdict(self))


def run_campaign(lemma, evaluate, samples, seed, tolerance, params=None, threads=1,
                 constants=None, block_size=BLOCK_SIZE):
    """Drive ``evaluate(rng, count) -> (normalized_gaps, inputs)`` over all blocks.

    ``inputs`` maps names to arrays whose first axis indexes samples; the row at
    the global arg-min is echoed into the report.
    """
    results = map_blocks(evaluate, samples, seed, threads, block_size)
    best = np.inf
    argmin = {}
    for b, (gaps, inputs) in enumerate(results):
        gaps = np.asarray(gaps, dtype=float)
        if gaps.size == 0:
            continue
        bad = ~np.isfinite(gaps)
        if np.any(bad):
            j = int(np.flatnonzero(bad)[0])
            best = -np.inf
            argmin = {name: np.asarray(v)[j] for name, v in inputs.items()}
            argmin["block"] = b
            break
        j = int(np.argmin(gaps))
        if gaps[j] < best:
            best = float(gaps[j])
            argmin = {name: np.asarray(v)[j] for name, v in inputs.items()}
            argmin["block"] = b
    passed = bool(best >= -tolerance)
    return CampaignReport(lemma=lemma, params=dict(params or {}), samples=int(samples),
                          min_gap=float(best), tolerance=float(tolerance), passed=passed,
                          argmin=_plain(argmin), constants=dict(constants or {}))


def merge_reports(lemma, reports, params=None, constants=None):
    """Combine sub-campaigns (e.g. one per dimension) into a single report."""
    worst = min(reports, key=lambda r: r.min_gap)
    out = CampaignReport(lemma=lemma, params=dict(params or {}),
                         samples=sum(r.samples for r in reports), min_gap=worst.min_gap,
                         tolerance=worst.tolerance, passed=all(r.passed for r in reports),
                         argmin=dict(worst.argmin, **{"sub_params": worst.params}),
                         constants=dict(constants or {}))
    out.extra["parts"] = [{"params": r.params, "min_gap": r.min_gap, "passed": r.passed,
                           "constants": r.constants} for r in reports]
    return out
