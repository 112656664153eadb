"""Scenario loading, validation and execution.

A scenario is a JSON document naming a construction kind, a seed and
optional payload, tolerance and sampling controls. Running it executes
the registered checks of that kind and yields one plain-dict record per
check plus an aggregate, ready for byte-deterministic serialization
(sorted keys, compact separators, wall times omitted by default).

Object builders inside checks derive everything from the scenario seed,
so every check of a run sees the same construction; probe randomness
comes from a per-check stream keyed by the check name, which makes the
records independent of execution order and thread count.
"""
from __future__ import annotations

import json
import os
import time
import zlib
from concurrent.futures import ThreadPoolExecutor
from importlib import resources

import jsonschema
import numpy as np

from .checks import Check, CheckContext, checks_for
from .config import DEFAULT, Tolerances
from .errors import SchemaError, VerifyError
from .fields import TorusChart
from .rng import SplitMix64

_SCHEMA_CACHE: dict = {}


def load_schema(name: str) -> dict:
    if name not in _SCHEMA_CACHE:
        ref = resources.files("acs_verify").joinpath("schemas", name)
        _SCHEMA_CACHE[name] = json.loads(ref.read_text())
    return _SCHEMA_CACHE[name]


def bundled_scenario_names() -> list[str]:
    root = resources.files("acs_verify").joinpath("scenarios")
    return sorted(
        entry.name[:-5] for entry in root.iterdir()
        if entry.name.endswith(".json")
    )


def find_scenario(ref: str) -> str:
    """Scenario text by filesystem path first, bundled name second."""
    if os.path.exists(ref):
        with open(ref, encoding="utf-8") as fh:
            return fh.read()
    name = ref if ref.endswith(".json") else ref + ".json"
    res = resources.files("acs_verify").joinpath("scenarios", name)
    if res.is_file():
        return res.read_text()
    raise SchemaError(
        f"no scenario file or bundled scenario named {ref!r}; bundled: "
        + ", ".join(bundled_scenario_names())
    )


def validate_scenario(doc) -> None:
    schema = load_schema("scenario.schema.json")
    try:
        jsonschema.validate(doc, schema)
    except jsonschema.ValidationError as exc:
        path = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise SchemaError(f"scenario invalid at {path}: {exc.message}") from exc
    samples = doc.get("samples")
    if samples and "dims" in samples and samples["dims"] != len(samples["counts"]):
        raise SchemaError("samples.dims must equal len(samples.counts)")


def parse_scenario(text: str) -> dict:
    doc = json.loads(text)  # JSONDecodeError carries line and column
    validate_scenario(doc)
    return doc


def resolve_samples(doc: dict, cap: int | None) -> np.ndarray | None:
    spec = doc.get("samples")
    if spec is None:
        return None
    if "points" in spec:
        pts = np.asarray(spec["points"], dtype=float)
    else:
        pts = TorusChart(int(spec["dims"])).grid([int(c) for c in spec["counts"]])
    if cap is not None:
        pts = pts[:cap]
    return pts


def resolve_tolerances(doc: dict) -> Tolerances:
    over = doc.get("tolerances", {})
    return Tolerances(
        rank_rtol=float(over.get("rank_rtol", DEFAULT.rank_rtol)),
        alg_atol=float(over.get("alg_atol", DEFAULT.alg_atol)),
        fd_rtol=float(over.get("fd_rtol", DEFAULT.fd_rtol)),
    )


def check_tolerance(check: Check, doc: dict, tol_scale: float) -> float:
    override = doc.get("tolerances", {}).get("checks", {})
    return float(override.get(check.name, check.tolerance)) * tol_scale


def _worker_count() -> int:
    raw = os.environ.get("ACS_VERIFY_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        raise SchemaError("ACS_VERIFY_THREADS must be an integer") from None


def run_check(check: Check, ctx: CheckContext, tolerance: float,
              timings: bool) -> dict:
    """One record per check; a VerifyError inside a runner is a recorded
    failure, not a crash, so the rest of the batch still reports."""
    t0 = time.perf_counter()
    record = {
        "name": check.name,
        "anchor": check.anchor,
        "tolerance": tolerance,
        "wall_time": None,
        "error": None,
    }
    try:
        result = check.runner(ctx)
        record["max_residual"] = float(result.max_residual)
        record["samples_checked"] = int(result.samples_checked)
        record["status"] = "pass" if result.max_residual <= tolerance else "fail"
    except VerifyError as exc:
        record["max_residual"] = None
        record["samples_checked"] = 0
        record["status"] = "fail"
        record["error"] = f"NumericalFailure: {exc}"
    if timings:
        record["wall_time"] = time.perf_counter() - t0
    return record


def run_scenario(doc: dict, tol_scale: float = 1.0,
                 sample_cap: int | None = None, seed: int | None = None,
                 timings: bool = False) -> tuple[list[dict], dict]:
    validate_scenario(doc)
    kind = doc["kind"]
    run_seed = int(doc["seed"] if seed is None else seed)
    tol = resolve_tolerances(doc)
    samples = resolve_samples(doc, sample_cap)
    selected = checks_for(kind, doc.get("checks"))
    if not selected:
        raise SchemaError(f"no checks registered for kind {kind!r}")
    payload = doc.get("payload", {})

    jobs = []
    for check in selected:
        rng = SplitMix64(run_seed ^ zlib.crc32(check.name.encode()))
        ctx = CheckContext(payload=payload, tol=tol, seed=run_seed, rng=rng,
                           samples=samples, sample_cap=sample_cap)
        jobs.append((check, ctx, check_tolerance(check, doc, tol_scale)))

    workers = _worker_count()
    if workers == 1:
        records = [run_check(c, ctx, t, timings) for c, ctx, t in jobs]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(run_check, c, ctx, t, timings)
                       for c, ctx, t in jobs]
            records = [f.result() for f in futures]

    failed = sum(1 for r in records if r["status"] != "pass")
    aggregate = {
        "id": doc["id"],
        "kind": kind,
        "seed": run_seed,
        "checks_run": len(records),
        "checks_failed": failed,
        "passed": failed == 0,
    }
    return records, aggregate


def serialize_report(records: list[dict], aggregate: dict) -> str:
    lines = [json.dumps(r, sort_keys=True, separators=(",", ":"))
             for r in records]
    lines.append(json.dumps(aggregate, sort_keys=True, separators=(",", ":")))
    return "\n".join(lines) + "\n"
