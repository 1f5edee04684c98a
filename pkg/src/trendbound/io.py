"""Readers and writers for the CSV/JSON file formats.

Floats are written with ``repr`` so files round-trip exactly and repeated
runs are byte-identical. Every writer goes through a temp file and a rename.
"""
from __future__ import annotations

import csv
import io
import json
import math
import os
import tempfile
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .bounds import SweepRow
from .errors import InputError
from .estimation import Event, EventLog, FitResult
from .graphmodel import Network
from .simulator import CompareRow, CurvePoint

EDGE_HEADER = ["u", "v", "w_uv", "w_vu"]
DEGREE_HEADER = ["node", "degree"]
PARAMS_HEADER = ["node", "s"]
SWEEP_HEADER = ["delta_t", "epsilon", "bound", "rho", "sigma_minus", "p_tilde", "valid"]
EMPIRICAL_HEADER = ["epsilon", "p_hat", "ci_low", "ci_high", "runs"]
COMPARE_HEADER = ["epsilon", "bound", "p_hat", "ci_high", "violation"]
EVENT_HEADER = ["time", "kind", "subject", "source"]


def fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if x is None:
        return ""
    if isinstance(x, str):
        return x
    return repr(float(x))


def write_text_atomic(path: str | os.PathLike, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_csv(path, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([fmt(x) for x in r])
    write_text_atomic(path, buf.getvalue())


def write_json(path, obj) -> None:
    write_text_atomic(path, json.dumps(obj, indent=2, sort_keys=True, allow_nan=True) + "\n")


def _read_csv(path, header: Sequence[str]) -> list[dict[str, str]]:
    try:
        with open(path, newline="") as fh:
            reader = csv.DictReader(fh)
            if reader.fieldnames is None:
                raise InputError(f"{path}: empty file")
            if [h.strip() for h in reader.fieldnames] != list(header):
                raise InputError(f"{path}: expected header {','.join(header)}")
            return [{k.strip(): (v or "").strip() for k, v in row.items()} for row in reader]
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from None


def _int(value: str, what: str, path) -> int:
    try:
        return int(value)
    except ValueError:
        raise InputError(f"{path}: {what} {value!r} is not an integer") from None


def _float(value: str, what: str, path) -> float:
    try:
        x = float(value)
    except ValueError:
        raise InputError(f"{path}: {what} {value!r} is not a number") from None
    if not math.isfinite(x):
        raise InputError(f"{path}: {what} must be finite")
    return x


def _bool(value: str) -> bool:
    return value.strip().lower() in ("true", "1", "yes")


# -- network ---------------------------------------------------------------

def write_edges(path, net: Network) -> None:
    write_csv(path, EDGE_HEADER,
              ((u, v, net.weight(u, v), net.weight(v, u)) for u, v in net.edges))


def read_edges(path, n: int | None = None, symmetric: bool = False) -> Network:
    """Edge-list CSV to a Network; ``n`` defaults to the largest id + 1.

    Empty weight cells mean 0, or with ``symmetric`` an empty ``w_vu`` copies ``w_uv``.
    """
    rows = _read_csv(path, EDGE_HEADER)
    edges, weights = [], {}
    for r in rows:
        u, v = _int(r["u"], "node", path), _int(r["v"], "node", path)
        if u < 0 or v < 0:
            raise InputError(f"{path}: negative node id")
        wuv = _float(r["w_uv"], "weight", path) if r["w_uv"] else 0.0
        wvu = _float(r["w_vu"], "weight", path) if r["w_vu"] else (wuv if symmetric else 0.0)
        if wuv < 0 or wvu < 0:
            raise InputError(f"{path}: weights must be >= 0")
        edges.append((u, v))
        weights[(u, v)], weights[(v, u)] = wuv, wvu
    top = max((max(e) for e in edges), default=-1) + 1
    if n is None:
        n = max(top, 1)
    elif top > n:
        raise InputError(f"{path}: node id {top - 1} outside 0..{n - 1}")
    try:
        return Network(n, edges, weights)
    except ValueError as exc:
        raise InputError(f"{path}: {exc}") from None


def write_degrees(path, net: Network) -> None:
    write_csv(path, DEGREE_HEADER, ((v, int(d)) for v, d in enumerate(net.degrees)))


def read_degrees(path) -> np.ndarray:
    rows = _read_csv(path, DEGREE_HEADER)
    return np.array([_int(r["degree"], "degree", path) for r in rows], dtype=np.int64)


# -- adoption inputs ----------------------------------------------------------

def write_node_params(path, s: Sequence[float]) -> None:
    write_csv(path, PARAMS_HEADER, enumerate(s))


def read_node_params(path, n: int) -> np.ndarray:
    s = np.zeros(n)
    for r in _read_csv(path, PARAMS_HEADER):
        v = _int(r["node"], "node", path)
        if not 0 <= v < n:
            raise InputError(f"{path}: node {v} outside 0..{n - 1}")
        s[v] = _float(r["s"], "s", path)
        if s[v] < 0:
            raise InputError(f"{path}: s must be >= 0")
    return s


def read_seed_file(path, n: int) -> list[int]:
    try:
        lines = Path(path).read_text().split()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from None
    seeds = sorted({_int(x, "seed node", path) for x in lines})
    if not seeds:
        raise InputError(f"{path}: no seed nodes")
    if seeds[0] < 0 or seeds[-1] >= n:
        raise InputError(f"{path}: seed node outside 0..{n - 1}")
    return seeds


def write_seed_file(path, seeds: Iterable[int]) -> None:
    write_text_atomic(path, "".join(f"{int(v)}\n" for v in sorted(seeds)))


# -- results ----------------------------------------------------------------

def write_sweep(path, rows: Sequence[SweepRow]) -> None:
    write_csv(path, SWEEP_HEADER, rows)


def read_sweep(path) -> list[SweepRow]:
    out = []
    for r in _read_csv(path, SWEEP_HEADER):
        out.append(SweepRow(_int(r["delta_t"], "delta_t", path), _float(r["epsilon"], "epsilon", path),
                            _float(r["bound"], "bound", path), float(r["rho"]),
                            float(r["sigma_minus"]), float(r["p_tilde"]), _bool(r["valid"])))
    return out


def write_empirical(path, curve: Sequence[CurvePoint]) -> None:
    write_csv(path, EMPIRICAL_HEADER, curve)


def read_empirical(path) -> list[CurvePoint]:
    return [CurvePoint(_float(r["epsilon"], "epsilon", path), _float(r["p_hat"], "p_hat", path),
                       _float(r["ci_low"], "ci_low", path), _float(r["ci_high"], "ci_high", path),
                       _int(r["runs"], "runs", path))
            for r in _read_csv(path, EMPIRICAL_HEADER)]


def write_compare(path, rows: Sequence[CompareRow]) -> None:
    write_csv(path, COMPARE_HEADER, rows)


# -- event logs and fits -----------------------------------------------------

def write_event_log(path, log: EventLog) -> None:
    write_csv(path, EVENT_HEADER, log.events)


def read_event_log(path) -> EventLog:
    events = []
    for r in _read_csv(path, EVENT_HEADER):
        src = _int(r["source"], "source", path) if r["source"] else None
        events.append(Event(_int(r["time"], "time", path), r["kind"], _int(r["subject"], "subject", path), src))
    if not events:
        raise InputError(f"{path}: event log has no events")
    return EventLog(events)


def fit_to_json(fit: FitResult) -> dict:
    return {
        "s": {str(v): float(x) for v, x in enumerate(fit.s)},
        "w": [{"u": u, "v": v, "w_uv": w} for (u, v), w in sorted(fit.w.items())],
        "beta_hat": float(fit.beta_hat),
        "log_likelihood": float(fit.log_likelihood),
        "converged": bool(fit.converged),
        "iterations": int(fit.iterations),
    }


def write_fit(path, fit: FitResult) -> None:
    write_json(path, fit_to_json(fit))


def read_fit(path) -> FitResult:
    try:
        data = json.loads(Path(path).read_text())
        s_map = {int(k): float(v) for k, v in data["s"].items()}
        n = max(s_map, default=-1) + 1
        s = np.zeros(n)
        for v, x in s_map.items():
            s[v] = x
        w = {(int(e["u"]), int(e["v"])): float(e["w_uv"]) for e in data["w"]}
        return FitResult(s, w, float(data["beta_hat"]), float(data["log_likelihood"]),
                         int(data.get("iterations", 0)), bool(data["converged"]))
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from None
    except (ValueError, KeyError, TypeError, AttributeError) as exc:
        raise InputError(f"{path}: malformed fit file ({exc})") from None
