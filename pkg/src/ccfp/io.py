"""Instance and result file formats.

Instances and results are JSON; tables are CSV with 15 significant digits.
"""

from __future__ import annotations

import csv
import hashlib
import io as _io
import json
import math
from importlib import resources
from pathlib import Path

import numpy as np

from . import __version__
from .errors import InstanceError, ParseError
from .model import FeasibleSet, FunctionSpec, LinearRange, ProblemInstance, Scenario

SCHEMA_VERSION = 1
BUNDLED = ("main_economic", "main_economic_feasible")


def _num(x) -> float | str:
    # JSON has no infinities; they travel as strings.
    x = float(x)
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return x


def _get(doc, key, path):
    if not isinstance(doc, dict) or key not in doc:
        raise ParseError("missing key", f"{path}.{key}" if path else key)
    return doc[key]


def _floats(value, path, length=None) -> list[float]:
    if not isinstance(value, list):
        raise ParseError("expected a list of numbers", path)
    out = []
    for i, v in enumerate(value):
        if isinstance(v, str) and v in ("inf", "-inf", "Infinity", "-Infinity"):
            out.append(float(v.replace("inity", "")))
        elif isinstance(v, (int, float)) and not isinstance(v, bool):
            out.append(float(v))
        else:
            raise ParseError(f"entry {i} is not a number", path)
    if length is not None and len(out) != length:
        raise ParseError(f"expected {length} entries, got {len(out)}", path)
    return out


def _scalar(value, path) -> float:
    return _floats([value], path)[0]


def _spec(doc, path, m, n) -> FunctionSpec:
    kind = _get(doc, "kind", path)
    W = _floats(_get(doc, "W", path), f"{path}.W", n * m)
    v = _floats(_get(doc, "v", path), f"{path}.v", n)
    try:
        return FunctionSpec(kind, np.array(W).reshape(n, m), v)
    except InstanceError as exc:
        raise ParseError(str(exc), path) from None


def instance_from_dict(doc: dict) -> ProblemInstance:
    if not isinstance(doc, dict):
        raise ParseError("instance document must be a JSON object")
    version = _get(doc, "schema_version", "")
    if version != SCHEMA_VERSION:
        raise ParseError(f"unsupported schema version {version!r}", "schema_version")
    m = _get(doc, "m", "")
    n = _get(doc, "n", "")
    for key, val in (("m", m), ("n", n)):
        if not isinstance(val, int) or isinstance(val, bool) or val < 1:
            raise ParseError("must be a positive integer", key)
    mu0 = _floats(_get(doc, "mu0", ""), "mu0")
    c0 = _get(doc, "c0_spec", "")
    c0_spec = _spec(c0, "c0_spec", m, len(mu0))
    mu1 = _floats(_get(doc, "mu1", ""), "mu1", n)
    l1 = _scalar(_get(doc, "l1", ""), "l1")
    cov = _floats(_get(doc, "gamma_cov", ""), "gamma_cov", (n + 1) ** 2)
    raw_sc = _get(doc, "scenarios", "")
    if not isinstance(raw_sc, list) or not raw_sc:
        raise ParseError("expected a non-empty list", "scenarios")
    scenarios = []
    for j, sc in enumerate(raw_sc):
        path = f"scenarios[{j}]"
        scenarios.append(
            Scenario(
                p=_scalar(_get(sc, "p", path), f"{path}.p"),
                a2=_floats(_get(sc, "a2", path), f"{path}.a2", n),
                b2=_scalar(_get(sc, "b2", path), f"{path}.b2"),
                r=_scalar(_get(sc, "r", path), f"{path}.r"),
            )
        )
    eps = _scalar(_get(doc, "epsilon", ""), "epsilon")
    c_spec = _spec(_get(doc, "c_spec", ""), "c_spec", m, n)
    fs = _get(doc, "feasible_set", "")
    ranges = []
    for i, rg in enumerate(fs.get("ranges", []) if isinstance(fs, dict) else []):
        path = f"feasible_set.ranges[{i}]"
        try:
            ranges.append(
                LinearRange(
                    _floats(_get(rg, "a", path), f"{path}.a", m),
                    _scalar(_get(rg, "lo", path), f"{path}.lo"),
                    _scalar(_get(rg, "hi", path), f"{path}.hi"),
                )
            )
        except InstanceError as exc:
            if isinstance(exc, ParseError):
                raise
            raise ParseError(str(exc), path) from None
    try:
        feasible = FeasibleSet(
            _floats(_get(fs, "lower", "feasible_set"), "feasible_set.lower", m),
            _floats(_get(fs, "upper", "feasible_set"), "feasible_set.upper", m),
            tuple(ranges),
        )
        return ProblemInstance(
            mu0=mu0,
            c0_spec=c0_spec,
            mu1=mu1,
            l1=l1,
            gamma_cov=np.array(cov).reshape(n + 1, n + 1),
            scenarios=tuple(scenarios),
            epsilon=eps,
            c_spec=c_spec,
            feasible_set=feasible,
            name=str(doc.get("name", "")),
            comment=str(doc.get("comment", "")),
        )
    except ParseError:
        raise
    except InstanceError as exc:
        raise ParseError(str(exc)) from None


def _spec_dict(spec: FunctionSpec) -> dict:
    return {"kind": spec.kind, "W": [float(w) for w in spec.W.ravel()], "v": [float(x) for x in spec.v]}


def instance_to_dict(inst: ProblemInstance) -> dict:
    """Canonical dictionary form; ``instance_from_dict`` inverts it exactly."""
    doc = {
        "schema_version": SCHEMA_VERSION,
        "name": inst.name,
        "comment": inst.comment,
        "m": inst.m,
        "n": inst.n,
        "mu0": [float(x) for x in inst.mu0],
        "c0_spec": _spec_dict(inst.c0_spec),
        "mu1": [float(x) for x in inst.mu1],
        "l1": inst.l1,
        "gamma_cov": [float(x) for x in inst.gamma_cov.ravel()],
        "scenarios": [{"p": sc.p, "a2": [float(x) for x in sc.a2], "b2": sc.b2, "r": sc.r} for sc in inst.scenarios],
        "epsilon": inst.epsilon,
        "c_spec": _spec_dict(inst.c_spec),
        "feasible_set": {
            "lower": [_num(x) for x in inst.feasible_set.lower],
            "upper": [_num(x) for x in inst.feasible_set.upper],
            "ranges": [
                {"a": [float(x) for x in rg.a], "lo": _num(rg.lo), "hi": _num(rg.hi)} for rg in inst.feasible_set.ranges
            ],
        },
    }
    return doc


def canonical_json(inst: ProblemInstance) -> str:
    return json.dumps(instance_to_dict(inst), sort_keys=True, separators=(",", ":"))


def instance_digest(inst: ProblemInstance) -> str:
    """SHA-256 of the canonical JSON form (metadata fields included)."""
    return "sha256:" + hashlib.sha256(canonical_json(inst).encode("utf-8")).hexdigest()


def bundled_path(name: str) -> Path:
    stem = name[:-5] if name.endswith(".json") else name
    return Path(str(resources.files("ccfp") / "data" / f"{stem}.json"))


def resolve_instance_path(path) -> Path:
    """``path`` itself if it exists, otherwise a bundled instance of that name."""
    p = Path(path)
    if p.exists():
        return p
    if p.parent == Path(".") and (p.stem in BUNDLED):
        return bundled_path(p.stem)
    return p


def load_instance(path) -> ProblemInstance:
    """Parse an instance file; the assumption report is available as ``.report``."""
    p = resolve_instance_path(path)
    try:
        text = p.read_text(encoding="utf-8")
    except OSError as exc:
        raise ParseError(f"cannot read instance file: {exc.strerror or exc}") from None
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"malformed JSON at line {exc.lineno} column {exc.colno}: {exc.msg}") from None
    inst = instance_from_dict(doc)
    inst.report  # noqa: B018  (computed once, cached on the instance)
    return inst


def _dumps(doc) -> str:
    return json.dumps(doc, indent=2, sort_keys=False) + "\n"


def save_instance(inst: ProblemInstance, path) -> None:
    Path(path).write_text(_dumps(instance_to_dict(inst)), encoding="utf-8", newline="\n")


# ---------------------------------------------------------------------------
# results


def result_to_dict(inst, variant, result) -> dict:
    return {
        "tool": "ccfp",
        "tool_version": __version__,
        "instance_digest": instance_digest(inst),
        "variant": {"kind": variant.kind, "K": variant.K, "z_max": variant.z_max},
        "sense": "max",
        "status": result.status,
        "objective": result.objective,
        "x": [float(v) for v in result.x],
        "z": [float(v) for v in result.z],
        "s": [float(v) for v in result.s],
        "kkt": {"stationarity": result.stationarity, "complementarity": result.complementarity},
        "violation": result.violation,
        "active_set": list(result.active_set),
        "message": result.message,
        "wall_ms": 1000.0 * result.wall_time,
    }


def write_json(doc, path) -> None:
    Path(path).write_text(_dumps(doc), encoding="utf-8", newline="\n")


def read_result(path) -> dict:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise ParseError(f"cannot read result file: {exc.strerror or exc}") from None
    except json.JSONDecodeError as exc:
        raise ParseError(f"malformed JSON at line {exc.lineno}: {exc.msg}") from None
    for key in ("instance_digest", "variant", "x"):
        _get(doc, key, "")
    return doc


def fmt(x) -> str:
    return format(float(x), ".15g")


def csv_text(header, rows) -> str:
    buf = _io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt(v) if isinstance(v, (float, np.floating)) else v for v in row])
    return buf.getvalue()
