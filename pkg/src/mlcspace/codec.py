"""Canonical JSON documents and MEKA-style command lines.

JSON layout (version 1)::

    {"version": 1,
     "threshold": "PCut1" | "PCutL" | {"real": 0.25},
     "mlc": {"meta": {"id": ..., "params": {...}},          # optional
             "core": {"pt": "BR" | "aa": "ML-BPNN",
                      "params": {...},
                      "slc": {"meta": {"id": ..., "params": {...}},   # optional
                              "asc": "BestFirst",                     # optional
                              "base": "NB", "params": {...}}}}}

Command lines nest layers with ``-W <name> --``: meta-MLC, MLC, meta-SLC,
ASC and base classifier, each followed by its flags in catalog order.
"""

from __future__ import annotations

import json
import math
import shlex
from pathlib import Path

from .catalog import ALGORITHMS, KERNELS, META_MLC, META_SLC, spec_map
from .config import Component, Configuration, MlcCore, SlcBase, SlcChain, Threshold
from .constraints import ASC_METHODS, validate
from .tiers import registry

__all__ = [
    "InvalidConfiguration", "SCHEMA_VERSION", "SchemaError", "canonical_names",
    "from_json", "load_names", "parse_meka_command", "to_document", "to_json",
    "to_meka_command",
]

SCHEMA_VERSION = 1


class SchemaError(ValueError):
    def __init__(self, path: str, reason: str):
        self.path, self.reason = path, reason
        super().__init__(f"{path}: {reason}")


class InvalidConfiguration(ValueError):
    def __init__(self, report):
        self.report = report
        super().__init__("hard violations: " + ", ".join(f.code for f in report.violations))


# --------------------------------------------------------------------------
# JSON

def _threshold_doc(t: Threshold):
    return {"real": t.value} if t.kind == "real" else t.kind


def _component_doc(c: Component) -> dict:
    return {"id": c.id, "params": dict(c.params)}


def to_document(c: Configuration) -> dict:
    core = c.core
    core_doc = {("aa" if core.is_adaptation else "pt"): core.id, "params": dict(core.params)}
    if core.slc is not None:
        chain = core.slc
        slc = {"base": chain.base.id, "params": dict(chain.base.params)}
        if chain.meta is not None:
            slc["meta"] = _component_doc(chain.meta)
        if chain.base.asc is not None:
            slc["asc"] = chain.base.asc
        core_doc["slc"] = slc
    mlc = {"core": core_doc}
    if c.meta is not None:
        mlc["meta"] = _component_doc(c.meta)
    return {"version": SCHEMA_VERSION, "threshold": _threshold_doc(c.threshold), "mlc": mlc}


def to_json(c: Configuration) -> str:
    """Canonical text: sorted keys, no spaces, shortest round-trip floats."""
    return json.dumps(to_document(c), sort_keys=True, separators=(",", ":"), allow_nan=False)


def _obj(v, path, required=(), optional=()) -> dict:
    if not isinstance(v, dict):
        raise SchemaError(path, "expected an object")
    for k in v:
        if k not in required and k not in optional:
            raise SchemaError(f"{path}.{k}", "unknown field")
    for k in required:
        if k not in v:
            raise SchemaError(f"{path}.{k}", "missing field")
    return v


def _is_int(v) -> bool:
    return isinstance(v, int) and not isinstance(v, bool)


def _is_real(v) -> bool:
    return isinstance(v, (int, float)) and not isinstance(v, bool) and math.isfinite(v)


def _value(spec, v, path):
    kind = spec.kind
    ok = (
        (kind == "int" and _is_int(v))
        or (kind == "real" and _is_real(v))
        or (kind == "cat" and not isinstance(v, bool) and v in spec.values)
        or (kind == "flag" and v is True)
    )
    if kind == "kernel":
        d = _obj(v, path, ("name",), ("exp", "ulo", "om", "sig", "g"))
        if d["name"] not in KERNELS:
            raise SchemaError(f"{path}.name", f"unknown kernel {d['name']!r}")
        subs = {s.name: s for s in KERNELS[d["name"]]}
        for k, sub in d.items():
            if k == "name":
                continue
            if k not in subs:
                raise SchemaError(f"{path}.{k}", f"not a {d['name']} parameter")
            _value(subs[k], sub, f"{path}.{k}")
        return
    if not ok:
        raise SchemaError(path, f"invalid {kind} value {v!r}")


def _params(alg, v, path) -> dict:
    if not isinstance(v, dict):
        raise SchemaError(path, "expected an object")
    specs = spec_map(alg)
    for name, val in v.items():
        if name not in specs:
            raise SchemaError(f"{path}.{name}", f"{alg} has no parameter {name!r}")
        _value(specs[name], val, f"{path}.{name}")
    return dict(v)


def _alg(v, path, allowed) -> str:
    if not isinstance(v, str) or v not in allowed:
        raise SchemaError(path, f"unknown or misplaced algorithm {v!r}")
    return v


def _ids(level) -> frozenset:
    return frozenset(registry().by_key(level))


def from_json(text: str) -> Configuration:
    """Inverse of ``to_json``; raises ``SchemaError`` on any deviation."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise SchemaError("$", f"malformed JSON: {e.msg}") from None
    return from_document(doc)


def from_document(doc) -> Configuration:
    doc = _obj(doc, "$", ("version", "threshold", "mlc"))
    if doc["version"] != SCHEMA_VERSION or isinstance(doc["version"], bool):
        raise SchemaError("$.version", f"unsupported version {doc['version']!r}")
    th = doc["threshold"]
    if th in ("PCut1", "PCutL"):
        threshold = Threshold(th)
    else:
        _obj(th, "$.threshold", ("real",))
        v = th["real"]
        if not _is_real(v) or not 0.0 < v < 1.0:
            raise SchemaError("$.threshold.real", "must lie strictly inside (0, 1)")
        threshold = Threshold.real(v)

    mlc = _obj(doc["mlc"], "$.mlc", ("core",), ("meta",))
    meta = None
    if "meta" in mlc:
        m = _obj(mlc["meta"], "$.mlc.meta", ("id", "params"))
        mid = _alg(m["id"], "$.mlc.meta.id", META_MLC)
        meta = Component(mid, _params(mid, m["params"], "$.mlc.meta.params"))

    core = mlc["core"]
    if isinstance(core, dict) and "aa" in core:
        core = _obj(core, "$.mlc.core", ("aa", "params"))
        cid = _alg(core["aa"], "$.mlc.core.aa", {"ML-BPNN"})
        return Configuration(
            threshold, MlcCore(cid, _params(cid, core["params"], "$.mlc.core.params")), meta)
    core = _obj(core, "$.mlc.core", ("pt", "params", "slc"))
    pts = _ids("MLC") - META_MLC - {"ML-BPNN"}
    cid = _alg(core["pt"], "$.mlc.core.pt", pts)
    params = _params(cid, core["params"], "$.mlc.core.params")

    s = _obj(core["slc"], "$.mlc.core.slc", ("base", "params"), ("meta", "asc"))
    smeta = None
    if "meta" in s:
        m = _obj(s["meta"], "$.mlc.core.slc.meta", ("id", "params"))
        sid = _alg(m["id"], "$.mlc.core.slc.meta.id", META_SLC)
        smeta = Component(sid, _params(sid, m["params"], "$.mlc.core.slc.meta.params"))
    asc = s.get("asc")
    if asc is not None and asc not in ASC_METHODS:
        raise SchemaError("$.mlc.core.slc.asc", f"unknown search method {asc!r}")
    bases = _ids("SLC") - META_SLC - {"ASC"}
    bid = _alg(s["base"], "$.mlc.core.slc.base", bases)
    base = SlcBase(bid, _params(bid, s["params"], "$.mlc.core.slc.params"), asc)
    return Configuration(threshold, MlcCore(cid, params, SlcChain(base, smeta)), meta)


# --------------------------------------------------------------------------
# command lines

def canonical_names() -> dict:
    """Algorithm key -> command name (the acronym of the tier tables)."""
    return {r.key: r.acronym for r in registry().records}


def load_names(path) -> dict:
    """Canonical names updated with a JSON remapping ``{key: name}``."""
    names = canonical_names()
    extra = json.loads(Path(path).read_text("utf-8"))
    if not isinstance(extra, dict) or not all(isinstance(v, str) for v in extra.values()):
        raise SchemaError("$", "remapping must be an object of strings")
    unknown = set(extra) - set(names)
    if unknown:
        raise SchemaError("$", f"unknown algorithm keys {sorted(unknown)}")
    names.update(extra)
    return names


def _fmt(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _flags(alg: str, params: dict, specs=None) -> list[str]:
    out = []
    for spec in specs if specs is not None else ALGORITHMS[alg]:
        if spec.name not in params:
            continue
        v = params[spec.name]
        if spec.kind == "flag":
            if v:
                out.append(spec.flag)
        elif spec.kind == "kernel":
            inner = [v["name"]] + _flags(alg, v, KERNELS[v["name"]])
            out += [spec.flag, " ".join(inner)]
        elif spec.flag == "":
            out.append(f"-{v}")  # the value itself is the flag (KNN weighting)
        else:
            out += [spec.flag, _fmt(v)]
    return out


def _layers(c: Configuration) -> list[tuple[str, list[str]]]:
    layers = []
    if c.meta is not None:
        layers.append((c.meta.id, _flags(c.meta.id, c.meta.params)))
    layers.append((c.core.id, _flags(c.core.id, c.core.params)))
    chain = c.core.slc
    if chain is not None:
        if chain.meta is not None:
            layers.append((chain.meta.id, _flags(chain.meta.id, chain.meta.params)))
        if chain.base.asc is not None:
            layers.append(("ASC", ["-S", chain.base.asc]))
        layers.append((chain.base.id, _flags(chain.base.id, chain.base.params)))
    return layers


def to_meka_command(c: Configuration, names: dict | None = None, ctx=None) -> str:
    """Nested command line; raises ``InvalidConfiguration`` on hard violations.

    ``ctx`` enables the dataset-dependent checks before emission.
    """
    report = validate(c, ctx)
    if not report.valid:
        raise InvalidConfiguration(report)
    names = names or canonical_names()
    layers = _layers(c)

    def rest(i):
        toks = list(layers[i][1])
        if i + 1 < len(layers):
            toks += ["-W", names[layers[i + 1][0]]]
            tail = rest(i + 1)
            if tail:
                toks += ["--"] + tail
        return toks

    toks = [names[layers[0][0]], "-threshold", str(c.threshold)] + rest(0)
    return " ".join(shlex.quote(t) for t in toks)


class _Tokens:
    def __init__(self, toks):
        self.toks, self.i = toks, 0

    def peek(self):
        return self.toks[self.i] if self.i < len(self.toks) else None

    def take(self, what="a token"):
        if self.i >= len(self.toks):
            raise SchemaError(f"token {self.i}", f"expected {what}")
        self.i += 1
        return self.toks[self.i - 1]


def _parse_value(spec, text, where):
    try:
        if spec.kind == "int":
            return int(text)
        if spec.kind == "real":
            return float(text)
    except ValueError:
        raise SchemaError(where, f"bad {spec.kind} {text!r}") from None
    for v in spec.values:
        if str(v) == text:
            return v
    raise SchemaError(where, f"{text!r} not in {spec.values}")


def _parse_flags(alg, ts: _Tokens, leaf: bool, specs=None) -> dict:
    by_flag = {}
    for s in specs if specs is not None else ALGORITHMS[alg]:
        if s.flag == "":
            for v in s.values:
                by_flag[f"-{v}"] = (s, v)
        else:
            by_flag[s.flag] = (s, None)
    params = {}
    while ts.peek() is not None and not (ts.peek() == "-W" and not leaf):
        where = f"token {ts.i}"
        tok = ts.take()
        if tok not in by_flag:
            raise SchemaError(where, f"{alg} has no flag {tok!r}")
        spec, fixed = by_flag[tok]
        if fixed is not None:
            params[spec.name] = fixed
        elif spec.kind == "flag":
            params[spec.name] = True
        elif spec.kind == "kernel":
            inner = _Tokens(shlex.split(ts.take("a kernel")))
            name = inner.take("a kernel name")
            if name not in KERNELS:
                raise SchemaError(where, f"unknown kernel {name!r}")
            params[spec.name] = {"name": name, **_parse_flags(alg, inner, True, KERNELS[name])}
        else:
            params[spec.name] = _parse_value(spec, ts.take("a value"), where)
    return params


def parse_meka_command(text: str, names: dict | None = None) -> Configuration:
    """Parse a command produced by ``to_meka_command`` back to a Configuration."""
    names = names or canonical_names()
    levels = {r.key: r.level for r in registry().records}
    inverse = {}
    for key, name in names.items():
        inverse[(levels[key], name)] = key
    ts = _Tokens(shlex.split(text))

    def name_at(level, allowed):
        where = f"token {ts.i}"
        key = inverse.get((level, ts.take("an algorithm name")))
        if key not in allowed:
            raise SchemaError(where, "unexpected algorithm")
        return key

    def delegate():
        if ts.take("-W") != "-W":
            raise SchemaError(f"token {ts.i - 1}", "expected -W")

    mlc_ids = set(registry().by_key("MLC"))
    slc_ids = set(registry().by_key("SLC"))
    first = name_at("MLC", mlc_ids)
    if ts.take("-threshold") != "-threshold":
        raise SchemaError("token 1", "expected -threshold")
    t = ts.take("a threshold")
    if t in ("PCut1", "PCutL"):
        threshold = Threshold(t)
    else:
        try:
            threshold = Threshold.real(float(t))
        except ValueError:
            raise SchemaError("token 2", f"bad threshold {t!r}") from None

    def layer(alg, leaf):
        params = _parse_flags(alg, ts, leaf)
        has_inner = ts.peek() == "-W"
        return params, has_inner

    def inner(level, allowed):
        delegate()
        alg = name_at(level, allowed)
        if ts.peek() == "--":
            ts.take()
        return alg

    meta = None
    if first in META_MLC:
        params, more = layer(first, False)
        meta = Component(first, params)
        if not more:
            raise SchemaError(f"token {ts.i}", "meta-MLC needs an inner algorithm")
        first = inner("MLC", mlc_ids - META_MLC)
    if first == "ML-BPNN":
        params, _ = layer(first, True)
        core = MlcCore(first, params)
    else:
        params, more = layer(first, False)
        if not more:
            raise SchemaError(f"token {ts.i}", f"{first} needs an SLC classifier")
        alg = inner("SLC", slc_ids)
        smeta = asc = None
        if alg in META_SLC:
            sp, more = layer(alg, False)
            smeta = Component(alg, sp)
            if not more:
                raise SchemaError(f"token {ts.i}", f"{alg} needs a base classifier")
            alg = inner("SLC", slc_ids - META_SLC)
        if alg == "ASC":
            ap, more = layer("ASC", False)
            asc = ap.get("sm")
            if not more or asc is None:
                raise SchemaError(f"token {ts.i}", "ASC needs -S and a base classifier")
            alg = inner("SLC", slc_ids - META_SLC - {"ASC"})
        bp, _ = layer(alg, True)
        core = MlcCore(first, params, SlcChain(SlcBase(alg, bp, asc), smeta))
    if ts.peek() is not None:
        raise SchemaError(f"token {ts.i}", f"trailing input {ts.peek()!r}")
    return Configuration(threshold, core, meta)


# --------------------------------------------------------------------------
# JSON Schema

def _param_schema(spec) -> dict:
    if spec.kind == "int":
        return {"type": "integer"}
    if spec.kind == "real":
        return {"type": "number"}
    if spec.kind == "flag":
        return {"const": True}
    if spec.kind == "cat":
        return {"enum": list(spec.values)}
    return {"oneOf": [
        {"type": "object", "additionalProperties": False, "required": ["name"],
         "properties": {"name": {"const": name}, **{s.name: _param_schema(s) for s in subs}}}
        for name, subs in KERNELS.items()
    ]}


def _ref(name) -> dict:
    return {"$ref": f"#/$defs/{name}"}


def _component_schema(ids) -> dict:
    return {"oneOf": [
        {"type": "object", "additionalProperties": False, "required": ["id", "params"],
         "properties": {"id": {"const": a}, "params": _ref(f"params:{a}")}}
        for a in sorted(ids)
    ]}


def json_schema() -> dict:
    """JSON Schema (draft 2020-12) of the version-1 document.

    Structure and parameter types are covered; numeric intervals depend on
    the dataset and are left to ``validate``.
    """
    pts = sorted(_ids("MLC") - META_MLC - {"ML-BPNN"})
    bases = sorted(_ids("SLC") - META_SLC - {"ASC"})
    defs = {
        f"params:{a}": {"type": "object", "additionalProperties": False,
                        "properties": {s.name: _param_schema(s) for s in specs}}
        for a, specs in ALGORITHMS.items()
    }
    defs["meta-mlc"] = _component_schema(META_MLC)
    defs["meta-slc"] = _component_schema(META_SLC)
    defs["slc"] = {"oneOf": [
        {"type": "object", "additionalProperties": False, "required": ["base", "params"],
         "properties": {
             "base": {"const": b}, "params": _ref(f"params:{b}"),
             "asc": {"enum": list(ASC_METHODS)}, "meta": _ref("meta-slc"),
         }}
        for b in bases
    ]}
    pt_core = {"oneOf": [
        {"type": "object", "additionalProperties": False, "required": ["pt", "params", "slc"],
         "properties": {"pt": {"const": a}, "params": _ref(f"params:{a}"), "slc": _ref("slc")}}
        for a in pts
    ]}
    aa_core = {"type": "object", "additionalProperties": False, "required": ["aa", "params"],
               "properties": {"aa": {"const": "ML-BPNN"}, "params": _ref("params:ML-BPNN")}}
    return {
        "$schema": "https://json-schema.org/draft/2020-12/schema",
        "title": "mlcspace configuration",
        "type": "object",
        "additionalProperties": False,
        "required": ["version", "threshold", "mlc"],
        "properties": {
            "version": {"const": SCHEMA_VERSION},
            "threshold": {"oneOf": [
                {"enum": ["PCut1", "PCutL"]},
                {"type": "object", "additionalProperties": False, "required": ["real"],
                 "properties": {"real": {"type": "number", "exclusiveMinimum": 0,
                                         "exclusiveMaximum": 1}}},
            ]},
            "mlc": {
                "type": "object", "additionalProperties": False, "required": ["core"],
                "properties": {"meta": _ref("meta-mlc"),
                               "core": {"oneOf": [pt_core, aa_core]}},
            },
        },
        "$defs": defs,
    }


__all__ += ["from_document", "json_schema"]
