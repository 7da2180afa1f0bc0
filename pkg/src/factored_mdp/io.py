"""JSON files for MDPs, models, norms and reports.

Floats are written with Python's shortest round-trip representation, so
reading a file back reproduces every matrix bit for bit. Non-finite values
(an infinite concentrability coefficient, say) become the strings
``"inf"``, ``"-inf"`` and ``"nan"``.
"""

from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

from .errors import ValidationError
from .mdp import Mdp
from .model import FactoredLinearModel, GeneralRight, JoinHomRight, RightFactor
from .norms import NormSpec


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        if math.isfinite(x):
            return x
        return "nan" if math.isnan(x) else ("inf" if x > 0 else "-inf")
    return obj


def dumps(obj) -> str:
    return json.dumps(_plain(obj), indent=2, allow_nan=False) + "\n"


def write_json(obj, path):
    Path(path).write_text(dumps(obj))


def read_json(path):
    """Parse a JSON file; syntax errors name the line and column."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ValidationError(f"cannot read {path}: {exc.strerror}") from exc
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        line = text.splitlines()[exc.lineno - 1] if exc.lineno - 1 < len(text.splitlines()) else ""
        raise ValidationError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}\n    {line.strip()}") from exc


def _field(d, key, where):
    if not isinstance(d, dict) or key not in d:
        raise ValidationError(f"{where}: missing field {key!r}")
    return d[key]


def _array(value, where, ndim, dtype=float):
    try:
        arr = np.array(value, dtype=dtype)
    except (TypeError, ValueError) as exc:
        raise ValidationError(f"{where}: ragged or non-numeric array") from exc
    if arr.ndim != ndim:
        raise ValidationError(f"{where}: expected a {ndim}-d array, got shape {arr.shape}")
    return arr


def mdp_to_dict(mdp: Mdp):
    return {"gamma": mdp.gamma, "rewards": mdp.r.tolist(), "transitions": mdp.P.tolist()}


def mdp_from_dict(d, where="mdp") -> Mdp:
    gamma = _field(d, "gamma", where)
    r = _array(_field(d, "rewards", where), f"{where}.rewards", 2)
    P = _array(_field(d, "transitions", where), f"{where}.transitions", 3)
    try:
        return Mdp(P, r, gamma)
    except ValidationError as exc:
        raise ValidationError(f"{where}: {exc}") from exc


def right_to_dict(R: RightFactor):
    if isinstance(R, JoinHomRight):
        return {"type": "joinhom", "a": R.a.tolist(), "J": R.J.tolist()}
    return {"type": "general", "matrix": R.matrix.tolist()}


def right_from_dict(d, m, where="R") -> RightFactor:
    kind = _field(d, "type", where)
    if kind == "joinhom":
        return JoinHomRight(_array(d.get("a"), f"{where}.a", 1), _array(d.get("J"), f"{where}.J", 1, int), m)
    if kind == "general":
        return GeneralRight(_array(d.get("matrix"), f"{where}.matrix", 2))
    raise ValidationError(f"{where}: unknown right factor type {kind!r}")


def model_to_dict(model: FactoredLinearModel):
    d = {"n": model.n, "Q": model.Q.tolist(), "R": right_to_dict(model.R)}
    if not model.shared_piA:
        d["piA"] = [right_to_dict(f) for f in model.piA]
    return d


def model_from_dict(d, mdp: Mdp, where="model") -> FactoredLinearModel:
    Q = _array(_field(d, "Q", where), f"{where}.Q", 3)
    n = int(d.get("n", Q.shape[2]))
    if Q.shape[2] != n:
        raise ValidationError(f"{where}: n = {n} but Q has {Q.shape[2]} columns")
    R = right_from_dict(_field(d, "R", where), mdp.num_states, f"{where}.R")
    piA = None
    if "piA" in d:
        piA = [right_from_dict(f, mdp.num_states, f"{where}.piA[{i}]") for i, f in enumerate(d["piA"])]
    try:
        return FactoredLinearModel.for_mdp(mdp, Q, R, piA)
    except ValidationError as exc:
        raise ValidationError(f"{where}: {exc}") from exc


def load_mdp(path) -> Mdp:
    return mdp_from_dict(read_json(path), where=str(path))


def load_model(path, mdp: Mdp) -> FactoredLinearModel:
    return model_from_dict(read_json(path), mdp, where=str(path))


def load_vector(path):
    """A vector from a JSON list or a whitespace-separated text file."""
    path = Path(path)
    text = path.read_text() if path.exists() else None
    if text is None:
        raise ValidationError(f"cannot read {path}")
    try:
        data = json.loads(text)
    except json.JSONDecodeError:
        try:
            data = np.loadtxt(path, dtype=float, ndmin=1)
        except ValueError as exc:
            raise ValidationError(f"{path}: not a JSON list or whitespace-separated numbers") from exc
    return _array(data, str(path), 1)


def norm_from_dict(d) -> NormSpec:
    return NormSpec.from_dict(d)


__all__ = [
    "dumps",
    "load_mdp",
    "load_model",
    "load_vector",
    "mdp_from_dict",
    "mdp_to_dict",
    "model_from_dict",
    "model_to_dict",
    "norm_from_dict",
    "read_json",
    "right_from_dict",
    "right_to_dict",
    "write_json",
]
