"""JSON function documents and full-precision CSV files.

Function document::

    {"base": {"kind": "sin", "b": 3.14159...},
     "poly": [[re, im], ...],                    # ascending powers
     "tail": {"M": 2, "modes": {"1": [re, im], "-2": [re, im]}}}

Complex numbers are always ``[re, im]`` pairs; floats in CSV use 17
significant digits.
"""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np

from .core_model import FourierTail, MainPart, SineTypeBase, ThetaFunction, ZeroSequence
from .errors import ValidationError


def fmt(x) -> str:
    if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
        return str(int(x))
    return format(float(x), ".17g")


def _complex(pair, where):
    if isinstance(pair, (int, float)) and not isinstance(pair, bool):
        return complex(pair)
    if not (isinstance(pair, (list, tuple)) and len(pair) == 2):
        raise ValidationError(f"{where}: complex numbers must be [re, im] pairs")
    try:
        return complex(float(pair[0]), float(pair[1]))
    except (TypeError, ValueError) as exc:
        raise ValidationError(f"{where}: non-numeric entry") from exc


def _pair(z):
    z = complex(z)
    return [z.real, z.imag]


def tail_to_dict(tail: FourierTail) -> dict:
    return {"M": tail.M, "modes": {str(k): _pair(v) for k, v in tail.modes().items()}}


def tail_from_dict(doc, b: float) -> FourierTail:
    if doc is None:
        return FourierTail.zero(b)
    if not isinstance(doc, dict):
        raise ValidationError("tail must be an object")
    modes_doc = doc.get("modes", {})
    if not isinstance(modes_doc, dict):
        raise ValidationError("tail.modes must be an object")
    try:
        modes = {int(k): _complex(v, f"tail.modes[{k}]") for k, v in modes_doc.items()}
    except ValueError as exc:
        raise ValidationError("tail mode keys must be integers") from exc
    M = doc.get("M")
    if M is not None and (not isinstance(M, int) or M < 0):
        raise ValidationError("tail.M must be a nonnegative integer")
    return FourierTail.from_modes(b, modes, M)


def function_from_dict(doc) -> ThetaFunction:
    if not isinstance(doc, dict):
        raise ValidationError("function document must be an object")
    base_doc = doc.get("base")
    if not isinstance(base_doc, dict) or base_doc.get("kind") != "sin":
        raise ValidationError("base must be {\"kind\": \"sin\", \"b\": <real>}")
    try:
        b = float(base_doc["b"])
    except (KeyError, TypeError, ValueError) as exc:
        raise ValidationError("base.b must be a real number") from exc
    if not (math.isfinite(b) and b > 0):
        raise ValidationError("base.b must be positive")
    poly_doc = doc.get("poly", [[1.0, 0.0]])
    if not isinstance(poly_doc, list) or not poly_doc:
        raise ValidationError("poly must be a nonempty list")
    poly = [_complex(p, f"poly[{i}]") for i, p in enumerate(poly_doc)]
    main = MainPart(SineTypeBase.sin_scaled(b), np.array(poly))
    return ThetaFunction(main, tail_from_dict(doc.get("tail"), b))


def function_to_dict(theta: ThetaFunction) -> dict:
    if theta.main.base.kind != "sin":
        raise ValidationError("only sin bases are serialisable")
    return {"base": {"kind": "sin", "b": theta.b},
            "poly": [_pair(c) for c in theta.main.poly],
            "tail": tail_to_dict(theta.tail)}


def _read_json(path):
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}: malformed JSON ({exc.msg})") from exc
    except OSError as exc:
        raise ValidationError(f"{path}: {exc.strerror}") from exc


def load_function(path) -> ThetaFunction:
    return function_from_dict(_read_json(path))


def save_function(theta: ThetaFunction, path):
    Path(path).write_text(json.dumps(function_to_dict(theta), indent=2) + "\n", encoding="utf-8")


def load_tail(path, b: float) -> FourierTail:
    doc = _read_json(path)
    if isinstance(doc, dict) and "base" in doc:
        return function_from_dict(doc).tail
    return tail_from_dict(doc, b)


def save_tail(tail: FourierTail, path):
    Path(path).write_text(json.dumps(tail_to_dict(tail), indent=2) + "\n", encoding="utf-8")


def write_csv(path, header, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(header)
        for row in rows:
            wr.writerow([v if isinstance(v, str) else fmt(v) for v in row])


def read_csv(path):
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise ValidationError(f"{path}: {exc.strerror}") from exc
    if not rows:
        raise ValidationError(f"{path}: empty CSV")
    return rows[0], rows[1:]


ZERO_COLUMNS = ["n", "re_z", "im_z", "re_z0", "im_z0", "re_kappa", "im_kappa"]


def write_zeros_csv(path, zeros: ZeroSequence):
    k = zeros.kappa
    rows = zip(zeros.indices, zeros.zeros.real, zeros.zeros.imag, zeros.lattice.real,
               zeros.lattice.imag, k.real, k.imag)
    write_csv(path, ZERO_COLUMNS, rows)


def read_zeros_csv(path, main: MainPart) -> ZeroSequence:
    """Zeros from ``zeros.csv``; lattice columns are recomputed from ``main``."""
    header, rows = read_csv(path)
    if header[:3] != ZERO_COLUMNS[:3]:
        raise ValidationError(f"{path}: expected columns {ZERO_COLUMNS}")
    try:
        n = np.array([int(r[0]) for r in rows], dtype=np.int64)
        z = np.array([complex(float(r[1]), float(r[2])) for r in rows])
    except (ValueError, IndexError) as exc:
        raise ValidationError(f"{path}: malformed row") from exc
    if n.size == 0:
        raise ValidationError(f"{path}: no zeros")
    if np.any(np.diff(n) != 1):
        raise ValidationError(f"{path}: indices must be consecutive")
    return ZeroSequence.from_main(main, z, first=int(n[0]))


def read_spectrum_csv(path):
    """Rows ``n, re(lambda), im(lambda)`` with ``n = 1, 2, ...``."""
    header, rows = read_csv(path)
    try:
        n = np.array([int(r[0]) for r in rows])
        lam = np.array([complex(float(r[1]), float(r[2]) if len(r) > 2 else 0.0) for r in rows])
    except (ValueError, IndexError) as exc:
        raise ValidationError(f"{path}: malformed spectrum row") from exc
    if n.size == 0 or not np.array_equal(n, np.arange(1, n.size + 1)):
        raise ValidationError(f"{path}: spectrum indices must run 1..K")
    return lam
