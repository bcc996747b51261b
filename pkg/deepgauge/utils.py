# -*- coding: utf-8 -*-
"""
File interchange: CSV datasets with JSON sidecars, and JSON bundles.
"""
import hashlib
import json
import logging
import os

import numpy as np
import pandas as pd
from django.core.serializers.json import DjangoJSONEncoder

from deepgauge.exceptions import DomainError
from deepgauge.margins import DataMatrix, MarginTag

log = logging.getLogger(__name__)

SIDECAR_VERSION = 1


class NumpyJSONEncoder(DjangoJSONEncoder):
    """DjangoJSONEncoder that also understands numpy scalars and arrays."""

    def default(self, o):
        if isinstance(o, np.ndarray):
            return o.tolist()
        if isinstance(o, np.integer):
            return int(o)
        if isinstance(o, np.floating):
            return float(o)
        if isinstance(o, np.bool_):
            return bool(o)
        return super().default(o)


def dumps(payload):
    return json.dumps(payload, cls=NumpyJSONEncoder, indent=2, sort_keys=True) + "\n"


def write_json(path, payload):
    with open(path, "w") as handle:
        handle.write(dumps(payload))
    log.info(f"Wrote {path}")


def read_json(path):
    with open(path) as handle:
        try:
            return json.load(handle)
        except json.JSONDecodeError as exc:
            raise DomainError(f"{path} is not valid JSON: {exc}") from exc


def sidecar_path(path):
    return f"{path}.json"


def write_frame(path, frame):
    frame.to_csv(path, index=False, float_format=None, lineterminator="\n")
    log.info(f"Wrote {len(frame)} rows to {path}")


def write_dataset(path, data, provenance=None):
    """
    Write a DataMatrix as CSV with a header row, plus a JSON sidecar holding
    the margin tag and provenance.
    """
    write_frame(path, pd.DataFrame(data.values, columns=list(data.columns)))
    sidecar = {"version": SIDECAR_VERSION, "margin": data.margin.value, "n": data.n, "d": data.d}
    sidecar.update(provenance or {})
    write_json(sidecar_path(path), sidecar)


def read_sidecar(path):
    sidecar = sidecar_path(path)
    return read_json(sidecar) if os.path.exists(sidecar) else {}


def read_dataset(path, margin=None):
    """
    Read a CSV dataset. The margin tag comes from ``margin`` or the sidecar,
    and defaults to raw.

    :return: (DataMatrix, sidecar dict)
    """
    frame, values = read_table(path)
    sidecar = read_sidecar(path)
    try:
        tag = MarginTag(margin or sidecar.get("margin", MarginTag.RAW.value))
    except ValueError as exc:
        raise DomainError(f"{path}: {exc}") from exc
    return DataMatrix(values, tag, tuple(frame.columns)), sidecar


def read_table(path):
    """
    Read a numeric CSV table with a header row.

    :return: (DataFrame, float array of its values)
    """
    try:
        frame = pd.read_csv(path)
        values = frame.to_numpy(dtype=float)
    except ValueError as exc:
        raise DomainError(f"cannot read {path} as a numeric table: {exc}") from exc
    if np.isnan(values).any():
        raise DomainError(f"{path} contains missing values")
    return frame, values


def file_digest(path):
    digest = hashlib.sha256()
    with open(path, "rb") as handle:
        for chunk in iter(lambda: handle.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


def derive_seed(*keys):
    """Deterministic 32-bit seed from a sequence of integers."""
    return int(np.random.SeedSequence([int(k) for k in keys]).generate_state(1)[0])
