"""Deterministic serialization for reports.

Reports are nested dicts of scalars/lists written as YAML with insertion
order preserved and floats emitted via repr (shortest exact round-trip), so
identical inputs produce byte-identical files and parsing recovers the exact
values.
"""

import hashlib

import yaml


class _Dumper(yaml.SafeDumper):
    pass


def _float_representer(dumper, value):
    return dumper.represent_scalar("tag:yaml.org,2002:float", repr(float(value)))


_Dumper.add_representer(float, _float_representer)


def _sanitize(obj):
    """Coerce numpy scalars/arrays to native types for serialization."""
    import numpy as np

    if isinstance(obj, dict):
        return {k: _sanitize(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_sanitize(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_sanitize(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    return obj


def dump_report(report):
    return yaml.dump(_sanitize(report), Dumper=_Dumper, sort_keys=False,
                     default_flow_style=False)


def parse_report(text):
    return yaml.safe_load(text)


def write_report(report, path):
    with open(path, "w") as fh:
        fh.write(dump_report(report))


def read_report(path):
    with open(path) as fh:
        return parse_report(fh.read())


def digest_file(path):
    sha = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            sha.update(chunk)
    return "sha256:" + sha.hexdigest()


def digest_array(arr):
    import numpy as np

    return "sha256:" + hashlib.sha256(np.ascontiguousarray(arr).tobytes()).hexdigest()
