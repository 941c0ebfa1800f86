"""On-disk formats for datasets, chains, reports and summaries.

All writers are deterministic: floats are rendered with 17 significant
digits (full float64 round-trip), JSON keys are sorted, and arrays are
stored as raw .npy files, so rerunning a seeded pipeline reproduces every
artifact byte for byte. Wall-clock timings are written to separate
provenance files that reruns are allowed to change.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .core import (
    Chain,
    Dataset,
    Hyperparameters,
    ValidationError,
    dataset_fingerprint,
)
from .harness import ReplicateReport
from .simulate import GroundTruth

__all__ = [
    "write_dataset",
    "read_dataset",
    "write_truth",
    "read_truth",
    "write_chain",
    "read_chain",
    "write_report",
    "read_report",
    "write_summary",
]

FORMAT_VERSION = 1


def _fmt(x):
    return format(float(x), ".17g")


def _write_json(path, payload):
    path.write_text(json.dumps(payload, sort_keys=True, indent=1) + "\n")


def _read_json(path, expected_kind):
    if not path.exists():
        raise ValidationError(f"missing file: {path}")
    try:
        payload = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ValidationError(f"corrupt JSON in {path}: {exc}") from exc
    if payload.get("format_version") != FORMAT_VERSION:
        raise ValidationError(
            f"{path}: format_version {payload.get('format_version')} "
            f"unsupported (expected {FORMAT_VERSION})"
        )
    if payload.get("kind") != expected_kind:
        raise ValidationError(
            f"{path}: kind {payload.get('kind')!r} is not {expected_kind!r}"
        )
    return payload


def _write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


def _read_csv(path, expected_header=None):
    if not path.exists():
        raise ValidationError(f"missing file: {path}")
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration as exc:
            raise ValidationError(f"{path} is empty") from exc
        if expected_header is not None and header != expected_header:
            raise ValidationError(f"{path} has header {header}, expected {expected_header}")
        return header, [row for row in reader if row]


# ---------------------------------------------------------------------------
# Dataset
# ---------------------------------------------------------------------------


def write_dataset(data, path, edge_format="long"):
    """Write a dataset directory.

    edge_format "long" (canonical) stores one row per upper-triangle edge
    as (subject, u, v, value); "matrix" stores one full V x V CSV per
    subject under networks/.
    """
    data.validate()
    if edge_format not in ("long", "matrix"):
        raise ValidationError(f"unknown edge_format {edge_format!r}")
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    _write_json(
        path / "manifest.json",
        {
            "format_version": FORMAT_VERSION,
            "kind": "dataset",
            "n_subjects": data.n_subjects,
            "n_nodes": data.n_nodes,
            "n_aux": data.n_aux,
            "edge_format": edge_format,
            "fingerprint": dataset_fingerprint(data),
        },
    )
    _write_csv(
        path / "coords.csv",
        ["node", "x", "y", "z"],
        ([str(v), *map(_fmt, row)] for v, row in enumerate(data.coords)),
    )
    _write_csv(
        path / "attributes.csv",
        [f"node_{v}" for v in range(data.n_nodes)],
        (map(_fmt, row) for row in data.attributes),
    )
    _write_csv(path / "predictor.csv", ["x"], ([_fmt(x)] for x in data.predictor))
    if data.n_aux > 0:
        _write_csv(
            path / "auxiliaries.csv",
            [f"w_{j}" for j in range(data.n_aux)],
            (map(_fmt, row) for row in data.auxiliaries),
        )
    if edge_format == "long":
        iu, iv = np.triu_indices(data.n_nodes, k=1)
        rows = (
            [str(i), str(u), str(v), _fmt(data.networks[i, u, v])]
            for i in range(data.n_subjects)
            for u, v in zip(iu, iv)
        )
        _write_csv(path / "edges.csv", ["subject", "u", "v", "value"], rows)
    else:
        netdir = path / "networks"
        netdir.mkdir(exist_ok=True)
        width = len(str(max(data.n_subjects - 1, 1)))
        for i, net in enumerate(data.networks):
            _write_csv(
                netdir / f"subject_{i:0{width}d}.csv",
                [f"node_{v}" for v in range(data.n_nodes)],
                (map(_fmt, row) for row in net),
            )
    return path


def _parse_float(token, where):
    value = float(token)
    if not np.isfinite(value):
        raise ValidationError(f"non-finite value in {where}")
    return value


def read_dataset(path):
    """Load a dataset directory written by :func:`write_dataset`."""
    path = Path(path)
    manifest = _read_json(path / "manifest.json", "dataset")
    n, v, q = manifest["n_subjects"], manifest["n_nodes"], manifest["n_aux"]

    _, rows = _read_csv(path / "coords.csv", ["node", "x", "y", "z"])
    if len(rows) != v:
        raise ValidationError(f"coords.csv has {len(rows)} rows, expected {v}")
    coords = np.array([[_parse_float(t, "coords.csv") for t in row[1:]] for row in rows])

    _, rows = _read_csv(path / "attributes.csv")
    attributes = np.array([[_parse_float(t, "attributes.csv") for t in row] for row in rows])
    if attributes.shape != (n, v):
        raise ValidationError(f"attributes.csv has shape {attributes.shape}, expected {(n, v)}")

    _, rows = _read_csv(path / "predictor.csv", ["x"])
    predictor = np.array([_parse_float(row[0], "predictor.csv") for row in rows])
    if predictor.shape != (n,):
        raise ValidationError(f"predictor.csv has {predictor.shape[0]} rows, expected {n}")

    if q > 0:
        _, rows = _read_csv(path / "auxiliaries.csv")
        auxiliaries = np.array(
            [[_parse_float(t, "auxiliaries.csv") for t in row] for row in rows]
        )
        if auxiliaries.shape != (n, q):
            raise ValidationError(
                f"auxiliaries.csv has shape {auxiliaries.shape}, expected {(n, q)}"
            )
    else:
        auxiliaries = np.zeros((n, 0))

    networks = np.zeros((n, v, v))
    if manifest["edge_format"] == "long":
        _, rows = _read_csv(path / "edges.csv", ["subject", "u", "v", "value"])
        seen = np.zeros((n, v, v), dtype=bool)
        for row in rows:
            i, u, w = int(row[0]), int(row[1]), int(row[2])
            if not (0 <= i < n and 0 <= u < w < v):
                raise ValidationError(
                    f"edges.csv row (subject={i}, u={u}, v={w}) out of range or not u < v"
                )
            networks[i, u, w] = networks[i, w, u] = _parse_float(row[3], "edges.csv")
            seen[i, u, w] = True
        iu = np.triu_indices(v, k=1)
        if not np.all(seen[:, iu[0], iu[1]]):
            raise ValidationError("edges.csv does not cover every (subject, edge) pair")
    else:
        netdir = path / "networks"
        files = sorted(netdir.glob("subject_*.csv")) if netdir.is_dir() else []
        if len(files) != n:
            raise ValidationError(f"networks/ holds {len(files)} files, expected {n}")
        for i, file in enumerate(files):
            _, rows = _read_csv(file)
            mat = np.array([[_parse_float(t, file.name) for t in row] for row in rows])
            if mat.shape != (v, v):
                raise ValidationError(f"{file.name} has shape {mat.shape}, expected {(v, v)}")
            asym = np.abs(mat - mat.T)
            if asym.max() > 1e-10:
                u, w = np.unravel_index(np.argmax(asym), mat.shape)
                raise ValidationError(
                    f"asymmetric network (subject={i}, u={u}, v={w}) in {file.name}"
                )
            mat = (mat + mat.T) / 2.0
            np.fill_diagonal(mat, 0.0)
            networks[i] = mat

    data = Dataset(
        networks=networks,
        attributes=attributes,
        predictor=predictor,
        auxiliaries=auxiliaries,
        coords=coords,
    ).validate()
    recorded = manifest.get("fingerprint")
    if recorded is not None and recorded != dataset_fingerprint(data):
        raise ValidationError(f"{path}: dataset contents do not match recorded fingerprint")
    return data


# ---------------------------------------------------------------------------
# Ground truth
# ---------------------------------------------------------------------------

_TRUTH_ARRAYS = ("active", "latents", "slab_cov", "edge_coef", "coords", "spatial_effects")


def write_truth(truth, path, scenario=None):
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    meta = {"format_version": FORMAT_VERSION, "kind": "truth"}
    if scenario is not None:
        meta["scenario"] = scenario
    _write_json(path / "meta.json", meta)
    for name in _TRUTH_ARRAYS:
        np.save(path / f"{name}.npy", getattr(truth, name))
    return path


def read_truth(path):
    path = Path(path)
    _read_json(path / "meta.json", "truth")
    arrays = {}
    for name in _TRUTH_ARRAYS:
        file = path / f"{name}.npy"
        if not file.exists():
            raise ValidationError(f"missing file: {file}")
        arrays[name] = np.load(file)
    return GroundTruth(**arrays)


# ---------------------------------------------------------------------------
# Chain
# ---------------------------------------------------------------------------


def _hyper_to_dict(hyper):
    return {
        "rank": hyper.rank,
        "shrink_exp": hyper.shrink_exp,
        "var_shape": hyper.var_shape,
        "var_rate": hyper.var_rate,
        "slab_df": hyper.slab_df,
        "slab_scale": [[float(x) for x in row] for row in hyper.slab_scale],
        "incl_a": hyper.incl_a,
        "incl_b": hyper.incl_b,
        "decay_grid": [float(x) for x in hyper.decay_grid],
        "iterations": hyper.iterations,
        "burnin": hyper.burnin,
        "seed": hyper.seed,
        "kernel_jitter": hyper.kernel_jitter,
        "mean_prior_var": hyper.mean_prior_var,
        "whiten_latents": hyper.whiten_latents,
    }


def _hyper_from_dict(payload):
    payload = dict(payload)
    payload["slab_scale"] = np.asarray(payload["slab_scale"], dtype=np.float64)
    payload["decay_grid"] = np.asarray(payload["decay_grid"], dtype=np.float64)
    return Hyperparameters(**payload)


def write_chain(chain, path):
    """Write a chain directory: meta.json + one .npy per parameter trace.

    The metadata sidecar records hyperparameters, seed and fingerprint but
    not wall-clock time, which goes to runinfo.json so that reruns remain
    byte-identical on every load-bearing artifact.
    """
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    _write_json(
        path / "meta.json",
        {
            "format_version": FORMAT_VERSION,
            "kind": "chain",
            "n_draws": len(chain),
            "seed": chain.seed,
            "stream": chain.stream,
            "dataset_fingerprint": chain.dataset_fingerprint,
            "variant_flags": chain.variant_flags,
            "hyper": _hyper_to_dict(chain.hyper),
        },
    )
    if chain.wall_clock is not None:
        _write_json(
            path / "runinfo.json",
            {
                "format_version": FORMAT_VERSION,
                "kind": "runinfo",
                "wall_clock_sec": chain.wall_clock,
            },
        )
    for name in Chain.ARRAY_FIELDS:
        np.save(path / f"{name}.npy", getattr(chain, name))
    return path


def read_chain(path):
    path = Path(path)
    meta = _read_json(path / "meta.json", "chain")
    arrays = {}
    for name in Chain.ARRAY_FIELDS:
        file = path / f"{name}.npy"
        if not file.exists():
            raise ValidationError(f"missing file: {file}")
        arrays[name] = np.load(file)
    if arrays["mu_y"].shape[0] != meta["n_draws"]:
        raise ValidationError(f"{path}: draw count does not match metadata")
    return Chain(
        **arrays,
        hyper=_hyper_from_dict(meta["hyper"]),
        dataset_fingerprint=meta["dataset_fingerprint"],
        seed=meta["seed"],
        stream=meta["stream"],
        variant_flags=meta["variant_flags"],
        wall_clock=None,
    )


# ---------------------------------------------------------------------------
# Reports and summaries
# ---------------------------------------------------------------------------


def write_report(report, path):
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    _write_json(path / "report.json", report.to_dict())
    _write_json(
        path / "timings.json",
        {
            "format_version": FORMAT_VERSION,
            "kind": "timings",
            "per_replicate_sec": report.timings,
        },
    )
    return path


def read_report(path):
    payload = _read_json(Path(path) / "report.json", "report")
    return ReplicateReport(
        scenario=payload["scenario"],
        seed=payload["seed"],
        replicates=payload["replicates"],
        variants=tuple(payload["variants"]),
        per_replicate=payload["per_replicate"],
        aggregates=payload["aggregates"],
        failures=payload["failures"],
        timings=[],
    )


def write_summary(summary, path, curve=None, cross_covariance=None):
    """Write a posterior summary directory: JSON scalars plus plot-ready CSVs."""
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    payload = {
        "format_version": FORMAT_VERSION,
        "kind": "summary",
        "level": summary.level,
        "threshold": summary.threshold,
        "selected_nodes": [int(v) for v in summary.selected],
        "scalars": summary.scalars,
    }
    if cross_covariance is not None:
        payload["cross_covariance"] = [float(c) for c in cross_covariance]
    _write_json(path / "summary.json", payload)
    _write_csv(
        path / "selection.csv",
        ["node", "inclusion_prob", "selected"],
        (
            [str(v), _fmt(p), str(int(p > summary.threshold))]
            for v, p in enumerate(summary.inclusion_probs)
        ),
    )
    _write_csv(
        path / "attr_coef.csv",
        ["node", "mean", "lower", "upper"],
        (
            [str(v), _fmt(summary.attr_mean[v]), _fmt(summary.attr_lower[v]), _fmt(summary.attr_upper[v])]
            for v in range(summary.attr_mean.shape[0])
        ),
    )
    iu, iv = np.triu_indices(summary.edge_mean.shape[0], k=1)
    _write_csv(
        path / "edge_coef.csv",
        ["u", "v", "mean", "lower", "upper"],
        (
            [
                str(u),
                str(w),
                _fmt(summary.edge_mean[u, w]),
                _fmt(summary.edge_lower[u, w]),
                _fmt(summary.edge_upper[u, w]),
            ]
            for u, w in zip(iu, iv)
        ),
    )
    if curve is not None:
        reference = (
            curve.reference
            if curve.reference is not None
            else [None] * curve.bin_mid.shape[0]
        )
        _write_csv(
            path / "spatial_curve.csv",
            ["bin_mid", "n_pairs", "correlation", "reference"],
            (
                [
                    _fmt(curve.bin_mid[b]),
                    str(int(curve.n_pairs[b])),
                    _fmt(curve.correlation[b]),
                    "" if reference[b] is None else _fmt(reference[b]),
                ]
                for b in range(curve.bin_mid.shape[0])
            ),
        )
    return path
