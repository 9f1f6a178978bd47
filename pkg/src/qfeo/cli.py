"""Command-line entry point.

Subcommands:
  run             execute the optimization over every configured
                  (dataset, feature map, qubit count, manipulation) combination
  expressibility  run the SVD study and emit plot-ready curve tables
  report          aggregate completed runs into percent-change and
                  feature-importance tables
  synth           generate a synthetic planted-feature CSV

A run writes its manifest (resolved config, input digests, tool version,
output paths) before computing anything; re-running a manifest reproduces
every numeric output bitwise. Exit codes: 2 for configuration problems,
1 for runtime failures.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import logging
import os
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .bayesopt import trace_to_csv, trace_to_json
from .data import (
    Dataset,
    batches_manifest,
    dataset_to_csv,
    load_csv,
    stratified_batches,
    synthetic_planted,
)
from .errors import ConfigError, DataError, QfeoError
from .expressibility import STUDY_KINDS, curves_to_csv, expressibility_study
from .featuremaps import FeatureMapConfig
from .qfeo import ExperimentConfig, QfeoResult, feature_importance, result_to_json, run_qfeo

log = logging.getLogger("qfeo")

FEATURE_MAP_PRESETS = {
    "se-0": {"family": "separate_entangled", "n_qubits": 9, "blocks": 9, "density": 3,
             "entanglement": "full", "alpha": 0.1, "paulis": ["Y", "X", "Z"]},
    "se-1": {"family": "separate_entangled", "n_qubits": 9, "blocks": 9, "density": 3,
             "entanglement": "pairwise", "alpha": 0.1, "paulis": ["Y", "X", "Z"]},
    "se-2": {"family": "separate_entangled", "n_qubits": 9, "blocks": 9, "density": 2,
             "entanglement": "pairwise", "alpha": 0.3, "paulis": ["Y", "X", "Z"]},
    "hh-0": {"family": "heisenberg", "n_qubits": 9, "blocks": 1, "alpha": 0.1},
    "hh-1": {"family": "heisenberg", "n_qubits": 9, "blocks": 1, "alpha": 0.3},
    "rp-0": {"family": "repeated_pauli", "n_qubits": 9, "entanglement": "pairwise",
             "alpha": 0.1, "paulis": ["Y", "XZ"]},
}

# r counts used for FS/FSO in the reference study, by declared dataset family
_REFERENCE_FS = {
    "churn": (40, 97),
    "virtual_screening": (30, 47),
    "german_numeric": (18, 24),
    "plasticc": (30, 67),
}

SUMMARY_HEADER = [
    "dataset", "feature_map", "qubits", "manipulation",
    "nfo_mean_auc", "nfo_std_auc", "qfeo_mean_auc", "qfeo_std_auc",
    "percent_change", "percent_change_std",
]


def resolve_feature_map(entry) -> tuple[str, dict]:
    """A preset name, or a dict (optionally starting from a preset)."""
    if isinstance(entry, str):
        if entry not in FEATURE_MAP_PRESETS:
            raise ConfigError(f"feature_maps: unknown preset {entry!r}")
        return entry, dict(FEATURE_MAP_PRESETS[entry])
    if isinstance(entry, dict):
        entry = dict(entry)
        name = entry.pop("preset", None)
        if name is not None:
            if name not in FEATURE_MAP_PRESETS:
                raise ConfigError(f"feature_maps.preset: unknown preset {name!r}")
            base = dict(FEATURE_MAP_PRESETS[name])
            base.update(entry)
            return name, base
        return entry.get("family", "custom"), entry
    raise ConfigError("feature_maps: entries must be preset names or objects")


@dataclass
class DatasetSpec:
    name: str
    family: str | None
    csv: str | None
    synthetic: dict | None

    def load(self, base_dir: Path) -> Dataset:
        if self.csv is not None:
            path = Path(self.csv)
            if not path.is_absolute():
                path = base_dir / path
            if not path.exists():
                raise ConfigError(f"datasets.{self.name}.csv: file not found: {path}")
            return load_csv(path)
        return synthetic_planted(**self.synthetic)


@dataclass
class Combination:
    dataset: str
    fm_name: str
    qubits: int
    manipulation: str
    config: ExperimentConfig

    @property
    def slug(self) -> str:
        return f"{self.dataset}_{self.fm_name}_q{self.qubits}_{self.manipulation}"


@dataclass
class RunPlan:
    datasets: list[DatasetSpec]
    combinations: list[Combination]
    resolved: dict


_SYNTH_KEYS = {"d", "p", "k_informative", "noise_sd", "seed"}


def _parse_datasets(doc) -> list[DatasetSpec]:
    entries = doc.get("datasets")
    if entries is None and "dataset" in doc:
        entries = [doc["dataset"]]
    if not entries:
        raise ConfigError("datasets: at least one dataset is required")
    specs = []
    for i, entry in enumerate(entries):
        if not isinstance(entry, dict):
            raise ConfigError(f"datasets[{i}]: must be an object")
        csv_path = entry.get("csv")
        synthetic = entry.get("synthetic")
        if (csv_path is None) == (synthetic is None):
            raise ConfigError(f"datasets[{i}]: exactly one of csv/synthetic is required")
        if synthetic is not None:
            bad = set(synthetic) - _SYNTH_KEYS
            if bad:
                raise ConfigError(f"datasets[{i}].synthetic: unknown fields {sorted(bad)}")
        name = entry.get("name") or (Path(csv_path).stem if csv_path else "synthetic")
        family = entry.get("family")
        if family is not None and family not in _REFERENCE_FS:
            raise ConfigError(
                f"datasets[{i}].family: unknown family {family!r}; "
                f"known: {sorted(_REFERENCE_FS)}"
            )
        specs.append(DatasetSpec(name, family, csv_path, synthetic))
    if len({s.name for s in specs}) != len(specs):
        raise ConfigError("datasets: names must be unique")
    return specs


def _default_r(spec: DatasetSpec, p: int) -> int:
    if spec.family is None:
        raise ConfigError(
            f"manipulations: FS/FSO need an explicit r for dataset {spec.name!r} "
            "(no dataset family declared)"
        )
    ref_r, ref_p = _REFERENCE_FS[spec.family]
    return max(1, min(p - 1, round(ref_r * p / ref_p)))


def resolve_run_config(doc: dict, dataset_dims: dict[str, int]) -> RunPlan:
    """Expand the run document into one ExperimentConfig per combination.

    ``dataset_dims`` maps dataset name -> feature count (needed for the
    default selection size).
    """
    if "resolved_config" in doc:  # a manifest; reuse its config verbatim
        doc = doc["resolved_config"]
    known = {"datasets", "dataset", "feature_maps", "qubits", "manipulations",
             "classifier", "grid", "bo", "cv", "data", "rescale", "notes"}
    extra = set(doc) - known
    if extra:
        raise ConfigError(f"config: unknown fields {sorted(extra)}")
    specs = _parse_datasets(doc)

    fm_entries = doc.get("feature_maps")
    if not fm_entries:
        raise ConfigError("feature_maps: at least one feature map is required")
    qubit_list = doc.get("qubits")
    manips = doc.get("manipulations")
    if not manips:
        raise ConfigError("manipulations: at least one manipulation is required")

    rescale = doc.get("rescale", {})
    bad = set(rescale) - {"lo", "hi"}
    if bad:
        raise ConfigError(f"rescale: unknown fields {sorted(bad)}")

    combos = []
    for spec in specs:
        p = dataset_dims[spec.name]
        for fm_entry in fm_entries:
            fm_name, fm_dict = resolve_feature_map(fm_entry)
            sweep = qubit_list or [fm_dict.get("n_qubits", 9)]
            for n in sweep:
                fm = dict(fm_dict)
                fm["n_qubits"] = int(n)
                for manip in manips:
                    if not isinstance(manip, dict) or "kind" not in manip:
                        raise ConfigError("manipulations: entries need a kind")
                    manip = dict(manip)
                    p_eff = 2 * p if fm.get("reload") else p
                    if manip["kind"] in ("FS", "FSO") and manip.get("r") is None:
                        manip["r"] = _default_r(spec, p_eff)
                    exp = ExperimentConfig.from_dict({
                        "feature_map": fm,
                        "manipulation": manip,
                        "classifier": doc.get("classifier", "svc"),
                        "grid": doc.get("grid", "svc-small"),
                        "bo": doc.get("bo", {}),
                        "cv": doc.get("cv", {}),
                        "data": doc.get("data", {}),
                        "rescale_lo": rescale.get("lo", 0.3),
                        "rescale_hi": rescale.get("hi", 2.8),
                    })
                    combos.append(Combination(spec.name, fm_name, int(n),
                                              manip["kind"], exp))
    return RunPlan(specs, combos, doc)


def _sha256(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(65536), b""):
            h.update(block)
    return h.hexdigest()


def _write_summary(rows, path):
    with open(path, "w") as fh:
        fh.write(",".join(SUMMARY_HEADER) + "\n")
        for row in rows:
            cells = [str(row[0]), str(row[1]), str(row[2]), str(row[3])]
            cells += [format(v, ".17g") for v in row[4:]]
            fh.write(",".join(cells) + "\n")


def _write_importance(tables: dict, path):
    keys = [k for k in tables if k != "note"]
    with open(path, "w") as fh:
        if not keys:
            fh.write("note\n")
            fh.write(f"\"{tables.get('note', '')}\"\n")
            return
        length = len(tables[keys[0]])
        fh.write(",".join(["feature_index"] + keys) + "\n")
        for i in range(length):
            cells = [str(i)]
            for k in keys:
                v = tables[k][i]
                cells.append("" if np.isnan(v) else format(float(v), ".17g"))
            fh.write(",".join(cells) + "\n")


def cmd_run(config_path: str, out_dir: str, workers: int = 1,
            seed_override: int | None = None) -> int:
    base_dir = Path(config_path).resolve().parent
    with open(config_path) as fh:
        doc = json.load(fh)
    if "resolved_config" in doc:
        doc = doc["resolved_config"]
    if seed_override is not None:
        doc.setdefault("bo", {})["seed"] = seed_override

    # load datasets first: dimensionality feeds the default selection size
    specs = _parse_datasets(doc)
    datasets = {}
    for spec in specs:
        datasets[spec.name] = spec.load(base_dir)
    plan = resolve_run_config(doc, {name: ds.p for name, ds in datasets.items()})

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    manifest = {
        "tool_version": __version__,
        "resolved_config": plan.resolved,
        "inputs": {
            spec.csv: _sha256(base_dir / spec.csv if not Path(spec.csv).is_absolute()
                              else Path(spec.csv))
            for spec in plan.datasets if spec.csv is not None
        },
        "outputs": ["summary.csv"] + [c.slug for c in plan.combinations],
    }
    with open(out / "manifest.json", "w") as fh:
        json.dump(manifest, fh, indent=1)

    summary_rows = []
    for spec in plan.datasets:
        ds = datasets[spec.name]
        first_cfg = next(c.config for c in plan.combinations if c.dataset == spec.name)
        batches = stratified_batches(
            ds,
            n_batches=first_cfg.data.batches,
            test_fraction=first_cfg.data.test_fraction,
            balance=first_cfg.data.balance,
            seed=first_cfg.data.seed,
        )
        batches_manifest(batches, out / f"batches_{spec.name}.json")
        for combo in [c for c in plan.combinations if c.dataset == spec.name]:
            log.info("running %s", combo.slug)
            result = run_qfeo(batches, combo.config, workers=workers)
            combo_dir = out / combo.slug
            combo_dir.mkdir(exist_ok=True)
            result_to_json(result, combo_dir / "result.json")
            for i, b in enumerate(result.batches):
                if b.trace is not None:
                    trace_to_csv(b.trace, combo_dir / f"trace_b{i}.csv")
                    trace_to_json(b.trace, combo_dir / f"trace_b{i}.json")
            _write_importance(feature_importance(result), combo_dir / "importance.csv")
            agg = result.aggregate()
            summary_rows.append((
                combo.dataset, combo.fm_name, combo.qubits, combo.manipulation,
                agg["nfo_mean_auc"], agg["nfo_std_auc"],
                agg["qfeo_mean_auc"], agg["qfeo_std_auc"],
                agg["percent_change"], agg["percent_change_std"],
            ))
    _write_summary(summary_rows, out / "summary.csv")
    return 0


def cmd_expressibility(config_path: str, out_dir: str, workers: int = 1) -> int:
    with open(config_path) as fh:
        doc = json.load(fh)
    known = {"feature_map", "qubits", "kinds", "n_features", "T", "repetitions",
             "seed", "fs_r", "fractions", "notes"}
    extra = set(doc) - known
    if extra:
        raise ConfigError(f"config: unknown fields {sorted(extra)}")
    if "feature_map" not in doc:
        raise ConfigError("feature_map: required")
    _, fm_dict = resolve_feature_map(doc["feature_map"])
    kinds = tuple(doc.get("kinds", STUDY_KINDS))
    for kind in kinds:
        if kind not in STUDY_KINDS:
            raise ConfigError(
                f"kinds: the study supports {'/'.join(STUDY_KINDS)} only, got {kind!r}"
            )
    qubit_list = doc.get("qubits", [fm_dict.get("n_qubits", 4)])
    if isinstance(qubit_list, int):
        qubit_list = [qubit_list]
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for n in qubit_list:
        fm = dict(fm_dict)
        fm["n_qubits"] = int(n)
        cfg = FeatureMapConfig.from_dict(fm)
        kwargs = {}
        if doc.get("fractions") is not None:
            kwargs["fractions"] = doc["fractions"]
        curves = expressibility_study(
            cfg, kinds=kinds,
            n_features=doc.get("n_features", 8),
            T=doc.get("T", 1000),
            repetitions=doc.get("repetitions", 30),
            seed=doc.get("seed", 0),
            fs_r=doc.get("fs_r"),
            workers=workers,
            **kwargs,
        )
        curves_to_csv(curves, out / f"reconstruction_error_q{n}.csv",
                      out / f"components_retained_q{n}.csv")
    return 0


def cmd_report(results_dir: str, out_dir: str | None = None) -> int:
    results_path = Path(results_dir)
    result_files = sorted(results_path.rglob("result.json"))
    if not result_files:
        raise ConfigError(f"report: no result.json files under {results_dir}")
    out = Path(out_dir) if out_dir else results_path
    out.mkdir(parents=True, exist_ok=True)

    rows = []
    for rf in result_files:
        with open(rf) as fh:
            payload = json.load(fh)
        cfg = payload["config"]
        agg = payload["aggregate"]
        rows.append({
            "dataset": rf.parent.name.split("_")[0],
            "slug": rf.parent.name,
            "feature_map": cfg["feature_map"]["family"],
            "qubits": cfg["feature_map"]["n_qubits"],
            "manipulation": cfg["manipulation"]["kind"],
            "pct": agg["percent_change"],
            "pct_std": agg["percent_change_std"],
        })

    kinds = sorted({r["manipulation"] for r in rows if r["manipulation"] != "NFO"})
    groups = sorted({(r["dataset"], r["feature_map"]) for r in rows})
    header = ["dataset", "feature_map"]
    for k in kinds:
        header += [f"{k}_mean_pct", f"{k}_std_pct"]
    lines = [",".join(header)]
    per_kind_cells = {k: [] for k in kinds}
    for dataset, fm in groups:
        cells = [dataset, fm]
        for k in kinds:
            matching = [r for r in rows
                        if (r["dataset"], r["feature_map"]) == (dataset, fm)
                        and r["manipulation"] == k]
            if not matching:
                cells += ["", ""]
                continue
            pcts = np.array([r["pct"] for r in matching])
            std = float(pcts.std()) if len(pcts) > 1 else float(matching[0]["pct_std"])
            cells += [format(float(pcts.mean()), ".17g"), format(std, ".17g")]
            per_kind_cells[k].append(float(pcts.mean()))
        lines.append(",".join(cells))
    overall = ["Overall Average", ""]
    for k in kinds:
        vals = per_kind_cells[k]
        overall += [format(float(np.mean(vals)), ".17g") if vals else "",
                    format(float(np.std(vals)), ".17g") if vals else ""]
    lines.append(",".join(overall))
    (out / "pct_change.csv").write_text("\n".join(lines) + "\n")

    _report_importance_matrices(result_files, out)
    return 0


def _report_importance_matrices(result_files, out: Path):
    """Merge per-manipulation importance tables into feature x manipulation
    matrices (with rank overlays), one per dataset/feature-map/qubits."""
    groups: dict[str, dict[str, dict]] = {}
    for rf in result_files:
        imp_path = rf.parent / "importance.csv"
        if not imp_path.exists():
            continue
        with open(rf) as fh:
            cfg = json.load(fh)["config"]
        kind = cfg["manipulation"]["kind"]
        if kind == "NFO":
            continue
        slug = rf.parent.name
        group_key = slug.rsplit("_", 1)[0]
        lines = imp_path.read_text().strip().splitlines()
        if lines[0] == "note":
            continue
        cols = lines[0].split(",")[1:]
        values = {c: [] for c in cols}
        for line in lines[1:]:
            cells = line.split(",")
            for c, cell in zip(cols, cells[1:]):
                values[c].append(float(cell) if cell else float("nan"))
        groups.setdefault(group_key, {})[kind] = values
    for group_key, kinds in groups.items():
        columns = {}
        for kind, tables in sorted(kinds.items()):
            for table_name, vals in tables.items():
                columns[f"{kind}_{table_name}"] = vals
        if not columns:
            continue
        length = max(len(v) for v in columns.values())
        lines = [",".join(["feature_index"] + list(columns))]
        for i in range(length):
            cells = [str(i)]
            for vals in columns.values():
                v = vals[i] if i < len(vals) else float("nan")
                cells.append("" if np.isnan(v) else format(v, ".17g"))
            lines.append(",".join(cells))
        (out / f"importance_matrix_{group_key}.csv").write_text("\n".join(lines) + "\n")


def cmd_synth(out_path: str, d: int, p: int, k_informative: int,
              noise_sd: float, seed: int) -> int:
    ds = synthetic_planted(d=d, p=p, k_informative=k_informative,
                           noise_sd=noise_sd, seed=seed)
    dataset_to_csv(ds, out_path)
    info_path = Path(out_path).with_suffix(".meta.json")
    with open(info_path, "w") as fh:
        json.dump(ds.metadata, fh)
    return 0


def preset_config_path(name: str) -> Path:
    path = Path(__file__).parent / "configs" / f"{name}.json"
    if not path.exists():
        available = sorted(p.stem for p in (Path(__file__).parent / "configs").glob("*.json"))
        raise ConfigError(f"--preset: unknown preset {name!r}; available: {available}")
    return path


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qfeo",
        description="Optimize classical feature encodings for quantum feature maps "
                    "on a statevector simulator.",
    )
    parser.add_argument("--version", action="version", version=f"qfeo {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="execute a full experiment config")
    run.add_argument("--config", help="experiment JSON (or a manifest.json)")
    run.add_argument("--preset", help="name of a shipped config preset")
    run.add_argument("--out", required=True, help="output directory")
    run.add_argument("--workers", type=int, default=1)
    run.add_argument("--seed", type=int, default=None, help="override bo.seed")

    exp = sub.add_parser("expressibility", help="run the SVD expressibility study")
    exp.add_argument("--config", help="study JSON")
    exp.add_argument("--preset", help="name of a shipped config preset")
    exp.add_argument("--out", required=True)
    exp.add_argument("--workers", type=int, default=1)

    rep = sub.add_parser("report", help="aggregate completed run outputs")
    rep.add_argument("--results", required=True, help="directory of run outputs")
    rep.add_argument("--out", default=None, help="table output directory")

    synth = sub.add_parser("synth", help="generate a synthetic planted-feature CSV")
    synth.add_argument("--out", required=True)
    synth.add_argument("--rows", type=int, default=400)
    synth.add_argument("--features", type=int, default=12)
    synth.add_argument("--informative", type=int, default=4)
    synth.add_argument("--noise-sd", type=float, default=0.5)
    synth.add_argument("--seed", type=int, default=0)
    return parser


def _config_argument(args) -> str:
    if getattr(args, "config", None) and getattr(args, "preset", None):
        raise ConfigError("--config and --preset are mutually exclusive")
    if getattr(args, "config", None):
        return args.config
    if getattr(args, "preset", None):
        return str(preset_config_path(args.preset))
    raise ConfigError("--config or --preset is required")


def main(argv=None) -> int:
    logging.basicConfig(
        level=os.environ.get("QFEO_LOG", "WARNING").upper(),
        format="%(levelname)s %(name)s: %(message)s",
    )
    args = build_parser().parse_args(argv)
    try:
        if args.command == "run":
            return cmd_run(_config_argument(args), args.out, workers=args.workers,
                           seed_override=args.seed)
        if args.command == "expressibility":
            return cmd_expressibility(_config_argument(args), args.out,
                                      workers=args.workers)
        if args.command == "report":
            return cmd_report(args.results, args.out)
        if args.command == "synth":
            return cmd_synth(args.out, args.rows, args.features, args.informative,
                             args.noise_sd, args.seed)
        raise ConfigError(f"unknown command {args.command!r}")
    except (ConfigError, DataError, FileNotFoundError, json.JSONDecodeError) as exc:
        print(f"qfeo: config error: {exc}", file=sys.stderr)
        return 2
    except QfeoError as exc:
        print(f"qfeo: run failed: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:
        print(f"qfeo: run failed: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
