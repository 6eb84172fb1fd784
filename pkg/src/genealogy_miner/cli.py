"""Command-line entry point chaining the pipeline stages.

Every subcommand reads an optional INI config (``--config``), applies flag
overrides, runs one stage, writes its artifacts atomically into the output
directory and prints a single JSON summary line on standard output.

Exit codes: 0 ok, 2 config error, 3 data error, 4 acceptance failure.
"""

from __future__ import annotations

import argparse
import configparser
import dataclasses
import json
import logging
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from . import nn
from .corpus import (
    atomic_write_bytes,
    atomic_write_text,
    dumps_publications,
    load_ground_truth,
    load_publications,
    write_ground_truth,
    write_publications,
)
from .disambiguation import disambiguate, scholars_from_json, scholars_to_csv, scholars_to_json
from .errors import ConfigError, DataError, GenealogyError
from .evaluation import SplitSpec, SyntheticSpec, generate_synthetic, metrics, reports_csv, reports_dat, split
from .genealogy import EXPORT_FORMATS, EligibilityRule, export_genealogy, filter_scholars, generate_genealogy
from .graph import Corrections, build_graph, feature_dump_csv, node_feature_names
from .model import Shifu2Config, Shifu2Model, history_csv, train
from .pipeline import SWEEP_PARAMETERS, dataset_samples, prepare_dataset, subsample, sweep
from .samples import FeatureScaler, PairSample, stack

log = logging.getLogger(__name__)

SCHEMA_VERSION = 1
EXIT_OK, EXIT_CONFIG, EXIT_DATA, EXIT_ACCEPTANCE = 0, 2, 3, 4

# artifact file names inside the output directory, keyed by producing stage
ARTIFACTS = {
    "synth": ("publications.jsonl", "ground_truth.csv"),
    "ingest": ("records.jsonl",),
    "disambiguate": ("scholars.json", "scholars.csv"),
    "featurize": ("features.bin", "features.csv"),
    "train": ("model.bin", "training_log.csv"),
    "eval": ("metrics.csv", "metrics.json"),
    "genealogy": ("genealogy.csv",),
}


class MissingInput(DataError):
    pass


@dataclass
class PipelineConfig:
    publications: Optional[str] = None
    ground_truth: Optional[str] = None
    output_dir: str = "out"
    seed: Optional[int] = None
    temporal: bool = True
    disciplinary: bool = False
    model: Shifu2Config = field(default_factory=Shifu2Config)
    split: SplitSpec = field(default_factory=SplitSpec)
    eligibility: EligibilityRule = field(default_factory=EligibilityRule)
    synth: SyntheticSpec = field(default_factory=SyntheticSpec)
    train_fraction: float = 1.0
    threshold: float = 0.5
    top_k: int = 1
    formats: tuple = ("csv",)
    sweep_parameter: Optional[str] = None
    sweep_values: tuple = ()
    min_accuracy: Optional[float] = None

    @property
    def out(self) -> Path:
        return Path(self.output_dir)

    def artifact(self, stage: str, k: int = 0) -> Path:
        return self.out / ARTIFACTS[stage][k]


# --- config parsing -------------------------------------------------------

def _parse_bool(text: str) -> bool:
    low = text.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _parse_optional(conv):
    def parse(text):
        return None if text.strip().lower() in ("", "none") else conv(text)
    return parse


def _parse_ints(text: str) -> tuple:
    return tuple(int(t) for t in text.replace("-", ",").split(",") if t.strip())


_CONVERTERS = {
    "int": int,
    "float": float,
    "bool": _parse_bool,
    "str": str.strip,
    "tuple": _parse_ints,
    "Optional[int]": _parse_optional(int),
    "Optional[float]": _parse_optional(float),
    "Optional[str]": _parse_optional(str.strip),
}


def _dataclass_overrides(cls, items: dict, section: str) -> dict:
    types = {f.name: f.type for f in dataclasses.fields(cls)}
    out = {}
    for key, text in items.items():
        if key not in types:
            raise ConfigError(f"unknown key {key!r} in [{section}]")
        try:
            out[key] = _CONVERTERS[types[key]](text)
        except (KeyError, ValueError) as exc:
            raise ConfigError(f"[{section}] {key}: {exc}") from None
    return out


_TOP_LEVEL = {
    "paths": {"publications": "publications", "ground_truth": "ground_truth", "output_dir": "output_dir"},
    "pipeline": {"seed": "seed", "train_fraction": "train_fraction"},
    "corrections": {"temporal": "temporal", "disciplinary": "disciplinary"},
    "genealogy": {"threshold": "threshold", "top_k": "top_k", "formats": "formats"},
    "sweep": {"parameter": "sweep_parameter", "values": "sweep_values"},
    "acceptance": {"min_accuracy": "min_accuracy"},
}
_NESTED = {"model": ("model", Shifu2Config), "split": ("split", SplitSpec),
           "eligibility": ("eligibility", EligibilityRule), "synth": ("synth", SyntheticSpec)}


def _top_level_value(attr: str, text: str):
    if attr == "formats":
        fmts = tuple(t.strip() for t in text.split(",") if t.strip())
        bad = [f for f in fmts if f not in EXPORT_FORMATS]
        if bad:
            raise ValueError(f"unknown export format(s) {bad}")
        return fmts
    if attr == "sweep_values":
        return tuple(t.strip() for t in text.split(",") if t.strip())
    kind = {f.name: f.type for f in dataclasses.fields(PipelineConfig)}[attr]
    return _CONVERTERS[kind](text)


def load_config(path=None, overrides=()) -> PipelineConfig:
    """Build a :class:`PipelineConfig` from an INI file plus ``section.key=value`` overrides."""
    parser = configparser.ConfigParser(interpolation=None)
    if path is not None:
        if not Path(path).is_file():
            raise ConfigError(f"config file {path} not found")
        parser.read(path, encoding="utf-8")
        version = parser.get("pipeline", "schema_version", fallback=None)
        if version is None:
            raise ConfigError("config needs [pipeline] schema_version")
        if version.strip() != str(SCHEMA_VERSION):
            raise ConfigError(f"unsupported schema_version {version}; expected {SCHEMA_VERSION}")
    for item in overrides:
        key, sep, value = item.partition("=")
        section, dot, name = key.partition(".")
        if not sep or not dot:
            raise ConfigError(f"override {item!r} must look like section.key=value")
        if not parser.has_section(section):
            parser.add_section(section)
        parser.set(section, name.strip(), value)

    cfg = PipelineConfig()
    nested = {}
    for section in parser.sections():
        items = dict(parser.items(section))
        if section in _NESTED:
            nested[section] = _dataclass_overrides(_NESTED[section][1], items, section)
            continue
        if section not in _TOP_LEVEL:
            raise ConfigError(f"unknown config section [{section}]")
        for key, text in items.items():
            if section == "pipeline" and key == "schema_version":
                continue
            if key not in _TOP_LEVEL[section]:
                raise ConfigError(f"unknown key {key!r} in [{section}]")
            attr = _TOP_LEVEL[section][key]
            try:
                setattr(cfg, attr, _top_level_value(attr, text))
            except ValueError as exc:
                raise ConfigError(f"[{section}] {key}: {exc}") from None
    try:
        for section, values in nested.items():
            attr, cls = _NESTED[section]
            setattr(cfg, attr, dataclasses.replace(getattr(cfg, attr), **values))
    except (ValueError, TypeError) as exc:
        raise ConfigError(str(exc)) from None
    if cfg.sweep_parameter is not None and cfg.sweep_parameter not in SWEEP_PARAMETERS:
        raise ConfigError(f"unknown sweep parameter {cfg.sweep_parameter!r}")
    return cfg


def with_seed(cfg: PipelineConfig, seed: int) -> PipelineConfig:
    """Funnel one seed into every seeded component."""
    return dataclasses.replace(
        cfg,
        seed=seed,
        model=dataclasses.replace(cfg.model, seed=seed),
        split=dataclasses.replace(cfg.split, seed=seed),
        synth=dataclasses.replace(cfg.synth, seed=seed),
    )


# --- artifact helpers -----------------------------------------------------

def _require(path: Path, stage: str) -> Path:
    if not path.is_file():
        raise MissingInput(f"{path} not found; run the '{stage}' stage first")
    return path


def _records(cfg):
    return load_publications(_require(cfg.artifact("ingest"), "ingest"))


def _scholars(cfg, records):
    path = _require(cfg.artifact("disambiguate"), "disambiguate")
    return scholars_from_json(json.loads(path.read_text(encoding="utf-8")), records)


def _ground_truth(cfg):
    path = Path(cfg.ground_truth) if cfg.ground_truth else cfg.artifact("synth", 1)
    return load_ground_truth(_require(path, "synth"))


def _dataset(cfg):
    records = _records(cfg)
    scholars = _scholars(cfg, records)
    return prepare_dataset(records, _ground_truth(cfg), seed=_seed(cfg), temporal=cfg.temporal,
                           disciplinary=cfg.disciplinary, scholars=scholars)


def _seed(cfg) -> int:
    return 0 if cfg.seed is None else cfg.seed


def samples_to_bytes(samples, meta: dict) -> bytes:
    node_attr, pooled, edge_attr, labels, fields = stack(samples)
    tensors = {
        "node_attr": node_attr,
        "pooled": pooled,
        "edge_attr": edge_attr,
        "labels": labels,
        "advisee": np.array([s.advisee for s in samples], dtype=float),
        "candidate": np.array([s.candidate for s in samples], dtype=float),
        "first_year": np.array([s.first_year for s in samples], dtype=float),
    }
    return nn.dumps_tensors(tensors, dict(meta, fields=fields))


def samples_from_bytes(data: bytes):
    t, meta = nn.loads_tensors(data)
    samples = []
    for k, fld in enumerate(meta["fields"]):
        label = int(t["labels"][k])
        samples.append(PairSample(
            advisee=int(t["advisee"][k]),
            candidate=int(t["candidate"][k]),
            node_attr=t["node_attr"][k],
            pooled=t["pooled"][k],
            edge_attr=t["edge_attr"][k],
            label=None if label < 0 else label,
            field=fld,
            first_year=int(t["first_year"][k]),
        ))
    return samples, meta


def _features(cfg):
    data = _require(cfg.artifact("featurize"), "featurize").read_bytes()
    samples, meta = samples_from_bytes(data)
    expected = {"pool_dim": cfg.model.pool_dim, "org_buckets": cfg.model.org_buckets,
                "feature_window": cfg.model.feature_window}
    for key, value in expected.items():
        if meta.get(key) != value:
            raise ConfigError(f"features were built with {key}={meta.get(key)}, config has {value}; re-run featurize")
    return samples


def _model(cfg):
    return Shifu2Model.load(_require(cfg.artifact("train"), "train"))


# --- stages ---------------------------------------------------------------

def cmd_synth(cfg: PipelineConfig) -> dict:
    records, truth = generate_synthetic(cfg.synth)
    write_publications(records, cfg.artifact("synth", 0))
    write_ground_truth(truth, cfg.artifact("synth", 1))
    return {"records": len(records), "ground_truth_pairs": len(truth)}


def cmd_ingest(cfg: PipelineConfig) -> dict:
    source = Path(cfg.publications) if cfg.publications else cfg.artifact("synth", 0)
    records = load_publications(_require(source, "synth"))
    atomic_write_text(cfg.artifact("ingest"), dumps_publications(records, "jsonl"))
    return {"records": len(records), "source": str(source)}


def cmd_disambiguate(cfg: PipelineConfig) -> dict:
    records = _records(cfg)
    trace = []
    scholars = disambiguate(records, trace=trace)
    atomic_write_text(cfg.artifact("disambiguate", 0),
                      json.dumps(scholars_to_json(scholars), sort_keys=True) + "\n")
    atomic_write_text(cfg.artifact("disambiguate", 1), scholars_to_csv(scholars))
    return {"scholars": len(scholars), "passes": len(trace), "merges_per_pass": trace}


def cmd_featurize(cfg: PipelineConfig) -> dict:
    dataset = _dataset(cfg)
    samples = dataset_samples(dataset, cfg.model)
    meta = {"pool_dim": cfg.model.pool_dim, "org_buckets": cfg.model.org_buckets,
            "feature_window": cfg.model.feature_window}
    atomic_write_bytes(cfg.artifact("featurize", 0), samples_to_bytes(samples, meta))
    # audit dump, normalized with ranges fitted on the training split as training does
    node_attr, _, edge_attr, _, fields = stack(samples)
    train_set, _ = split(samples, cfg.split)
    t_node, _, t_edge, _, t_fields = stack(train_set)
    scaler = FeatureScaler(node_attr.shape[1], edge_attr.shape[1]).fit(t_node, t_edge, t_fields)
    norm_node, norm_edge = scaler.transform(node_attr, edge_attr, fields)
    rows = [(s.advisee, s.candidate, s.label) for s in samples]
    atomic_write_text(cfg.artifact("featurize", 1),
                      feature_dump_csv(rows, node_feature_names(cfg.model.org_buckets), node_attr, edge_attr,
                                       norm_node, norm_edge))
    return {"samples": len(samples), "positives": sum(s.label == 1 for s in samples),
            "graph_nodes": dataset.graph.n_nodes}


def cmd_train(cfg: PipelineConfig) -> dict:
    if cfg.seed is None:
        raise ConfigError("training needs a seed (--seed or [pipeline] seed)")
    samples = _features(cfg)
    train_set, _ = split(samples, cfg.split)
    train_set = subsample(train_set, cfg.train_fraction, cfg.seed)
    model, history = train(Shifu2Model(cfg.model), train_set)
    model.save(cfg.artifact("train", 0))
    atomic_write_text(cfg.artifact("train", 1), history_csv(history))
    return {"train_samples": len(train_set), "epochs": len(history) - 1,
            "initial_L_sum": history[0].L_sum, "final_L_sum": history[-1].L_sum,
            "train_acc": history[-1].train_acc}


def cmd_eval(cfg: PipelineConfig) -> dict:
    samples = _features(cfg)
    model = _model(cfg)
    _, test_set = split(samples, cfg.split)
    probs = model.predict_proba(test_set)
    report = metrics(probs, [s.label for s in test_set])
    atomic_write_text(cfg.artifact("eval", 0), reports_csv([("test", report)], key="split"))
    atomic_write_text(cfg.artifact("eval", 1), json.dumps(report.as_dict(), sort_keys=True) + "\n")
    summary = {"test_samples": len(test_set), **report.as_dict()}
    if cfg.min_accuracy is not None:
        summary["min_accuracy"] = cfg.min_accuracy
        summary["acceptance"] = report.accuracy >= cfg.min_accuracy
    return summary


def cmd_sweep(cfg: PipelineConfig) -> dict:
    if cfg.seed is None:
        raise ConfigError("sweeps need a seed (--seed or [pipeline] seed)")
    if cfg.sweep_parameter is None or not cfg.sweep_values:
        raise ConfigError("sweep needs [sweep] parameter and values")
    dataset = _dataset(cfg)
    rows = sweep(cfg.sweep_parameter, cfg.sweep_values, cfg.model, dataset, cfg.split)
    base = cfg.out / f"sweep_{cfg.sweep_parameter}"
    atomic_write_text(base.with_suffix(".csv"), reports_csv(rows, key=cfg.sweep_parameter))
    atomic_write_text(base.with_suffix(".dat"), reports_dat(rows, key=cfg.sweep_parameter))
    return {"parameter": cfg.sweep_parameter,
            "rows": [{"value": v, "accuracy": r.accuracy, "f1": r.f1} for v, r in rows]}


def cmd_genealogy(cfg: PipelineConfig) -> dict:
    records = _records(cfg)
    scholars = _scholars(cfg, records)
    model = _model(cfg)
    graph = build_graph(scholars, records)
    corrections = Corrections.from_records(records, temporal=cfg.temporal, disciplinary=cfg.disciplinary)
    eligible = filter_scholars(scholars, cfg.eligibility)
    found = generate_genealogy(model, graph, eligible, cfg.threshold, cfg.top_k, corrections)
    names = {s.scholar_id: s.canonical_name for s in scholars}
    written = []
    for fmt in cfg.formats:
        path = cfg.artifact("genealogy").with_suffix("." + fmt)
        if fmt != "csv" and not found:
            log.warning("no genealogy records; skipping %s export", fmt)
            continue
        export_genealogy(found, path, fmt, names)
        written.append(str(path))
    return {"eligible": len(eligible), "records": len(found), "files": written}


COMMANDS = {
    "ingest": cmd_ingest,
    "disambiguate": cmd_disambiguate,
    "featurize": cmd_featurize,
    "train": cmd_train,
    "eval": cmd_eval,
    "sweep": cmd_sweep,
    "genealogy": cmd_genealogy,
    "synth": cmd_synth,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="genealogy-miner", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name, help=COMMANDS[name].__name__.replace("cmd_", "run the ") + " stage")
        p.add_argument("--config", help="INI config file")
        p.add_argument("--out", help="output directory (overrides [paths] output_dir)")
        p.add_argument("--seed", type=int, help="seed for every random draw")
        p.add_argument("--set", action="append", default=[], metavar="SECTION.KEY=VALUE",
                       help="override one config value; repeatable")
        p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
        if name == "ingest":
            p.add_argument("--publications", help="publication file (.jsonl or .csv)")
        if name in ("featurize", "sweep"):
            p.add_argument("--ground-truth", help="ground-truth CSV")
        if name == "sweep":
            p.add_argument("--parameter", choices=SWEEP_PARAMETERS)
            p.add_argument("--values", help="comma-separated values")
        if name == "eval":
            p.add_argument("--min-accuracy", type=float, help="exit 4 when test accuracy falls below this")
        if name == "genealogy":
            p.add_argument("--threshold", type=float)
            p.add_argument("--top-k", type=int)
            p.add_argument("--format", action="append", choices=EXPORT_FORMATS, dest="formats")
    return parser


def _flag_overrides(args) -> list:
    pairs = [
        ("out", "paths.output_dir"), ("seed", "pipeline.seed"), ("publications", "paths.publications"),
        ("ground_truth", "paths.ground_truth"), ("parameter", "sweep.parameter"), ("values", "sweep.values"),
        ("min_accuracy", "acceptance.min_accuracy"), ("threshold", "genealogy.threshold"),
        ("top_k", "genealogy.top_k"),
    ]
    out = list(args.set)
    for attr, key in pairs:
        value = getattr(args, attr, None)
        if value is not None:
            out.append(f"{key}={value}")
    if getattr(args, "formats", None):
        out.append("genealogy.formats=" + ",".join(args.formats))
    return out


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")
    summary = {"command": args.command}
    try:
        cfg = load_config(args.config, _flag_overrides(args))
        if cfg.seed is not None:
            cfg = with_seed(cfg, cfg.seed)
        summary["seed"] = cfg.seed
        cfg.out.mkdir(parents=True, exist_ok=True)
        summary.update(COMMANDS[args.command](cfg))
    except ConfigError as exc:
        code, summary["status"], summary["error"] = EXIT_CONFIG, "config_error", str(exc)
    except (GenealogyError, OSError) as exc:
        code, summary["status"], summary["error"] = EXIT_DATA, "data_error", str(exc)
    else:
        failed = summary.get("acceptance") is False
        code = EXIT_ACCEPTANCE if failed else EXIT_OK
        summary["status"] = "acceptance_failure" if failed else "ok"
    print(json.dumps(summary, sort_keys=True, default=str))
    return code


if __name__ == "__main__":
    sys.exit(main())
