"""logo-te command line: dataset building, extraction, training, evaluation, ablation, grid search.

Settings live in an INI file with sections ``run``, ``data``, ``model``,
``train``, ``cluster``, ``split``, ``grid`` and ``extract``. Command-line
flags beat file values, which beat built-in defaults.
"""

import argparse
import configparser
import copy
import itertools
import json
import logging
import os
import sys

import numpy as np

from .errors import ConfigError, LogoError

log = logging.getLogger("logo_te")

DEFAULTS = {
    "run": {"seed": 0},
    "data": {
        "dataset": "", "checkpoint": "", "embeddings": "", "docs": "", "doc_events": "",
        "articles": "", "vocab": "", "split": "test",
    },
    "model": {
        "d": 32, "L_local": 2, "L_global": 2, "T_local": 5, "T_global": 5, "variant": "full",
        "channels": 32, "kernel": 3, "sample_slope": False,
    },
    "train": {"lr": 1e-3, "weight_decay": 1e-5, "epochs": 100, "patience": 10, "shuffle": True},
    "cluster": {"lam": 1.0, "min_cluster_size": 10, "reduced_dim": 200},
    "split": {
        "h_a": 112, "h_t": 78, "min_days": 2, "min_events": 10, "val_years": 1.0, "test_years": 1.0,
        "days_per_year": 365, "epoch": "1970-01-01",
    },
    "grid": {"lr": [1e-2, 1e-3, 1e-4], "weight_decay": [1e-5], "history": [1, 3, 5, 7, 10, 14]},
    "extract": {
        "transport": "mock", "replay": "", "endpoint": "", "llm": "default", "timeout": 60.0,
        "retries": 3, "api_key_env": "LOGO_TE_API_KEY", "auth_header": "Authorization",
        "mock_default": "", "workers": 4, "K": 32, "rounds": 2, "judge": False,
    },
}

LIST_SECTIONS = {"grid"}
TRANSPORTS = ("mock", "replay", "http")


def _coerce(field, raw, default):
    raw = raw.strip() if isinstance(raw, str) else raw
    try:
        if isinstance(default, bool):
            if isinstance(raw, bool):
                return raw
            low = str(raw).lower()
            if low in ("1", "true", "yes", "on"):
                return True
            if low in ("0", "false", "no", "off"):
                return False
            raise ValueError(raw)
        if isinstance(default, list):
            items = raw if isinstance(raw, list) else [x for x in str(raw).replace(",", " ").split() if x]
            if not items:
                raise ConfigError(field, "list must not be empty")
            return [_coerce(field, x, default[0]) for x in items]
        if isinstance(default, int):
            return int(raw)
        if isinstance(default, float):
            return float(raw)
        return str(raw)
    except ValueError:
        raise ConfigError(field, f"cannot read {raw!r} as {type(default).__name__}") from None


class RunConfig:
    """Resolved settings, ``cfg[section][key]``."""

    def __init__(self, values):
        self.values = values

    def __getitem__(self, section):
        return self.values[section]

    @classmethod
    def resolve(cls, path=None, overrides=()):
        values = copy.deepcopy(DEFAULTS)
        if path:
            if not os.path.exists(path):
                raise ConfigError("--config", f"file {path!r} does not exist")
            parser = configparser.ConfigParser(interpolation=None)
            parser.optionxform = str
            parser.read(path, encoding="utf-8")
            base = os.path.dirname(os.path.abspath(path))
            for section in parser.sections():
                if section not in values:
                    raise ConfigError(section, "unknown section")
                for key, raw in parser.items(section):
                    cls._set(values, section, key, raw, base)
        for dotted, raw in overrides:
            section, _, key = dotted.partition(".")
            if section not in values:
                raise ConfigError(dotted, "unknown section")
            cls._set(values, section, key, raw, None)
        return cls(values)

    @staticmethod
    def _set(values, section, key, raw, base):
        field = f"{section}.{key}"
        if key not in values[section]:
            raise ConfigError(field, "unknown key")
        value = _coerce(field, raw, values[section][key])
        if section == "data" and key != "split" and value and base and not os.path.isabs(value):
            value = os.path.normpath(os.path.join(base, value))
        values[section][key] = value

    def require_path(self, key, must_exist=True):
        value = self.values["data"][key]
        if not value:
            raise ConfigError(f"data.{key}", "required for this command")
        if must_exist and not os.path.exists(value):
            raise ConfigError(f"data.{key}", f"path {value!r} does not exist")
        return value

    def to_dict(self):
        return copy.deepcopy(self.values)

    def public(self):
        """Resolved config safe to write into artifacts (credentials are never stored here)."""
        return self.to_dict()


# -- builders ---------------------------------------------------------------

def model_config(cfg, dataset, **changes):
    from .model import ModelConfig

    m = dict(cfg["model"], **changes)
    return ModelConfig(
        n_entities=dataset.vocab.n_entities, n_relations=dataset.vocab.n_relations, d=m["d"],
        L_local=m["L_local"], L_global=m["L_global"], T_local=m["T_local"], T_global=m["T_global"],
        variant=m["variant"], sample_slope=m["sample_slope"], channels=m["channels"], kernel=m["kernel"],
    ).validate()


def train_config(cfg, **changes):
    from .training import TrainConfig

    t = dict(cfg["train"], **changes)
    return TrainConfig(lr=t["lr"], weight_decay=t["weight_decay"], epochs=t["epochs"], seed=cfg["run"]["seed"],
                       patience=t["patience"], shuffle=t["shuffle"])


def make_transport(cfg):
    from .extraction import transport as tr

    x = cfg["extract"]
    kind = x["transport"]
    if kind not in TRANSPORTS:
        raise ConfigError("extract.transport", f"expected one of {TRANSPORTS}")
    if kind == "mock":
        return tr.MockTransport(default=x["mock_default"])
    if kind == "replay":
        if not x["replay"] or not os.path.exists(x["replay"]):
            raise ConfigError("extract.replay", "replay transport needs an existing replay file")
        return tr.ReplayTransport(x["replay"])
    if not x["endpoint"]:
        raise ConfigError("extract.endpoint", "http transport needs an endpoint")
    return tr.HttpTransport(x["endpoint"], model=x["llm"], timeout=x["timeout"], retries=x["retries"],
                            api_key_env=x["api_key_env"], auth_header=x["auth_header"])


def load_hierarchy(cfg):
    from .events import Vocab
    from .extraction import RelationHierarchy

    if cfg["data"]["vocab"]:
        return RelationHierarchy.from_vocab(Vocab.load(cfg.require_path("vocab")))
    return RelationHierarchy()


# -- helpers ----------------------------------------------------------------

def _out_dir(args):
    out = args.out or "."
    os.makedirs(out, exist_ok=True)
    return out


def _write_json(path, obj):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _write_config(out, cfg, command):
    _write_json(os.path.join(out, "config.json"), {"command": command, "config": cfg.public()})


def _load_dataset(cfg):
    from .events import Dataset

    return Dataset.load(cfg.require_path("dataset"))


def _fit(cfg, dataset, mcfg, tcfg, log_path=None):
    from .training import train

    return train(dataset, mcfg, tcfg, log_path=log_path)


def _metrics_json(report, split):
    return {"split": split, **report.as_dict()}


# -- commands ---------------------------------------------------------------

def cmd_synth(cfg, args):
    from .clustering.io import save_doc_events, save_doc_meta, save_embeddings
    from .synthetic import contradiction_dataset, modular_dataset, synthetic_corpus

    out = _out_dir(args)
    seed = cfg["run"]["seed"]
    if args.kind == "corpus":
        corpus = synthetic_corpus(seed=seed)
        save_embeddings(os.path.join(out, "embeddings.bin"), corpus.embeddings)
        save_doc_meta(os.path.join(out, "docs.tsv"), corpus.doc_ids, corpus.days)
        save_doc_events(os.path.join(out, "doc_events.tsv"), corpus.doc_events)
        print(f"wrote {len(corpus.doc_ids)} documents, {len(corpus.doc_events)} events to {out}")
    else:
        ds = modular_dataset(seed=seed) if args.kind == "modular" else contradiction_dataset(seed=seed)
        ds.save(out)
        print(f"wrote {args.kind} dataset with {len(ds.ces)} complex events to {out}")
    return 0


def cmd_build_dataset(cfg, args):
    from .clustering import ClusterConfig, SplitThresholds, assign_clusters, build_dataset
    from .clustering.io import load_doc_events, load_doc_meta, load_embeddings, save_assignment
    from .events import Vocab

    emb = load_embeddings(cfg.require_path("embeddings"))
    doc_ids, days = load_doc_meta(cfg.require_path("docs"))
    doc_events = load_doc_events(cfg.require_path("doc_events"))
    if len(doc_ids) != emb.shape[0]:
        raise ConfigError("data.docs", f"{len(doc_ids)} documents but {emb.shape[0]} embedding rows")
    c, s = cfg["cluster"], cfg["split"]
    ccfg = ClusterConfig(c["lam"], c["min_cluster_size"], min(c["reduced_dim"], emb.shape[1]), cfg["run"]["seed"])
    labels = assign_clusters(emb, np.asarray(days), ccfg.validate(emb.shape[1]))
    vocab = Vocab.load(cfg.require_path("vocab")) if cfg["data"]["vocab"] else None
    ds = build_dataset(doc_ids, days, labels, doc_events, SplitThresholds(s["h_a"], s["h_t"]).validate(),
                       min_days=s["min_days"], min_events=s["min_events"], val_years=s["val_years"],
                       test_years=s["test_years"], epoch=s["epoch"], vocab=vocab,
                       days_per_year=s["days_per_year"])
    out = _out_dir(args)
    ds.save(out)
    save_assignment(os.path.join(out, "assignments.tsv"), doc_ids, labels)
    _write_config(out, cfg, "build-dataset")
    n = {k: len(v) for k, v in ds.splits.items()}
    print(f"{len(ds.ces)} complex events (train {n['train']}, val {n['val']}, test {n['test']}), "
          f"{len(ds.outliers)} outlier events -> {out}")
    return 0


def cmd_extract(cfg, args):
    from .clustering.io import save_doc_events
    from .extraction import doc_event_rows, evaluate_extraction, extract_many, load_articles

    articles = load_articles(cfg.require_path("articles"), epoch=cfg["split"]["epoch"])
    hierarchy = load_hierarchy(cfg)
    transport = make_transport(cfg)
    reports = extract_many(articles, hierarchy, transport, workers=cfg["extract"]["workers"])
    out = _out_dir(args)
    save_doc_events(os.path.join(out, "doc_events.tsv"), doc_event_rows(reports))
    summary = []
    for art, rep in zip(articles, reports):
        row = {"doc_id": rep.doc_id, "day": art.day, "events": len(rep.events), "calls": rep.calls,
               "warnings": rep.warnings, "failures": rep.failures}
        if cfg["extract"]["judge"] and rep.events:
            try:
                p = evaluate_extraction(art, rep.events, transport)
                row["precision"] = f"{p.numerator}/{p.denominator}"
            except LogoError as exc:
                row["precision_error"] = str(exc)
        summary.append(row)
    _write_json(os.path.join(out, "extraction.json"), summary)
    _write_config(out, cfg, "extract")
    failed = sum(1 for r in reports if r.failures)
    print(f"{sum(len(r.events) for r in reports)} events from {len(reports)} articles "
          f"({failed} with transport failures) -> {out}")
    return 1 if failed and failed == len(reports) else 0


def cmd_link_entities(cfg, args):
    from .clustering.io import load_doc_events, save_doc_events
    from .extraction import link_entities

    rows = load_doc_events(cfg.require_path("doc_events"))
    names = sorted({n for _, s, _, o in rows for n in (s, o)})
    x = cfg["extract"]
    link, malformed = link_entities(names, min(x["K"], max(1, len(names))), make_transport(cfg),
                                    rounds=x["rounds"], seed=cfg["run"]["seed"])
    out = _out_dir(args)
    save_doc_events(os.path.join(out, "doc_events.linked.tsv"), link.apply_rows(rows))
    _write_json(os.path.join(out, "linkmap.json"), link.to_json())
    _write_config(out, cfg, "link-entities")
    print(f"{len(names)} names, {len(link)} aliases merged, {malformed} malformed responses -> {out}")
    return 0


def cmd_train(cfg, args):
    from .autodiff import save_checkpoint

    ds = _load_dataset(cfg)
    mcfg, tcfg = model_config(cfg, ds), train_config(cfg)
    out = _out_dir(args)
    result = _fit(cfg, ds, mcfg, tcfg, log_path=os.path.join(out, "train_log.tsv"))
    meta = {"model": mcfg.to_dict(), "train": tcfg.to_dict(), "best_epoch": result.best_epoch,
            "best_val_mrr": result.best_val_mrr, "config": cfg.public()}
    save_checkpoint(os.path.join(out, "model.ckpt"), result.best_state, meta)
    _write_config(out, cfg, "train")
    print(f"best epoch {result.best_epoch}: val MRR {result.best_val_mrr:.4f} -> {out}")
    return 0


def load_model(path):
    from .autodiff import load_checkpoint
    from .model import LoGo, ModelConfig

    tensors, meta = load_checkpoint(path)
    if not meta or "model" not in meta:
        raise ConfigError("data.checkpoint", "checkpoint carries no model configuration")
    model = LoGo(ModelConfig(**meta["model"]), seed=meta.get("train", {}).get("seed", 0))
    model.load_state_dict(tensors)
    return model, meta


def cmd_evaluate(cfg, args):
    from .evaluation import evaluate_split, write_rank_dump

    ds = _load_dataset(cfg)
    model, _ = load_model(cfg.require_path("checkpoint"))
    if (model.config.n_entities, model.config.n_relations) != (ds.vocab.n_entities, ds.vocab.n_relations):
        raise ConfigError("data.checkpoint", "checkpoint vocabulary sizes do not match the dataset")
    split = cfg["data"]["split"]
    if split not in ("train", "val", "test"):
        raise ConfigError("data.split", "expected train, val or test")
    report, results = evaluate_split(model, ds, split)
    out = _out_dir(args)
    write_rank_dump(os.path.join(out, f"ranks_{split}.tsv"), results)
    _write_json(os.path.join(out, f"report_{split}.json"), _metrics_json(report, split))
    _write_config(out, cfg, "evaluate")
    print(report.render(model.config.variant))
    return 0


def cmd_ablate(cfg, args):
    from .evaluation import evaluate_split, render_table
    from .model import VARIANTS

    ds = _load_dataset(cfg)
    order = ("local", "global", "share", "late", "full")
    assert set(order) == set(VARIANTS)
    reports = []
    for variant in order:
        log.info("ablate: training %s", variant)
        result = _fit(cfg, ds, model_config(cfg, ds, variant=variant), train_config(cfg))
        report, _ = evaluate_split(result.model, ds, cfg["data"]["split"])
        reports.append(report)
    out = _out_dir(args)
    table = render_table(reports, list(order))
    with open(os.path.join(out, "ablation.txt"), "w", encoding="utf-8") as fh:
        fh.write(table + "\n")
    _write_json(os.path.join(out, "ablation.json"),
                {v: _metrics_json(r, cfg["data"]["split"]) for v, r in zip(order, reports)})
    _write_config(out, cfg, "ablate")
    print(table)
    return 0


def cmd_grid_search(cfg, args):
    ds = _load_dataset(cfg)
    g = cfg["grid"]
    trials = list(itertools.product(g["lr"], g["weight_decay"], g["history"]))
    rows = []
    for lr, wd, hist in trials:
        log.info("grid: lr=%g wd=%g T=%d", lr, wd, hist)
        mcfg = model_config(cfg, ds, T_local=hist, T_global=hist)
        result = _fit(cfg, ds, mcfg, train_config(cfg, lr=lr, weight_decay=wd))
        rows.append((lr, wd, hist, result.best_val_mrr, result.best_epoch))
    best = max(range(len(rows)), key=lambda i: (rows[i][3], -i))
    out = _out_dir(args)
    with open(os.path.join(out, "grid.tsv"), "w", encoding="utf-8") as fh:
        fh.write("lr\tweight_decay\thistory\tval_mrr\tbest_epoch\tbest\n")
        for i, (lr, wd, hist, mrr, ep) in enumerate(rows):
            fh.write(f"{lr!r}\t{wd!r}\t{hist}\t{mrr!r}\t{ep}\t{'*' if i == best else ''}\n")
    _write_config(out, cfg, "grid-search")
    for i, (lr, wd, hist, mrr, ep) in enumerate(rows):
        print(f"lr={lr:<8g} wd={wd:<8g} T={hist:<3d} val MRR {mrr:.4f} (epoch {ep}){'  <- best' if i == best else ''}")
    return 0


COMMANDS = {
    "synth": cmd_synth,
    "build-dataset": cmd_build_dataset,
    "extract": cmd_extract,
    "link-entities": cmd_link_entities,
    "train": cmd_train,
    "evaluate": cmd_evaluate,
    "ablate": cmd_ablate,
    "grid-search": cmd_grid_search,
}


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="INI settings file")
    common.add_argument("--seed", type=int, help="root seed (run.seed)")
    common.add_argument("--variant", help="model variant (model.variant)")
    common.add_argument("--transport", choices=TRANSPORTS, help="LLM transport (extract.transport)")
    common.add_argument("--out", help="output directory")
    common.add_argument("--dataset", help="dataset directory (data.dataset)")
    common.add_argument("--checkpoint", help="checkpoint file (data.checkpoint)")
    common.add_argument("--split", help="split to evaluate (data.split)")
    common.add_argument("--epochs", type=int, help="maximum epochs (train.epochs)")
    common.add_argument("--set", action="append", default=[], metavar="SECTION.KEY=VALUE",
                        help="override any setting; repeatable")
    common.add_argument("-v", "--verbose", action="count", default=0)
    parser = argparse.ArgumentParser(prog="logo-te", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name, parents=[common])
        if name == "synth":
            p.add_argument("--kind", choices=("corpus", "modular", "contradiction"), default="corpus")
    return parser


FLAG_FIELDS = {
    "seed": "run.seed", "variant": "model.variant", "transport": "extract.transport",
    "dataset": "data.dataset", "checkpoint": "data.checkpoint", "split": "data.split", "epochs": "train.epochs",
}


def overrides_from(args):
    pairs = []
    for item in args.set:
        key, sep, value = item.partition("=")
        if not sep or "." not in key:
            raise ConfigError("--set", f"expected SECTION.KEY=VALUE, got {item!r}")
        pairs.append((key.strip(), value))
    for attr, dotted in FLAG_FIELDS.items():
        value = getattr(args, attr)
        if value is not None:
            if attr in ("dataset", "checkpoint"):
                value = os.path.abspath(value)
            pairs.append((dotted, str(value)))
    return pairs


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = RunConfig.resolve(args.config, overrides_from(args))
        return COMMANDS[args.command](cfg, args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (LogoError, OSError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
