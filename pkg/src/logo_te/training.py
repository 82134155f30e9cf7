"""Training loop with per-epoch validation MRR, checkpoint selection and early stopping."""

import logging
from collections import defaultdict
from dataclasses import dataclass, field, fields

import numpy as np

from .autodiff import Adam, no_grad
from .autodiff import ops
from .errors import EmptySplit, NonFiniteLoss
from .evaluation import FilterIndex, evaluate_split
from .events import global_history, local_history, snapshot_index, split_queries
from .model import Contexts, LoGo, loss
from .seeding import rng_for

log = logging.getLogger(__name__)


@dataclass
class TrainConfig:
    lr: float = 1e-3
    weight_decay: float = 1e-5
    epochs: int = 100
    seed: int = 0
    patience: int = 10
    shuffle: bool = True

    def to_dict(self):
        return {f.name: getattr(self, f.name) for f in fields(self)}


@dataclass(frozen=True)
class EpochLog:
    epoch: int
    train_loss: float
    val_mrr: float

    def to_line(self):
        return f"{self.epoch}\t{self.train_loss!r}\t{self.val_mrr!r}"


@dataclass
class TrainResult:
    model: LoGo
    log: list
    best_epoch: int
    best_val_mrr: float
    best_state: dict = field(repr=False, default=None)


class EarlyStopping:
    """Stop once ``patience`` epochs pass without a strictly better value."""

    def __init__(self, patience):
        if patience < 1:
            raise ValueError("patience must be >= 1")
        self.patience = patience
        self.best = -np.inf
        self.best_epoch = None
        self.since_best = 0

    def update(self, epoch, value):
        """Record ``value``; returns True when training should stop."""
        if value > self.best:
            self.best, self.best_epoch, self.since_best = value, epoch, 0
            return False
        self.since_best += 1
        return self.since_best >= self.patience


def group_by_time_and_ce(queries):
    grouped = defaultdict(lambda: defaultdict(list))
    for q in queries:
        grouped[q.t][q.ce].append(q)
    return {t: dict(sorted(by_ce.items())) for t, by_ce in sorted(grouped.items())}


def _batch_logits(model, t, by_ce, timelines):
    cfg = model.config
    g = model.encode_global(global_history(timelines.global_, t, cfg.T_global))
    logits, ordered = [], []
    for ce_id, qs in by_ce.items():
        ctx_local = model.encode_local(local_history(timelines.local[ce_id], t, cfg.T_local))
        logits.append(model.logits(qs, Contexts(ctx_local, g)))
        ordered.extend(qs)
    return (logits[0] if len(logits) == 1 else ops.concat_rows(logits)), ordered


def query_scores(model, queries, timelines):
    """Logit matrix (len(queries), |E|) in the order of ``queries``."""
    was_training = model.training
    model.training = False
    pos = {id(q): i for i, q in enumerate(queries)}
    out = np.empty((len(queries), model.config.n_entities))
    try:
        with no_grad():
            for t, by_ce in group_by_time_and_ce(queries).items():
                logits, ordered = _batch_logits(model, t, by_ce, timelines)
                for q, row in zip(ordered, logits.data):
                    out[pos[id(q)]] = row
    finally:
        model.training = was_training
    return out


def train_epoch(model, optimizer, batches, timelines, order):
    model.training = True
    total = 0.0
    times = list(batches)
    for i in order:
        t = times[i]
        optimizer.zero_grad()
        logits, ordered = _batch_logits(model, t, batches[t], timelines)
        value = loss(ordered, logits)
        v = float(value.data)
        if not np.isfinite(v):
            raise NonFiniteLoss(f"loss {v} at target time {t} over {len(ordered)} queries")
        value.backward()
        optimizer.step()
        total += v
    model.training = False
    return total


def train(dataset, model_config, train_config, model=None, log_path=None, on_epoch=None):
    """Fit a LoGo model; the returned model holds the best-validation parameters."""
    timelines = snapshot_index(dataset)
    train_q = split_queries(dataset, "train", timelines)
    val_q = split_queries(dataset, "val", timelines)
    if not train_q:
        raise EmptySplit("train split has no queries")
    if not val_q:
        raise EmptySplit("val split has no queries")
    model = model or LoGo(model_config, seed=train_config.seed)
    optimizer = Adam(model.named_parameters(), lr=train_config.lr, weight_decay=train_config.weight_decay)
    index = FilterIndex.from_dataset(dataset)
    batches = group_by_time_and_ce(train_q)
    order_rng = rng_for(train_config.seed, "train/order")
    stopper = EarlyStopping(train_config.patience)
    history, best_state = [], model.state_dict()
    fh = open(log_path, "w", encoding="utf-8") if log_path else None
    try:
        for epoch in range(1, train_config.epochs + 1):
            order = order_rng.permutation(len(batches)) if train_config.shuffle else np.arange(len(batches))
            train_loss = train_epoch(model, optimizer, batches, timelines, order)
            report, _ = evaluate_split(model, dataset, "val", timelines=timelines, index=index, queries=val_q)
            entry = EpochLog(epoch, train_loss, report.mrr)
            history.append(entry)
            if fh:
                fh.write(entry.to_line() + "\n")
                fh.flush()
            log.info("epoch %d loss %.4f val MRR %.4f", epoch, train_loss, report.mrr)
            if on_epoch:
                on_epoch(entry)
            stop = stopper.update(epoch, report.mrr)
            if stopper.best_epoch == epoch:
                best_state = model.state_dict()
            if stop:
                break
    finally:
        if fh:
            fh.close()
    model.load_state_dict(best_state)
    return TrainResult(model, history, stopper.best_epoch, float(stopper.best), best_state)
