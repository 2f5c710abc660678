"""Training loop, batching, evaluation, and checkpointing."""

from __future__ import annotations

from pathlib import Path
from typing import Callable, Sequence

import numpy as np
import torch
from torch import nn

from .model import BipartGnn, ModelConfig, build_model
from .qp import TrainingInstance


def collate(instances: Sequence[TrainingInstance]) -> tuple[torch.Tensor, ...]:
    """Pack several graphs into one disjoint batch graph.

    Vertex indices of each graph are shifted by the number of vertices that
    precede it, so message passing never crosses graph boundaries.  Returns
    node features, edge index, edge features, and labels (NaN rows when an
    instance carries no labels).
    """
    nodes = []
    edges = []
    feats = []
    labels = []
    offset = 0
    for inst in instances:
        n = inst.node_feats.shape[0]
        nodes.append(inst.node_feats)
        edges.append(inst.edge_index + offset)
        feats.append(inst.edge_feats)
        if inst.labels is None:
            labels.append(np.full(n, np.nan, dtype=np.float32))
        else:
            labels.append(inst.labels)
        offset += n
    return (
        torch.from_numpy(np.concatenate(nodes)).float(),
        torch.from_numpy(np.concatenate(edges, axis=1)).long(),
        torch.from_numpy(np.concatenate(feats)).float(),
        torch.from_numpy(np.concatenate(labels)).float(),
    )


def node_accuracy(model: BipartGnn, instances: Sequence[TrainingInstance]) -> float:
    """Fraction of vertices whose thresholded score matches the label."""
    model.eval()
    node_feats, edge_index, edge_feats, labels = collate(instances)
    with torch.no_grad():
        logits = model(node_feats, edge_index, edge_feats)
    preds = (torch.sigmoid(logits) >= 0.5).float()
    return float((preds == labels).float().mean())


def train(
    train_set: Sequence[TrainingInstance],
    config: ModelConfig,
    test_set: Sequence[TrainingInstance] | None = None,
    log_fn: Callable[[dict], None] | None = None,
    eval_every: int = 1,
) -> tuple[BipartGnn, list[dict]]:
    """Fit a network to labeled instances with binary cross-entropy.

    Uses decoupled weight decay and a cosine-annealed learning rate over the
    configured epoch count.  Aborts with diagnostics if the loss ever stops
    being finite.  Returns the trained model and a history of per-epoch rows
    with loss and accuracies.
    """
    if not train_set:
        raise ValueError("training set is empty")
    for inst in train_set:
        if inst.labels is None:
            raise ValueError(f"instance {inst.name} has no labels")
    model = build_model(config)
    opt = torch.optim.AdamW(
        model.parameters(), lr=config.lr, weight_decay=config.weight_decay
    )
    sched = torch.optim.lr_scheduler.CosineAnnealingLR(opt, T_max=config.epochs)
    loss_fn = nn.BCEWithLogitsLoss()
    rng = np.random.default_rng(config.seed)
    history: list[dict] = []

    for epoch in range(1, config.epochs + 1):
        model.train()
        order = rng.permutation(len(train_set))
        total = 0.0
        seen = 0
        for start in range(0, len(order), config.batch_size):
            batch = [train_set[i] for i in order[start : start + config.batch_size]]
            node_feats, edge_index, edge_feats, labels = collate(batch)
            opt.zero_grad()
            logits = model(node_feats, edge_index, edge_feats)
            loss = loss_fn(logits, labels)
            if not torch.isfinite(loss):
                raise RuntimeError(
                    f"loss became non-finite at epoch {epoch}, batch starting at "
                    f"{start}: loss={float(loss.detach())}, "
                    f"logit range=[{float(logits.detach().min())}, "
                    f"{float(logits.detach().max())}], "
                    f"lr={opt.param_groups[0]['lr']}"
                )
            loss.backward()
            opt.step()
            total += float(loss.detach()) * labels.numel()
            seen += labels.numel()
        sched.step()
        row = {"epoch": epoch, "loss": total / seen, "lr": opt.param_groups[0]["lr"]}
        if epoch % eval_every == 0 or epoch == config.epochs:
            row["train_accuracy"] = node_accuracy(model, train_set)
            if test_set:
                row["test_accuracy"] = node_accuracy(model, test_set)
        history.append(row)
        if log_fn is not None:
            log_fn(row)
    model.eval()
    return model, history


def save_checkpoint(model: BipartGnn, path: str | Path) -> None:
    """Write the model weights and its config to one file."""
    torch.save(
        {"config": model.config.to_dict(), "state": model.state_dict()}, str(path)
    )


def load_checkpoint(path: str | Path) -> BipartGnn:
    """Rebuild a model from a checkpoint file."""
    blob = torch.load(str(path), map_location="cpu", weights_only=True)
    model = BipartGnn(ModelConfig.from_dict(blob["config"]))
    model.load_state_dict(blob["state"])
    model.eval()
    return model
