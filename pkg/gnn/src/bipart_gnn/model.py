"""Edge-conditioned graph network that scores vertices for side assignment.

The network embeds all-ones node features and per-edge statistics, runs a
stack of pre-normalized message-passing blocks with residual connections, and
emits one logit per vertex.  Sigmoid of the logit is the probability that the
vertex belongs to side 1 of a two-sided partition.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

import torch
from torch import nn

from .features import EDGE_FEATURE_DIM, NODE_FEATURE_DIM


@dataclass
class ModelConfig:
    """Architecture and optimization settings.

    The defaults are the full-scale reference configuration; desk-scale runs
    override depth, learning rate, and epoch count.
    """

    layers: int = 40
    hidden: int = 64
    dropout: float = 0.5
    node_dim: int = NODE_FEATURE_DIM
    edge_dim: int = EDGE_FEATURE_DIM
    lr: float = 1e-5
    weight_decay: float = 1e-5
    batch_size: int = 64
    epochs: int = 1000
    seed: int = 0

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "ModelConfig":
        return cls(**data)


def desk_config(**overrides) -> ModelConfig:
    """Small-scale recipe that trains in minutes on one CPU core.

    Compared to the full-scale defaults it is shallower, less regularized,
    and uses a faster-decaying learning rate; on datasets of a few hundred
    twenty-vertex graphs it reaches held-out node accuracy well above 0.8.
    """
    base = dict(
        layers=8,
        hidden=64,
        dropout=0.1,
        lr=1e-3,
        weight_decay=1e-5,
        batch_size=64,
        epochs=60,
        seed=0,
    )
    base.update(overrides)
    return ModelConfig(**base)


class GineConv(nn.Module):
    """One edge-conditioned aggregation step.

    Updates each vertex to ``mlp((1 + eps) * h_i + sum_j relu(h_j + e_ji))``
    where the sum runs over in-neighbors j and ``e_ji`` is the embedded
    feature of the edge from j to i.
    """

    def __init__(self, hidden: int):
        super().__init__()
        self.eps = nn.Parameter(torch.zeros(1))
        self.mlp = nn.Sequential(
            nn.Linear(hidden, hidden),
            nn.ELU(),
            nn.Linear(hidden, hidden),
        )

    def forward(
        self, h: torch.Tensor, edge_index: torch.Tensor, edge_emb: torch.Tensor
    ) -> torch.Tensor:
        agg = torch.zeros_like(h)
        if edge_index.numel():
            src, dst = edge_index[0], edge_index[1]
            msg = torch.relu(h[src] + edge_emb)
            agg = agg.index_add(0, dst, msg)
        return self.mlp((1.0 + self.eps) * h + agg)


class GnnBlock(nn.Module):
    """Pre-norm residual block: aggregation then a feed-forward refit.

    Layout: ``h + conv(norm(h))`` followed by ``x + drop(ffn(norm(x)))`` with
    a two-linear ELU feed-forward network.
    """

    def __init__(self, hidden: int, dropout: float):
        super().__init__()
        self.norm1 = nn.LayerNorm(hidden)
        self.conv = GineConv(hidden)
        self.norm2 = nn.LayerNorm(hidden)
        self.ffn = nn.Sequential(
            nn.Linear(hidden, 2 * hidden),
            nn.ELU(),
            nn.Linear(2 * hidden, hidden),
        )
        self.drop = nn.Dropout(dropout)

    def forward(
        self, h: torch.Tensor, edge_index: torch.Tensor, edge_emb: torch.Tensor
    ) -> torch.Tensor:
        h = h + self.conv(self.norm1(h), edge_index, edge_emb)
        return h + self.drop(self.ffn(self.norm2(h)))


class BipartGnn(nn.Module):
    """Full vertex-scoring network: embed, message-pass, read out one logit."""

    def __init__(self, config: ModelConfig):
        super().__init__()
        self.config = config
        self.node_in = nn.Linear(config.node_dim, config.hidden)
        self.edge_in = nn.Linear(config.edge_dim, config.hidden)
        self.blocks = nn.ModuleList(
            GnnBlock(config.hidden, config.dropout) for _ in range(config.layers)
        )
        self.norm_out = nn.LayerNorm(config.hidden)
        self.head = nn.Sequential(
            nn.Linear(config.hidden, config.hidden),
            nn.ELU(),
            nn.Linear(config.hidden, 1),
        )

    def forward(
        self,
        node_feats: torch.Tensor,
        edge_index: torch.Tensor,
        edge_feats: torch.Tensor,
    ) -> torch.Tensor:
        if node_feats.shape[1] != self.config.node_dim:
            raise ValueError(
                f"node features have width {node_feats.shape[1]} but the model "
                f"expects {self.config.node_dim}"
            )
        if edge_feats.shape[1] != self.config.edge_dim:
            raise ValueError(
                f"edge features have width {edge_feats.shape[1]} but the model "
                f"expects {self.config.edge_dim}"
            )
        h = self.node_in(node_feats)
        edge_emb = self.edge_in(edge_feats)
        for block in self.blocks:
            h = block(h, edge_index, edge_emb)
        return self.head(self.norm_out(h)).squeeze(-1)


def build_model(config: ModelConfig) -> BipartGnn:
    """Construct a network with weights drawn from the config's seed."""
    torch.manual_seed(config.seed)
    return BipartGnn(config)
