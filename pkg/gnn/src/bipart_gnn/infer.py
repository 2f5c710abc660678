"""Inference: score a problem's vertices and write an assignment file.

The output is the tab-separated assignment format the solver pipeline imports
(`vertex_id<TAB>side`), so a trained network can stand in for the pipeline's
own partitioners.
"""

from __future__ import annotations

import json
from pathlib import Path

import torch

from .model import BipartGnn
from .qp import featurize_problem
from .train import collate, load_checkpoint


def predict_sides(model: BipartGnn, problem: dict) -> dict[str, int]:
    """Score every coupling-graph vertex of a problem JSON dict.

    Vertices whose sigmoid score is at least 0.5 go to side 1, the rest to
    side 0.  Raises ValueError when the featurizer's output width does not
    match what the model was built for.
    """
    inst = featurize_problem(problem)
    node_feats, edge_index, edge_feats, _ = collate([inst])
    model.eval()
    with torch.no_grad():
        logits = model(node_feats, edge_index, edge_feats)
    sides = (torch.sigmoid(logits) >= 0.5).long().tolist()
    return dict(zip(inst.vertex_ids, sides))


def write_assignment(sides: dict[str, int], path: str | Path) -> None:
    """Write a vertex-to-side map in the importable tab-separated format."""
    with open(path, "w", encoding="utf-8") as fh:
        for vid, side in sides.items():
            fh.write(f"{vid}\t{int(side)}\n")


def infer_file(
    checkpoint_path: str | Path,
    problem_path: str | Path,
    assignment_path: str | Path,
) -> dict[str, int]:
    """Load a checkpoint, score a problem file, and write the assignment."""
    model = load_checkpoint(checkpoint_path)
    with open(problem_path, encoding="utf-8") as fh:
        problem = json.load(fh)
    sides = predict_sides(model, problem)
    write_assignment(sides, assignment_path)
    return sides
