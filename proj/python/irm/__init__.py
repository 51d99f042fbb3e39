"""Python access to the irm core library.

Items and prediction records cross the boundary as plain dicts.
"""

import json

from . import _irm
from ._irm import (
    ShapeError,
    ValidationError,
    answer_has_timestamp,
    assignment_cost,
    combined_loss,
    extend_span,
    gradcheck_worst,
    hungarian_match,
    loss_schedule,
    parse_option,
    pearson,
    relation_loss,
    robustness_drop,
    sample_frames,
    select_relevant,
    token_f1,
    visible_timeline,
)

__all__ = [
    "ShapeError",
    "ValidationError",
    "answer_has_timestamp",
    "assignment_cost",
    "build_mc_prompt",
    "build_open_prompt",
    "build_psav_prompt",
    "combined_loss",
    "extend_span",
    "gradcheck_worst",
    "hungarian_match",
    "loss_schedule",
    "mc_accuracy",
    "noisy_augment",
    "parse_option",
    "pearson",
    "psav_metrics",
    "relation_loss",
    "robustness_drop",
    "run_cli",
    "sample_frames",
    "select_relevant",
    "synthetic_dataset",
    "token_f1",
    "visible_timeline",
]


def synthetic_dataset(count, seed=2024):
    return json.loads(_irm.synthetic_dataset(count, seed))


def noisy_augment(items, ratio, seed):
    return json.loads(_irm.noisy_augment(json.dumps(items), ratio, seed))


def build_mc_prompt(item, clues=()):
    return _irm.build_mc_prompt(json.dumps(item), list(clues))


def build_open_prompt(item, clues=()):
    return _irm.build_open_prompt(json.dumps(item), list(clues))


def build_psav_prompt(clues):
    return _irm.build_psav_prompt(list(clues))


def mc_accuracy(records):
    return _irm.mc_accuracy(json.dumps(list(records)))


def psav_metrics(records):
    recall, accuracy = _irm.psav_metrics(json.dumps(list(records)))
    return {"recall": recall, "accuracy": accuracy}


def run_cli(*args):
    """Runs the command-line tool in-process. Returns (exit_code, stdout, stderr)."""
    return _irm.run_cli([str(a) for a in args])
