"""Python access to the vprobe value-probing harness."""

import json as _json

from . import _core
from ._core import (
    Error,
    PreconditionError,
    SchemaError,
    UndefinedCorrelationError,
    ValidationError,
    alignment,
    emd_ordinal,
    js_distance,
    js_divergence,
    pearson,
    score_sequence,
    spearman,
)

__all__ = [
    "Error",
    "PreconditionError",
    "SchemaError",
    "UndefinedCorrelationError",
    "ValidationError",
    "alignment",
    "emd_ordinal",
    "js_distance",
    "js_divergence",
    "load_question_bank",
    "mock_probe",
    "pearson",
    "render",
    "run_cli",
    "score_sequence",
    "score_text",
    "spearman",
]


def load_question_bank(path):
    """Returns {"source", "version", "questions": [...]} for a JSONL bank."""
    return _json.loads(_core.load_question_bank(str(path)))


def render(question, style="default", variant="letters", persona=None):
    return _json.loads(_core.render(_json.dumps(question), style, variant, persona))


def score_text(samples, question, variant="letters"):
    return _core.score_text(list(samples), _json.dumps(question), variant)


def mock_probe(spec, question, method="token", style="default", variant="letters", n=10):
    """Probes one question against an in-process mock model described by `spec`."""
    return _core.mock_probe(_json.dumps(spec), _json.dumps(question), method, style, variant, n)


def run_cli(*args):
    """Runs the command-line tool in-process and returns (exit_code, stdout, stderr)."""
    return _core.run_cli([str(a) for a in args])
