"""
Coefficient and model files.
LAMeL Toolkit - Model I/O Module

Coefficients are plain text::

    intercept <value>
    size <V>
    <index> <value>      (nonzero entries only)

Meta models are one JSON document (version ``lamel-model-v1``) validated with
MetaModelDocumentSerializer on load. Floats use repr(), the shortest string
that round-trips, so reloaded models predict bit-identically.
"""

import json
import logging
from pathlib import Path

import numpy as np

from core.exceptions import FormatError
from .lamel import MetaModel
from .linmodel import Coefficients
from .serializers import MODEL_DOCUMENT_VERSION, MetaModelDocumentSerializer

logger = logging.getLogger(__name__)


def coefficients_to_text(coef):
    lines = [f"intercept {coef.intercept!r}", f"size {coef.size}"]
    for index in np.flatnonzero(coef.beta):
        lines.append(f"{index} {float(coef.beta[index])!r}")
    return '\n'.join(lines) + '\n'


def coefficients_from_text(text, source='<text>'):
    """
    Raises:
        FormatError: Missing header lines or malformed entries
    """
    lines = [line for line in text.splitlines() if line.strip()]
    if len(lines) < 2 or not lines[0].startswith('intercept ') or not lines[1].startswith('size '):
        raise FormatError(f"{source}: expected 'intercept <v>' and 'size <V>' header lines")
    try:
        intercept = float(lines[0].split()[1])
        size = int(lines[1].split()[1])
    except (IndexError, ValueError) as exc:
        raise FormatError(f"{source}: malformed header") from exc

    beta = np.zeros(size)
    for number, line in enumerate(lines[2:], start=3):
        parts = line.split()
        try:
            index, value = int(parts[0]), float(parts[1])
        except (IndexError, ValueError) as exc:
            raise FormatError(f"{source}:{number}: expected 'index value'") from exc
        if len(parts) != 2 or not 0 <= index < size:
            raise FormatError(f"{source}:{number}: entry out of range")
        beta[index] = value
    return Coefficients(beta, intercept)


def write_coefficients(path, coef):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(coefficients_to_text(coef), encoding='utf-8')
    return path


def read_coefficients(path):
    path = Path(path)
    return coefficients_from_text(path.read_text(encoding='utf-8'), source=str(path))


def _sparse_vector(coef):
    return {
        'size': coef.size,
        'intercept': coef.intercept,
        'entries': [[int(index), float(coef.beta[index])] for index in np.flatnonzero(coef.beta)],
    }


def _dense_vector(document):
    beta = np.zeros(document['size'])
    for index, value in document['entries']:
        beta[int(index)] = value
    return Coefficients(beta, document['intercept'])


def model_to_document(model):
    return {
        'version': MODEL_DOCUMENT_VERSION,
        'target_id': model.target_id,
        'support_ids': list(model.support_ids),
        'c': [float(value) for value in model.c],
        'lambdas': {'parallel': model.lambdas[0], 'perpendicular': model.lambdas[1]},
        'beta_parallel': _sparse_vector(model.beta_parallel),
        'beta_perp': _sparse_vector(model.beta_perp),
        'beta_star': _sparse_vector(model.beta_star),
        'anchored': model.anchored,
    }


def model_from_document(document, source='<document>'):
    """
    Raises:
        FormatError: Document fails MetaModelDocumentSerializer validation
    """
    serializer = MetaModelDocumentSerializer(data=document)
    if not serializer.is_valid():
        raise FormatError(f"{source}: invalid model document: {serializer.errors}")
    data = serializer.validated_data
    return MetaModel(
        c=np.asarray(data['c'], dtype=np.float64),
        beta_parallel=_dense_vector(data['beta_parallel']),
        beta_perp=_dense_vector(data['beta_perp']),
        beta_star=_dense_vector(data['beta_star']),
        lambdas=(data['lambdas']['parallel'], data['lambdas']['perpendicular']),
        support_ids=tuple(data['support_ids']),
        target_id=data['target_id'],
        anchored=data['anchored'],
    )


def write_model(path, model):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(model_to_document(model), indent=2) + '\n', encoding='utf-8')
    logger.info("Wrote meta model for %s (T=%d) to %s", model.target_id or '<target>', model.T, path)
    return path


def read_model(path):
    path = Path(path)
    try:
        document = json.loads(path.read_text(encoding='utf-8'))
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: not valid JSON ({exc})") from exc
    return model_from_document(document, source=str(path))
