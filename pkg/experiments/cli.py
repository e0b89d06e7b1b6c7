"""
Shared plumbing for the toolkit's management commands.
LAMeL Toolkit - Command Base

Exit codes: 0 success, 1 runtime failure, 2 empty or invalid input.
"""

import logging

import pandas as pd
from decouple import Csv
from django.core.management.base import BaseCommand, CommandError

from core.exceptions import (
    ConfigError, FormatError, LamelError, MetaLearningError, RidgeError, SmilesParseError, TaskDataError,
)

logger = logging.getLogger(__name__)

EXIT_RUNTIME = 1
EXIT_INVALID_INPUT = 2

INVALID_INPUT_ERRORS = (
    ConfigError, FormatError, TaskDataError, SmilesParseError, RidgeError, MetaLearningError,
)

int_list = Csv(cast=int)
float_list = Csv(cast=float)


class LamelCommand(BaseCommand):
    """
    Base class translating toolkit errors into CommandError exit codes.

    Subclasses implement ``run(**options)`` instead of ``handle``.
    """

    def run(self, **options):
        raise NotImplementedError

    def handle(self, *args, **options):
        try:
            return self.run(**options)
        except CommandError:
            raise
        except INVALID_INPUT_ERRORS as exc:
            raise CommandError(str(exc), returncode=EXIT_INVALID_INPUT) from exc
        except (LamelError, OSError) as exc:
            logger.error("%s failed: %s", self.__module__.rsplit('.', 1)[-1], exc)
            raise CommandError(f"{type(exc).__name__}: {exc}", returncode=EXIT_RUNTIME) from exc

    def invalid(self, message):
        return CommandError(message, returncode=EXIT_INVALID_INPUT)

    def success(self, message):
        self.stdout.write(self.style.SUCCESS(message))

    def warn(self, message):
        self.stdout.write(self.style.WARNING(message))

    def add_lambda_arguments(self, parser, *names):
        for name in names:
            parser.add_argument(
                f'--{name}-lambda',
                type=float,
                help=f'Fixed {name} regularization (overrides --{name}-grid)',
            )
            parser.add_argument(
                f'--{name}-grid',
                type=float_list,
                help=f'Comma-separated {name} lambda grid searched by cross-validation',
            )

    def lambda_value(self, options, name, default):
        """Fixed value, grid tuple, or ``default`` when neither flag is given."""
        fixed = options.get(f'{name}_lambda')
        if fixed is not None:
            return fixed
        grid = options.get(f'{name}_grid')
        return tuple(grid) if grid else default


def read_labels(path, column, expected_rows, row_ids=None):
    """
    Label vector from a CSV; rows must line up with the feature file.

    An ``id`` column, when present, must match ``row_ids`` in order.

    Raises:
        TaskDataError: Missing column, length or id mismatch, non-numeric values
    """
    try:
        frame = pd.read_csv(path, dtype=str, keep_default_na=False)
    except (OSError, pd.errors.ParserError, pd.errors.EmptyDataError) as exc:
        raise TaskDataError(f"Cannot read labels {path}: {exc}") from exc
    if column not in frame.columns:
        raise TaskDataError(f"{path}: no label column {column!r}")
    if len(frame) != expected_rows:
        raise TaskDataError(f"{path}: {len(frame)} labels for {expected_rows} feature rows")
    if row_ids is not None and 'id' in frame.columns and list(frame['id']) != list(row_ids):
        raise TaskDataError(f"{path}: id column does not match the feature rows")
    values = pd.to_numeric(frame[column], errors='coerce')
    if values.isna().any():
        bad = int(values.isna().idxmax()) + 1
        raise TaskDataError(f"{path}: non-numeric label in data row {bad}")
    return values.to_numpy(dtype=float), (list(frame['id']) if 'id' in frame.columns else None)
