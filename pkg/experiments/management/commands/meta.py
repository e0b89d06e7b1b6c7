"""
Django management command for a single meta-learning fit.
LAMeL Toolkit - Meta Command

Builds the support ensemble from coefficient files (task id = file stem),
fits the parallel and perpendicular components on the target shots and
writes the model document. With --from-model the fit is skipped and a saved
model is only used for prediction.

Usage: python manage.py meta target.txt labels.csv --support water.txt ethanol.txt --out model.json
       python manage.py meta --from-model model.json --predict test.txt --predictions pred.csv
"""

import math
from pathlib import Path

import pandas as pd

from experiments.cli import LamelCommand, read_labels
from modeling.io import read_coefficients, read_model, write_model
from modeling.lamel import LambdaPolicy, SupportEnsemble, SupportModel, fit, predict_meta
from molecules.io import read_feature_matrix


class Command(LamelCommand):
    """Management command to fit or apply one meta model."""

    help = 'Fit a meta model on target shots against saved support coefficients'

    def add_arguments(self, parser):
        parser.add_argument('features', nargs='?', help='Target-shot feature file')
        parser.add_argument('labels', nargs='?', help='CSV with one label per target shot')
        parser.add_argument('--support', nargs='+', default=[], help='Support coefficient files')
        parser.add_argument('--out', help='Model JSON file to write')
        parser.add_argument('--label-col', default='y', help='Label column (default: y)')
        parser.add_argument('--target-id', default='', help='Target task id stored in the model')
        self.add_lambda_arguments(parser, 'parallel', 'perpendicular')
        parser.add_argument(
            '--anchored-only',
            action='store_true',
            help='Always keep the support-anchored model, even when plain ridge cross-validates better',
        )
        parser.add_argument('--from-model', help='Load this model instead of fitting one')
        parser.add_argument('--predict', help='Feature file to predict with the model')
        parser.add_argument('--predictions', help='CSV to write predictions to (needs --predict)')

    def run(self, **options):
        if options['from_model']:
            model = read_model(options['from_model'])
        else:
            model = self.fit_model(options)

        if options['predict']:
            if not options['predictions']:
                raise self.invalid("--predict needs --predictions")
            features = read_feature_matrix(options['predict'])
            pd.DataFrame({'id': list(features.row_ids), 'prediction': predict_meta(model, features)}).to_csv(
                options['predictions'], index=False,
            )
            self.success(f"Wrote {features.rows} predictions to {options['predictions']}")

    def fit_model(self, options):
        if not (options['features'] and options['labels'] and options['out']):
            raise self.invalid("features, labels and --out are required unless --from-model is given")
        if not options['support']:
            raise self.invalid("At least one --support coefficient file is required")

        models = tuple(
            SupportModel(Path(path).stem, read_coefficients(path), math.nan) for path in options['support']
        )
        ids = [model.task_id for model in models]
        if len(set(ids)) != len(ids):
            raise self.invalid(f"Support file names must be distinct task ids, got {ids}")
        ensemble = SupportEnsemble(models)

        features = read_feature_matrix(options['features'])
        y, _ = read_labels(options['labels'], options['label_col'], features.rows)
        defaults = LambdaPolicy()
        policy = LambdaPolicy(
            support=defaults.support,
            parallel=self.lambda_value(options, 'parallel', defaults.parallel),
            perpendicular=self.lambda_value(options, 'perpendicular', defaults.perpendicular),
            compare_to_ridge=not options['anchored_only'],
        )
        target_id = options['target_id'] or Path(options['features']).stem
        model = fit(ensemble, features, y, policy, target_id=target_id)
        write_model(options['out'], model)
        if not model.anchored:
            self.warn(f"Plain ridge on the shots cross-validated better than the support anchor for {target_id}")
        self.success(
            f"Fitted meta model for {target_id} on {features.rows} shots with T={model.T} "
            f"(lambda_parallel={model.lambdas[0]:g}, lambda_perp={model.lambdas[1]:g}) -> {options['out']}"
        )
        return model
