"""
Django management command for a single ridge fit.
LAMeL Toolkit - Fit Command

Usage: python manage.py fit features.txt labels.csv --out coef.txt [--lambda=1.0 | --grid=0.01,1,100]
       [--origin=prior.txt] [--no-intercept] [--predictions=pred.csv]
"""

import pandas as pd

from experiments.cli import LamelCommand, float_list, read_labels
from modeling.io import read_coefficients, write_coefficients
from modeling.linmodel import RidgeConfig, predict, ridge_fit, ridge_fit_with_origin, select_lambda
from molecules.io import read_feature_matrix


class Command(LamelCommand):
    """Management command to fit one ridge model."""

    help = 'Fit ridge regression on a feature file and write the coefficients'

    def add_arguments(self, parser):
        parser.add_argument('features', help='Sparse feature file written by the fingerprint command')
        parser.add_argument('labels', help='CSV with one label per feature row')
        parser.add_argument('--out', required=True, help='Coefficient file to write')
        parser.add_argument('--label-col', default='y', help='Label column (default: y)')
        parser.add_argument('--lambda', dest='lam', type=float, help='Fixed regularization strength')
        parser.add_argument('--grid', type=float_list, help='Lambda grid searched by cross-validation')
        parser.add_argument('--folds', type=int, help='k for k-fold CV (default: LOO below 30 rows, else 5)')
        parser.add_argument('--seed', type=int, default=0, help='Fold assignment seed (default: 0)')
        parser.add_argument('--origin', help='Coefficient file to shrink toward instead of zero')
        parser.add_argument('--no-intercept', action='store_true', help='Fit without an intercept')
        parser.add_argument('--standardize', action='store_true', help='Scale columns to unit variance')
        parser.add_argument('--predictions', help='Write training-set predictions to this CSV')

    def run(self, **options):
        features = read_feature_matrix(options['features'])
        y, ids = read_labels(options['labels'], options['label_col'], features.rows)
        fit_intercept = not options['no_intercept']

        if options['lam'] is not None:
            lam, method = options['lam'], 'fixed'
        else:
            selection = select_lambda(
                features, y, options['grid'], folds=options['folds'], seed=options['seed'],
                fit_intercept=fit_intercept, standardize=options['standardize'],
            )
            lam, method = selection.lam, selection.method

        config = RidgeConfig(lam, fit_intercept=fit_intercept, standardize=options['standardize'])
        if options['origin']:
            coefficients = ridge_fit_with_origin(features, y, read_coefficients(options['origin']), config)
        else:
            coefficients = ridge_fit(features, y, config)
        if coefficients.rank_deficient:
            self.warn("Design is rank deficient at lambda=0; wrote the minimum-norm solution")

        write_coefficients(options['out'], coefficients)
        if options['predictions']:
            pd.DataFrame({
                'id': ids or list(features.row_ids),
                'y': y,
                'prediction': predict(features, coefficients),
            }).to_csv(options['predictions'], index=False)

        self.success(
            f"Fitted {features.rows}x{features.cols} ridge model (lambda={lam:g}, {method}) -> {options['out']}"
        )
