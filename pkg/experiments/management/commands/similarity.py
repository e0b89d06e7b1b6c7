"""
Django management command for the task-similarity study.
LAMeL Toolkit - Similarity Command

Usage: python manage.py similarity --dataset=boobier [--config=run.conf] [--max-size=5]
       [--similarity-max-size=5] [--out=results/]
"""

from experiments.cli import LamelCommand
from experiments.config import load_experiment_config
from experiments.harness import run_similarity


class Command(LamelCommand):
    """Management command comparing solvent fingerprints with regression vectors."""

    help = 'Correlate solvent fingerprint similarity with regression-vector similarity across tasks'

    def add_arguments(self, parser):
        parser.add_argument('--config', help='Flat key=value experiment config file')
        parser.add_argument('--dataset', help='Dataset preset: boobier, bigsoldb, qm9multixc or synthetic')
        parser.add_argument('--data-path', help='Dataset CSV (overrides the preset path)')
        parser.add_argument('--max-size', type=int, help='Graphlet size of the solute features')
        parser.add_argument('--similarity-max-size', type=int, help='Graphlet size of the solvent fingerprints')
        parser.add_argument('--min-rows', type=int, help='Drop tasks with fewer valid rows')
        parser.add_argument('--split-seed', type=int, help='Seed of the 80/20 split')
        parser.add_argument('--workers', type=int, help='Fingerprinting processes')
        parser.add_argument('--out', help='Results directory')
        parser.add_argument('--record', action='store_true', default=None,
                            help='Store the run in the results registry')

    def run(self, **options):
        overrides = {
            'dataset': options['dataset'],
            'data_path': options['data_path'],
            'max_size': [options['max_size']] if options['max_size'] else None,
            'similarity_max_size': options['similarity_max_size'],
            'min_rows_per_task': options['min_rows'],
            'split_seed': options['split_seed'],
            'workers': options['workers'],
            'out': options['out'],
            'record': options['record'],
        }
        config = load_experiment_config(options['config'], overrides)
        result = run_similarity(config)

        if result.excluded:
            self.warn(f"Left out {len(result.excluded)} task(s) without a usable solvent structure")
        if result.study.pearson is None:
            self.warn("Pearson correlation is undefined: one similarity axis is constant")
        else:
            self.stdout.write(f"Pearson R = {result.study.pearson:.3f} over "
                              f"{len(result.study.fingerprint.pairs())} task pairs")
        self.success(f"Wrote similarity tables to {result.run_dir}")
