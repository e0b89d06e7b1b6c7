"""
Django management command for leave-one-task-out few-shot experiments.
LAMeL Toolkit - Experiment Command

Every task (or --target) in turn is adapted from a few shots with the others
as support; meta and plain-ridge models share each shot and test split. One
run directory per graphlet size, named by the config digest, holds raw.csv,
summary.csv, curves.csv, rejects.csv and config-echo.

Usage: python manage.py experiment --dataset=synthetic [--config=run.conf] [--max-size=3,5,7]
       [--shots=10,20,50] [--seeds=0,1,2] [--target=all] [--support-subsample=0,100] [--out=results/]
"""

from experiments.cli import LamelCommand, float_list, int_list
from experiments.config import load_experiment_configs
from experiments.harness import run_experiment


class Command(LamelCommand):
    """Management command to run few-shot experiments."""

    help = 'Run leave-one-task-out few-shot experiments comparing meta-learning with plain ridge'

    def add_arguments(self, parser):
        parser.add_argument('--config', help='Flat key=value experiment config file')
        parser.add_argument('--dataset', help='Dataset preset: boobier, bigsoldb, qm9multixc or synthetic')
        parser.add_argument('--data-path', help='Dataset CSV (overrides the preset path)')
        parser.add_argument('--max-size', type=int_list, help='Graphlet sizes; one run per size')
        parser.add_argument('--shots', type=int_list, help='Shot grid, e.g. 10,15,20,30,50,100')
        parser.add_argument('--seeds', type=int_list, help='Shot sampling seeds, e.g. 0,1,2')
        parser.add_argument('--min-rows', type=int, help='Drop tasks with fewer valid rows')
        parser.add_argument('--target', help="Target task id, or 'all' for each task in turn")
        parser.add_argument('--support-subsample', type=int_list, help='Rows per support task; 0 for all')
        parser.add_argument('--support-pattern', help='Regex restricting the support tasks')
        parser.add_argument('--support-count', type=int, help='Random number of matching support tasks')
        parser.add_argument('--support-grid', type=float_list, help='Support-model lambda grid')
        parser.add_argument('--parallel-grid', type=float_list, help='Parallel lambda grid (all > 0)')
        parser.add_argument('--perp-grid', type=float_list, help='Perpendicular and baseline lambda grid')
        parser.add_argument('--split-seed', type=int, help='Seed for support subsampling and task selection')
        parser.add_argument('--workers', type=int, help='Parallel experiment cells')
        parser.add_argument('--out', help='Results directory')
        parser.add_argument('--record', action='store_true', default=None,
                            help='Store the run in the results registry')

    def run(self, **options):
        overrides = {
            'dataset': options['dataset'],
            'data_path': options['data_path'],
            'max_size': options['max_size'],
            'shots': options['shots'],
            'seeds': options['seeds'],
            'min_rows_per_task': options['min_rows'],
            'target': options['target'],
            'support_subsample': options['support_subsample'],
            'support_pattern': options['support_pattern'],
            'support_count': options['support_count'],
            'support_grid': options['support_grid'],
            'parallel_grid': options['parallel_grid'],
            'perp_grid': options['perp_grid'],
            'split_seed': options['split_seed'],
            'workers': options['workers'],
            'out': options['out'],
            'record': options['record'],
        }
        configs = load_experiment_configs(options['config'], overrides)

        for config in configs:
            self.stdout.write(f"Running {config.dataset or 'custom'} experiment at max size {config.max_size} "
                              f"({config.digest()[:12]})")
            result = run_experiment(config)
            if result.skipped:
                self.warn(f"{result.skipped} cells skipped: too few rows for the requested shots")
            if not result.records:
                raise self.invalid("No experiment rows were produced")
            self.success(f"Wrote {len(result.records)} rows for {result.n_tasks} tasks to {result.run_dir}")
