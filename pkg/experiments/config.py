"""
Experiment configuration.
LAMeL Toolkit - Experiment Config Module

Resolution order, later wins:
1. ``settings.LAMEL`` defaults
2. The dataset preset named by ``dataset``
3. A flat ``key=value`` config file (read with python-decouple)
4. Command-line overrides

The merged values are validated by ExperimentConfigSerializer; a failure
raises ConfigError.
"""

from __future__ import annotations

import hashlib
import json
import logging
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

from decouple import Config, Csv, RepositoryEnv
from django.conf import settings
from rest_framework import serializers

from core.exceptions import ConfigError
from molecules.graphlets import MAX_GRAPHLET_SIZE
from modeling.linmodel import DEFAULT_LAMBDA_GRID
from .taskdata import DatasetSchema

logger = logging.getLogger(__name__)

LIST_KEYS = (
    'max_size', 'shots', 'seeds', 'support_subsample',
    'support_grid', 'parallel_grid', 'perp_grid',
)

SCALAR_KEYS = (
    'dataset', 'data_path', 'layout', 'smiles_col', 'task_col', 'value_col',
    'temperature_col', 'solvent_smiles_col', 'task_pattern', 'temperature_filter',
    'min_rows_per_task', 'target', 'support_pattern', 'support_count', 'split_seed',
    'similarity_max_size', 'workers', 'out', 'record',
    'synthetic_features', 'synthetic_tasks', 'synthetic_rank', 'synthetic_noise',
    'synthetic_rows', 'synthetic_target',
)

DOCUMENTED_KEYS = LIST_KEYS + SCALAR_KEYS

# Keys that change where or how fast a run happens, not what it computes.
NON_RESULT_KEYS = ('out', 'workers', 'record')

ALL_TARGETS = 'all'


@dataclass(frozen=True)
class ExperimentConfig:
    """
    Fully resolved settings for one experiment run (one graphlet size).

    ``support_subsample`` value 0 means every support row. ``target`` is one
    task id or 'all' for each task in turn.
    """
    dataset: str = ''
    data_path: str = ''
    layout: str = 'long'
    smiles_col: str = 'SMILES'
    task_col: str = ''
    value_col: str = ''
    temperature_col: str = ''
    solvent_smiles_col: str = ''
    task_pattern: str = ''
    temperature_filter: bool = False
    min_rows_per_task: int = 1
    max_size: int = 5
    shots: tuple = (10, 15, 20, 30, 50, 100)
    seeds: tuple = tuple(range(10))
    support_subsample: tuple = (0,)
    target: str = ALL_TARGETS
    support_pattern: str = ''
    support_count: int | None = None
    support_grid: tuple = DEFAULT_LAMBDA_GRID
    parallel_grid: tuple = tuple(lam for lam in DEFAULT_LAMBDA_GRID if lam > 0)
    perp_grid: tuple = DEFAULT_LAMBDA_GRID
    split_seed: int = 0
    test_fraction: float = 0.2
    similarity_max_size: int = 5
    workers: int = 1
    out: str = 'results'
    record: bool = False
    solvent_smiles: dict = field(default_factory=dict)
    synthetic_features: int = 50
    synthetic_tasks: int = 8
    synthetic_rank: int = 2
    synthetic_noise: float = 0.1
    synthetic_rows: int = 400
    synthetic_target: str = 'inside'

    @property
    def is_synthetic(self):
        return self.layout == 'synthetic'

    def schema(self):
        return DatasetSchema(
            layout=self.layout,
            smiles_col=self.smiles_col,
            task_col=self.task_col,
            value_col=self.value_col,
            temperature_col=self.temperature_col,
            solvent_smiles_col=self.solvent_smiles_col,
            task_pattern=self.task_pattern,
        )

    def to_dict(self):
        data = asdict(self)
        for key, value in data.items():
            if isinstance(value, tuple):
                data[key] = list(value)
        return data

    def digest(self):
        """Stable hex digest of every setting that affects results."""
        payload = {key: value for key, value in self.to_dict().items() if key not in NON_RESULT_KEYS}
        text = json.dumps(payload, sort_keys=True, separators=(',', ':'))
        return hashlib.blake2b(text.encode('utf-8'), digest_size=16).hexdigest()

    def run_dir(self):
        return Path(self.out) / self.digest()[:12]

    def with_overrides(self, **changes):
        return replace(self, **changes)


class ExperimentConfigSerializer(serializers.Serializer):
    """
    Validates merged experiment settings.
    Casts string values from config files and enforces cross-field rules.
    """
    dataset = serializers.CharField(allow_blank=True, required=False, default='')
    data_path = serializers.CharField(allow_blank=True, required=False, default='')
    layout = serializers.ChoiceField(choices=['long', 'wide', 'synthetic'], default='long')
    smiles_col = serializers.CharField(default='SMILES')
    task_col = serializers.CharField(allow_blank=True, default='')
    value_col = serializers.CharField(allow_blank=True, default='')
    temperature_col = serializers.CharField(allow_blank=True, default='')
    solvent_smiles_col = serializers.CharField(allow_blank=True, default='')
    task_pattern = serializers.CharField(allow_blank=True, default='')
    temperature_filter = serializers.BooleanField(default=False)
    min_rows_per_task = serializers.IntegerField(min_value=1, default=1)
    max_size = serializers.ListField(
        child=serializers.IntegerField(min_value=1, max_value=MAX_GRAPHLET_SIZE), min_length=1,
    )
    shots = serializers.ListField(child=serializers.IntegerField(min_value=1), min_length=1)
    seeds = serializers.ListField(child=serializers.IntegerField(min_value=0), min_length=1)
    support_subsample = serializers.ListField(child=serializers.IntegerField(min_value=0), min_length=1)
    target = serializers.CharField(default=ALL_TARGETS)
    support_pattern = serializers.CharField(allow_blank=True, default='')
    support_count = serializers.IntegerField(min_value=1, allow_null=True, default=None)
    support_grid = serializers.ListField(child=serializers.FloatField(min_value=0), min_length=1)
    parallel_grid = serializers.ListField(child=serializers.FloatField(min_value=0), min_length=1)
    perp_grid = serializers.ListField(child=serializers.FloatField(min_value=0), min_length=1)
    split_seed = serializers.IntegerField(min_value=0, default=0)
    test_fraction = serializers.FloatField(min_value=0, max_value=1, default=0.2)
    similarity_max_size = serializers.IntegerField(min_value=1, max_value=MAX_GRAPHLET_SIZE, default=5)
    workers = serializers.IntegerField(min_value=1, default=1)
    out = serializers.CharField(default='results')
    record = serializers.BooleanField(default=False)
    solvent_smiles = serializers.DictField(child=serializers.CharField(), default=dict)
    synthetic_features = serializers.IntegerField(min_value=1, default=50)
    synthetic_tasks = serializers.IntegerField(min_value=1, default=8)
    synthetic_rank = serializers.IntegerField(min_value=1, default=2)
    synthetic_noise = serializers.FloatField(min_value=0, default=0.1)
    synthetic_rows = serializers.IntegerField(min_value=2, default=400)
    synthetic_target = serializers.ChoiceField(choices=['inside', 'orthogonal', 'none'], default='inside')

    def validate_parallel_grid(self, value):
        if any(lam <= 0 for lam in value):
            raise serializers.ValidationError("Parallel lambdas must be positive.")
        return value

    def validate_test_fraction(self, value):
        if not 0 < value < 1:
            raise serializers.ValidationError("test_fraction must lie strictly between 0 and 1.")
        return value

    def validate(self, attrs):
        layout = attrs['layout']
        if layout == 'synthetic':
            if attrs['synthetic_rank'] > min(attrs['synthetic_tasks'], attrs['synthetic_features']):
                raise serializers.ValidationError(
                    {'synthetic_rank': "Must not exceed synthetic_tasks or synthetic_features."}
                )
            return attrs
        if not attrs['data_path']:
            raise serializers.ValidationError({'data_path': "Required for non-synthetic datasets."})
        if layout == 'long' and not (attrs['task_col'] and attrs['value_col']):
            raise serializers.ValidationError("Long layout needs task_col and value_col.")
        if layout == 'wide' and not attrs['task_pattern']:
            raise serializers.ValidationError({'task_pattern': "Wide layout needs task_pattern."})
        if attrs['temperature_filter'] and not attrs['temperature_col']:
            raise serializers.ValidationError({'temperature_col': "temperature_filter needs temperature_col."})
        return attrs


def settings_defaults():
    lamel = settings.LAMEL
    return {
        'max_size': [lamel['DEFAULT_MAX_SIZE']],
        'shots': list(lamel['DEFAULT_SHOTS']),
        'seeds': list(lamel['DEFAULT_SEEDS']),
        'support_subsample': [0],
        'support_grid': list(DEFAULT_LAMBDA_GRID),
        'parallel_grid': [lam for lam in DEFAULT_LAMBDA_GRID if lam > 0],
        'perp_grid': list(DEFAULT_LAMBDA_GRID),
        'test_fraction': lamel['TEST_FRACTION'],
        'similarity_max_size': lamel['SIMILARITY_MAX_SIZE'],
        'workers': lamel['WORKERS'],
        'out': lamel['RESULTS_DIR'],
        'record': lamel['RECORD_RUNS'],
    }


def preset_values(name):
    """Preset entries plus the dataset path configured for it, if any."""
    presets = settings.LAMEL['PRESETS']
    if name not in presets:
        raise ConfigError(f"Unknown dataset preset {name!r}; available: {', '.join(sorted(presets))}")
    values = dict(presets[name])
    values['dataset'] = name
    data_path = settings.LAMEL['DATA'].get(name, '')
    if data_path:
        values['data_path'] = data_path
    return values


def read_config_file(path):
    """
    Documented keys found in a flat key=value file; list keys split with Csv.

    Raises:
        ConfigError: Missing file or unknown keys
    """
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"Config file not found: {path}")
    repository = RepositoryEnv(str(path))
    unknown = sorted(set(repository.data) - set(DOCUMENTED_KEYS))
    if unknown:
        raise ConfigError(f"{path}: unknown key(s) {', '.join(unknown)}")

    file_config = Config(repository)
    values = {}
    for key in repository.data:
        raw = file_config(key)
        values[key] = Csv()(raw) if key in LIST_KEYS else raw
    return values


def load_experiment_configs(path=None, overrides=None):
    """
    Resolve settings, preset, file and overrides into one ExperimentConfig per max size.

    Raises:
        ConfigError: Unknown preset or key, or failed validation
    """
    overrides = {key: value for key, value in (overrides or {}).items() if value is not None}
    file_values = read_config_file(path) if path else {}

    dataset = overrides.get('dataset') or file_values.get('dataset') or ''
    merged = settings_defaults()
    if dataset:
        merged.update(preset_values(dataset))
    merged.update(file_values)
    merged.update(overrides)
    if merged.get('support_count') in ('', None):
        merged['support_count'] = None

    serializer = ExperimentConfigSerializer(data=merged)
    if not serializer.is_valid():
        raise ConfigError(f"Invalid experiment configuration: {serializer.errors}")
    data = dict(serializer.validated_data)

    sizes = data.pop('max_size')
    for key in ('shots', 'seeds', 'support_subsample'):
        data[key] = tuple(sorted(set(data[key])))
    for key in ('support_grid', 'parallel_grid', 'perp_grid'):
        data[key] = tuple(float(value) for value in data[key])
    data['solvent_smiles'] = dict(data['solvent_smiles'])

    configs = [ExperimentConfig(max_size=size, **data) for size in sorted(set(sizes))]
    logger.debug("Resolved %d experiment config(s) for dataset %r", len(configs), dataset or '<custom>')
    return configs


def load_experiment_config(path=None, overrides=None):
    """Single-size variant of load_experiment_configs."""
    configs = load_experiment_configs(path, overrides)
    if len(configs) != 1:
        raise ConfigError(f"Expected one max_size, got {[config.max_size for config in configs]}")
    return configs[0]
