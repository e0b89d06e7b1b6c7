"""
Django management command to build graphlet feature files.
LAMeL Toolkit - Fingerprint Command

Reads a CSV of SMILES, enumerates graphlets up to --max-size and writes:
- features.txt: sparse count matrix plus vocabulary
- ids.csv: row ids and SMILES of the featurized rows
- rejects.csv: rows whose SMILES could not be parsed
- features.csv: dense copy, only with --dense

Usage: python manage.py fingerprint molecules.csv --out features/ [--max-size=5] [--vocabulary=support/features.txt]
"""

from pathlib import Path

import pandas as pd
from django.conf import settings

from experiments.cli import LamelCommand
from molecules.graphlets import MAX_GRAPHLET_SIZE, build_vocabulary, featurize, fingerprint_smiles
from molecules.io import IDS_FILE, read_feature_matrix, write_dense_csv, write_feature_matrix


class Command(LamelCommand):
    """Management command to fingerprint molecules."""

    help = 'Enumerate graphlets of every SMILES in a CSV and write feature files'

    def add_arguments(self, parser):
        parser.add_argument('input', help='CSV file with a SMILES column')
        parser.add_argument('--out', required=True, help='Output directory')
        parser.add_argument(
            '--max-size',
            type=int,
            default=settings.LAMEL['DEFAULT_MAX_SIZE'],
            help=f"Maximum graphlet size, 1..{MAX_GRAPHLET_SIZE} (default: {settings.LAMEL['DEFAULT_MAX_SIZE']})",
        )
        parser.add_argument('--smiles-col', default='SMILES', help='SMILES column name (default: SMILES)')
        parser.add_argument('--id-col', default='', help='Row id column (default: 1-based row number)')
        parser.add_argument(
            '--vocabulary',
            help='Existing feature file whose vocabulary to reuse instead of building a new one',
        )
        parser.add_argument('--dense', action='store_true', help='Also write a dense features.csv')
        parser.add_argument('--workers', type=int, default=settings.LAMEL['WORKERS'])

    def run(self, **options):
        max_size = options['max_size']
        if not 1 <= max_size <= MAX_GRAPHLET_SIZE:
            raise self.invalid(f"--max-size must be in 1..{MAX_GRAPHLET_SIZE}, got {max_size}")

        try:
            frame = pd.read_csv(options['input'], dtype=str, keep_default_na=False)
        except pd.errors.EmptyDataError:
            raise self.invalid(f"{options['input']}: empty file")
        if options['smiles_col'] not in frame.columns:
            raise self.invalid(f"{options['input']}: no column {options['smiles_col']!r}")
        if frame.empty:
            raise self.invalid(f"{options['input']}: no data rows")
        if options['id_col'] and options['id_col'] not in frame.columns:
            raise self.invalid(f"{options['input']}: no column {options['id_col']!r}")

        smiles = [text.strip() for text in frame[options['smiles_col']]]
        ids = list(frame[options['id_col']]) if options['id_col'] else [str(i) for i in range(1, len(frame) + 1)]
        outcomes = fingerprint_smiles(smiles, max_size, workers=options['workers'])

        kept, rejects = [], []
        for row, (row_id, text, outcome) in enumerate(zip(ids, smiles, outcomes), start=1):
            if isinstance(outcome, str):
                rejects.append({'source_row': row, 'id': row_id, 'smiles': text, 'reason': outcome})
            else:
                kept.append((row_id, text, outcome))
        if rejects:
            self.warn(f"{len(rejects)} of {len(smiles)} SMILES could not be parsed (see rejects.csv)")
        if not kept:
            raise self.invalid("No molecule could be featurized; nothing written")

        fingerprints = [fp for _, _, fp in kept]
        if options['vocabulary']:
            vocabulary = read_feature_matrix(options['vocabulary']).vocabulary
            if vocabulary.max_size != max_size:
                raise self.invalid(
                    f"Vocabulary was built with max size {vocabulary.max_size}, not {max_size}"
                )
        else:
            vocabulary = build_vocabulary(fingerprints, max_size=max_size)
        features = featurize(fingerprints, vocabulary, row_ids=[row_id for row_id, _, _ in kept])

        out = Path(options['out'])
        write_feature_matrix(out / 'features.txt', features)
        pd.DataFrame({'id': [row_id for row_id, _, _ in kept], 'smiles': [text for _, text, _ in kept]}).to_csv(
            out / IDS_FILE, index=False,
        )
        pd.DataFrame(rejects, columns=['source_row', 'id', 'smiles', 'reason']).to_csv(out / 'rejects.csv', index=False)
        if options['dense']:
            write_dense_csv(out / 'features.csv', features, settings.LAMEL['DENSE_EXPORT_MAX_COLUMNS'])

        if features.oov_total:
            self.warn(f"{features.oov_total} graphlet instances fell outside the reused vocabulary")
        self.success(
            f"Featurized {features.rows} molecules: V={features.cols}, nnz={features.nnz}, "
            f"max size {max_size} -> {out}"
        )
