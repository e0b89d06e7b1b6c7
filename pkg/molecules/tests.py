"""
Tests for molecules app parsing and graphlet featurization.
LAMeL Toolkit - Unit Tests

This module contains unit tests for the molecules app including:
- SMILES parsing, hydrogen expansion and error offsets
- Atom permutation utilities
- Graphlet enumeration against a brute-force isomorphism oracle
- Vocabulary construction, featurization and file formats
"""

import itertools
import random
import tempfile
from pathlib import Path

import networkx as nx
import numpy as np
from django.test import SimpleTestCase

from core.exceptions import DigestCollisionError, FormatError, GraphError, GraphletError, SmilesParseError
from .graphlets import (
    CanonicalKey, FingerprintVocabulary, LabeledGraph, build_vocabulary, canonical_key,
    enumerate_graphlets, featurize, fingerprint_smiles, node_label,
)
from .io import IDS_FILE, read_feature_matrix, read_row_ids, write_dense_csv, write_feature_matrix
from .molgraph import BondOrder, invert_permutation, parse_smiles, permute_atoms


ORACLE_POOL = [
    'C', 'CC', 'CO', 'C=O', 'C#N', 'CCO', 'CC(=O)C', 'C1CC1', 'c1ccccc1',
    '[NH4+]', 'C[N+](=O)[O-]', 'C1CO1', 'OC=O', 'N#CC#N', 'FC(F)F', 'ClCCl',
    'O=C=O', 'CN', 'C=C', 'C#C', 'NC=O', 'CS', 'OO', 'C(F)(Cl)Br', '[H][H]',
]


def brute_force_classes(graph, max_size):
    """{canonical_form: count} by bucketing every connected vertex subset with exact isomorphism tests."""
    full = graph.to_networkx()
    buckets = []
    for size in range(1, max_size + 1):
        for nodes in itertools.combinations(range(graph.num_atoms), size):
            sub = full.subgraph(nodes)
            if not nx.is_connected(sub):
                continue
            for bucket in buckets:
                if nx.is_isomorphic(
                    bucket[0], sub,
                    node_match=lambda a, b: (a['element'], a['charge']) == (b['element'], b['charge']),
                    edge_match=lambda a, b: a['order'] == b['order'],
                ):
                    bucket[1] += 1
                    break
            else:
                buckets.append([sub, 1, nodes])
    return {
        canonical_key(LabeledGraph.induced(graph, nodes)).canonical_form: count
        for _, count, nodes in buckets
    }, len(buckets)


class ParseSmilesTest(SimpleTestCase):
    """Test cases for parse_smiles."""

    def test_methane(self):
        graph = parse_smiles('C')
        self.assertEqual(graph.num_atoms, 5)
        self.assertEqual(graph.num_bonds, 4)
        self.assertEqual(graph.heavy_atom_count, 1)
        self.assertEqual(graph.bond_order_counts(), {BondOrder.SINGLE: 4})

    def test_acetone(self):
        graph = parse_smiles('CC(=O)C')
        self.assertEqual(graph.num_atoms, 10)
        self.assertEqual(graph.num_bonds, 9)
        self.assertEqual(graph.bond_order_counts(), {BondOrder.SINGLE: 8, BondOrder.DOUBLE: 1})
        carbon_carbon = [
            bond for bond in graph.bonds
            if graph.atoms[bond.begin].element == 'C' and graph.atoms[bond.end].element == 'C'
        ]
        self.assertEqual(len(carbon_carbon), 2)

    def test_cyclopropane_has_carbon_triangle(self):
        graph = parse_smiles('C1CC1')
        self.assertEqual(graph.num_atoms, 9)
        self.assertEqual(graph.num_bonds, 9)
        carbons = [i for i, atom in enumerate(graph.atoms) if atom.element == 'C']
        cycles = nx.cycle_basis(graph.to_networkx().subgraph(carbons))
        self.assertEqual([sorted(cycle) for cycle in cycles], [sorted(carbons)])

    def test_without_hydrogens(self):
        graph = parse_smiles('CC(=O)C', add_hydrogens=False)
        self.assertEqual(graph.num_atoms, 4)
        self.assertEqual([atom.hydrogen_count for atom in graph.atoms], [3, 0, 0, 3])

    def test_atom_count_identity(self):
        for smiles in ORACLE_POOL:
            bare = parse_smiles(smiles, add_hydrogens=False)
            full = parse_smiles(smiles)
            implicit = sum(atom.hydrogen_count for atom in bare.atoms)
            self.assertEqual(full.num_atoms, bare.num_atoms + implicit, smiles)

    def test_aromatic_ring(self):
        graph = parse_smiles('c1ccccc1')
        self.assertEqual(graph.num_atoms, 12)
        self.assertEqual(graph.bond_order_counts(), {BondOrder.AROMATIC: 6, BondOrder.SINGLE: 6})

    def test_bracket_atoms(self):
        ammonium = parse_smiles('[NH4+]')
        self.assertEqual(ammonium.atoms[0].formal_charge, 1)
        self.assertEqual(ammonium.num_atoms, 5)

        nitro = parse_smiles('C[N+](=O)[O-]')
        self.assertEqual(nitro.num_atoms, 7)
        self.assertEqual(sorted(atom.formal_charge for atom in nitro.atoms), [-1] + [0] * 5 + [1])

        labeled = parse_smiles('[13CH4]')
        self.assertEqual(labeled.atoms[0].isotope, 13)
        self.assertEqual(labeled.num_atoms, 5)

    def test_two_letter_elements_and_percent_rings(self):
        self.assertEqual(parse_smiles('ClCBr').heavy_atom_count, 3)
        graph = parse_smiles('C%10CC%10')
        self.assertEqual(graph.num_bonds, 9)

    def test_stereo_markers_are_dropped(self):
        plain = parse_smiles('FC=CF')
        marked = parse_smiles('F/C=C/F')
        self.assertEqual(plain.atoms, marked.atoms)
        self.assertEqual(plain.bonds, marked.bonds)
        self.assertEqual(parse_smiles('N[C@@H](C)C(=O)O').num_atoms, parse_smiles('NC(C)C(=O)O').num_atoms)

    def test_deterministic(self):
        self.assertEqual(parse_smiles('CC(=O)O'), parse_smiles('CC(=O)O'))

    def test_error_offsets(self):
        cases = {
            'C(': 1,
            'C)': 1,
            'C1CC': 1,
            'CXC': 1,
            'C[Zz]': 2,
            '[C': 0,
            'C=': 1,
            'CC.O': 2,
            '[CH5]': 0,
            '[C](=O)(=O)=O': 0,
        }
        for smiles, offset in cases.items():
            with self.subTest(smiles=smiles):
                with self.assertRaises(SmilesParseError) as ctx:
                    parse_smiles(smiles)
                self.assertEqual(ctx.exception.offset, offset)
                self.assertIn(f'offset {offset}', str(ctx.exception))

    def test_unbalanced_message(self):
        with self.assertRaisesMessage(SmilesParseError, 'Unbalanced parenthesis at offset 1'):
            parse_smiles('C(')

    def test_empty(self):
        with self.assertRaises(SmilesParseError):
            parse_smiles('')


class PermuteAtomsTest(SimpleTestCase):
    """Test cases for permute_atoms."""

    def setUp(self):
        self.graph = parse_smiles('CC(=O)C')

    def test_identity(self):
        self.assertEqual(permute_atoms(self.graph, range(self.graph.num_atoms)), self.graph)

    def test_round_trip_with_inverse(self):
        permutation = list(range(self.graph.num_atoms))
        random.Random(7).shuffle(permutation)
        moved = permute_atoms(self.graph, permutation)
        self.assertEqual(permute_atoms(moved, invert_permutation(permutation)), self.graph)

    def test_preserves_degree_and_bond_orders(self):
        permutation = list(reversed(range(self.graph.num_atoms)))
        moved = permute_atoms(self.graph, permutation)
        self.assertEqual(moved.degree_sequence(), self.graph.degree_sequence())
        self.assertEqual(moved.bond_order_counts(), self.graph.bond_order_counts())
        self.assertTrue(nx.is_isomorphic(moved.to_networkx(), self.graph.to_networkx()))

    def test_rejects_non_bijection(self):
        with self.assertRaises(GraphError):
            permute_atoms(self.graph, [0] * self.graph.num_atoms)
        with self.assertRaises(GraphError):
            permute_atoms(self.graph, [0, 1])


class CanonicalKeyTest(SimpleTestCase):
    """Test cases for canonical_key."""

    def test_single_node(self):
        key = canonical_key(LabeledGraph(('C',)))
        self.assertEqual(key.canonical_form, 'C')
        self.assertEqual(key.size, 1)
        self.assertEqual(key, CanonicalKey.from_form('C'))

    def test_path_reversal(self):
        forward = LabeledGraph(('C', 'C', 'O'), ((0, 1, 's'), (1, 2, 'd')))
        reverse = LabeledGraph(('O', 'C', 'C'), ((0, 1, 'd'), (1, 2, 's')))
        self.assertEqual(canonical_key(forward), canonical_key(reverse))
        self.assertEqual(canonical_key(forward).size, 3)

    def test_edge_label_placement(self):
        carbonyl = LabeledGraph(('C', 'C', 'O'), ((0, 1, 's'), (1, 2, 'd')))
        enol = LabeledGraph(('C', 'C', 'O'), ((0, 1, 'd'), (1, 2, 's')))
        self.assertNotEqual(canonical_key(carbonyl), canonical_key(enol))

    def test_charge_is_part_of_label(self):
        self.assertNotEqual(canonical_key(LabeledGraph(('N',))), canonical_key(LabeledGraph(('N+1',))))

    def test_symmetric_graph_all_relabelings(self):
        labels = ('C', 'C', 'C', 'C', 'H')
        edges = ((0, 1, 'a'), (1, 2, 'a'), (2, 3, 'a'), (0, 3, 'a'), (0, 4, 's'))
        expected = canonical_key(LabeledGraph(labels, edges))
        for permutation in itertools.permutations(range(5)):
            relabeled = LabeledGraph(
                tuple(labels[permutation.index(i)] for i in range(5)),
                tuple((permutation[i], permutation[j], label) for i, j, label in edges),
            )
            self.assertEqual(canonical_key(relabeled), expected)

    def test_rejects_disconnected_and_oversize(self):
        with self.assertRaises(GraphletError):
            canonical_key(LabeledGraph(('C', 'C')))
        with self.assertRaises(GraphletError):
            canonical_key(LabeledGraph(tuple('C' * 13), tuple((i, i + 1, 's') for i in range(12))))


class EnumerateGraphletsTest(SimpleTestCase):
    """Test cases for enumerate_graphlets."""

    def test_hydrogen_molecule(self):
        fingerprint = enumerate_graphlets(parse_smiles('[H][H]'), 2)
        self.assertEqual(fingerprint.as_form_counts(), {'H': 2, 'H,H|0:1:s': 1})

    def test_methane(self):
        graph = parse_smiles('C')
        self.assertEqual(enumerate_graphlets(graph, 2).as_form_counts(), {'C': 1, 'C,H|0:1:s': 4, 'H': 4})
        size_one = enumerate_graphlets(graph, 1)
        self.assertEqual(size_one.as_form_counts(), {'C': 1, 'H': 4})
        self.assertEqual(size_one.total(), graph.num_atoms)

    def test_count_identities(self):
        for smiles in ORACLE_POOL:
            graph = parse_smiles(smiles)
            totals = enumerate_graphlets(graph, 3).totals_by_size()
            self.assertEqual(totals[1], graph.num_atoms, smiles)
            self.assertEqual(totals.get(2, 0), graph.num_bonds, smiles)

    def test_matches_brute_force_oracle(self):
        for smiles in ORACLE_POOL:
            graph = parse_smiles(smiles)
            self.assertLessEqual(graph.num_atoms, 12)
            with self.subTest(smiles=smiles):
                expected, bucket_count = brute_force_classes(graph, 5)
                observed = enumerate_graphlets(graph, 5).as_form_counts()
                self.assertEqual(len(expected), bucket_count)
                self.assertEqual(observed, expected)

    def test_acetone_sizes(self):
        fingerprint = enumerate_graphlets(parse_smiles('CC(=O)C'), 5)
        self.assertEqual(max(key.size for key in fingerprint.counts), 5)
        self.assertTrue(all(count >= 1 for count in fingerprint.counts.values()))

    def test_permutation_invariance(self):
        graphs = [parse_smiles(smiles) for smiles in ORACLE_POOL[:10]]
        originals = [enumerate_graphlets(graph, 4) for graph in graphs]
        vocabulary = build_vocabulary(originals)
        expected = featurize(originals, vocabulary).matrix
        for seed in range(100):
            rng = random.Random(seed)
            permuted = []
            for graph in graphs:
                permutation = list(range(graph.num_atoms))
                rng.shuffle(permutation)
                permuted.append(enumerate_graphlets(permute_atoms(graph, permutation), 4))
            observed = featurize(permuted, vocabulary)
            self.assertEqual(observed.oov_total, 0)
            for row, smiles in enumerate(ORACLE_POOL[:10]):
                with self.subTest(seed=seed, smiles=smiles):
                    np.testing.assert_array_equal(
                        observed.matrix.getrow(row).toarray(), expected.getrow(row).toarray(),
                    )

    def test_max_size_bounds(self):
        graph = parse_smiles('C')
        for bad in (0, 13, 2.5, True):
            with self.assertRaises(GraphletError):
                enumerate_graphlets(graph, bad)


class VocabularyTest(SimpleTestCase):
    """Test cases for build_vocabulary and featurize."""

    def test_methane_vocabulary_and_row(self):
        fingerprint = enumerate_graphlets(parse_smiles('C'), 2)
        vocabulary = build_vocabulary([fingerprint])
        self.assertEqual(vocabulary.size, 3)
        self.assertEqual(vocabulary.forms(), ['C', 'C,H|0:1:s', 'H'])
        features = featurize([fingerprint], vocabulary, row_ids=['methane'])
        self.assertEqual(features.to_dense().tolist(), [[1, 4, 4]])
        self.assertEqual(features.oov_total, 0)

    def test_empty(self):
        self.assertEqual(build_vocabulary([]).size, 0)

    def test_mixed_max_size(self):
        graph = parse_smiles('C')
        with self.assertRaises(GraphletError):
            build_vocabulary([enumerate_graphlets(graph, 2), enumerate_graphlets(graph, 3)])

    def test_monotone_in_max_size(self):
        graphs = [parse_smiles(smiles) for smiles in ORACLE_POOL[:10]]
        previous = set()
        for size in range(1, 5):
            forms = set(build_vocabulary([enumerate_graphlets(g, size) for g in graphs]).forms())
            self.assertTrue(previous <= forms)
            previous = forms

    def test_out_of_vocabulary_dropped(self):
        vocabulary = build_vocabulary([enumerate_graphlets(parse_smiles('C'), 2)])
        features = featurize([enumerate_graphlets(parse_smiles('CO'), 2)], vocabulary)
        self.assertGreater(features.oov_total, 0)
        self.assertEqual(features.cols, 3)
        # C-O, O, O-H are unknown; C and H singletons plus C-H edges survive
        self.assertEqual(features.to_dense().tolist(), [[1, 3, 4]])

    def test_isomorphic_relabelings_give_identical_rows(self):
        graph = parse_smiles('CC(=O)C')
        permutation = list(range(graph.num_atoms))
        random.Random(3).shuffle(permutation)
        fingerprints = [enumerate_graphlets(graph, 4), enumerate_graphlets(permute_atoms(graph, permutation), 4)]
        dense = featurize(fingerprints, build_vocabulary(fingerprints)).to_dense()
        np.testing.assert_array_equal(dense[0], dense[1])

    def test_collision_detection_trips(self):
        first = CanonicalKey(42, 'C')
        second = CanonicalKey(42, 'O')
        with self.assertRaises(DigestCollisionError):
            FingerprintVocabulary({first: 0, second: 1}, 1)

    def test_fingerprint_smiles_reports_errors_inline(self):
        smiles = ORACLE_POOL[:6] + ['C(']
        serial = fingerprint_smiles(smiles, 3, workers=1)
        self.assertIsInstance(serial[-1], str)
        self.assertEqual(serial[0], enumerate_graphlets(parse_smiles('C'), 3))

    def test_node_label(self):
        nitro = parse_smiles('C[N+](=O)[O-]')
        self.assertEqual(sorted({node_label(atom) for atom in nitro.atoms}), ['C', 'H', 'N+1', 'O', 'O-1'])


class FeatureFileTest(SimpleTestCase):
    """Test cases for feature matrix files."""

    def setUp(self):
        fingerprints = [enumerate_graphlets(parse_smiles(s), 3) for s in ('C', 'CO', 'CC(=O)C')]
        self.features = featurize(fingerprints, build_vocabulary(fingerprints), row_ids=['a', 'b', 'c'])
        self.tmp = tempfile.TemporaryDirectory()
        self.addCleanup(self.tmp.cleanup)

    def test_sparse_text_layout(self):
        path = write_feature_matrix(Path(self.tmp.name) / 'x.txt', self.features)
        lines = path.read_text().splitlines()
        self.assertEqual(lines[0], f'3 {self.features.cols} {self.features.nnz} 3')
        self.assertEqual(len(lines), 1 + self.features.nnz + self.features.cols)
        self.assertEqual(lines[-self.features.cols], f'0 {self.features.vocabulary.forms()[0]}')

        loaded = read_feature_matrix(path, row_ids=['a', 'b', 'c'])
        np.testing.assert_array_equal(loaded.to_dense(), self.features.to_dense())
        self.assertEqual(loaded.vocabulary.forms(), self.features.vocabulary.forms())

    def test_row_ids_from_neighbouring_ids_file(self):
        path = write_feature_matrix(Path(self.tmp.name) / 'features.txt', self.features)
        self.assertEqual(read_feature_matrix(path).row_ids, ('0', '1', '2'))

        ids_path = Path(self.tmp.name) / IDS_FILE
        ids_path.write_text('id,smiles\nm1,C\nm7,CO\nm9,CC(=O)C\n', encoding='utf-8')
        self.assertEqual(read_feature_matrix(path).row_ids, ('m1', 'm7', 'm9'))
        self.assertEqual(read_feature_matrix(path, row_ids=['x', 'y', 'z']).row_ids, ('x', 'y', 'z'))

        ids_path.write_text('id,smiles\nm1,C\n', encoding='utf-8')
        with self.assertLogs('molecules.io', level='WARNING'):
            self.assertEqual(read_row_ids(ids_path, 3), ['0', '1', '2'])

    def test_truncated_file_rejected(self):
        path = write_feature_matrix(Path(self.tmp.name) / 'x.txt', self.features)
        path.write_text('\n'.join(path.read_text().splitlines()[:-1]))
        with self.assertRaises(FormatError):
            read_feature_matrix(path)

    def test_dense_csv_and_column_limit(self):
        path = write_dense_csv(Path(self.tmp.name) / 'x.csv', self.features)
        header = path.read_text().splitlines()[0]
        self.assertTrue(header.startswith('id,'))
        with self.assertRaises(FormatError):
            write_dense_csv(Path(self.tmp.name) / 'y.csv', self.features, max_columns=2)
