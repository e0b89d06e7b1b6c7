"""
Graphlet fingerprints.
LAMeL Toolkit - Graphlet Enumeration Module

This module counts connected subgraphs of molecular graphs including:
- ESU-style enumeration of every connected vertex subset up to a size cap
- Exact canonical forms (label refinement + individualization search)
- Shared vocabularies ordered by canonical form
- Sparse count matrices over a vocabulary

A graphlet is the node-induced subgraph on a vertex subset. Node labels are
element + formal charge, edge labels are bond orders. Counts are per distinct
vertex subset, not per embedding.
"""

from __future__ import annotations

import hashlib
import logging
from collections import deque
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy import sparse

from core.exceptions import DigestCollisionError, GraphletError, LamelError
from .molgraph import parse_smiles

logger = logging.getLogger(__name__)

MAX_GRAPHLET_SIZE = 12


@dataclass(frozen=True)
class CanonicalKey:
    """
    Isomorphism-class identifier of a labeled graphlet.

    Attributes:
        key: 64-bit digest of canonical_form
        canonical_form: Text code of the canonically ordered graphlet
    """
    key: int
    canonical_form: str

    @classmethod
    def from_form(cls, canonical_form):
        digest = hashlib.blake2b(canonical_form.encode('utf-8'), digest_size=8).digest()
        return cls(int.from_bytes(digest, 'big'), canonical_form)

    @property
    def size(self):
        """Number of nodes in the graphlet."""
        return self.canonical_form.split('|', 1)[0].count(',') + 1

    def __str__(self):
        return self.canonical_form


@dataclass(frozen=True)
class LabeledGraph:
    """Small labeled graph: node labels and (i, j, bond label) edges with i < j."""
    node_labels: tuple[str, ...]
    edges: tuple[tuple[int, int, str], ...] = ()

    @classmethod
    def induced(cls, graph, nodes):
        """Node-induced subgraph of a MolecularGraph, locally re-indexed in the given order."""
        local = {atom: position for position, atom in enumerate(nodes)}
        labels = tuple(node_label(graph.atoms[atom]) for atom in nodes)
        edges = []
        for atom in nodes:
            for neighbor, order in graph.adjacency[atom]:
                if neighbor in local and local[atom] < local[neighbor]:
                    edges.append((local[atom], local[neighbor], order.label))
        return cls(labels, tuple(sorted(edges)))

    def is_connected(self):
        n = len(self.node_labels)
        if n == 0:
            return False
        adjacency = [[] for _ in range(n)]
        for i, j, _ in self.edges:
            adjacency[i].append(j)
            adjacency[j].append(i)
        seen = {0}
        queue = deque([0])
        while queue:
            for neighbor in adjacency[queue.popleft()]:
                if neighbor not in seen:
                    seen.add(neighbor)
                    queue.append(neighbor)
        return len(seen) == n


@dataclass(frozen=True)
class GraphletFingerprint:
    """Occurrence count of every graphlet class in one molecule."""
    counts: dict
    max_size: int

    def __post_init__(self):
        for key, count in self.counts.items():
            if count < 1:
                raise GraphletError(f"Non-positive count for {key}")
            if not 1 <= key.size <= self.max_size:
                raise GraphletError(f"Graphlet {key} exceeds max_size {self.max_size}")

    def total(self):
        return sum(self.counts.values())

    def totals_by_size(self):
        """Instance totals per graphlet size."""
        totals = {}
        for key, count in self.counts.items():
            totals[key.size] = totals.get(key.size, 0) + count
        return dict(sorted(totals.items()))

    def as_form_counts(self):
        """{canonical_form: count}, handy for comparisons and reports."""
        return {key.canonical_form: count for key, count in self.counts.items()}


@dataclass(frozen=True)
class FingerprintVocabulary:
    """Column assignment of graphlet classes, ordered by canonical form."""
    columns: dict
    max_size: int

    def __post_init__(self):
        indices = sorted(self.columns.values())
        if indices != list(range(len(indices))):
            raise GraphletError("Vocabulary indices must be 0..V-1 without gaps")
        digests = {}
        for key in self.columns:
            other = digests.setdefault(key.key, key.canonical_form)
            if other != key.canonical_form:
                raise DigestCollisionError(
                    f"Digest {key.key:016x} shared by {other!r} and {key.canonical_form!r}"
                )

    @classmethod
    def from_forms(cls, forms, max_size):
        """Vocabulary in the given column order (used when reading files)."""
        return cls({CanonicalKey.from_form(form): index for index, form in enumerate(forms)}, max_size)

    @property
    def size(self):
        return len(self.columns)

    def __len__(self):
        return len(self.columns)

    def keys(self):
        """Keys in column order."""
        return sorted(self.columns, key=self.columns.get)

    def forms(self):
        return [key.canonical_form for key in self.keys()]


@dataclass(frozen=True, eq=False)
class FeatureMatrix:
    """
    Sparse molecule x graphlet count matrix.

    Attributes:
        matrix: CSR matrix of int64 counts, shape (rows, V)
        row_ids: One identifier per row
        vocabulary: Column vocabulary
        oov_counts: Per-row graphlet instances dropped as out-of-vocabulary
    """
    matrix: sparse.csr_matrix
    row_ids: tuple[str, ...]
    vocabulary: FingerprintVocabulary
    oov_counts: tuple[int, ...] = field(default=())

    def __post_init__(self):
        if self.matrix.shape[1] != self.vocabulary.size:
            raise GraphletError(
                f"Matrix has {self.matrix.shape[1]} columns, vocabulary has {self.vocabulary.size}"
            )
        if len(self.row_ids) != self.matrix.shape[0]:
            raise GraphletError("row_ids length does not match matrix rows")
        if self.matrix.nnz and self.matrix.data.min() < 0:
            raise GraphletError("Feature counts must be non-negative")

    @property
    def rows(self):
        return self.matrix.shape[0]

    @property
    def cols(self):
        return self.matrix.shape[1]

    @property
    def nnz(self):
        return self.matrix.nnz

    @property
    def oov_total(self):
        return int(sum(self.oov_counts))

    def entries(self):
        """(row, col, count) triples in row-major order."""
        coo = self.matrix.tocoo()
        order = np.lexsort((coo.col, coo.row))
        return [(int(coo.row[i]), int(coo.col[i]), int(coo.data[i])) for i in order]

    def to_dense(self):
        return self.matrix.toarray()

    def subset(self, indices):
        """Rows at the given positions, in that order."""
        indices = np.asarray(indices, dtype=np.int64)
        oov = tuple(self.oov_counts[i] for i in indices) if self.oov_counts else ()
        return FeatureMatrix(
            self.matrix[indices],
            tuple(self.row_ids[i] for i in indices),
            self.vocabulary,
            oov,
        )


def node_label(atom):
    """Element plus signed charge when nonzero, e.g. 'C', 'N+1', 'O-1'."""
    if atom.formal_charge:
        return f"{atom.element}{atom.formal_charge:+d}"
    return atom.element


def canonical_key(subgraph):
    """
    Canonical key of a connected labeled graph with at most 12 nodes.

    Raises:
        GraphletError: Disconnected or oversize input
    """
    n = len(subgraph.node_labels)
    if not 1 <= n <= MAX_GRAPHLET_SIZE:
        raise GraphletError(f"Graphlet must have 1..{MAX_GRAPHLET_SIZE} nodes, got {n}")
    if not subgraph.is_connected():
        raise GraphletError("Cannot canonicalize a disconnected graph")
    edges = tuple(sorted((min(i, j), max(i, j), label) for i, j, label in subgraph.edges))
    return CanonicalKey.from_form(_canonical_form(subgraph.node_labels, edges))


def enumerate_graphlets(graph, max_size):
    """
    Count every connected vertex subset of 1..max_size atoms by isomorphism class.

    Raises:
        GraphletError: max_size outside 1..12
    """
    _check_max_size(max_size)

    counts = {}
    for nodes in _connected_subsets(graph.adjacency, max_size):
        subgraph = LabeledGraph.induced(graph, nodes)
        form = _canonical_form(subgraph.node_labels, subgraph.edges)
        counts[form] = counts.get(form, 0) + 1

    ordered = {CanonicalKey.from_form(form): counts[form] for form in sorted(counts)}
    return GraphletFingerprint(ordered, max_size)


def build_vocabulary(fingerprints, max_size=None):
    """
    Union of graphlet classes across fingerprints, ordered by canonical form.

    Raises:
        GraphletError: Fingerprints built with different max_size
    """
    fingerprints = list(fingerprints)
    sizes = {fp.max_size for fp in fingerprints}
    if max_size is not None:
        sizes.add(max_size)
    if len(sizes) > 1:
        raise GraphletError(f"Fingerprints mix max_size values {sorted(sizes)}")

    keys = set()
    for fp in fingerprints:
        keys.update(fp.counts)
    ordered = sorted(keys, key=lambda key: key.canonical_form)
    vocabulary = FingerprintVocabulary(
        {key: index for index, key in enumerate(ordered)},
        sizes.pop() if sizes else 0,
    )
    logger.info("Built vocabulary: V=%d at max_size %d", vocabulary.size, vocabulary.max_size)
    return vocabulary


def featurize(fingerprints, vocabulary, row_ids=None):
    """
    Stack fingerprints into a sparse count matrix over ``vocabulary``.

    Keys missing from the vocabulary are dropped and tallied in ``oov_counts``.
    """
    fingerprints = list(fingerprints)
    if row_ids is None:
        row_ids = [str(i) for i in range(len(fingerprints))]
    row_ids = tuple(str(r) for r in row_ids)
    if len(row_ids) != len(fingerprints):
        raise GraphletError("row_ids length does not match fingerprints")

    rows, cols, data, oov = [], [], [], []
    for row, fp in enumerate(fingerprints):
        if fp.max_size != vocabulary.max_size:
            raise GraphletError(
                f"Fingerprint max_size {fp.max_size} != vocabulary max_size {vocabulary.max_size}"
            )
        dropped = 0
        for key, count in fp.counts.items():
            column = vocabulary.columns.get(key)
            if column is None:
                dropped += count
                continue
            rows.append(row)
            cols.append(column)
            data.append(count)
        oov.append(dropped)

    matrix = sparse.csr_matrix(
        (np.asarray(data, dtype=np.int64), (np.asarray(rows, dtype=np.int64), np.asarray(cols, dtype=np.int64))),
        shape=(len(fingerprints), vocabulary.size),
        dtype=np.int64,
    )
    if any(oov):
        logger.warning(
            "Dropped %d out-of-vocabulary graphlet instances across %d molecules",
            sum(oov), sum(1 for count in oov if count),
        )
    return FeatureMatrix(matrix, row_ids, vocabulary, tuple(oov))


def fingerprint_smiles(smiles_list, max_size, workers=1):
    """
    Parse and fingerprint many SMILES strings.

    Returns a list aligned with the input holding either a GraphletFingerprint
    or the error message for that entry. Output order never depends on
    ``workers``.
    """
    _check_max_size(max_size)
    jobs = [(smiles, max_size) for smiles in smiles_list]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as executor:
            return list(executor.map(_fingerprint_one, jobs, chunksize=16))
    return [_fingerprint_one(job) for job in jobs]


def _fingerprint_one(job):
    smiles, max_size = job
    try:
        return enumerate_graphlets(parse_smiles(smiles, add_hydrogens=True), max_size)
    except LamelError as exc:
        # exceptions with custom signatures do not survive pickling
        return str(exc)


def _check_max_size(max_size):
    if isinstance(max_size, bool) or not isinstance(max_size, (int, np.integer)):
        raise GraphletError(f"max_size must be an integer, got {max_size!r}")
    if not 1 <= max_size <= MAX_GRAPHLET_SIZE:
        raise GraphletError(f"max_size must be in 1..{MAX_GRAPHLET_SIZE}, got {max_size}")


def _connected_subsets(adjacency, max_size):
    """Yield each connected vertex subset of size <= max_size exactly once (ESU)."""
    neighbors = [frozenset(u for u, _ in row) for row in adjacency]

    def extend(subset, extension, closed, root):
        yield subset
        if len(subset) == max_size:
            return
        extension = sorted(extension)
        while extension:
            w = extension.pop()
            exclusive = {u for u in neighbors[w] if u > root and u not in closed}
            yield from extend(
                subset + (w,),
                set(extension) | exclusive,
                closed | neighbors[w],
                root,
            )

    for root in range(len(adjacency)):
        start = {u for u in neighbors[root] if u > root}
        yield from extend((root,), start, neighbors[root] | {root}, root)


@lru_cache(maxsize=1 << 16)
def _canonical_form(labels, edges):
    """Minimal text code over all orderings reachable by individualization-refinement."""
    n = len(labels)
    adjacency = [[] for _ in range(n)]
    for i, j, label in edges:
        adjacency[i].append((j, label))
        adjacency[j].append((i, label))

    best = None
    stack = [_refine(_dense_ranks(labels), adjacency)]
    while stack:
        colors = stack.pop()
        cell = _first_open_cell(colors)
        if cell is None:
            code = _code(colors, labels, edges)
            if best is None or code < best:
                best = code
            continue
        for node in cell:
            stack.append(_refine(_individualize(colors, node), adjacency))

    ordered_labels, ordered_edges = best
    if not ordered_edges:
        return ordered_labels[0]
    edge_text = ','.join(f"{i}:{j}:{label}" for i, j, label in ordered_edges)
    return f"{','.join(ordered_labels)}|{edge_text}"


def _dense_ranks(values):
    ranking = {value: rank for rank, value in enumerate(sorted(set(values)))}
    return [ranking[value] for value in values]


def _refine(colors, adjacency):
    while True:
        signatures = [
            (colors[v], tuple(sorted((label, colors[u]) for u, label in adjacency[v])))
            for v in range(len(colors))
        ]
        refined = _dense_ranks(signatures)
        if len(set(refined)) == len(set(colors)):
            return refined
        colors = refined


def _first_open_cell(colors):
    cells = {}
    for node, color in enumerate(colors):
        cells.setdefault(color, []).append(node)
    for color in sorted(cells):
        if len(cells[color]) > 1:
            return cells[color]
    return None


def _individualize(colors, node):
    split = [2 * color for color in colors]
    split[node] -= 1
    return _dense_ranks(split)


def _code(colors, labels, edges):
    ordered_labels = [None] * len(labels)
    for node, position in enumerate(colors):
        ordered_labels[position] = labels[node]
    relabeled = sorted(
        (min(colors[i], colors[j]), max(colors[i], colors[j]), label)
        for i, j, label in edges
    )
    return tuple(ordered_labels), tuple(relabeled)
