"""
Molecular graphs parsed from SMILES.
LAMeL Toolkit - Molecular Graph Module

This module turns SMILES text into immutable molecular graphs including:
- Organic-subset and bracket atoms (charge, explicit H count, isotope)
- Branches, ring closures (digits and %nn) and the bond symbols - = # :
- Implicit hydrogens materialized as explicit H atoms on request
- Atom relabeling for isomorphism-invariance checks

Stereo markers (/ \\ @) are parsed and dropped. Aromatic atoms are kept as
written and bonds between them get the aromatic bond type; there is no
kekulization. Multi-fragment input ('.') is rejected.
"""

from __future__ import annotations

import enum
import logging
from dataclasses import dataclass
from functools import cached_property

import networkx as nx

from core.exceptions import GraphError, SmilesParseError

logger = logging.getLogger(__name__)


ELEMENTS = frozenset("""
    H He Li Be B C N O F Ne Na Mg Al Si P S Cl Ar K Ca Sc Ti V Cr Mn Fe Co Ni
    Cu Zn Ga Ge As Se Br Kr Rb Sr Y Zr Nb Mo Tc Ru Rh Pd Ag Cd In Sn Sb Te I Xe
    Cs Ba La Ce Pr Nd Pm Sm Eu Gd Tb Dy Ho Er Tm Yb Lu Hf Ta W Re Os Ir Pt Au
    Hg Tl Pb Bi Po At Rn Fr Ra Ac Th Pa U Np Pu Am Cm Bk Cf Es Fm Md No Lr Rf
    Db Sg Bh Hs Mt Ds Rg Cn Nh Fl Mc Lv Ts Og
""".split())

# Two-letter symbols first so that 'Cl' is not read as 'C' + 'l'.
ORGANIC_SUBSET = ('Cl', 'Br', 'B', 'C', 'N', 'O', 'P', 'S', 'F', 'I')
AROMATIC_ORGANIC = ('b', 'c', 'n', 'o', 'p', 's')
AROMATIC_BRACKET = ('se', 'as', 'te', 'b', 'c', 'n', 'o', 'p', 's')

DEFAULT_VALENCES = {
    'B': (3,),
    'C': (4,),
    'N': (3,),
    'O': (2,),
    'P': (3, 5),
    'S': (2, 4, 6),
    'F': (1,),
    'Cl': (1,),
    'Br': (1,),
    'I': (1,),
}

# Upper bounds checked on bracket atoms (before adding |charge|).
BRACKET_VALENCES = {
    **DEFAULT_VALENCES,
    'H': (1,),
    'Si': (4,),
    'Se': (2, 4, 6),
    'As': (3, 5),
    'Te': (2, 4, 6),
    'Cl': (1, 3, 5, 7),
    'Br': (1, 3, 5, 7),
    'I': (1, 3, 5, 7),
}

CHIRAL_CLASSES = ('TH', 'AL', 'SP', 'TB', 'OH')


class BondOrder(enum.Enum):
    """Bond types, valued by their SMILES symbol."""
    SINGLE = '-'
    DOUBLE = '='
    TRIPLE = '#'
    AROMATIC = ':'

    @property
    def valence(self):
        """Valence consumed on each endpoint (aromatic counts its sigma bond only)."""
        return _BOND_VALENCE[self]

    @property
    def label(self):
        """One-letter label used in graphlet canonical forms."""
        return _BOND_LABEL[self]


_BOND_VALENCE = {
    BondOrder.SINGLE: 1,
    BondOrder.DOUBLE: 2,
    BondOrder.TRIPLE: 3,
    BondOrder.AROMATIC: 1,
}
_BOND_LABEL = {
    BondOrder.SINGLE: 's',
    BondOrder.DOUBLE: 'd',
    BondOrder.TRIPLE: 't',
    BondOrder.AROMATIC: 'a',
}
_BOND_SYMBOLS = {
    '-': BondOrder.SINGLE,
    '=': BondOrder.DOUBLE,
    '#': BondOrder.TRIPLE,
    ':': BondOrder.AROMATIC,
    '/': BondOrder.SINGLE,
    '\\': BondOrder.SINGLE,
}


@dataclass(frozen=True)
class Atom:
    """
    One node of a molecular graph.

    Attributes:
        element: Element symbol with standard capitalization
        formal_charge: Integer formal charge
        is_explicit_hydrogen: True for hydrogen atoms present as graph nodes
        aromatic: Atom was written in lowercase aromatic form
        hydrogen_count: Hydrogens attached but not materialized as nodes
        isotope: Mass number when given in brackets (ignored by featurization)
    """
    element: str
    formal_charge: int = 0
    is_explicit_hydrogen: bool = False
    aromatic: bool = False
    hydrogen_count: int = 0
    isotope: int | None = None

    def __post_init__(self):
        if self.element not in ELEMENTS:
            raise GraphError(f"Unknown element symbol: {self.element!r}")
        if self.hydrogen_count < 0:
            raise GraphError(f"Negative hydrogen count on {self.element}")


@dataclass(frozen=True)
class Bond:
    """Undirected typed bond; endpoints are stored as (low, high)."""
    begin: int
    end: int
    order: BondOrder = BondOrder.SINGLE

    def __post_init__(self):
        if self.begin == self.end:
            raise GraphError(f"Self-loop on atom {self.begin}")
        if self.begin > self.end:
            low, high = self.end, self.begin
            object.__setattr__(self, 'begin', low)
            object.__setattr__(self, 'end', high)

    @property
    def endpoints(self):
        return self.begin, self.end


@dataclass(frozen=True)
class MolecularGraph:
    """
    Immutable simple connected graph of atoms and bonds.

    Attributes:
        atoms: Atoms in index order
        bonds: Bonds in creation order
        source_smiles: Text the graph was parsed from
    """
    atoms: tuple[Atom, ...]
    bonds: tuple[Bond, ...]
    source_smiles: str = ''

    def __post_init__(self):
        object.__setattr__(self, 'atoms', tuple(self.atoms))
        object.__setattr__(self, 'bonds', tuple(self.bonds))
        n = len(self.atoms)
        seen = set()
        for bond in self.bonds:
            if not (0 <= bond.begin < n and 0 <= bond.end < n):
                raise GraphError(f"Bond {bond.endpoints} out of range for {n} atoms")
            if bond.endpoints in seen:
                raise GraphError(f"Parallel bond between atoms {bond.endpoints}")
            seen.add(bond.endpoints)
        if n and not nx.is_connected(self.to_networkx()):
            raise GraphError("Molecular graph is not connected")

    @property
    def num_atoms(self):
        return len(self.atoms)

    @property
    def num_bonds(self):
        return len(self.bonds)

    @property
    def heavy_atom_count(self):
        """Number of non-hydrogen atoms."""
        return sum(1 for atom in self.atoms if atom.element != 'H')

    @cached_property
    def adjacency(self):
        """Per-atom tuple of (neighbor index, BondOrder), neighbors ascending."""
        neighbors = [[] for _ in self.atoms]
        for bond in self.bonds:
            neighbors[bond.begin].append((bond.end, bond.order))
            neighbors[bond.end].append((bond.begin, bond.order))
        return tuple(tuple(sorted(row, key=lambda item: item[0])) for row in neighbors)

    def degree_sequence(self):
        """Sorted atom degrees."""
        return sorted(len(row) for row in self.adjacency)

    def bond_order_counts(self):
        """Multiset of bond orders as a {BondOrder: count} dict."""
        counts = {}
        for bond in self.bonds:
            counts[bond.order] = counts.get(bond.order, 0) + 1
        return counts

    def to_networkx(self):
        """Labeled networkx view: node attrs element/charge, edge attr order."""
        graph = nx.Graph()
        for index, atom in enumerate(self.atoms):
            graph.add_node(index, element=atom.element, charge=atom.formal_charge)
        for bond in self.bonds:
            graph.add_edge(bond.begin, bond.end, order=bond.order)
        return graph


def permute_atoms(graph, permutation):
    """
    Relabel atoms so that old atom ``i`` becomes new atom ``permutation[i]``.

    Bond sequence order is preserved, so the identity permutation returns an
    equal graph.
    """
    permutation = [int(p) for p in permutation]
    n = graph.num_atoms
    if len(permutation) != n or sorted(permutation) != list(range(n)):
        raise GraphError(f"Permutation is not a bijection over {n} atom indices")

    atoms = [None] * n
    for old, new in enumerate(permutation):
        atoms[new] = graph.atoms[old]
    bonds = [
        Bond(permutation[bond.begin], permutation[bond.end], bond.order)
        for bond in graph.bonds
    ]
    return MolecularGraph(tuple(atoms), tuple(bonds), graph.source_smiles)


def invert_permutation(permutation):
    """Inverse of a bijection given as a sequence of indices."""
    inverse = [0] * len(permutation)
    for old, new in enumerate(permutation):
        inverse[new] = old
    return inverse


def parse_smiles(smiles, add_hydrogens=True):
    """
    Parse SMILES text into a MolecularGraph.

    Args:
        smiles: SMILES text (organic subset, bracket atoms, branches, rings)
        add_hydrogens: Materialize implicit and bracket hydrogens as H atoms

    Raises:
        SmilesParseError: Malformed input, with the character offset
    """
    if not isinstance(smiles, str) or not smiles.strip():
        raise SmilesParseError("Empty SMILES", 0, smiles or '')
    return _SmilesParser(smiles.strip()).parse(add_hydrogens)


@dataclass
class _PendingAtom:
    element: str
    aromatic: bool
    offset: int
    bracket: bool = False
    charge: int = 0
    hcount: int = 0
    isotope: int | None = None


class _SmilesParser:
    """Single-pass scanner; one instance per input string."""

    def __init__(self, text):
        self.text = text
        self.pos = 0
        self.atoms = []
        self.bonds = {}
        self.previous = None
        self.pending_bond = None
        self.branches = []
        self.rings = {}

    def error(self, message, offset=None):
        raise SmilesParseError(message, self.pos if offset is None else offset, self.text)

    def parse(self, add_hydrogens):
        text = self.text
        while self.pos < len(text):
            char = text[self.pos]
            if char == '(':
                self.open_branch()
            elif char == ')':
                self.close_branch()
            elif char in _BOND_SYMBOLS:
                self.read_bond_symbol(char)
            elif char.isdigit() or char == '%':
                self.read_ring_closure()
            elif char == '.':
                self.error("Multi-fragment SMILES ('.') is not supported")
            elif char == '[':
                self.add_atom(self.read_bracket_atom())
            elif char.isalpha():
                self.add_atom(self.read_organic_atom())
            else:
                self.error(f"Unexpected character {char!r}")

        if self.pending_bond is not None:
            self.error("Dangling bond symbol", self.pending_bond[1])
        if self.branches:
            self.error("Unbalanced parenthesis", self.branches[-1][1])
        if self.rings:
            offset = min(entry[2] for entry in self.rings.values())
            self.error("Dangling ring-closure digit", offset)
        if not self.atoms:
            self.error("No atoms in SMILES", 0)

        return self.build(add_hydrogens)

    # -- tokens ----------------------------------------------------------

    def open_branch(self):
        if self.previous is None:
            self.error("Branch without a preceding atom")
        if self.pending_bond is not None:
            self.error("Bond symbol before branch")
        self.branches.append((self.previous, self.pos))
        self.pos += 1

    def close_branch(self):
        if not self.branches:
            self.error("Unbalanced parenthesis")
        if self.pending_bond is not None:
            self.error("Dangling bond symbol", self.pending_bond[1])
        self.previous = self.branches.pop()[0]
        self.pos += 1

    def read_bond_symbol(self, char):
        if self.previous is None:
            self.error("Bond symbol without a preceding atom")
        if self.pending_bond is not None:
            self.error("Consecutive bond symbols")
        self.pending_bond = (_BOND_SYMBOLS[char], self.pos)
        self.pos += 1

    def read_ring_closure(self):
        start = self.pos
        if self.previous is None:
            self.error("Ring-closure digit without a preceding atom")
        if self.text[self.pos] == '%':
            digits = self.text[self.pos + 1:self.pos + 3]
            if len(digits) != 2 or not digits.isdigit():
                self.error("Ring-closure '%' must be followed by two digits")
            number = int(digits)
            self.pos += 3
        else:
            number = int(self.text[self.pos])
            self.pos += 1

        symbol = self.pending_bond[0] if self.pending_bond else None
        self.pending_bond = None

        if number not in self.rings:
            self.rings[number] = (self.previous, symbol, start)
            return

        other, other_symbol, _ = self.rings.pop(number)
        if symbol and other_symbol and symbol != other_symbol:
            self.error("Conflicting ring-closure bond symbols", start)
        if other == self.previous:
            self.error("Ring closure bonds an atom to itself", start)
        order = symbol or other_symbol or self.default_order(other, self.previous)
        self.connect(other, self.previous, order, start)

    def read_organic_atom(self):
        start = self.pos
        for symbol in ORGANIC_SUBSET:
            if self.text.startswith(symbol, self.pos):
                self.pos += len(symbol)
                return _PendingAtom(symbol, False, start)
        for symbol in AROMATIC_ORGANIC:
            if self.text.startswith(symbol, self.pos):
                self.pos += 1
                return _PendingAtom(symbol.upper(), True, start)
        self.error(f"Unknown element symbol {self.text[self.pos]!r}")

    def read_bracket_atom(self):
        text = self.text
        start = self.pos
        self.pos += 1

        isotope = self.read_digits()

        aromatic = False
        element = None
        if self.pos < len(text) and text[self.pos].islower():
            for symbol in AROMATIC_BRACKET:
                if text.startswith(symbol, self.pos):
                    element = symbol.capitalize()
                    aromatic = True
                    self.pos += len(symbol)
                    break
        elif self.pos < len(text) and text[self.pos].isupper():
            two = text[self.pos:self.pos + 2]
            if len(two) == 2 and two in ELEMENTS:
                element = two
            elif text[self.pos] in ELEMENTS:
                element = text[self.pos]
            if element:
                self.pos += len(element)
        if element is None:
            self.error("Unknown element symbol in bracket atom")

        # chirality: @, @@, @TH1, @OH12 ...
        while self.pos < len(text) and text[self.pos] == '@':
            self.pos += 1
            if text[self.pos:self.pos + 2] in CHIRAL_CLASSES:
                self.pos += 2
                self.read_digits()

        hcount = 0
        if self.pos < len(text) and text[self.pos] == 'H':
            self.pos += 1
            digits = self.read_digits()
            hcount = 1 if digits is None else digits

        charge = 0
        if self.pos < len(text) and text[self.pos] in '+-':
            sign = 1 if text[self.pos] == '+' else -1
            symbol = text[self.pos]
            self.pos += 1
            digits = self.read_digits()
            if digits is not None:
                charge = sign * digits
            else:
                magnitude = 1
                while self.pos < len(text) and text[self.pos] == symbol:
                    magnitude += 1
                    self.pos += 1
                charge = sign * magnitude

        if self.pos < len(text) and text[self.pos] == ':':
            self.pos += 1
            if self.read_digits() is None:
                self.error("Atom class ':' must be followed by digits")

        if self.pos >= len(text) or text[self.pos] != ']':
            self.error("Unterminated bracket atom", start)
        self.pos += 1

        return _PendingAtom(element, aromatic, start, bracket=True, charge=charge,
                            hcount=hcount, isotope=isotope)

    def read_digits(self):
        begin = self.pos
        while self.pos < len(self.text) and self.text[self.pos].isdigit():
            self.pos += 1
        if self.pos == begin:
            return None
        return int(self.text[begin:self.pos])

    # -- graph construction ----------------------------------------------

    def add_atom(self, atom):
        index = len(self.atoms)
        self.atoms.append(atom)
        if self.previous is not None:
            if self.pending_bond is not None:
                order, offset = self.pending_bond
            else:
                order, offset = self.default_order(self.previous, index), atom.offset
            self.connect(self.previous, index, order, offset)
        self.pending_bond = None
        self.previous = index

    def default_order(self, first, second):
        if self.atoms[first].aromatic and self.atoms[second].aromatic:
            return BondOrder.AROMATIC
        return BondOrder.SINGLE

    def connect(self, first, second, order, offset):
        key = (min(first, second), max(first, second))
        if key in self.bonds:
            self.error("Duplicate bond between the same atoms", offset)
        self.bonds[key] = order

    def valence_used(self, index):
        return sum(
            order.valence
            for (first, second), order in self.bonds.items()
            if index in (first, second)
        )

    def implicit_hydrogens(self, index):
        atom = self.atoms[index]
        used = self.valence_used(index)
        if atom.bracket:
            allowed = BRACKET_VALENCES.get(atom.element)
            if allowed is not None and used + atom.hcount > max(allowed) + abs(atom.charge):
                self.error(f"Valence overflow on bracket atom {atom.element}", atom.offset)
            return atom.hcount

        valences = DEFAULT_VALENCES[atom.element]
        if atom.aromatic:
            # one valence unit goes to the aromatic pi system
            return max(0, valences[0] - used - 1)
        for valence in valences:
            if valence >= used:
                return valence - used
        return 0

    def build(self, add_hydrogens):
        hydrogens = [self.implicit_hydrogens(i) for i in range(len(self.atoms))]

        atoms = []
        for pending, count in zip(self.atoms, hydrogens):
            atoms.append(Atom(
                element=pending.element,
                formal_charge=pending.charge,
                is_explicit_hydrogen=pending.element == 'H',
                aromatic=pending.aromatic,
                hydrogen_count=0 if add_hydrogens else count,
                isotope=pending.isotope,
            ))
        bonds = [Bond(first, second, order) for (first, second), order in self.bonds.items()]

        if add_hydrogens:
            for parent, count in enumerate(hydrogens):
                for _ in range(count):
                    atoms.append(Atom('H', is_explicit_hydrogen=True))
                    bonds.append(Bond(parent, len(atoms) - 1, BondOrder.SINGLE))

        graph = MolecularGraph(tuple(atoms), tuple(bonds), self.text)
        logger.debug("Parsed %s: %d atoms, %d bonds", self.text, graph.num_atoms, graph.num_bonds)
        return graph
