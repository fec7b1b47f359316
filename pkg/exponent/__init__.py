"""
Weighted graphs of chaos functionals, the exponent e(G) bounding the order
n^{e(G)} of their norms, the figure catalog, and numerical order checks
through exact and Monte Carlo L2 norms.

A vertex v carries two slots: slot 1 holds the indicator kernel 1^n_j of
[(j-1)/n, j/n], slot 2 the second difference kernel d^n_j = 1^n_{j+1} - 1^n_j.
q(v, slot) counts how often the slot kernel enters the multiple integral,
theta([(u, s), (v, t)]) the power of the inner product between two slots.
"""
import re
import json
import math
import logging
import itertools
from fractions import Fraction
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.linalg

from covariance import check_hurst, interval_inner, rho_hat, fgn_autocov, c2h
from fgn import sampler

logger = logging.getLogger(__name__)

SLOTS = (1, 2)
# Largest multiple integral order the L2 oracles evaluate.
MAX_ORACLE_ORDER = 3
MC_BLOCK = 1024


class GraphError(ValueError):
    pass


class OracleError(ValueError):
    pass


class Affine:
    """
    Exact affine function a + b H with rational coefficients.
    """
    _TERM = re.compile(r'\s*([+-])?\s*(\d+(?:/\d+)?)?\s*(H)?\s*')

    def __init__(self, const=0, coeff=0):
        self.const = Fraction(const)
        self.coeff = Fraction(coeff)

    @classmethod
    def parse(cls, text):
        """
        Parse forms such as '1/2 - 2H', '-H', '3/2-5H' or '0'.
        """
        src = text.strip()
        if not src:
            raise ValueError('Empty affine expression')
        const, coeff = Fraction(0), Fraction(0)
        pos = 0
        first = True
        while pos < len(src):
            match = cls._TERM.match(src, pos)
            sign, number, var = match.groups()
            if match.end() == pos or (number is None and var is None) \
                    or (sign is None and not first):
                raise ValueError(f'Cannot parse affine expression: {text!r}')
            value = Fraction(number) if number is not None else Fraction(1)
            if sign == '-':
                value = -value
            if var:
                coeff += value
            else:
                const += value
            pos = match.end()
            first = False
        return cls(const, coeff)

    def __call__(self, h):
        return float(self.const) + float(self.coeff) * float(h)

    def __add__(self, other):
        other = _as_affine(other)
        return Affine(self.const + other.const, self.coeff + other.coeff)

    __radd__ = __add__

    def __neg__(self):
        return Affine(-self.const, -self.coeff)

    def __sub__(self, other):
        return self + (-_as_affine(other))

    def __rsub__(self, other):
        return _as_affine(other) - self

    def __mul__(self, factor):
        factor = Fraction(factor)
        return Affine(self.const * factor, self.coeff * factor)

    __rmul__ = __mul__

    def __eq__(self, other):
        if isinstance(other, (int, Fraction)):
            other = Affine(other)
        if not isinstance(other, Affine):
            return NotImplemented
        return self.const == other.const and self.coeff == other.coeff

    def __hash__(self):
        return hash((self.const, self.coeff))

    def __repr__(self):
        return f'Affine({str(self)!r})'

    def __str__(self):
        if self.coeff == 0:
            return str(self.const)
        size = abs(self.coeff)
        term = 'H' if size == 1 else f'{size}H'
        if self.const == 0:
            return f'-{term}' if self.coeff < 0 else term
        sign = '-' if self.coeff < 0 else '+'
        return f'{self.const} {sign} {term}'


def _as_affine(value):
    return value if isinstance(value, Affine) else Affine(value)


H = Affine(0, 1)


class UnionFind:
    def __init__(self, items):
        self.parent = {item: item for item in items}

    def find(self, item):
        root = item
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[item] != root:
            self.parent[item], item = root, self.parent[item]
        return root

    def union(self, a, b):
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return False
        self.parent[rb] = ra
        return True

    def count(self):
        return len({self.find(item) for item in self.parent})


class WeightedGraph:
    """
    Vertices with slot weights q and slot-pair weights theta between
    distinct vertices.
    """

    def __init__(self, vertices, q=None, theta=None):
        """
        :param vertices: vertex identifiers (strings), in order
        :param q: mapping (vertex, slot) -> nonnegative int
        :param theta: mapping ((u, slot), (v, slot)) -> nonnegative int, u != v;
            weights given for both orientations of a pair are added
        :raises GraphError: on an invalid vertex, slot, weight or pair
        """
        self.vertices = tuple(str(v) for v in vertices)
        if not self.vertices:
            raise GraphError('A weighted graph needs at least one vertex')
        if len(set(self.vertices)) != len(self.vertices):
            raise GraphError(f'Duplicate vertices in {list(self.vertices)}')
        self._order = {v: i for i, v in enumerate(self.vertices)}
        self.q = {}
        for (v, slot), w in (q or {}).items():
            self._check_slot(v, slot)
            w = self._check_weight(w, f'q({v}, {slot})')
            if w:
                self.q[(str(v), int(slot))] = self.q.get((str(v), int(slot)), 0) + w
        self.theta = {}
        for ((u, us), (v, vs)), w in (theta or {}).items():
            self._check_slot(u, us)
            self._check_slot(v, vs)
            if str(u) == str(v):
                raise GraphError(f'Edge endpoints must be distinct vertices: {u}')
            w = self._check_weight(w, f'theta({u}, {v})')
            if not w:
                continue
            key = ((str(u), int(us)), (str(v), int(vs)))
            if self._order[key[0][0]] > self._order[key[1][0]]:
                key = (key[1], key[0])
            self.theta[key] = self.theta.get(key, 0) + w

    def _check_slot(self, v, slot):
        if str(v) not in self._order:
            raise GraphError(f'Unknown vertex: {v}')
        if slot not in SLOTS:
            raise GraphError(f'Slot must be 1 or 2: {slot}')

    @staticmethod
    def _check_weight(w, label):
        if isinstance(w, bool) or not isinstance(w, int) or w < 0:
            raise GraphError(f'Weight {label} must be a nonnegative integer: {w}')
        return w

    def __len__(self):
        return len(self.vertices)

    def __eq__(self, other):
        return isinstance(other, WeightedGraph) and self.vertices == other.vertices \
            and self.q == other.q and self.theta == other.theta

    def __repr__(self):
        return f'WeightedGraph({list(self.vertices)}, q={self.q}, theta={self.theta})'

    def q_of(self, v, slot):
        return self.q.get((v, slot), 0)

    def slot_weights(self):
        """
        :return: mapping vertex pair -> {(slot, slot): weight}
        """
        pairs = {}
        for ((u, us), (v, vs)), w in self.theta.items():
            pairs.setdefault((u, v), {})
            pairs[(u, v)][(us, vs)] = pairs[(u, v)].get((us, vs), 0) + w
        return pairs

    def projected_edges(self):
        return sorted(self.slot_weights(), key=lambda e: (self._order[e[0]], self._order[e[1]]))

    def subgraph(self, vertices):
        keep = set(vertices)
        ordered = [v for v in self.vertices if v in keep]
        q = {key: w for key, w in self.q.items() if key[0] in keep}
        theta = {key: w for key, w in self.theta.items()
                 if key[0][0] in keep and key[1][0] in keep}
        return WeightedGraph(ordered, q, theta)

    def to_dict(self):
        return {
            'vertices': list(self.vertices),
            'q': [{'v': v, 'slot': slot, 'w': w} for (v, slot), w in sorted(
                self.q.items(), key=lambda item: (self._order[item[0][0]], item[0][1]))],
            'theta': [{'u': u, 'uslot': us, 'v': v, 'vslot': vs, 'w': w}
                      for ((u, us), (v, vs)), w in sorted(
                          self.theta.items(),
                          key=lambda item: (self._order[item[0][0][0]], item[0][0][1],
                                            self._order[item[0][1][0]], item[0][1][1]))],
        }

    @classmethod
    def from_dict(cls, data):
        try:
            vertices = data['vertices']
            q = {}
            for item in data.get('q', []):
                key = (str(item['v']), item['slot'])
                q[key] = q.get(key, 0) + item['w']
            theta = {}
            for item in data.get('theta', []):
                key = ((str(item['u']), item['uslot']), (str(item['v']), item['vslot']))
                theta[key] = theta.get(key, 0) + item['w']
        except (KeyError, TypeError) as exc:
            raise GraphError(f'Malformed graph description: {exc}') from exc
        return cls(vertices, q, theta)


def load_graph(file_path):
    """
    Read a graph from JSON:
    {"vertices": [...], "q": [{"v", "slot", "w"}], "theta": [{"u", "uslot", "v", "vslot", "w"}]}
    """
    with open(file_path, 'r', encoding='utf8') as file:
        try:
            data = json.load(file)
        except json.JSONDecodeError as exc:
            raise GraphError(f'{file_path}: invalid JSON: {exc}') from exc
    return WeightedGraph.from_dict(data)


def dump_graph(graph, file_path):
    with open(file_path, 'w', encoding='utf8') as file:
        json.dump(graph.to_dict(), file, indent=4, ensure_ascii=False)
        file.write('\n')


def disjoint_union(first, second):
    """
    Union of two graphs; clashing vertex names are prefixed 'a.' and 'b.'.
    """
    if set(first.vertices) & set(second.vertices):
        first, second = _prefixed(first, 'a.'), _prefixed(second, 'b.')
    return WeightedGraph(first.vertices + second.vertices,
                         {**first.q, **second.q}, {**first.theta, **second.theta})


def _prefixed(graph, prefix):
    return WeightedGraph(
        [prefix + v for v in graph.vertices],
        {(prefix + v, s): w for (v, s), w in graph.q.items()},
        {((prefix + u, us), (prefix + v, vs)): w for ((u, us), (v, vs)), w in graph.theta.items()})


def components(graph):
    """
    Connected components of the projected graph, isolated vertices as
    singletons, in order of their first vertex.
    """
    parts = UnionFind(graph.vertices)
    for u, v in graph.projected_edges():
        parts.union(u, v)
    groups = {}
    for v in graph.vertices:
        groups.setdefault(parts.find(v), []).append(v)
    return [graph.subgraph(members) for members in groups.values()]


def classify_edges(graph):
    """
    Split projected edges into E1 (weight only on slot pair (1, 1)) and E2
    (some weight on a pair involving slot 2).
    :return: (E1, E2) lists of vertex pairs
    """
    e1, e2 = [], []
    weights = graph.slot_weights()
    for edge in graph.projected_edges():
        if any(w > 0 and slots != (1, 1) for slots, w in weights[edge].items()):
            e2.append(edge)
        else:
            e1.append(edge)
    return e1, e2


def _check_connected(component):
    if len(components(component)) != 1:
        raise GraphError(f'Graph on {list(component.vertices)} is not connected')


def ell2(component):
    """
    Largest number of E2 edges in a spanning tree of a connected graph:
    |V| minus the number of components of the E2 subgraph.
    :raises GraphError: if the graph is disconnected
    """
    _check_connected(component)
    _, e2 = classify_edges(component)
    parts = UnionFind(component.vertices)
    for u, v in e2:
        parts.union(u, v)
    return len(component) - parts.count()


def brute_force_ell2(component):
    """
    ell2 by enumerating every spanning tree.
    """
    _check_connected(component)
    edges = component.projected_edges()
    _, e2 = classify_edges(component)
    e2 = set(e2)
    size = len(component) - 1
    best = 0
    for tree in itertools.combinations(edges, size):
        parts = UnionFind(component.vertices)
        if all(parts.union(u, v) for u, v in tree):
            best = max(best, sum(1 for edge in tree if edge in e2))
    return best


@dataclass(frozen=True)
class ComponentExponent:
    vertices: tuple
    q_bar: int
    q_bar1: int
    q_bar2: int
    theta_bar: int
    e1_count: int
    e2_count: int
    ell2: int
    e_q: Affine
    e_theta: Affine

    @property
    def e(self):
        return self.e_q + self.e_theta

    def as_dict(self, h=None):
        record = {
            'vertices': list(self.vertices), 'q_bar': self.q_bar, 'q_bar1': self.q_bar1,
            'q_bar2': self.q_bar2, 'theta_bar': self.theta_bar, 'E1': self.e1_count,
            'E2': self.e2_count, 'ell2': self.ell2, 'e_q': str(self.e_q),
            'e_theta': str(self.e_theta), 'e': str(self.e),
        }
        if h is not None:
            record['value'] = self.e(h)
        return record


@dataclass(frozen=True)
class ExponentReport:
    components: tuple
    h: float = None

    @property
    def total(self):
        return sum((c.e for c in self.components), Affine())

    @property
    def value(self):
        return None if self.h is None else self.total(self.h)

    def as_dict(self):
        record = {'exponent': str(self.total),
                  'components': [c.as_dict(self.h) for c in self.components]}
        if self.h is not None:
            record['h'] = self.h
            record['value'] = self.value
        return record

    def table(self):
        """
        Plain text table, one row per component.
        """
        header = ('vertices', 'q', 'q1', 'q2', 'theta', 'E1', 'E2', 'ell2', 'e_q', 'e_theta', 'e')
        rows = [(','.join(c.vertices), c.q_bar, c.q_bar1, c.q_bar2, c.theta_bar, c.e1_count,
                 c.e2_count, c.ell2, c.e_q, c.e_theta, c.e) for c in self.components]
        rows = [tuple(str(cell) for cell in row) for row in rows]
        widths = [max(len(str(col)), *(len(row[i]) for row in rows)) for i, col in enumerate(header)]
        lines = ['  '.join(str(col).ljust(w) for col, w in zip(header, widths))]
        lines.extend('  '.join(cell.ljust(w) for cell, w in zip(row, widths)) for row in rows)
        footer = f'e(G) = {self.total}'
        if self.h is not None:
            footer += f' = {self.value:.6g} at H = {self.h}'
        lines.append(footer)
        return '\n'.join(lines)


def exponent_q(q_bar1, q_bar2):
    q_bar = q_bar1 + q_bar2
    if q_bar == 0:
        return Affine()
    if q_bar1 > 0:
        return Affine(-1) - H * (q_bar - 1)
    return Affine(Fraction(-1, 2)) - H * q_bar


def component_exponent(component):
    e1, e2 = classify_edges(component)
    q1 = sum(component.q_of(v, 1) for v in component.vertices)
    q2 = sum(component.q_of(v, 2) for v in component.vertices)
    theta_bar = sum(component.theta.values())
    length = ell2(component)
    e_theta = 1 - 2 * H * theta_bar + (2 * H - 1) * (len(component) - 1 - length)
    return ComponentExponent(
        vertices=component.vertices, q_bar=q1 + q2, q_bar1=q1, q_bar2=q2,
        theta_bar=theta_bar, e1_count=len(e1), e2_count=len(e2), ell2=length,
        e_q=exponent_q(q1, q2), e_theta=e_theta)


def exponent(graph, h=None):
    """
    Exponent e(G), the sum of e_q(C) + e_theta(C) over the components C.
    :param graph: WeightedGraph
    :param h: optional Hurst parameter for a numeric value
    :return: ExponentReport
    """
    if h is not None:
        h = check_hurst(h, allow_boundary=True)
    report = ExponentReport(tuple(component_exponent(c) for c in components(graph)), h)
    logger.debug('exponent %s over %d components', report.total, len(report.components))
    return report


@dataclass(frozen=True)
class CatalogEntry:
    name: str
    graph: WeightedGraph
    expected: Affine


def _edge(u, v, w, slots=(2, 2)):
    return {((u, slots[0]), (v, slots[1])): w}


# name: (vertices, q, theta, exponent)
_CATALOG = (
    ('fig1711', ['v0'], {('v0', 2): 2}, {}, '1/2 - 2H'),
    ('fig1712', ['v0'], {('v0', 1): 2, ('v0', 2): 1}, {}, '-2H'),
    ('fig1713', ['v0'], {('v0', 1): 1}, {}, '0'),
    ('fig1714', ['v0'], {('v0', 2): 1}, {}, '1/2 - H'),
    ('fig1715', ['v0'], {('v0', 1): 1, ('v0', 2): 1}, {}, '-H'),
    ('fig1716', ['v0'], {}, {}, '1'),
    ('fig1717', ['v0', 'v1'], {}, _edge('v0', 'v1', 2), '1 - 4H'),
    ('fig1718', ['v0', 'v1'], {('v0', 2): 1, ('v1', 2): 1}, _edge('v0', 'v1', 1), '1/2 - 4H'),
    ('fig1719', ['v0', 'v1'], {('v0', 2): 2, ('v1', 2): 1}, {}, '1 - 3H'),
    ('fig1720', ['v0', 'v1', 'v2'], {('v2', 2): 1}, _edge('v0', 'v1', 2), '3/2 - 5H'),
    ('fig1721', ['v0', 'v1', 'v2'], {('v0', 2): 1, ('v1', 2): 1, ('v2', 2): 1},
     _edge('v0', 'v1', 1), '1 - 5H'),
    ('fig1722', ['v0', 'v1', 'v2'], {('v0', 2): 1, ('v2', 2): 1},
     {**_edge('v0', 'v1', 1), **_edge('v1', 'v2', 1)}, '1/2 - 6H'),
    ('fig1723', ['v0', 'v1', 'v2'], {},
     {**_edge('v0', 'v1', 1), **_edge('v1', 'v2', 1), **_edge('v0', 'v2', 1)}, '1 - 6H'),
    ('fig1724', ['v0', 'v1'], {('v0', 2): 1}, _edge('v0', 'v1', 1), '1/2 - 3H'),
)


def builtin_catalog():
    """
    The fourteen figure graphs with their stated exponents.
    """
    return [CatalogEntry(name, WeightedGraph(vertices, q, theta), Affine.parse(expected))
            for name, vertices, q, theta, expected in _CATALOG]


def catalog_entry(name):
    for entry in builtin_catalog():
        if entry.name == name:
            return entry
    raise GraphError(f'Unknown catalog graph {name!r}; choose from '
                     f'{", ".join(e[0] for e in _CATALOG)}')


# Catalog graphs whose functional (unit weights, indicator kernels) has a
# closed-form second moment.
ORACLE_NAMES = ('fig1711', 'fig1712', 'fig1713', 'fig1714', 'fig1715', 'fig1716',
                'fig1717', 'fig1718', 'fig1719')


def _check_oracle(name, n):
    if name not in ORACLE_NAMES:
        raise OracleError(f'No L2 oracle for {name!r}; supported: {", ".join(ORACLE_NAMES)}')
    n = int(n)
    if n < 3:
        raise OracleError(f'n must be at least 3: {n}')
    return n


def _kernel(slot, j, n):
    """
    Kernel pieces ((a, b), sign) of slot 1 (1^n_j) or slot 2 (d^n_j).
    """
    if slot == 1:
        return ((((j - 1) / n, j / n), 1.0),)
    return (((j / n, (j + 1) / n), 1.0), (((j - 1) / n, j / n), -1.0))


def pairing_second_moment(graph, n, h):
    """
    E[F^2] for F = sum over index tuples (j_v), 1 <= j_v <= n-1, of the
    product of edge inner products <k_u, k_v>^theta times the multiple
    integral of the tensor product of the slot kernels repeated q times.
    Pairs of tuples contribute the permanent of the kernel Gram matrix.
    Cost grows like n^{2|V|}; meant for small n.
    """
    h = check_hurst(h, allow_boundary=True)
    order = sum(graph.q.values())
    if order > MAX_ORACLE_ORDER:
        raise OracleError(f'Multiple integral order {order} exceeds {MAX_ORACLE_ORDER}')

    @lru_cache(maxsize=None)
    def inner(slot_a, a, slot_b, b):
        return sum(s * t * interval_inner(h, p0, p1, r0, r1)
                   for (p0, p1), s in _kernel(slot_a, a, n) for (r0, r1), t in _kernel(slot_b, b, n))

    tuples = []
    for idx in itertools.product(range(1, n), repeat=len(graph)):
        at = dict(zip(graph.vertices, idx))
        coeff = 1.0
        for ((u, us), (v, vs)), w in graph.theta.items():
            coeff *= inner(us, at[u], vs, at[v]) ** w
        kernels = [(slot, at[v]) for v in graph.vertices for slot in SLOTS
                   for _ in range(graph.q_of(v, slot))]
        tuples.append((coeff, kernels))

    total = 0.0
    for coeff_a, ka in tuples:
        for coeff_b, kb in tuples:
            perm = sum(math.prod(inner(*ka[i], *kb[p[i]]) for i in range(order))
                       for p in itertools.permutations(range(order)))
            total += coeff_a * coeff_b * perm
    return total


def _matrices(h, n):
    lags = np.arange(1, n)[:, None] - np.arange(1, n)[None, :]
    rho = scipy.linalg.toeplitz(rho_hat(h, np.arange(n - 1)))
    gamma = scipy.linalg.toeplitz(fgn_autocov(h, np.arange(n - 1)))
    # n^{2H} <1^n_a, d^n_b>
    mixed = fgn_autocov(h, lags - 1) - fgn_autocov(h, lags)
    return rho, gamma, mixed


def exact_l2_norm(name, n, h):
    """
    Exact L2 norm of a catalog functional with unit weights, from the chaos
    isometry written with the scaled Gram matrices rho_hat(a-b),
    gamma(a-b) and gamma(a-b-1) - gamma(a-b) over indices 1..n-1.
    """
    n = _check_oracle(name, n)
    h = check_hurst(h, allow_boundary=True)
    if name == 'fig1716':
        return float(n - 1)
    rho, gamma, mixed = _matrices(h, n)
    scale = float(n) ** (-2.0 * h)
    cross = mixed * mixed.T
    if name == 'fig1711':
        second = 2.0 * scale ** 2 * np.sum(rho ** 2)
    elif name == 'fig1712':
        second = scale ** 3 * np.sum(2.0 * gamma ** 2 * rho + 4.0 * gamma * cross)
    elif name == 'fig1713':
        second = scale * np.sum(gamma)
    elif name == 'fig1714':
        second = scale * np.sum(rho)
    elif name == 'fig1715':
        second = scale ** 2 * np.sum(gamma * rho + cross)
    elif name == 'fig1717':
        return float(abs(scale ** 2 * np.sum(rho ** 2)))
    elif name == 'fig1718':
        square = rho @ rho
        second = 2.0 * scale ** 4 * np.sum(square ** 2)
    else:
        ones = np.ones(n - 1)
        row = rho @ ones
        second = scale ** 3 * (2.0 * (ones @ row) * np.sum(rho ** 2) + 4.0 * row @ rho @ row)
    return math.sqrt(float(second))


def _functional_samples(name, increments, h, n):
    """
    Values of the catalog functional for rows of fGn increments on k/n.
    """
    scale = float(n) ** (-2.0 * h)
    ind = increments[:, :-1]
    diff = increments[:, 1:] - increments[:, :-1]
    rows = increments.shape[0]
    if name == 'fig1716':
        return np.full(rows, float(n - 1))
    rho, _, _ = _matrices(h, n)
    if name == 'fig1717':
        return np.full(rows, scale ** 2 * np.sum(rho ** 2))
    mixed_diag = scale * (fgn_autocov(h, 1) - 1.0)
    var_diff = scale * c2h(h)
    if name == 'fig1711':
        return np.sum(diff ** 2 - var_diff, axis=1)
    if name == 'fig1712':
        return np.sum(ind ** 2 * diff - scale * diff - 2.0 * mixed_diag * ind, axis=1)
    if name == 'fig1713':
        return np.sum(ind, axis=1)
    if name == 'fig1714':
        return np.sum(diff, axis=1)
    if name == 'fig1715':
        return np.sum(ind * diff - mixed_diag, axis=1)
    if name == 'fig1718':
        quad = np.einsum('rj,jk,rk->r', diff, rho, diff)
        return scale * (quad - scale * np.sum(rho ** 2))
    total = np.sum(diff, axis=1)
    return (np.sum(diff ** 2, axis=1) * total - (n - 1) * var_diff * total
            - 2.0 * scale * (diff @ rho.sum(axis=1)))


def functional_samples(name, n, h, replicas, rng, method='circulant'):
    """
    Independent draws of a catalog functional, simulated in blocks of
    MC_BLOCK replicas from one generator.
    """
    n = _check_oracle(name, n)
    replicas = int(replicas)
    if replicas < 2:
        raise OracleError(f'Need at least 2 replicas: {replicas}')
    h = check_hurst(h)
    plan = sampler(h, n, method, False)
    return np.concatenate([
        _functional_samples(name, plan.sample(rng, size=min(MC_BLOCK, replicas - start)), h, n)
        for start in range(0, replicas, MC_BLOCK)])


def mc_l2_norm(name, n, h, replicas, rng, method='circulant'):
    """
    Monte Carlo L2 norm of a catalog functional: multiple integrals are
    evaluated from B(1^n_j) and B(d^n_j) with I2(f g) = B(f)B(g) - <f, g>
    and I3(f g l) = B(f)B(g)B(l) - <f,g>B(l) - <f,l>B(g) - <g,l>B(f).
    :return: (sqrt(mean F^2), jackknife standard error)
    """
    values = functional_samples(name, n, h, replicas, rng, method)
    replicas = values.size
    squares = values ** 2
    estimate = math.sqrt(float(np.mean(squares)))
    leave_one_out = np.sqrt((np.sum(squares) - squares) / (replicas - 1))
    spread = np.sum((leave_one_out - leave_one_out.mean()) ** 2)
    return estimate, math.sqrt((replicas - 1) / replicas * float(spread))


def order_slope(ns, norms):
    """
    Least squares slope of log norm against log n.
    :raises OracleError: with fewer than 3 points or a nonpositive norm
    """
    ns = np.asarray(ns, dtype=np.float64)
    norms = np.asarray(norms, dtype=np.float64)
    if ns.size < 3 or ns.size != norms.size:
        raise OracleError(f'Need at least 3 matching (n, norm) points, got {ns.size}')
    if np.any(~(norms > 0)) or np.any(~(ns > 0)):
        raise OracleError('Norms and grid sizes must be positive')
    slope, _ = np.polyfit(np.log(ns), np.log(norms), 1)
    return float(slope)
