"""
Tests for weighted graphs, their exponents, the catalog and the L2 norm
oracles.
"""
import os
import sys
import math
import shutil
import tempfile
import unittest
from fractions import Fraction

import numpy as np

sys.path.append(os.path.dirname(os.path.dirname(__file__)))

from exponent import (
    H, ORACLE_NAMES, Affine, GraphError, OracleError, UnionFind, WeightedGraph,
    brute_force_ell2, builtin_catalog, catalog_entry, classify_edges, components,
    disjoint_union, dump_graph, ell2, exact_l2_norm, exponent, exponent_q,
    functional_samples, load_graph, mc_l2_norm, order_slope, pairing_second_moment,
)
from fgn import derive_stream

GRAPHS = os.path.join(os.path.dirname(os.path.dirname(os.path.realpath(__file__))), 'conf', 'graphs')


def random_connected_graph(rng, size):
    vertices = [f'v{i}' for i in range(size)]
    theta = {}
    for i in range(1, size):
        j = int(rng.integers(0, i))
        slots = tuple(int(s) for s in rng.integers(1, 3, 2))
        theta[((vertices[j], slots[0]), (vertices[i], slots[1]))] = int(rng.integers(1, 3))
    for _ in range(int(rng.integers(0, size + 1))):
        u, v = rng.choice(size, 2, replace=False)
        slots = tuple(int(s) for s in rng.integers(1, 3, 2))
        key = ((vertices[u], slots[0]), (vertices[v], slots[1]))
        theta[key] = theta.get(key, 0) + 1
    q = {(v, int(rng.integers(1, 3))): int(rng.integers(0, 3)) for v in vertices}
    return WeightedGraph(vertices, q, theta)


class TestAffine(unittest.TestCase):
    """
    Exact affine expressions in H.
    """
    def test_parse_and_print(self):
        """
        Textual forms parse and print back.
        """
        for text in ('1/2 - 2H', '-H', '0', '3/2 - 5H', '1', '-2H', '1 + H'):
            self.assertEqual(str(Affine.parse(text)), text)
        self.assertEqual(Affine.parse('3/2-5H'), Affine(Fraction(3, 2), -5))
        self.assertEqual(Affine.parse('H + 1 - 2H'), Affine(1, -1))

    def test_parse_errors(self):
        """
        Malformed expressions are rejected.
        """
        for text in ('', 'abc', '1/2 -', 'H H', '2 * H'):
            with self.assertRaises(ValueError, msg=text):
                Affine.parse(text)

    def test_arithmetic(self):
        """
        Sums, differences and scalar multiples stay exact.
        """
        e = 1 - 2 * H * 3 + (2 * H - 1) * 2
        self.assertEqual(e, Affine(-1, -2))
        self.assertEqual(-H + Fraction(1, 2), Affine.parse('1/2 - H'))
        self.assertEqual(Affine(3), 3)
        self.assertAlmostEqual(Affine.parse('1/2 - 2H')(0.75), -1.0, places=15)
        self.assertEqual(len({Affine(1, 2), Affine.parse('1 + 2H')}), 1)


class TestUnionFind(unittest.TestCase):
    """
    Disjoint sets over vertex names.
    """
    def test_union(self):
        """
        Unions merge sets once and the count follows.
        """
        parts = UnionFind('abcd')
        self.assertEqual(parts.count(), 4)
        self.assertTrue(parts.union('a', 'b'))
        self.assertTrue(parts.union('c', 'd'))
        self.assertFalse(parts.union('b', 'a'))
        self.assertEqual(parts.count(), 2)
        self.assertTrue(parts.union('a', 'd'))
        self.assertEqual(parts.find('b'), parts.find('c'))


class TestWeightedGraph(unittest.TestCase):
    """
    Construction, validation and serialization of weighted graphs.
    """
    def setUp(self):
        self.dir = tempfile.mkdtemp()

    def tearDown(self):
        shutil.rmtree(self.dir)

    def test_invalid(self):
        """
        Bad vertices, slots, weights and self pairs raise GraphError.
        """
        cases = [
            ([], {}, {}),
            (['a', 'a'], {}, {}),
            (['a'], {('b', 1): 1}, {}),
            (['a'], {('a', 3): 1}, {}),
            (['a'], {('a', 1): -1}, {}),
            (['a'], {('a', 1): 1.5}, {}),
            (['a'], {('a', 1): True}, {}),
            (['a'], {}, {(('a', 1), ('a', 2)): 1}),
            (['a', 'b'], {}, {(('a', 1), ('b', 0)): 1}),
        ]
        for vertices, q, theta in cases:
            with self.assertRaises(GraphError, msg=repr((vertices, q, theta))):
                WeightedGraph(vertices, q, theta)

    def test_orientation(self):
        """
        Both orientations of a slot pair are the same edge and add up.
        """
        graph = WeightedGraph(['a', 'b'], theta={(('b', 2), ('a', 1)): 1,
                                                 (('a', 1), ('b', 2)): 2})
        self.assertEqual(graph.theta, {(('a', 1), ('b', 2)): 3})
        self.assertEqual(graph.slot_weights(), {('a', 'b'): {(1, 2): 3}})
        self.assertEqual(WeightedGraph(['a'], {('a', 1): 0}).q, {})

    def test_json(self):
        """
        Graphs survive a JSON file.
        """
        graph = load_graph(os.path.join(GRAPHS, 'mixed_slots.json'))
        file_path = os.path.join(self.dir, 'g.json')
        dump_graph(graph, file_path)
        self.assertEqual(load_graph(file_path), graph)
        with open(file_path, 'w', encoding='utf8') as file:
            file.write('{"vertices": ["a"], "q": [{"v": "a"}]}')
        with self.assertRaises(GraphError):
            load_graph(file_path)
        with open(file_path, 'w', encoding='utf8') as file:
            file.write('{"vertices": [')
        with self.assertRaises(GraphError):
            load_graph(file_path)

    def test_catalog_files(self):
        """
        The graph files under conf/graphs match the catalog.
        """
        for entry in builtin_catalog():
            self.assertEqual(load_graph(os.path.join(GRAPHS, f'{entry.name}.json')), entry.graph,
                             entry.name)

    def test_disjoint_union(self):
        """
        Clashing names are prefixed; distinct names are kept.
        """
        first = catalog_entry('fig1717').graph
        second = catalog_entry('fig1711').graph
        union = disjoint_union(first, second)
        self.assertEqual(union.vertices, ('a.v0', 'a.v1', 'b.v0'))
        self.assertEqual(union.q_of('b.v0', 2), 2)
        other = WeightedGraph(['x'], {('x', 1): 1})
        self.assertEqual(disjoint_union(first, other).vertices, ('v0', 'v1', 'x'))


class TestStructure(unittest.TestCase):
    """
    Components, edge classes and ell2.
    """
    def test_components(self):
        """
        Isolated vertices are their own components.
        """
        graph = catalog_entry('fig1720').graph
        parts = components(graph)
        self.assertEqual([p.vertices for p in parts], [('v0', 'v1'), ('v2',)])

    def test_classify(self):
        """
        Only pure (1, 1) edges are in E1.
        """
        graph = load_graph(os.path.join(GRAPHS, 'mixed_slots.json'))
        e1, e2 = classify_edges(graph)
        self.assertEqual(e1, [('a', 'b'), ('a', 'c')])
        self.assertEqual(e2, [('b', 'c')])
        self.assertEqual(ell2(graph), 1)

    def test_ell2_disconnected(self):
        """
        ell2 needs a connected graph.
        """
        with self.assertRaises(GraphError):
            ell2(catalog_entry('fig1719').graph)
        with self.assertRaises(GraphError):
            brute_force_ell2(catalog_entry('fig1720').graph)

    def test_ell2_matches_spanning_trees(self):
        """
        The component count formula agrees with spanning tree enumeration.
        """
        rng = np.random.default_rng(1711)
        for _ in range(200):
            graph = random_connected_graph(rng, int(rng.integers(2, 6)))
            self.assertEqual(ell2(graph), brute_force_ell2(graph), repr(graph))


class TestExponent(unittest.TestCase):
    """
    The exponent calculus.
    """
    def test_exponent_q(self):
        """
        The three cases of e_q.
        """
        self.assertEqual(exponent_q(0, 0), 0)
        self.assertEqual(exponent_q(1, 2), Affine.parse('-1 - 2H'))
        self.assertEqual(exponent_q(0, 2), Affine.parse('-1/2 - 2H'))

    def test_catalog(self):
        """
        Every catalog graph has its stated exponent.
        """
        catalog = builtin_catalog()
        self.assertEqual(len(catalog), 14)
        for entry in catalog:
            self.assertEqual(exponent(entry.graph).total, entry.expected, entry.name)

    def test_mixed_slots(self):
        """
        A graph mixing slots: theta_bar 4, ell2 1, one q on each slot.
        """
        report = exponent(load_graph(os.path.join(GRAPHS, 'mixed_slots.json')), 0.75)
        self.assertEqual(report.total, Affine.parse('-1 - 7H'))
        self.assertAlmostEqual(report.value, -6.25, places=14)
        (component,) = report.components
        self.assertEqual((component.theta_bar, component.ell2, component.q_bar1,
                          component.q_bar2), (4, 1, 1, 1))

    def test_additive(self):
        """
        The exponent of a disjoint union is the sum of the exponents.
        """
        entries = builtin_catalog()
        for first, second in zip(entries, entries[1:]):
            union = disjoint_union(first.graph, second.graph)
            self.assertEqual(exponent(union).total, first.expected + second.expected)

    def test_report(self):
        """
        Reports render as JSON-ready dicts and a table.
        """
        report = exponent(catalog_entry('fig1720').graph, 0.6)
        record = report.as_dict()
        self.assertEqual(record['exponent'], '3/2 - 5H')
        self.assertAlmostEqual(record['value'], -1.5, places=14)
        self.assertEqual([c['e'] for c in record['components']], ['1 - 4H', '1/2 - H'])
        table = report.table()
        self.assertTrue(table.splitlines()[0].startswith('vertices'))
        self.assertIn('e(G) = 3/2 - 5H', table)
        self.assertIsNone(exponent(catalog_entry('fig1720').graph).value)

    def test_unknown_entry(self):
        """
        Unknown catalog names list the known ones.
        """
        with self.assertRaises(GraphError) as ctx:
            catalog_entry('fig9999')
        self.assertIn('fig1711', str(ctx.exception))


class TestOracles(unittest.TestCase):
    """
    Exact and Monte Carlo L2 norms of catalog functionals.
    """
    def test_brownian_value(self):
        """
        At H = 1/2 and n = 4 the sum of centred squared second differences
        has norm sqrt(2).
        """
        self.assertAlmostEqual(exact_l2_norm('fig1711', 4, 0.5), math.sqrt(2.0), places=13)

    def test_closed_forms_match_pairings(self):
        """
        Closed forms agree with the brute force pairing sum.
        """
        for h in (0.5, 0.7):
            for name in ORACLE_NAMES:
                graph = catalog_entry(name).graph
                brute = math.sqrt(pairing_second_moment(graph, 5, h))
                self.assertAlmostEqual(exact_l2_norm(name, 5, h), brute, places=11,
                                       msg=f'{name} at h={h}')

    def test_oracle_errors(self):
        """
        Unsupported names, tiny n and high orders are rejected.
        """
        with self.assertRaises(OracleError):
            exact_l2_norm('fig1720', 16, 0.7)
        with self.assertRaises(OracleError):
            exact_l2_norm('fig1711', 2, 0.7)
        with self.assertRaises(OracleError):
            pairing_second_moment(WeightedGraph(['a'], {('a', 1): 4}), 4, 0.7)
        with self.assertRaises(OracleError):
            functional_samples('fig1711', 16, 0.7, 1, derive_stream(1, 'order', 16))

    def test_order_slopes(self):
        """
        Norm orders never exceed the exponent and match it where sharp.
        """
        h = 0.65
        ns = [64, 128, 256, 512, 1024]
        for name in ORACLE_NAMES:
            expected = catalog_entry(name).expected(h)
            slope = order_slope(ns, [exact_l2_norm(name, n, h) for n in ns])
            self.assertLessEqual(slope, expected + 0.05, name)
            if name in ('fig1711', 'fig1716', 'fig1717', 'fig1718'):
                self.assertAlmostEqual(slope, expected, delta=0.05, msg=name)

    def test_fig1711_slope(self):
        """
        The exact norm of the centred quadratic variation decays like
        n^{1/2 - 2H} to within 0.02.
        """
        ns = [64, 128, 256, 512, 1024]
        for h in (0.55, 0.75, 0.9):
            slope = order_slope(ns, [exact_l2_norm('fig1711', n, h) for n in ns])
            self.assertAlmostEqual(slope, 0.5 - 2.0 * h, delta=0.02, msg=f'h={h}')

    def test_order_slope_errors(self):
        """
        A slope needs three positive points.
        """
        self.assertAlmostEqual(order_slope([1, 2, 4], [1.0, 0.5, 0.25]), -1.0, places=12)
        with self.assertRaises(OracleError):
            order_slope([1, 2], [1.0, 0.5])
        with self.assertRaises(OracleError):
            order_slope([1, 2, 4], [1.0, 0.0, 0.25])

    def test_samples(self):
        """
        Chaos functionals are centred; deterministic ones are constant.
        """
        for name in ('fig1711', 'fig1712', 'fig1715', 'fig1718', 'fig1719'):
            values = functional_samples(name, 16, 0.7, 1500, derive_stream(5, name, 0))
            self.assertEqual(values.shape, (1500,))
            norm = exact_l2_norm(name, 16, 0.7)
            self.assertLess(abs(np.mean(values)), 5.0 * norm / math.sqrt(1500), name)
        values = functional_samples('fig1717', 16, 0.7, 3, derive_stream(5, 'det', 0))
        np.testing.assert_allclose(values, exact_l2_norm('fig1717', 16, 0.7), rtol=1e-12)

    def test_fig1711_mc_at_128(self):
        """
        At n = 128 the Monte Carlo norm is within 3 standard errors.
        """
        estimate, error = mc_l2_norm('fig1711', 128, 0.7, 4000, derive_stream(911, 'order', 128))
        self.assertGreater(error, 0.0)
        self.assertLess(abs(estimate - exact_l2_norm('fig1711', 128, 0.7)), 3.0 * error)

    def test_mc_matches_exact(self):
        """
        Monte Carlo norms of the other catalog functionals agree with the
        exact norms; higher chaos orders carry heavier tails.
        """
        for name in ('fig1711', 'fig1713', 'fig1714', 'fig1715', 'fig1718', 'fig1719'):
            estimate, error = mc_l2_norm(name, 32, 0.7, 4000, derive_stream(911, 'order', 32))
            exact = exact_l2_norm(name, 32, 0.7)
            self.assertGreater(error, 0.0)
            self.assertLess(abs(estimate - exact), 5.0 * error + 0.02 * exact, name)
        estimate, error = mc_l2_norm('fig1716', 32, 0.7, 10, derive_stream(1, 'order', 32))
        self.assertEqual((estimate, error), (31.0, 0.0))


if __name__ == '__main__':
    unittest.main()
