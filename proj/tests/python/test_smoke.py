import pytest

import tcil

SMALL = """
shape = 3x2
dims = 4
per_leaf = 12
test_per_leaf = 6
spreads = 3, 1.5, 0.5
modes = tcil, flat-semantic
seeds = 0
epochs1 = 3
epochs2 = 1
lr1 = 0.01
lr2 = 0.01
hidden = 6
delta = 3
buffer = 6
batch = 4
"""


def test_tree_and_curriculum_counts():
    tree = tcil.TaxonomyTree.from_shape("20x5")
    assert len(tree.leaves()) == 100
    c = tcil.curriculum(tree, "bfs")
    assert (c["n_coarse"], c["n_fine"]) == (1, 20)
    c = tcil.curriculum(tcil.TaxonomyTree.from_shape("4x5x5"), "bfs")
    assert (c["n_coarse"], c["n_fine"]) == (5, 20)


def test_taxonomy_round_trip():
    tree = tcil.TaxonomyTree.parse("0 root\n1 0 a\n2 0 b\n3 1 x\n4 1 y\n5 2 z\n6 2 w\n")
    again = tcil.TaxonomyTree.parse(tree.serialize())
    assert again.serialize() == tree.serialize()
    assert tree.height == 2
    with pytest.raises(tcil.ParseError):
        tcil.TaxonomyTree.parse("0 root\n1 7\n")


def test_split_counts():
    tree = tcil.TaxonomyTree.from_shape("2x2")
    labels = [leaf for leaf in tree.leaves() for _ in range(10)]
    parts = tcil.split(tree, labels, [0.3], seed=1)
    seen = [i for idx in parts.values() for i in idx]
    assert sorted(seen) == list(range(len(labels)))
    for node in tree.children(tree.root):
        assert len(parts[node]) == 2 * 3


def test_matrices_and_summary():
    assert tcil.sigma(3) == [[0, 1, 0], [0, 0, 1]]
    assert tcil.expansion_matrix(1, 2) == [[1, 0]]
    assert tcil.tc_inheritance_matrix(1, 0, 2) == [[1], [1]]
    assert tcil.summarize([0.5, 0.75, 0.25], 1, 2) == (0.25, 0.5)


def test_run_is_deterministic():
    a = tcil.run(SMALL)
    b = tcil.run(SMALL)
    assert a == b
    assert {r["mode"] for r in a} == {"tcil", "flat-semantic"}
    assert all(0.0 <= r["accuracy"] <= 1.0 for r in a)
    with pytest.raises(tcil.ConfigError):
        tcil.run("shape = 2x2\nunknown = 1\n")


def test_verify():
    assert all(ok for _, ok, _ in tcil.verify())
