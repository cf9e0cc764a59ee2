import itertools
import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hitsc.data import DomainError
from hitsc.hierarchy import (
    HierarchyNode,
    bipartitions,
    build_hierarchy,
    kmedoids2,
    renumber,
    robinson_foulds,
    to_newick,
    tree_from_json,
    tree_to_json,
)


def brute_kmedoids(D, items):
    """Reference enumeration: cheapest medoid pair, first in lexicographic order on ties."""
    items = sorted(items)
    best = None
    for a, b in itertools.combinations(items, 2):
        cost = 0.0
        for i in items:
            cost += min(D[i][a], D[i][b])
        if best is None or cost < best[0]:
            best = (cost, a, b)
    _, a, b = best
    clusters = ({i for i in items if i == a or (i != b and D[i][a] <= D[i][b])},)
    return (a, b), clusters[0], set(items) - clusters[0]


def random_symmetric(rng, n, integer=False):
    if integer:
        M = rng.integers(1, 4, size=(n, n)).astype(float)
    else:
        M = rng.uniform(0, 1, size=(n, n))
    M = np.triu(M, 1)
    M = M + M.T
    return M


def from_nested(spec):
    """((0,1),(2,3)) -> tree."""
    def build(s):
        if isinstance(s, int):
            return HierarchyNode(0, (s,))
        kids = tuple(build(x) for x in s)
        return HierarchyNode(0, tuple(sorted(kids[0].members + kids[1].members)), kids)
    return renumber(build(spec))


def test_two_items_forced():
    D = np.array([[0, 0.3], [0.3, 0]])
    assignment, medoids = kmedoids2(D, [0, 1])
    assert assignment.tolist() == [0, 1] and medoids == (0, 1)


def test_two_tight_pairs():
    D = np.full((4, 4), 0.9)
    D[0, 1] = D[1, 0] = D[2, 3] = D[3, 2] = 0.1
    np.fill_diagonal(D, 0)
    assignment, _ = kmedoids2(D, range(4))
    assert assignment.tolist() == [0, 0, 1, 1]
    assert to_newick(build_hierarchy(D)) == "((c0,c1),(c2,c3));"


def test_equal_distances_pick_first_pair():
    D = np.ones((5, 5)) - np.eye(5)
    assignment, medoids = kmedoids2(D, range(5))
    assert medoids == (0, 1)
    assert assignment.tolist() == [0, 1, 0, 0, 0]


def test_kmedoids_needs_two_items():
    with pytest.raises(DomainError):
        kmedoids2(np.zeros((3, 3)), [1])


@pytest.mark.parametrize("integer", [False, True])
def test_kmedoids_matches_enumeration(integer):
    rng = np.random.default_rng(11 + integer)
    for _ in range(100):
        n = int(rng.integers(2, 13))
        D = random_symmetric(rng, n, integer)
        items = sorted(rng.choice(n, size=int(rng.integers(2, n + 1)), replace=False).tolist())
        assignment, medoids = kmedoids2(D, items)
        want_medoids, left, right = brute_kmedoids(D.tolist(), items)
        assert medoids == want_medoids
        assert {i for i, a in zip(items, assignment) if a == 0} == left
        assert {i for i, a in zip(items, assignment) if a == 1} == right


def test_build_small_trees():
    root = build_hierarchy(np.array([[0, 0.5], [0.5, 0]]))
    assert [c.members for c in root.children] == [(0,), (1,)]
    assert [n.id for n in root.walk()] == [0, 1, 2]


@settings(max_examples=40, deadline=None)
@given(st.integers(3, 50), st.integers(0, 2**32 - 1))
def test_tree_shape_properties(c, seed):
    D = random_symmetric(np.random.default_rng(seed), c)
    root = build_hierarchy(D)
    root.validate()
    assert sorted(root.leaves()) == list(range(c))
    assert len(root.internal_nodes()) == c - 1
    assert [n.id for n in root.walk()] == list(range(2 * c - 1))
    # path length bound and strict nesting
    def depth(node, d=0):
        out = [d]
        for ch in node.children:
            assert set(ch.members) < set(node.members)
            out += depth(ch, d + 1)
        return out
    assert max(depth(root)) <= c - 1
    assert tree_to_json(build_hierarchy(D)) == tree_to_json(root)


def relabel(node, sigma):
    return HierarchyNode(node.id, tuple(sorted(int(sigma[m]) for m in node.members)),
                         tuple(relabel(ch, sigma) for ch in node.children))


@settings(max_examples=30, deadline=None)
@given(st.integers(3, 9), st.integers(0, 2**32 - 1))
def test_relabeling_relabels_tree(c, seed):
    rng = np.random.default_rng(seed)
    D = random_symmetric(rng, c)
    sigma = rng.permutation(c)
    Dp = np.empty_like(D)
    Dp[np.ix_(sigma, sigma)] = D  # class i becomes sigma[i]
    def clusters(t):
        return {frozenset(n.members) for n in t.walk()}
    assert clusters(build_hierarchy(Dp)) == clusters(relabel(build_hierarchy(D), sigma))


def test_json_round_trip_canonical():
    D = random_symmetric(np.random.default_rng(3), 7)
    text = tree_to_json(build_hierarchy(D))
    assert tree_to_json(tree_from_json(text)) == text
    small = json.loads(tree_to_json(build_hierarchy(np.array([[0, 1.0], [1.0, 0]]))))
    assert small["members"] == [0, 1]
    assert [c["members"] for c in small["children"]] == [[0], [1]]
    assert "children" not in small["children"][0] and "medoids" not in small["children"][0]


def test_json_errors_carry_path():
    with pytest.raises(ValueError, match=r"\$\.children\[1\]"):
        tree_from_json('{"id":0,"members":[0,1],"children":[{"id":1,"members":[0]},{"id":2}]}')
    with pytest.raises(ValueError, match=r"\$"):
        tree_from_json("[1, 2")


def test_newick_with_names():
    tree = from_nested(((0, 1), (2, 3)))
    assert to_newick(tree) == "((c0,c1),(c2,c3));"
    assert to_newick(tree, ["a", "b", "c d", "e"]) == "((a,b),('c d',e));"


def test_robinson_foulds_examples():
    t1 = from_nested(((0, 1), (2, 3)))
    assert robinson_foulds(t1, t1) == 0
    assert robinson_foulds(t1, from_nested(((0, 2), (1, 3)))) == 2
    with pytest.raises(DomainError):
        robinson_foulds(t1, from_nested((0, (1, 2))))


def _all_trees(leaves):
    if len(leaves) == 1:
        yield leaves[0]
        return
    first, rest = leaves[0], leaves[1:]
    for r in range(0, len(rest)):
        for combo in itertools.combinations(rest, r):
            left = (first,) + combo
            right = tuple(x for x in rest if x not in combo)
            for a in _all_trees(left):
                for b in _all_trees(right):
                    yield (a, b)


def test_robinson_foulds_four_leaves_exhaustive():
    trees = [from_nested(t) for t in _all_trees((0, 1, 2, 3))]
    assert len(trees) == 15  # rooted binary shapes on four labelled leaves
    values = {robinson_foulds(a, b) for a in trees for b in trees}
    assert values <= {0, 2}
    assert values == {0, 2}
