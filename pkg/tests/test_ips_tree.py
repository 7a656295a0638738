import itertools
import random
from fractions import Fraction

import pytest

from qamlab.core.errors import MalformedInstance, ParseError
from qamlab.engines.ips_tree import (
    and_combine,
    beliefs,
    build_tree,
    evaluate,
    make_spec,
    or_combine,
    render_tree,
    strategy_acceptance,
    tree_eval,
)
from qamlab.formats.ips_file import load_ips, parse_ips
from qamlab.models.trees import FALSE, TRUE, TreeKind, TreeNode, TreeValue

L1, L2, L3 = TreeValue.loop(1), TreeValue.loop(2), TreeValue.loop(3)

# (name, initial, configs, accepted)
SPECS = [
    ("accept-now", "acc", [("acc", "acc")], True),
    ("reject-now", "rej", [("rej", "rej")], False),
    ("read-accept", "r", [("r", "read", "acc"), ("acc", "acc")], True),
    ("fair-coin", "r", [("r", "read", "acc", "rej"), ("acc", "acc"), ("rej", "rej")], False),
    ("spin", "r", [("r", "read", "r")], False),
    ("spin-then-accept", "r", [("r", "read", "r", "acc"), ("acc", "acc")], True),
    ("spin-then-reject", "r", [("r", "read", "r", "rej"), ("rej", "rej")], False),
    (
        "answer-zero",
        "r",
        [("r", "read", "c"), ("c", "comm-0", "acc", "rej"), ("acc", "acc"), ("rej", "rej")],
        True,
    ),
    ("no-good-answer", "c", [("c", "comm-0", "rej", "rej"), ("rej", "rej")], False),
    (
        "hidden-coin",
        "r",
        [
            ("r", "read", "c", "c2"),
            ("c", "comm-0", "acc", "rej"),
            ("c2", "comm-0", "rej", "acc"),
            ("acc", "acc"),
            ("rej", "rej"),
        ],
        False,
    ),
    (
        "written-coin",
        "r",
        [
            ("r", "read", "c", "d"),
            ("c", "comm-0", "acc", "rej"),
            ("d", "comm-1", "rej", "acc"),
            ("acc", "acc"),
            ("rej", "rej"),
        ],
        True,
    ),
    (
        "two-rounds",
        "c",
        [("c", "comm-0", "d", "rej"), ("d", "comm-1", "rej", "acc"), ("acc", "acc"), ("rej", "rej")],
        True,
    ),
    ("stop-asking", "c", [("c", "comm-0", "c", "acc"), ("acc", "acc")], True),
    ("ask-forever", "c", [("c", "comm-0", "c", "rej"), ("rej", "rej")], False),
    ("answer-loops-back", "r", [("r", "read", "c"), ("c", "comm-0", "r", "rej"), ("rej", "rej")], False),
    (
        "spin-then-ask",
        "r",
        [("r", "read", "r", "c"), ("c", "comm-0", "acc", "rej"), ("acc", "acc"), ("rej", "rej")],
        True,
    ),
    ("spin-then-lose", "r", [("r", "read", "r", "c"), ("c", "comm-0", "rej", "rej"), ("rej", "rej")], False),
    (
        "retry",
        "r",
        [("r", "read", "acc", "c"), ("c", "comm-0", "r", "rej"), ("acc", "acc"), ("rej", "rej")],
        True,
    ),
    (
        "retry-risks-rejection",
        "r",
        [("r", "read", "rej", "c"), ("c", "comm-0", "r", "acc"), ("acc", "acc"), ("rej", "rej")],
        False,
    ),
    (
        "merging-reads",
        "r1",
        [("r1", "read", "r2", "r3"), ("r2", "read", "acc"), ("r3", "read", "acc"), ("acc", "acc")],
        True,
    ),
    (
        "lagging-read",
        "r1",
        [("r1", "read", "r2", "r3"), ("r2", "read", "r3"), ("r3", "read", "acc"), ("acc", "acc")],
        True,
    ),
    (
        "same-question-twice",
        "r",
        [
            ("r", "read", "c1", "c2"),
            ("c1", "comm-0", "acc", "rej"),
            ("c2", "comm-0", "acc", "rej"),
            ("acc", "acc"),
            ("rej", "rej"),
        ],
        True,
    ),
    (
        "delayed-question",
        "r1",
        [
            ("r1", "read", "c", "r2"),
            ("r2", "read", "c2"),
            ("c", "comm-0", "acc", "rej"),
            ("c2", "comm-0", "rej", "acc"),
            ("acc", "acc"),
            ("rej", "rej"),
        ],
        False,
    ),
    (
        "universal-after-answer",
        "c",
        [
            ("c", "comm-0", "r", "rej"),
            ("r", "read", "d1", "d2"),
            ("d1", "comm-1", "acc", "rej"),
            ("d2", "comm-1", "acc", "rej"),
            ("acc", "acc"),
            ("rej", "rej"),
        ],
        True,
    ),
    ("trap-behind-wrong-answer", "c", [("c", "comm-0", "acc", "t"), ("t", "read", "t"), ("acc", "acc")], True),
    (
        "endless-dialogue",
        "c0",
        [("c0", "comm-0", "d", "rej"), ("d", "comm-1", "c0", "rej"), ("rej", "rej")],
        False,
    ),
    (
        "answer-then-coin",
        "c",
        [("c", "comm-0", "r", "rej"), ("r", "read", "acc", "c"), ("acc", "acc"), ("rej", "rej")],
        True,
    ),
    ("ping-pong", "r", [("r", "read", "s"), ("s", "read", "r")], False),
]


def _spec(name: str):
    for spec_name, initial, configs, accepted in SPECS:
        if spec_name == name:
            return make_spec(initial, configs, name=spec_name)
    raise KeyError(name)


# Tables

AND_TABLE = [
    (TRUE, TRUE, TRUE),
    (TRUE, FALSE, FALSE),
    (TRUE, L3, TRUE),
    (FALSE, TRUE, FALSE),
    (FALSE, FALSE, FALSE),
    (FALSE, L3, FALSE),
    (L3, TRUE, TRUE),
    (L3, FALSE, FALSE),
    (L1, L2, L1),
]

OR_TABLE = [
    (TRUE, TRUE, TRUE),
    (TRUE, FALSE, TRUE),
    (TRUE, L2, TRUE),
    (FALSE, TRUE, TRUE),
    (FALSE, FALSE, FALSE),
    (FALSE, L2, L2),
    (L2, TRUE, TRUE),
    (L2, FALSE, L2),
    (L2, L1, L1),
]


@pytest.mark.parametrize("v1,v2,expected", AND_TABLE)
def test_and_table(v1, v2, expected) -> None:
    assert and_combine(v1, v2) == expected


@pytest.mark.parametrize("v1,v2,expected", OR_TABLE)
def test_or_table(v1, v2, expected) -> None:
    assert or_combine(v1, v2) == expected


@pytest.mark.parametrize("combine", [and_combine, or_combine])
def test_combinations_are_associative_and_commutative(combine) -> None:
    values = [TRUE, FALSE, L2]
    for a, b, c in itertools.product(values, repeat=3):
        assert combine(a, combine(b, c)) == combine(combine(a, b), c)
        assert combine(a, b) == combine(b, a)
    for a, b, c in itertools.product([L1, L2, L3], repeat=3):
        expected = TreeValue.loop(min(a.depth, b.depth, c.depth))
        assert combine(a, combine(b, c)) == combine(combine(a, b), c) == expected


def test_value_rendering() -> None:
    assert [str(v) for v in (TRUE, FALSE, L2)] == ["true", "false", "loop[2]"]


# Construction


def test_accepting_initial_configuration() -> None:
    root = build_tree(_spec("accept-now"))
    assert root.kind is TreeKind.ACC
    assert evaluate(root) == TRUE


def test_self_looping_read_gives_a_loop_leaf_at_depth_one() -> None:
    root = build_tree(_spec("spin"))
    assert root.kind is TreeKind.READ_COMM
    (leaf,) = root.children
    assert (leaf.kind, leaf.depth, leaf.loop_depth) == (TreeKind.LOOP, 1, 0)
    # the loop refers back to the root, so the root turns false
    assert evaluate(root) == FALSE


def test_cycle_without_an_accepting_path_is_false() -> None:
    root = build_tree(_spec("ping-pong"))
    assert [n.kind for n in (root, root.children[0], root.children[0].children[0])] == [
        TreeKind.READ_COMM,
        TreeKind.READ_COMM,
        TreeKind.LOOP,
    ]
    assert evaluate(root) == FALSE
    assert root.children[0].value == TreeValue.loop(0)


def test_golden_tree(data_dir) -> None:
    spec = load_ips(data_dir / "retry.ips")
    assert spec.name == "retry"
    root = build_tree(spec)
    assert evaluate(root) == TRUE
    assert render_tree(root) == (data_dir / "retry.tree").read_text(encoding="utf-8")


def test_written_bits_split_the_node() -> None:
    root = build_tree(_spec("written-coin"))
    (split,) = root.children
    assert split.kind is TreeKind.COMM_01
    assert [(c.kind, c.configs) for c in split.children] == [
        (TreeKind.COMM_0, ["c"]),
        (TreeKind.COMM_1, ["d"]),
    ]


def test_answer_children_are_labelled() -> None:
    root = build_tree(_spec("two-rounds"))
    assert root.kind is TreeKind.COMM_0
    assert [(c.answer, c.kind) for c in root.children] == [(0, TreeKind.COMM_1), (1, TreeKind.REJ)]


def test_every_node_has_configurations() -> None:
    for name, *_ in SPECS:
        stack = [build_tree(_spec(name))]
        while stack:
            node = stack.pop()
            assert node.configs
            assert node.kind.leaf == (not node.children)
            stack.extend(node.children)


def test_tighter_cap_truncates() -> None:
    result = tree_eval(_spec("ping-pong"), depth_cap=0)
    assert not result.accepted
    assert result.value == "loop[1]"
    assert result.depth_cap == 0
    assert result.trace[-1].strip().startswith("LOOP {s} d=1 -> 1")


def test_report_of_an_evaluation() -> None:
    result = tree_eval(_spec("retry"))
    assert result.accepted and result.value == "true"
    assert result.depth_cap == 2**4
    assert result.nodes == 5
    assert result.to_report()["accepted"] is True


# Evaluation against the strategy oracle


@pytest.mark.parametrize("name,initial,configs,accepted", SPECS, ids=[s[0] for s in SPECS])
def test_tree_value_matches_the_oracle(name, initial, configs, accepted) -> None:
    spec = make_spec(initial, configs, name=name)
    oracle = strategy_acceptance(spec)
    assert oracle.accepted is accepted
    assert (evaluate(build_tree(spec)) == TRUE) is accepted


def _plain(node: TreeNode) -> bool:
    if node.kind is TreeKind.ACC:
        return True
    if node.kind is TreeKind.REJ:
        return False
    values = [_plain(child) for child in node.children]
    if node.kind in (TreeKind.READ_COMM, TreeKind.COMM_01):
        return all(values)
    groups = [[v for c, v in zip(node.children, values) if c.answer == a] for a in (0, 1)]
    return any(all(g) for g in groups if g)


def test_loop_free_trees_follow_and_or_semantics() -> None:
    checked = 0
    for name, *_ in SPECS:
        root = build_tree(_spec(name))
        if any(leaf.kind is TreeKind.LOOP for leaf in root.leaves()):
            continue
        assert (evaluate(root) == TRUE) == _plain(root)
        checked += 1
    assert checked >= 8


def test_oracle_probabilities() -> None:
    assert strategy_acceptance(_spec("fair-coin")).probability == Fraction(1, 2)
    hidden = strategy_acceptance(_spec("hidden-coin"))
    assert str(hidden.probability) == "1/2"
    assert hidden.strategies_checked == 2
    written = strategy_acceptance(_spec("written-coin"))
    assert written.probability == 1
    assert written.strategy == {"{c}": 0, "{d}": 1}
    assert strategy_acceptance(_spec("retry-risks-rejection")).probability == Fraction(1, 2)


def test_prover_views() -> None:
    assert beliefs(_spec("hidden-coin")) == [frozenset({"c", "c2"})]
    assert beliefs(_spec("delayed-question")) == [frozenset({"c", "c2"})]
    assert beliefs(_spec("spin")) == []


# Where the tree and the oracle part ways


def _has_loop_leaf(root: TreeNode) -> bool:
    return any(leaf.kind is TreeKind.LOOP for leaf in root.leaves())


def test_merged_trap_is_accepted_by_the_tree_but_not_by_any_prover() -> None:
    # b spins forever, yet shares a READ-COMM node with a, which accepts
    spec = make_spec("r", [("r", "read", "a", "b"), ("a", "read", "acc"), ("b", "read", "b"), ("acc", "acc")])
    root = build_tree(spec)
    (merged,) = root.children
    assert merged.configs == ["a", "b"]
    assert [(c.kind, c.loop_depth) for c in merged.children] == [(TreeKind.ACC, None), (TreeKind.LOOP, 1)]
    assert evaluate(root) == TRUE

    oracle = strategy_acceptance(spec)
    assert oracle.probability == Fraction(1, 2)
    assert not oracle.accepted


def test_answer_reused_for_a_new_question_is_accepted_by_the_tree_only() -> None:
    # c1's answer leads to c2, which the tree cuts as a loop; the prover then
    # faces {c2, d} and no single answer suits both
    spec = make_spec(
        "r",
        [
            ("r", "read", "c1", "c2"),
            ("c1", "comm-0", "c2", "rej"),
            ("c2", "comm-0", "d", "rej"),
            ("d", "comm-0", "rej", "acc"),
            ("acc", "acc"),
            ("rej", "rej"),
        ],
    )
    root = build_tree(spec)
    assert _has_loop_leaf(root)
    assert evaluate(root) == TRUE

    oracle = strategy_acceptance(spec)
    assert beliefs(spec) == [frozenset({"d"}), frozenset({"c1", "c2"}), frozenset({"c2", "d"})]
    assert oracle.probability == Fraction(1, 2)
    assert oracle.strategies_checked == 8


def _random_spec(rng: random.Random, acyclic: bool):
    """At most six configurations and three communication configurations."""
    names = [f"x{i}" for i in range(rng.randint(2, 6))]
    configs = []
    comm = 0
    for i, name in enumerate(names):
        targets = names[i + 1 :] if acyclic else names
        if targets:
            cls = rng.choice(["read", "read", "comm-0", "comm-1", "acc", "rej"])
        else:
            cls = rng.choice(["acc", "rej"])
        if cls.startswith("comm") and comm == 3:
            cls = "read"
        if cls == "read":
            configs.append((name, cls, *(rng.choice(targets) for _ in range(rng.randint(1, 2)))))
        elif cls.startswith("comm"):
            comm += 1
            configs.append((name, cls, rng.choice(targets), rng.choice(targets)))
        else:
            configs.append((name, cls))
    return make_spec("x0", configs)


def test_tree_and_oracle_agree_on_trees_without_loops() -> None:
    rng = random.Random(20241017)
    compared = 0
    for trial in range(120):
        spec = _random_spec(rng, acyclic=trial % 2 == 0)
        root = build_tree(spec)
        tree_accepts = evaluate(root) == TRUE
        # LOOP leaves stand for cut copies of configurations; only there may the two differ
        if _has_loop_leaf(root):
            continue
        assert tree_accepts is strategy_acceptance(spec).accepted, render_tree(root)
        compared += 1
    assert compared >= 10


# Files and malformed specs


@pytest.mark.parametrize(
    "text,message",
    [
        ("initial: r\nconfig: r\n", "not of the form"),
        ("initial: r\nconfig: r blue -> acc\n", "unknown configuration class"),
        ("colour: red\n", "unknown key"),
        ("config: acc acc\n", "missing 'initial:'"),
        ("just words\n", "key: value"),
    ],
)
def test_ips_parse_errors(text: str, message: str) -> None:
    with pytest.raises(ParseError, match=message):
        parse_ips(text)


@pytest.mark.parametrize(
    "text,message",
    [
        ("initial: r\nconfig: r read\n", "one or two children"),
        ("initial: c\nconfig: c comm-0 -> c\n", "exactly two children"),
        ("initial: a\nconfig: a acc -> a\n", "cannot have children"),
        ("initial: r\nconfig: r read -> x\n", "unknown configuration"),
        ("initial: q\nconfig: r read -> r\n", "not listed"),
        ("initial: r\nconfig: r read -> r\nconfig: r read -> r\n", "once each"),
    ],
)
def test_inconsistent_specs(text: str, message: str) -> None:
    with pytest.raises(MalformedInstance, match=message):
        parse_ips(text)


def test_make_spec_rejects_unknown_classes() -> None:
    with pytest.raises(MalformedInstance):
        make_spec("r", [("r", "coin", "r")])
