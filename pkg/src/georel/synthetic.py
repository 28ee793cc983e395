"""Small generated datasets with known structure, used by the acceptance runs and the CLI demos."""

import numpy as np

from .data import ElAxiom, Triple
from .poincare import HexGraph


def planted_kg(n_entities=200, branching=3, holdout=0.1, seed=0):
    """A KG with one symmetric relation and one tree-shaped hierarchical relation.

    The symmetric relation pairs the entities up (``a sym b`` and ``b sym a``);
    ``part_of`` links entity i to its parent ``(i - 1) // branching``.  For a
    ``holdout`` fraction of the symmetric pairs one direction goes to the
    test split while its counterpart stays in training.  Returns
    ``(train, test)`` lists of triples.
    """
    rng = np.random.default_rng(seed)
    names = [f"e{i:03d}" for i in range(n_entities)]
    perm = rng.permutation(n_entities)
    pairs = [(names[perm[i]], names[perm[i + 1]]) for i in range(0, n_entities - 1, 2)]
    n_test = int(round(holdout * len(pairs)))
    test_pairs = set(rng.choice(len(pairs), n_test, replace=False).tolist())
    train, test = [], []
    for i, (a, b) in enumerate(pairs):
        fwd, back = Triple(a, "sym", b), Triple(b, "sym", a)
        if i in test_pairs:
            flip = rng.random() < 0.5
            train.append(back if flip else fwd)
            test.append(fwd if flip else back)
        else:
            train += [fwd, back]
    for i in range(1, n_entities):
        train.append(Triple(names[i], "part_of", names[(i - 1) // branching]))
    return train, test


def family_kb():
    """The 16-axiom family-domain ontology (12 TBox axioms, 4 concept assertions)."""
    ax = ElAxiom
    return [
        ax("nf1", c="Male", d="Person"),
        ax("nf1", c="Female", d="Person"),
        ax("nf1", c="Father", d="Male"),
        ax("nf1", c="Mother", d="Female"),
        ax("nf1", c="Father", d="Parent"),
        ax("nf1", c="Mother", d="Parent"),
        ax("nf2_bot", c="Female", d="Male"),
        ax("nf2", c="Female", d="Parent", e="Mother"),
        ax("nf2", c="Male", d="Parent", e="Father"),
        ax("nf4", r="hasChild", c="Person", d="Parent"),
        ax("nf1", c="Parent", d="Person"),
        ax("nf3", c="Parent", r="hasChild", d="Person"),
        ax("concept", c="Father", a="Alex"),
        ax("concept", c="Father", a="Bob"),
        ax("concept", c="Mother", a="Marie"),
        ax("concept", c="Mother", a="Alice"),
    ]


def family_hex():
    """Labels person, parent, mother, father, male, female with their implications and one exclusion."""
    hierarchy = [
        ("parent", "person"),
        ("male", "person"),
        ("female", "person"),
        ("mother", "parent"),
        ("mother", "female"),
        ("father", "parent"),
        ("father", "male"),
    ]
    return HexGraph.from_edges(hierarchy, [("male", "female")])


def ball_grid(n_radii=40, n_angles=25, max_radius=0.999):
    """Deterministic polar grid of ``n_radii * n_angles`` points in the open unit disc."""
    radii = (np.arange(1, n_radii + 1) / n_radii) * max_radius
    angles = np.arange(n_angles) * (2 * np.pi / n_angles)
    r, a = np.meshgrid(radii, angles, indexing="ij")
    # offset alternate rings so the grid does not line up with the axes
    a = a + (np.arange(n_radii)[:, None] % 2) * (np.pi / n_angles)
    return np.stack([r * np.cos(a), r * np.sin(a)], axis=-1).reshape(-1, 2)
