"""Size-class classification: CART trees, a bagged forest, and the hybrid rule.

Split quality is compared in exact integer arithmetic, so ties are real ties
and are broken by (lowest feature index, lowest threshold) on every platform.
Each tree draws its bootstrap sample and split candidates from its own
SplitMix64 stream seeded with ``seed + tree_index``, which makes parallel and
sequential training produce the same model.
"""
from __future__ import annotations

import enum
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Mapping, Sequence

from .errors import InsufficientData, InvalidParams, ModelFormatError, UnknownFootprintId
from .features import FEATURE_ORDER, GeometryFeatures, extract_features
from .geo_core import Footprint
from .rng import MASK64, SplitMix64

N_CLASSES = 3
N_FEATURES = len(FEATURE_ORDER)


class SizeClass(enum.IntEnum):
    DETACHED_SINGLE = 0
    ROW_HOUSE = 1
    PERIMETER_BLOCK = 2

    @property
    def label(self) -> str:
        return _NAMES[self]

    @classmethod
    def parse(cls, text) -> "SizeClass":
        if isinstance(text, SizeClass):
            return text
        key = str(text).strip()
        if key in _BY_NAME:
            return _BY_NAME[key]
        if key in ("0", "1", "2"):
            return cls(int(key))
        raise ValueError(f"unknown size class {text!r}")


_NAMES = {
    SizeClass.DETACHED_SINGLE: "DetachedSingle",
    SizeClass.ROW_HOUSE: "RowHouse",
    SizeClass.PERIMETER_BLOCK: "PerimeterBlock",
}
_BY_NAME = {v: k for k, v in _NAMES.items()}


@dataclass(frozen=True)
class ForestParams:
    n_trees: int = 100
    max_depth: int = 12
    min_samples_leaf: int = 2
    feature_subsample: int = 2
    bootstrap: bool = True
    seed: int = 42

    def __post_init__(self):
        if self.n_trees < 1:
            raise InvalidParams("n_trees must be >= 1")
        if self.max_depth < 0:
            raise InvalidParams("max_depth must be >= 0")
        if self.min_samples_leaf < 1:
            raise InvalidParams("min_samples_leaf must be >= 1")
        if not 1 <= self.feature_subsample <= N_FEATURES:
            raise InvalidParams(f"feature_subsample must be in [1, {N_FEATURES}]")
        if not 0 <= self.seed <= MASK64:
            raise InvalidParams("seed must be an unsigned 64-bit integer")


@dataclass
class Split:
    feature: int
    threshold: float
    left: int = -1
    right: int = -1


@dataclass
class Leaf:
    counts: tuple[int, int, int]

    @property
    def prediction(self) -> int:
        return max(range(N_CLASSES), key=lambda c: (self.counts[c], -c))


@dataclass
class DecisionTree:
    """Nodes in pre-order; node 0 is the root."""

    nodes: list[Split | Leaf]
    max_depth: int
    min_samples_leaf: int

    def leaf_for(self, x: Sequence[float]) -> int:
        i = 0
        node = self.nodes[0]
        while isinstance(node, Split):
            i = node.left if x[node.feature] <= node.threshold else node.right
            node = self.nodes[i]
        return i

    def predict(self, x: Sequence[float]) -> int:
        return self.nodes[self.leaf_for(x)].prediction


@dataclass
class ForestModel:
    trees: list[DecisionTree]
    params: ForestParams
    feature_order: tuple[str, ...] = FEATURE_ORDER
    oob_accuracy: float | None = None
    # per tree: training row indices that reached each node, pre-order
    partitions: list[list[tuple[int, ...]]] | None = field(default=None, compare=False, repr=False)

    @property
    def n_trees(self) -> int:
        return len(self.trees)

    @property
    def seed(self) -> int:
        return self.params.seed


def gini_impurity(counts: Sequence[int]) -> float:
    total = sum(counts)
    if total == 0:
        return 0.0
    return 1.0 - sum((c / total) ** 2 for c in counts)


def best_split(X: Sequence[Sequence[float]], y: Sequence[int], indices: Sequence[int],
               candidate_features: Sequence[int], min_samples_leaf: int = 1) -> tuple[int, float] | None:
    """Best ``(feature, threshold)`` by weighted child Gini, or ``None`` if no split helps.

    Samples with ``x[feature] <= threshold`` go left. Thresholds are
    midpoints between consecutive distinct values.
    """
    n = len(indices)
    parent = [0] * N_CLASSES
    for i in indices:
        parent[y[i]] += 1
    if n < 2 or max(parent) == n:
        return None
    parent_sq = sum(c * c for c in parent)
    # maximize S = A/nL + B/nR with A, B the squared class counts per side;
    # kept as the fraction (num, den) and compared by cross-multiplication
    best_num, best_den = parent_sq, n
    best: tuple[int, float] | None = None
    for f in sorted(candidate_features):
        order = sorted(indices, key=lambda i: X[i][f])
        left = [0] * N_CLASSES
        right = list(parent)
        a, b = 0, parent_sq
        for pos in range(n - 1):
            c = y[order[pos]]
            a += 2 * left[c] + 1
            b -= 2 * right[c] - 1
            left[c] += 1
            right[c] -= 1
            v, w = X[order[pos]][f], X[order[pos + 1]][f]
            if v == w:
                continue
            n_left = pos + 1
            n_right = n - n_left
            if n_left < min_samples_leaf or n_right < min_samples_leaf:
                continue
            num = a * n_right + b * n_left
            den = n_left * n_right
            if num * best_den > best_num * den:
                best_num, best_den = num, den
                threshold = v + (w - v) / 2
                if not v <= threshold < w:
                    threshold = v
                best = (f, threshold)
    return best


def _build_tree(X, y, sample: list[int], params: ForestParams, rng: SplitMix64):
    nodes: list[Split | Leaf] = []
    parts: list[tuple[int, ...]] = []

    def grow(indices: list[int], depth: int) -> int:
        counts = [0] * N_CLASSES
        for i in indices:
            counts[y[i]] += 1
        pos = len(nodes)
        parts.append(tuple(sorted(indices)))
        split = None
        if depth < params.max_depth and len(indices) >= 2 * params.min_samples_leaf and max(counts) < len(indices):
            feats = rng.sample_without_replacement(N_FEATURES, params.feature_subsample)
            split = best_split(X, y, indices, feats, params.min_samples_leaf)
        if split is None:
            nodes.append(Leaf(tuple(counts)))
            return pos
        f, t = split
        node = Split(f, t)
        nodes.append(node)
        node.left = grow([i for i in indices if X[i][f] <= t], depth + 1)
        node.right = grow([i for i in indices if X[i][f] > t], depth + 1)
        return pos

    grow(sample, 0)
    return DecisionTree(nodes, params.max_depth, params.min_samples_leaf), parts


def _as_vector(f) -> tuple[float, ...]:
    if isinstance(f, GeometryFeatures):
        return f.as_vector()
    v = tuple(float(x) for x in f)
    if len(v) != N_FEATURES:
        raise InvalidParams(f"feature vector must have {N_FEATURES} entries, got {len(v)}")
    return v


def train_forest(features: Sequence[GeometryFeatures | Sequence[float]], labels: Sequence[SizeClass | int],
                 params: ForestParams = ForestParams(), threads: int = 1) -> ForestModel:
    if len(features) != len(labels):
        raise InsufficientData(f"{len(features)} feature rows but {len(labels)} labels")
    if len(features) < 2:
        raise InsufficientData(f"need at least 2 training samples, got {len(features)}")
    X = [_as_vector(f) for f in features]
    for v in X:
        if not all(math.isfinite(x) for x in v):
            raise InvalidParams("feature values must be finite")
    y = [int(SizeClass(int(c))) for c in labels]
    n = len(X)

    def one(t: int):
        rng = SplitMix64((params.seed + t) & MASK64)
        if params.bootstrap:
            sample = [rng.below(n) for _ in range(n)]
        else:
            sample = list(range(n))
        tree, parts = _build_tree(X, y, sample, params, rng)
        return tree, parts, sample

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            built = list(pool.map(one, range(params.n_trees)))
    else:
        built = [one(t) for t in range(params.n_trees)]
    trees = [b[0] for b in built]

    oob = None
    if params.bootstrap:
        votes = [[0] * N_CLASSES for _ in range(n)]
        for tree, _, sample in built:
            in_bag = set(sample)
            for i in range(n):
                if i not in in_bag:
                    votes[i][tree.predict(X[i])] += 1
        scored = [(i, v) for i, v in enumerate(votes) if sum(v)]
        if scored:
            correct = sum(1 for i, v in scored if _vote(v) == y[i])
            oob = correct / len(scored)
    return ForestModel(trees, params, FEATURE_ORDER, oob, [b[1] for b in built])


def _vote(votes: Sequence[int]) -> int:
    return max(range(N_CLASSES), key=lambda c: (votes[c], -c))


def predict(model: ForestModel, f: GeometryFeatures | Sequence[float]) -> SizeClass:
    """Majority vote; ties go to the lowest class index."""
    x = _as_vector(f)
    votes = [0] * N_CLASSES
    for tree in model.trees:
        votes[tree.predict(x)] += 1
    return SizeClass(_vote(votes))


def classify_hybrid(fps: Sequence[Footprint], model: ForestModel | None,
                    external: Mapping[int, SizeClass]) -> dict[int, SizeClass]:
    """External labels win; the forest only sees footprints without one."""
    ids = {f.id for f in fps}
    unknown = sorted(set(external) - ids)
    if unknown:
        raise UnknownFootprintId(f"external labels reference unknown footprint ids {unknown[:10]}")
    out: dict[int, SizeClass] = {}
    for fp in sorted(fps, key=lambda f: f.id):
        if fp.id in external:
            out[fp.id] = SizeClass.parse(external[fp.id])
            continue
        if model is None:
            raise InvalidParams(f"footprint {fp.id} has no external label and no model was given")
        out[fp.id] = predict(model, extract_features(fp))
    return out


# -- model files ----------------------------------------------------------------

def save_model(model: ForestModel) -> str:
    p = model.params
    lines = [
        "forest v1",
        f"n_trees {model.n_trees}",
        f"seed {p.seed}",
        "feature_order " + " ".join(model.feature_order),
        f"feature_subsample {p.feature_subsample}",
        f"bootstrap {'true' if p.bootstrap else 'false'}",
        f"max_depth {p.max_depth}",
        f"min_samples_leaf {p.min_samples_leaf}",
        "oob_accuracy " + ("none" if model.oob_accuracy is None else format(model.oob_accuracy, ".17g")),
    ]
    for t, tree in enumerate(model.trees):
        lines.append(f"tree {t} {len(tree.nodes)}")
        for node in tree.nodes:
            if isinstance(node, Split):
                lines.append(f"N {node.feature} {node.threshold:.17g}")
            else:
                lines.append("L " + " ".join(str(c) for c in node.counts))
    lines.append("end")
    return "\n".join(lines) + "\n"


class _Lines:
    def __init__(self, text: str):
        self.lines = text.split("\n")
        if self.lines and self.lines[-1] == "":
            self.lines.pop()
        self.pos = 0

    def next(self, key: str | None = None) -> list[str]:
        if self.pos >= len(self.lines):
            raise ModelFormatError("unexpected end of model file", self.pos + 1)
        parts = self.lines[self.pos].split(" ")
        self.pos += 1
        if key is not None and parts[0] != key:
            raise ModelFormatError(f"expected {key!r} line, got {parts[0]!r}", self.pos)
        return parts

    def fail(self, msg: str):
        raise ModelFormatError(msg, self.pos)


def _int(lines: _Lines, s: str, lo: int = 0) -> int:
    if not s.isdigit() or int(s) < lo:
        lines.fail(f"expected an integer >= {lo}, got {s!r}")
    return int(s)


def load_model(text: str | bytes) -> ForestModel:
    if isinstance(text, bytes):
        try:
            text = text.decode("utf-8")
        except UnicodeDecodeError:
            raise ModelFormatError("model file is not UTF-8", 1) from None
    ls = _Lines(text)
    if ls.next() != ["forest", "v1"]:
        ls.fail("not a 'forest v1' model file")

    def single(key):
        parts = ls.next(key)
        if len(parts) != 2:
            ls.fail(f"{key} takes one value")
        return parts[1]

    n_trees = _int(ls, single("n_trees"), 1)
    seed = _int(ls, single("seed"))
    order = tuple(ls.next("feature_order")[1:])
    if order != FEATURE_ORDER:
        ls.fail(f"unsupported feature_order {' '.join(order)!r}")
    subsample = _int(ls, single("feature_subsample"), 1)
    boot = single("bootstrap")
    if boot not in ("true", "false"):
        ls.fail("bootstrap must be true or false")
    max_depth = _int(ls, single("max_depth"))
    min_leaf = _int(ls, single("min_samples_leaf"), 1)
    raw_oob = single("oob_accuracy")
    try:
        oob = None if raw_oob == "none" else float(raw_oob)
    except ValueError:
        ls.fail(f"bad oob_accuracy {raw_oob!r}")
    try:
        params = ForestParams(n_trees, max_depth, min_leaf, subsample, boot == "true", seed)
    except InvalidParams as exc:
        ls.fail(exc.message)
    trees = []
    for t in range(n_trees):
        head = ls.next("tree")
        if len(head) != 3 or head[1] != str(t):
            ls.fail(f"expected 'tree {t} <node_count>'")
        count = _int(ls, head[2], 1)
        flat = []
        for _ in range(count):
            parts = ls.next()
            if parts[0] == "N" and len(parts) == 3:
                feat = _int(ls, parts[1])
                if feat >= N_FEATURES:
                    ls.fail(f"feature index {feat} out of range")
                try:
                    thr = float(parts[2])
                except ValueError:
                    ls.fail(f"bad threshold {parts[2]!r}")
                if not math.isfinite(thr):
                    ls.fail("threshold must be finite")
                flat.append(Split(feat, thr))
            elif parts[0] == "L" and len(parts) == 4:
                counts = tuple(_int(ls, c) for c in parts[1:])
                if sum(counts) == 0:
                    ls.fail("leaf with no samples")
                flat.append(Leaf(counts))
            else:
                ls.fail("expected 'N <feature> <threshold>' or 'L <c0> <c1> <c2>'")
        trees.append(DecisionTree(_link(flat, ls), max_depth, min_leaf))
    if ls.next() != ["end"]:
        ls.fail("expected 'end'")
    if ls.pos != len(ls.lines):
        ls.fail("trailing content after 'end'")
    return ForestModel(trees, params, FEATURE_ORDER, oob)


def _link(flat: list, ls: _Lines) -> list:
    pos = 0

    def walk() -> int:
        nonlocal pos
        if pos >= len(flat):
            ls.fail("tree node list ends before the tree is complete")
        here = pos
        pos += 1
        node = flat[here]
        if isinstance(node, Split):
            node.left = walk()
            node.right = walk()
        return here

    walk()
    if pos != len(flat):
        ls.fail("tree node list has unreachable nodes")
    return flat
