"""
Difference vectors and attack datasets.

For a user with interaction history H and recommendation list R,

    f_diff = mean(emb[H]) - mean(emb[R])

Members of a recommender get its top-k recommendations; non-members get
popular items of the recommender's training data (or the randomized
popular pool when the defense is on). Shadow samples carry membership
labels. Target labels are kept apart from the samples and only used to
evaluate the attack.
"""

from dataclasses import dataclass, replace
from typing import Literal

import numpy as np
from numpy.typing import NDArray

from modules.mialab.core.exceptions import ShapeMismatchError
from modules.mialab.core.logging import get_logger
from modules.mialab.data.splits import SplitBundle
from modules.mialab.diffvec.embeddings import ItemEmbeddings
from modules.mialab.recommenders.base import RecommendationSet, RecommenderModel
from modules.mialab.recommenders.ranking import (
    recommend_popular,
    recommend_popular_randomized,
    recommend_top_k_many,
)

logger = get_logger(__name__)

Origin = Literal["shadow", "target"]
ORIGINS: tuple[Origin, Origin] = ("shadow", "target")


def difference_vector(
    emb: ItemEmbeddings, history: NDArray[np.int64], recs: NDArray[np.int64]
) -> NDArray[np.float64]:
    """
    Raises:
        ValueError: Empty history or recommendation set, or an item outside the catalog.
    """
    history = np.asarray(history, dtype=np.int64)
    recs = np.asarray(recs, dtype=np.int64)
    if history.size == 0 or recs.size == 0:
        raise ValueError("history and recommendations must both be non-empty")
    for name, items in (("history", history), ("recommendations", recs)):
        if items.min() < 0 or items.max() >= emb.n_items:
            raise ValueError(f"{name} contain items outside the {emb.n_items}-item catalog")
    return emb.matrix[history].mean(axis=0) - emb.matrix[recs].mean(axis=0)


@dataclass(frozen=True)
class AttackSample:
    user_id: int
    diff: NDArray[np.float64]
    origin: Origin
    label: int | None = None
    truth_score: float = 1.0
    weight: float = 1.0

    def __post_init__(self) -> None:
        if self.origin not in ORIGINS:
            raise ValueError(f"unknown origin {self.origin!r}")
        if self.label not in (None, 0, 1):
            raise ValueError(f"label must be 0, 1 or None, got {self.label!r}")
        if not self.truth_score > 0:
            raise ValueError("truth_score must be positive")
        if self.weight < 0:
            raise ValueError("weight must be non-negative")


@dataclass(frozen=True)
class AttackDataset:
    """
    Attack samples of both recommenders plus what produced them.

    target samples carry label=None; target_labels holds their membership in
    the same order for evaluation.
    """

    shadow: list[AttackSample]
    target: list[AttackSample]
    target_labels: NDArray[np.int64]
    histories: dict[Origin, dict[int, NDArray[np.int64]]]
    recommendations: dict[Origin, list[RecommendationSet]]

    def samples(self, origin: Origin) -> list[AttackSample]:
        return self.shadow if origin == "shadow" else self.target

    def diffs(self, origin: Origin) -> NDArray[np.float64]:
        """n x dim matrix of difference vectors in sample order."""
        return np.vstack([s.diff for s in self.samples(origin)])

    def user_ids(self, origin: Origin) -> NDArray[np.int64]:
        return np.array([s.user_id for s in self.samples(origin)], dtype=np.int64)

    @property
    def shadow_labels(self) -> NDArray[np.int64]:
        return np.array([s.label for s in self.shadow], dtype=np.int64)

    def with_training_state(
        self,
        shadow_scores: NDArray[np.float64],
        shadow_weights: NDArray[np.float64],
        target_scores: NDArray[np.float64],
        target_weights: NDArray[np.float64],
    ) -> "AttackDataset":
        """Copy whose samples carry the truth-level scores and weights a DL-MIA run ended with."""
        return replace(
            self,
            shadow=with_scores(self.shadow, shadow_scores, shadow_weights),
            target=with_scores(self.target, target_scores, target_weights),
        )


def with_scores(
    samples: list[AttackSample], scores: NDArray[np.float64], weights: NDArray[np.float64]
) -> list[AttackSample]:
    if not len(samples) == len(scores) == len(weights):
        raise ShapeMismatchError(
            f"{len(samples)} samples, {len(scores)} scores and {len(weights)} weights"
        )
    return [
        replace(sample, truth_score=float(p), weight=float(w))
        for sample, p, w in zip(samples, scores, weights)
    ]


def _origin_samples(
    origin: Origin,
    bundle: SplitBundle,
    emb: ItemEmbeddings,
    model: RecommenderModel,
    k: int,
    defense: bool,
    pool_multiplier: int,
    max_pool_fraction: float,
    rng: np.random.Generator,
) -> tuple[list[AttackSample], NDArray[np.int64], dict[int, NDArray[np.int64]], list[RecommendationSet]]:
    if emb.n_items != bundle.subset(origin).n_items:
        raise ShapeMismatchError(
            f"{origin} catalog has {bundle.subset(origin).n_items} items, embeddings {emb.n_items}"
        )
    histories = bundle.subset(origin).histories()
    members = bundle.members(origin)
    recs: dict[int, RecommendationSet] = {
        rec.user_id: rec for rec in recommend_top_k_many(model, members, k)
    }
    for user in bundle.nonmembers(origin).tolist():
        if defense:
            recs[user] = recommend_popular_randomized(
                model.train,
                histories[user],
                k,
                pool_multiplier,
                rng,
                max_pool_fraction=max_pool_fraction,
                user_id=user,
            )
        else:
            recs[user] = recommend_popular(model.train, histories[user], k, user_id=user)

    member_set = set(members.tolist())
    samples: list[AttackSample] = []
    labels: list[int] = []
    for user in sorted(recs):
        label = int(user in member_set)
        labels.append(label)
        samples.append(
            AttackSample(
                user_id=user,
                diff=difference_vector(emb, histories[user], recs[user].items),
                origin=origin,
                label=label if origin == "shadow" else None,
            )
        )
    ordered_recs = [recs[user] for user in sorted(recs)]
    return samples, np.array(labels, dtype=np.int64), histories, ordered_recs


def build_attack_dataset(
    bundle: SplitBundle,
    emb: ItemEmbeddings,
    shadow_model: RecommenderModel,
    target_model: RecommenderModel,
    k: int,
    defense: bool,
    rng: np.random.Generator,
    *,
    pool_multiplier: int = 5,
    max_pool_fraction: float = 1.0,
    target_bundle: SplitBundle | None = None,
    target_embeddings: ItemEmbeddings | None = None,
) -> AttackDataset:
    """
    Build shadow and target attack samples.

    When the target recommender lives on another dataset, pass that
    dataset's bundle and embeddings as target_bundle / target_embeddings.

    Raises:
        InsufficientCatalogError: Fewer than k candidate items for some user.
    """
    shadow, _, shadow_histories, shadow_recs = _origin_samples(
        "shadow", bundle, emb, shadow_model, k, defense, pool_multiplier, max_pool_fraction, rng
    )
    target, target_labels, target_histories, target_recs = _origin_samples(
        "target",
        bundle if target_bundle is None else target_bundle,
        emb if target_embeddings is None else target_embeddings,
        target_model,
        k,
        defense,
        pool_multiplier,
        max_pool_fraction,
        rng,
    )
    logger.info(
        "Attack dataset built",
        extra={
            "shadow_samples": len(shadow),
            "target_samples": len(target),
            "dim": emb.dim,
            "k": k,
            "defense": defense,
        },
    )
    return AttackDataset(
        shadow=shadow,
        target=target,
        target_labels=target_labels,
        histories={"shadow": shadow_histories, "target": target_histories},
        recommendations={"shadow": shadow_recs, "target": target_recs},
    )
