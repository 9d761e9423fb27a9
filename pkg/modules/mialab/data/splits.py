"""
Three-way user split and member partitions.

Users are shuffled and cut into shadow / target / extraction groups.
Shadow and target interactions on items the extraction group never touched
are dropped, and the item catalog is renumbered to the extraction items, so
every item the attack sees has an embedding. User ids keep the id space of
the source dataset.
"""

from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray

from modules.mialab.core.exceptions import DegenerateSplitError, SplitInvariantError
from modules.mialab.core.logging import get_logger
from modules.mialab.data.dataset import RatingDataset

logger = get_logger(__name__)


@dataclass(frozen=True)
class SplitBundle:
    shadow: RatingDataset
    target: RatingDataset
    extraction: RatingDataset
    shadow_members: NDArray[np.int64]
    shadow_nonmembers: NDArray[np.int64]
    target_members: NDArray[np.int64]
    target_nonmembers: NDArray[np.int64]

    def members(self, origin: str) -> NDArray[np.int64]:
        return self.shadow_members if origin == "shadow" else self.target_members

    def nonmembers(self, origin: str) -> NDArray[np.int64]:
        return self.shadow_nonmembers if origin == "shadow" else self.target_nonmembers

    def subset(self, origin: str) -> RatingDataset:
        return self.shadow if origin == "shadow" else self.target

    def member_data(self, origin: str) -> RatingDataset:
        """Interactions of the members: the training data of that side's recommender."""
        return self.subset(origin).restrict_users(self.members(origin))

    def equals(self, other: "SplitBundle") -> bool:
        return (
            self.shadow.equals(other.shadow)
            and self.target.equals(other.target)
            and self.extraction.equals(other.extraction)
            and np.array_equal(self.shadow_members, other.shadow_members)
            and np.array_equal(self.shadow_nonmembers, other.shadow_nonmembers)
            and np.array_equal(self.target_members, other.target_members)
            and np.array_equal(self.target_nonmembers, other.target_nonmembers)
        )


def _halves(users: NDArray[np.int64], rng: np.random.Generator, name: str) -> tuple[NDArray, NDArray]:
    shuffled = rng.permutation(users)
    half = users.size // 2
    members, nonmembers = np.sort(shuffled[:half]), np.sort(shuffled[half:])
    if members.size == 0 or nonmembers.size == 0:
        raise DegenerateSplitError(
            f"{name} split has {users.size} users; need at least 2 for a member partition"
        )
    return members, nonmembers


def make_splits(
    ds: RatingDataset,
    fractions: tuple[float, float, float],
    seed: int,
) -> SplitBundle:
    """
    Partition users into shadow / target / extraction and each of shadow,
    target into members and non-members.

    Raises:
        ValueError: Non-positive fractions or fractions not summing to 1.
        DegenerateSplitError: A group or member partition ends up empty.
    """
    if len(fractions) != 3 or any(f <= 0.0 for f in fractions):
        raise ValueError(f"fractions must be three positive numbers, got {fractions}")
    if abs(sum(fractions) - 1.0) > 1e-9:
        raise ValueError(f"fractions must sum to 1, got {sum(fractions)}")

    rng = np.random.default_rng(seed)
    users = rng.permutation(ds.user_ids())
    n = users.size
    n_shadow = int(round(fractions[0] * n))
    n_target = int(round(fractions[1] * n))
    n_extraction = n - n_shadow - n_target
    if min(n_shadow, n_target, n_extraction) <= 0:
        raise DegenerateSplitError(
            f"{n} users cannot be split into {fractions}: "
            f"shadow={n_shadow}, target={n_target}, extraction={n_extraction}"
        )

    shadow_users = users[:n_shadow]
    target_users = users[n_shadow:n_shadow + n_target]
    extraction_users = users[n_shadow + n_target:]

    extraction_raw = ds.restrict_users(extraction_users)
    catalog = extraction_raw.item_ids()
    item_map = np.full(ds.n_items, -1, dtype=np.int64)
    item_map[catalog] = np.arange(catalog.size)
    item_labels = ds.item_labels[catalog]

    def _renumber(subset: RatingDataset) -> RatingDataset:
        covered = subset.select(item_map[subset.items] >= 0)
        return RatingDataset(
            users=covered.users,
            items=item_map[covered.items],
            ratings=covered.ratings,
            timestamps=covered.timestamps,
            n_users=ds.n_users,
            n_items=int(catalog.size),
            user_labels=ds.user_labels,
            item_labels=item_labels,
        )

    shadow = _renumber(ds.restrict_users(shadow_users))
    target = _renumber(ds.restrict_users(target_users))
    extraction = _renumber(extraction_raw)

    shadow_members, shadow_nonmembers = _halves(shadow.user_ids(), rng, "shadow")
    target_members, target_nonmembers = _halves(target.user_ids(), rng, "target")

    bundle = SplitBundle(
        shadow=shadow,
        target=target,
        extraction=extraction,
        shadow_members=shadow_members,
        shadow_nonmembers=shadow_nonmembers,
        target_members=target_members,
        target_nonmembers=target_nonmembers,
    )
    logger.info(
        "Split created",
        extra={
            "shadow_users": int(shadow.user_ids().size),
            "target_users": int(target.user_ids().size),
            "extraction_users": int(extraction.user_ids().size),
            "catalog_items": int(catalog.size),
            "dropped_interactions": len(ds) - len(shadow) - len(target) - len(extraction),
        },
    )
    return bundle


def find_split_violations(bundle: SplitBundle) -> list[str]:
    """
    Rescan the raw record sets and list every violated bundle invariant.

    Checks: pairwise-disjoint user groups, item containment in extraction,
    member / non-member partitions, shared id ranges.
    """
    problems: list[str] = []
    groups = {
        "shadow": set(bundle.shadow.users.tolist()),
        "target": set(bundle.target.users.tolist()),
        "extraction": set(bundle.extraction.users.tolist()),
    }
    names = list(groups)
    for i, a in enumerate(names):
        for b in names[i + 1:]:
            overlap = groups[a] & groups[b]
            if overlap:
                problems.append(f"{a} and {b} share {len(overlap)} users")

    extraction_items = set(bundle.extraction.items.tolist())
    for name in ("shadow", "target"):
        missing = set(getattr(bundle, name).items.tolist()) - extraction_items
        if missing:
            problems.append(f"{len(missing)} {name} items never occur in extraction")

    for name in ("shadow", "target"):
        members = set(getattr(bundle, f"{name}_members").tolist())
        nonmembers = set(getattr(bundle, f"{name}_nonmembers").tolist())
        if members & nonmembers:
            problems.append(f"{name} members and non-members overlap")
        if members | nonmembers != groups[name]:
            problems.append(f"{name} members and non-members do not cover the {name} users")
        if not members or not nonmembers:
            problems.append(f"{name} member partition has an empty side")

    subsets = (bundle.shadow, bundle.target, bundle.extraction)
    if len({(s.n_users, s.n_items) for s in subsets}) != 1:
        problems.append("subsets disagree on the id space")
    return problems


def verify_split_bundle(bundle: SplitBundle) -> None:
    """
    Raises:
        SplitInvariantError: Listing every violated invariant.
    """
    problems = find_split_violations(bundle)
    if problems:
        raise SplitInvariantError("; ".join(problems))
