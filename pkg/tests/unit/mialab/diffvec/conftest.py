"""Fixtures shared by difference-vector tests."""

import pytest

from modules.mialab.data.splits import make_splits
from modules.mialab.data.synthetic import generate_synthetic
from modules.mialab.diffvec.embeddings import fit_item_embeddings
from modules.mialab.recommenders.itembase import train_itembase
from modules.mialab.recommenders.lfm import train_lfm


@pytest.fixture(scope="module")
def small_pipeline():
    """50 synthetic users split 20/20/10: ItemBase shadow, LFM target, 4-dim embeddings."""
    ds = generate_synthetic(50, 30, 3, 0.5, seed=3)
    bundle = make_splits(ds, (0.4, 0.4, 0.2), seed=1)
    emb = fit_item_embeddings(bundle.extraction, 4, 0.01, 0.01, 20, seed=0)
    shadow_model = train_itembase(bundle.member_data("shadow"))
    target_model = train_lfm(bundle.member_data("target"), 4, 0.01, 0.01, 10, seed=0)
    return bundle, emb, shadow_model, target_model
