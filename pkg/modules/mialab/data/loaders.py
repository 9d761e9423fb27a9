"""
Dataset loaders.

Both formats end in the same RatingDataset: ids remapped densely in sorted
order of the original identifiers.

    MovieLens-1M   UserID::MovieID::Rating::Timestamp
    Amazon CSV     user,item,rating,timestamp   (optional header line)

Errors carry the 1-based line number of the offending record.
"""

import re
from pathlib import Path

import numpy as np
import pandas as pd

from modules.mialab.core.exceptions import DatasetParseError, DuplicatePairError
from modules.mialab.core.logging import get_logger
from modules.mialab.data.dataset import RatingDataset

logger = get_logger(__name__)

_RAW_COLUMNS = ["user", "item", "rating", "timestamp"]
_LINE_PATTERN = re.compile(r"line (\d+)")


def _read(path: Path, sep: str) -> pd.DataFrame | None:
    if not path.exists():
        raise FileNotFoundError(f"Dataset file not found: {path}")
    try:
        return pd.read_csv(
            path,
            sep=sep,
            engine="python",
            header=None,
            names=_RAW_COLUMNS,
            dtype=str,
            skip_blank_lines=False,
            keep_default_na=False,
        )
    except pd.errors.EmptyDataError:
        return None
    except pd.errors.ParserError as e:
        match = _LINE_PATTERN.search(str(e))
        line = int(match.group(1)) if match else None
        raise DatasetParseError(f"{path}: wrong number of fields", line=line) from e


def _to_dataset(
    frame: pd.DataFrame, path: Path, first_line: int, numeric_ids: bool
) -> RatingDataset:
    """Validate raw string columns and build a dataset. first_line is the file line of row 0."""
    frame = frame.fillna("").astype(str).apply(lambda col: col.str.strip())

    ratings = pd.to_numeric(frame["rating"], errors="coerce")
    timestamps = pd.to_numeric(frame["timestamp"], errors="coerce")
    bad = ratings.isna() | timestamps.isna() | (frame == "").any(axis=1)
    if numeric_ids:
        users = pd.to_numeric(frame["user"], errors="coerce")
        items = pd.to_numeric(frame["item"], errors="coerce")
        bad |= users.isna() | items.isna()
    else:
        users, items = frame["user"], frame["item"]
    if bad.any():
        row = int(np.flatnonzero(bad.to_numpy())[0])
        raise DatasetParseError(f"{path}: unparseable record", line=first_line + row)

    out_of_range = (ratings < 1.0) | (ratings > 5.0)
    if out_of_range.any():
        row = int(np.flatnonzero(out_of_range.to_numpy())[0])
        raise DatasetParseError(
            f"{path}: rating {ratings.iloc[row]} outside [1, 5]", line=first_line + row
        )

    duplicated = pd.DataFrame({"u": users, "i": items}).duplicated(keep="first")
    if duplicated.any():
        row = int(np.flatnonzero(duplicated.to_numpy())[0])
        raise DuplicatePairError(
            f"{path}: pair ({users.iloc[row]}, {items.iloc[row]}) already seen",
            line=first_line + row,
        )

    user_values = users.to_numpy(dtype=np.int64) if numeric_ids else users.to_numpy(dtype=str)
    item_values = items.to_numpy(dtype=np.int64) if numeric_ids else items.to_numpy(dtype=str)
    dataset = RatingDataset.from_raw(
        user_values,
        item_values,
        ratings.to_numpy(dtype=np.float64),
        timestamps.to_numpy(dtype=np.int64),
    )
    logger.info(
        "Dataset loaded",
        extra={
            "path": str(path),
            "users": dataset.n_users,
            "items": dataset.n_items,
            "interactions": len(dataset),
        },
    )
    return dataset


def load_movielens(path: str | Path) -> RatingDataset:
    """
    Parse a MovieLens `::`-delimited ratings file.

    Raises:
        FileNotFoundError: Missing file.
        DatasetParseError: Malformed record, with its line number.
        DuplicatePairError: A (user, item) pair seen twice, naming the line.
    """
    path = Path(path)
    frame = _read(path, sep="::")
    if frame is None or frame.empty:
        return RatingDataset.empty()
    return _to_dataset(frame, path, first_line=1, numeric_ids=True)


def load_amazon(path: str | Path) -> RatingDataset:
    """
    Parse an Amazon ratings CSV `user,item,rating,timestamp`.

    User and item identifiers are kept as strings in the label maps.
    """
    path = Path(path)
    frame = _read(path, sep=",")
    if frame is None or frame.empty:
        return RatingDataset.empty()
    first_line = 1
    head = [str(v).strip().lower() for v in frame.iloc[0].tolist()]
    if head == _RAW_COLUMNS:
        frame = frame.iloc[1:].reset_index(drop=True)
        first_line = 2
        if frame.empty:
            return RatingDataset.empty()
    return _to_dataset(frame, path, first_line=first_line, numeric_ids=False)
