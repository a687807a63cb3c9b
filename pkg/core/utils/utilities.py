import logging
import os
from typing import Iterable, Sequence

import numpy as np
import pandas as pd

from core.config import config


def values_to_blob(values: Sequence[float]) -> bytes:
    """Convert chromosome values to their exact float64 bit pattern (cache key)"""
    return np.asarray(values, dtype=np.float64).tobytes()


def repetition_rng(seed_base: int, repetition: int) -> np.random.Generator:
    """Independent random stream owned by one simulation repetition"""
    return np.random.default_rng(np.random.SeedSequence([seed_base, repetition]))


def master_rng(seed: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed))


def ensure_directory(path: str) -> str:
    os.makedirs(path, exist_ok=True)
    return path


def write_frame(frame: pd.DataFrame, path: str):
    """Write a table with a header row, '.' decimals and newline-terminated rows"""
    frame.to_csv(path, index=False, lineterminator="\n", float_format="%.17g")


def read_frame(path: str, required_columns: Iterable[str]) -> pd.DataFrame:
    if not os.path.exists(path):
        raise FileNotFoundError(f"File not found: {path}")
    frame = pd.read_csv(path, float_precision="round_trip")
    missing = [c for c in required_columns if c not in frame.columns]
    if missing:
        raise ValueError(f"{path}: missing column(s) {missing}")
    return frame


def setup_logging(verbose: bool = False):
    logging.basicConfig(level=logging.DEBUG if verbose else logging.INFO, format=config.LOG_FORMAT, force=True)
