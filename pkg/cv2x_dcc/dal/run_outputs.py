import logging
import re
from pathlib import Path

import pandas as pd

from cv2x_dcc.schemas.run_config import RunConfig, dump_config

logger = logging.getLogger(__name__)


def slugify(label: str) -> str:
    slug = re.sub(r"[^A-Za-z0-9]+", "_", label).strip("_").lower()
    return slug or "run"


class RunOutputDAL:
    """Data Access Layer for run artefacts on disk.

    Layout under `root`:
        summary.csv                     seed-averaged, one row per mechanism
        <mechanism>/config.yaml         resolved configuration echo
        <mechanism>/summary.csv         one row per seed
        <mechanism>/seed_<n>/*.csv      per-event tables of one seed
    """

    def __init__(self, root: str | Path):
        self.root = Path(root)

    def ensure_root(self) -> Path:
        self.root.mkdir(parents=True, exist_ok=True)
        return self.root

    def mechanism_dir(self, label: str) -> Path:
        return self.root / slugify(label)

    def seed_dir(self, label: str, seed: int) -> Path:
        return self.mechanism_dir(label) / f"seed_{seed}"

    def write_frame(self, path: Path, frame: pd.DataFrame) -> Path:
        path.parent.mkdir(parents=True, exist_ok=True)
        frame.to_csv(path, index=False, lineterminator="\n")
        return path

    def write_config(self, config: RunConfig) -> Path:
        directory = self.mechanism_dir(config.label)
        directory.mkdir(parents=True, exist_ok=True)
        path = directory / "config.yaml"
        path.write_text(dump_config(config), encoding="utf-8")
        return path

    def write_seed_tables(
        self, label: str, seed: int, tables: dict[str, pd.DataFrame]
    ) -> Path:
        directory = self.seed_dir(label, seed)
        for name, frame in tables.items():
            self.write_frame(directory / f"{name}.csv", frame)
        logger.debug("Wrote %d tables to %s", len(tables), directory)
        return directory

    def write_mechanism_summary(self, label: str, rows: list[dict]) -> Path:
        frame = pd.DataFrame(rows).sort_values("seed", kind="stable")
        return self.write_frame(self.mechanism_dir(label) / "summary.csv", frame)

    def write_summary(self, frame: pd.DataFrame) -> Path:
        return self.write_frame(self.root / "summary.csv", frame)

    def read_table(self, label: str, seed: int, name: str) -> pd.DataFrame:
        return pd.read_csv(self.seed_dir(label, seed) / f"{name}.csv")

    def read_seed_summaries(self, labels: list[str]) -> pd.DataFrame:
        """Per-seed summary rows of the given mechanisms, in label order."""
        frames = [
            pd.read_csv(self.mechanism_dir(label) / "summary.csv") for label in labels
        ]
        if not frames:
            return pd.DataFrame()
        return pd.concat(frames, ignore_index=True)
