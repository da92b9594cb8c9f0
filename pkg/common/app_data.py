
import json

import logging

import math

import os

import platform

from dataclasses import dataclass, asdict, field

from pathlib import Path

from typing import Optional

logger = logging.getLogger(__name__)

SEED_ENV = "FASTMEL_SEED"

@dataclass

class AppData:

    name: str = "FastMel"

    version: str = "v1.00"

    seed: int = 0

    sample_rate: int = 22050

    n_fft: int = 1024

    hop: int = 256

    n_mels: int = 80

    fmin: float = 0.0

    fmax: Optional[float] = None

    mfcc_coeffs: int = 13

    mel_floor: float = 1e-5

    emcd_weights: tuple[float, float, float] = (1.0, 1.0, math.sqrt(2.0))

    t_text: int = 40

    t_mel: int = 200

    bench_repeats: int = 5

    bench_warmup: int = 1

    jobs: int = 1

    app_path: str = field(default="", init=False)

    config_path: str = field(default="", init=False)

    res_path: str = field(default="", init=False)

    user_path: str = field(default="", init=False)

    _user_path_win: str = field(default="", init=False, repr=False)

    _user_path_linux: str = field(default="", init=False, repr=False)

    def __post_init__(self):

        self.app_path = str(Path(__file__).resolve().parents[1])

        self.config_path = str(Path(self.app_path) / "config")

        self.res_path = str(Path(self.app_path) / "res")

        self._user_path_win = str(
            Path.home() / "AppData" / "Local" / self.name / self.version
        )

        self._user_path_linux = str(
            Path.home() / ".local" / "share" / self.name / self.version
        )

    @property

    def title(self) -> str:

        return f"{self.name}-{self.version}"

    @property

    def settings_file(self) -> Path:

        return Path(self.user_path) / "settings.json"

    def init(self) -> None:

        self._resolve_user_path()

        self.load()

        self._apply_env()

    def _resolve_user_path(self) -> None:

        system = platform.system()

        if system == "Windows":

            self.user_path = self._user_path_win

        elif system == "Linux":

            self.user_path = self._user_path_linux

        else:

            self.user_path = str(Path.home() / f".{self.name}" / self.version)

    def _apply_env(self) -> None:

        value = os.environ.get(SEED_ENV)

        if value is None:

            return

        try:

            self.seed = int(value)

        except ValueError:

            logger.warning("ignoring %s=%r: not an integer", SEED_ENV, value)

    def save(self) -> None:

        file_path = self.settings_file

        try:

            file_path.parent.mkdir(parents=True, exist_ok=True)

            with open(file_path, "w", encoding="utf-8") as f:

                json.dump(self.resolved(), f, ensure_ascii=False, indent=4)

        except OSError as e:

            logger.error("error saving settings: %s", e)

    def load(self) -> None:

        """Overwrite whitelisted fields from settings.json."""

        file_path = self.settings_file

        if not self.user_path or not file_path.exists():

            return

        try:

            with open(file_path, "r", encoding="utf-8") as f:

                data = json.load(f)

        except (OSError, json.JSONDecodeError) as e:

            logger.error("error loading settings %s: %s", file_path, e)

            return

        safe_fields = {
            "seed", "sample_rate", "n_fft", "hop", "n_mels", "fmin", "fmax",
            "mfcc_coeffs", "mel_floor", "emcd_weights",
            "t_text", "t_mel", "bench_repeats", "bench_warmup", "jobs",
        }

        for k, v in data.items():

            if k not in safe_fields:

                continue

            if k == "emcd_weights":

                v = tuple(float(w) for w in v)

            setattr(self, k, v)

    def effective_fmax(self) -> float:

        return self.fmax if self.fmax is not None else self.sample_rate / 2.0

    def resolved(self) -> dict:

        return {
            k: v for k, v in asdict(self).items()
            if not k.startswith("_") and not k.endswith("_path")
        }

    def __repr__(self) -> str:

        return (
            f"AppData(name='{self.name}', version='{self.version}', "
            f"seed={self.seed}, user_path='{self.user_path}')"
        )

app_data = AppData()
