"""Configuration data models for senet-desk."""

from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

from src.errors import ContractError

TASKS = ("cod", "sod")
PARADIGMS = ("single", "joint1", "joint2")
WEIGHTINGS = ("dw", "none", "ppa")
RESIZE_MODES = ("bilinear", "nearest")


def _pick(cls, data: Dict[str, Any]) -> Dict[str, Any]:
    names = {f.name for f in fields(cls)}
    return {k: v for k, v in data.items() if k in names}


@dataclass
class ModelConfig:
    """Network hyperparameters. Full scale is 384/16/768/12/12/512/8/16."""

    img_size: int = 64
    patch_size: int = 8
    enc_dim: int = 64
    enc_depth: int = 2
    enc_heads: int = 4
    dec_dim: int = 32
    dec_depth: int = 1
    dec_heads: int = 4
    mlp_ratio: int = 4
    licm_channels: int = 4
    head_channels: int = 8
    licm_enabled: bool = True
    seed: int = 0
    dtype: str = "float32"

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        if self.patch_size <= 0 or self.img_size % self.patch_size != 0:
            raise ContractError(
                f"img_size {self.img_size} must be divisible by patch_size {self.patch_size}"
            )
        if self.enc_heads <= 0 or self.enc_dim % self.enc_heads != 0:
            raise ContractError(f"enc_dim {self.enc_dim} must be divisible by enc_heads {self.enc_heads}")
        if self.dec_heads <= 0 or self.dec_dim % self.dec_heads != 0:
            raise ContractError(f"dec_dim {self.dec_dim} must be divisible by dec_heads {self.dec_heads}")
        if self.enc_dim % 4 or self.dec_dim % 4:
            raise ContractError("enc_dim and dec_dim must be multiples of 4 for 2D sin-cos positions")
        if self.dtype not in ("float32", "float64"):
            raise ContractError(f"dtype must be float32 or float64, got {self.dtype}")

    @property
    def grid_size(self) -> int:
        return self.img_size // self.patch_size

    @property
    def num_patches(self) -> int:
        return self.grid_size * self.grid_size

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "ModelConfig":
        return cls(**_pick(cls, data))

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


@dataclass
class LossConfig:
    """Segmentation/reconstruction loss settings."""

    lam: float = 0.1
    l: float = 1.0  # noqa: E741
    band_lo: float = 0.01
    band_hi: float = 0.99
    band_dilation: int = 1
    bce_clamp_eps: float = 1e-7
    iou_smooth: float = 1.0
    alpha_cap: float = 100.0
    weighting: str = "dw"
    gt_resize: str = "bilinear"

    def __post_init__(self):
        if not 0.0 <= self.lam <= 1.0:
            raise ContractError(f"lambda must lie in [0, 1], got {self.lam}")
        if not self.band_lo < self.band_hi:
            raise ContractError("band_lo must be smaller than band_hi")
        if self.weighting not in WEIGHTINGS:
            raise ContractError(f"weighting must be one of {WEIGHTINGS}")
        if self.gt_resize not in RESIZE_MODES:
            raise ContractError(f"gt_resize must be one of {RESIZE_MODES}")

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "LossConfig":
        data = dict(data)
        if "lambda" in data:
            data["lam"] = data.pop("lambda")
        return cls(**_pick(cls, data))

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


@dataclass
class TrainConfig:
    """Optimisation settings."""

    lr0: float = 1e-4
    poly_power: float = 0.9
    epochs: int = 30
    batch_size: int = 4
    mask_ratio_train: float = 0.05
    mask_ratio_eval: float = 0.0
    paradigm: str = "single"
    seed: int = 0
    hflip: bool = True
    joint_recon: bool = True

    def __post_init__(self):
        if self.mask_ratio_eval != 0.0:
            raise ContractError("mask_ratio_eval is fixed to 0")
        if not 0.0 <= self.mask_ratio_train < 1.0:
            raise ContractError(f"mask_ratio_train must lie in [0, 1), got {self.mask_ratio_train}")
        if self.paradigm not in PARADIGMS:
            raise ContractError(f"paradigm must be one of {PARADIGMS}")
        if self.epochs <= 0 or self.batch_size <= 0:
            raise ContractError("epochs and batch_size must be positive")

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "TrainConfig":
        return cls(**_pick(cls, data))

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


@dataclass
class SynthConfig:
    """Synthetic COD/SOD sample generation settings."""

    size: int = 96
    seed: int = 0
    mode: str = "cod"
    object_scale_range: Tuple[float, float] = (0.01, 0.3)
    texture_octaves: int = 4
    camo_similarity: Optional[float] = None

    def __post_init__(self):
        if self.mode not in TASKS:
            raise ContractError(f"mode must be one of {TASKS}")
        lo, hi = (float(v) for v in self.object_scale_range)
        if not 0.0 < lo <= hi < 1.0:
            raise ContractError(f"object_scale_range must lie within (0, 1), got {self.object_scale_range}")
        self.object_scale_range = (lo, hi)
        if self.camo_similarity is None:
            self.camo_similarity = 0.9 if self.mode == "cod" else 0.1
        if not 0.0 <= self.camo_similarity <= 1.0:
            raise ContractError("camo_similarity must lie in [0, 1]")

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "SynthConfig":
        data = dict(data)
        for alias in ("synth_size", "synth_seed", "synth_mode"):
            if alias in data:
                data[alias.split("_", 1)[1]] = data.pop(alias)
        return cls(**_pick(cls, data))

    def to_dict(self) -> Dict[str, Any]:
        result = asdict(self)
        result["object_scale_range"] = list(self.object_scale_range)
        return result


@dataclass
class PathsConfig:
    """Filesystem locations used by the CLI."""

    out: Path = Path("runs")
    ckpt: Optional[Path] = None
    manifest: Optional[Path] = None
    sod_manifest: Optional[Path] = None

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "PathsConfig":
        values = _pick(cls, data)
        return cls(**{k: Path(v) if v is not None else None for k, v in values.items()})

    def to_dict(self) -> Dict[str, Any]:
        return {k: str(v) if v is not None else None for k, v in asdict(self).items()}


# Flat keys that map onto a section other than the one sharing the name.
_FLAT_ALIASES = {
    "lambda": ("loss", "lam"),
    "patch": ("model", "patch_size"),
    "mask_ratio": ("train", "mask_ratio_train"),
    "synth_size": ("synth", "size"),
    "synth_seed": ("synth", "seed"),
    "synth_mode": ("synth", "mode"),
}

# Keys shared by several sections; the value is written to each of them.
_SHARED_KEYS = {"seed": ("model", "train", "synth")}


@dataclass
class RunConfig:
    """Union of every section plus the task the run targets."""

    model: ModelConfig = field(default_factory=ModelConfig)
    loss: LossConfig = field(default_factory=LossConfig)
    train: TrainConfig = field(default_factory=TrainConfig)
    synth: SynthConfig = field(default_factory=SynthConfig)
    paths: PathsConfig = field(default_factory=PathsConfig)
    task: str = "cod"

    SECTIONS = ("model", "loss", "train", "synth", "paths")

    @classmethod
    def section_keys(cls) -> Dict[str, List[str]]:
        return {
            "model": [f.name for f in fields(ModelConfig)],
            "loss": [f.name for f in fields(LossConfig)],
            "train": [f.name for f in fields(TrainConfig)],
            "synth": [f.name for f in fields(SynthConfig)],
            "paths": [f.name for f in fields(PathsConfig)],
        }

    @classmethod
    def from_dict(cls, data: Optional[Dict[str, Any]]) -> "RunConfig":
        """Create a RunConfig from a flat mapping.

        Raises:
            ContractError: on keys no section owns.
        """
        data = dict(data or {})
        buckets: Dict[str, Dict[str, Any]] = {name: {} for name in cls.SECTIONS}
        owners = cls.section_keys()
        task = data.pop("task", "cod")
        for key, value in data.items():
            if key in _SHARED_KEYS:
                for section in _SHARED_KEYS[key]:
                    buckets[section][key] = value
                continue
            if key in _FLAT_ALIASES:
                section, name = _FLAT_ALIASES[key]
                buckets[section][name] = value
                continue
            matches = [s for s in cls.SECTIONS if key in owners[s]]
            if not matches:
                raise ContractError(f"Unknown config key: {key}")
            buckets[matches[0]][key] = value
        if task not in TASKS:
            raise ContractError(f"task must be one of {TASKS}")
        return cls(
            model=ModelConfig.from_dict(buckets["model"]),
            loss=LossConfig.from_dict(buckets["loss"]),
            train=TrainConfig.from_dict(buckets["train"]),
            synth=SynthConfig.from_dict(buckets["synth"]),
            paths=PathsConfig.from_dict(buckets["paths"]),
            task=task,
        )

    def to_flat_dict(self) -> Dict[str, Any]:
        """Flatten back to the file format; ``from_dict`` inverts this."""
        flat: Dict[str, Any] = {"task": self.task}
        for key, value in self.model.to_dict().items():
            flat[key] = value
        for key, value in self.loss.to_dict().items():
            flat["lambda" if key == "lam" else key] = value
        for key, value in self.train.to_dict().items():
            flat[key] = value
        for key, value in self.synth.to_dict().items():
            if key in ("size", "seed", "mode"):
                flat[f"synth_{key}"] = value
            else:
                flat[key] = value
        flat.update(self.paths.to_dict())
        # The shared seed is written once; per-section seeds follow it.
        flat["seed"] = self.train.seed
        return flat
