"""IDX (MNIST / Fashion-MNIST) parsing and class-incremental sample streams."""
from __future__ import annotations

import gzip
import re
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import IdxFormatError, IdxLengthError, InputError

LABELS_MAGIC = 0x00000801
IMAGES_MAGIC = 0x00000803
_NDIM = {LABELS_MAGIC: 1, IMAGES_MAGIC: 3}


def parse_idx(data: bytes) -> np.ndarray:
    """Decode an unsigned-byte IDX1 (labels) or IDX3 (images) payload.

    Gzip-compressed input is detected by its ``1f 8b`` prefix.
    """
    if data[:2] == b"\x1f\x8b":
        data = gzip.decompress(data)
    if len(data) < 4:
        raise IdxLengthError("truncated IDX header")
    (magic,) = struct.unpack(">I", data[:4])
    if magic not in _NDIM:
        raise IdxFormatError(f"unsupported IDX magic 0x{magic:08x}")
    ndim = _NDIM[magic]
    header = 4 + 4 * ndim
    if len(data) < header:
        raise IdxLengthError("truncated IDX header")
    dims = struct.unpack(f">{ndim}I", data[4:header])
    expected = int(np.prod(dims))
    payload = len(data) - header
    if payload != expected:
        raise IdxLengthError(f"IDX declares {expected} bytes of data, found {payload}")
    return np.frombuffer(data, dtype=np.uint8, offset=header).reshape(dims).copy()


def to_idx(arr: np.ndarray) -> bytes:
    arr = np.asarray(arr)
    if arr.dtype != np.uint8 or arr.ndim not in (1, 3):
        raise ValueError("only uint8 arrays of rank 1 or 3 have an IDX encoding")
    magic = LABELS_MAGIC if arr.ndim == 1 else IMAGES_MAGIC
    return struct.pack(f">I{arr.ndim}I", magic, *arr.shape) + arr.tobytes()


def load_idx(path) -> np.ndarray:
    return parse_idx(Path(path).read_bytes())


@dataclass
class Dataset:
    images: np.ndarray
    labels: np.ndarray
    name: str = ""

    def __post_init__(self):
        if len(self.images) != len(self.labels):
            raise InputError("image count != label count")
        if len(self.labels) and int(self.labels.max()) >= 10:
            raise InputError("labels must be < 10")

    def __len__(self) -> int:
        return len(self.labels)

    def subset(self, index) -> "Dataset":
        return Dataset(self.images[index], self.labels[index], self.name)

    def restrict(self, classes) -> "Dataset":
        return self.subset(np.isin(self.labels, list(classes)))


_SPLIT_PREFIX = {"train": "train", "test": "t10k"}


def _find(directory: Path, stem: str) -> Path:
    for candidate in (directory / stem, directory / f"{stem}.gz"):
        if candidate.exists():
            return candidate
    raise FileNotFoundError(f"no {stem}[.gz] in {directory}")


def load_dataset(directory, split: str = "train") -> Dataset:
    """Load ``{train,t10k}-{images-idx3,labels-idx1}-ubyte[.gz]`` from a directory."""
    directory = Path(directory)
    prefix = _SPLIT_PREFIX[split]
    images = load_idx(_find(directory, f"{prefix}-images-idx3-ubyte"))
    labels = load_idx(_find(directory, f"{prefix}-labels-idx1-ubyte"))
    return Dataset(images, labels, f"{directory.name}:{split}")


@dataclass(frozen=True)
class StreamSpec:
    phases: tuple  # ((classes, count), ...)
    shuffle_within_phase: bool = True
    seed: int = 0

    def __post_init__(self):
        for classes, count in self.phases:
            if not classes or count <= 0:
                raise ValueError("each phase needs a nonempty class set and a positive count")

    @property
    def classes(self) -> tuple:
        return tuple(sorted({c for classes, _ in self.phases for c in classes}))

    @property
    def total(self) -> int:
        return sum(count for _, count in self.phases)

    @classmethod
    def parse(cls, text: str, **kw) -> "StreamSpec":
        """``"0-4:2500; 5-9:2500"`` or ``"0,2,7:100"``; one phase per ``;``."""
        phases = []
        for part in filter(None, (p.strip() for p in text.split(";"))):
            m = re.fullmatch(r"([\d,\- ]+):\s*(\d+)", part)
            if m is None:
                raise ValueError(f"bad stream phase {part!r}")
            classes = set()
            for tok in filter(None, (t.strip() for t in m.group(1).split(","))):
                lo, _, hi = tok.partition("-")
                classes.update(range(int(lo), int(hi or lo) + 1))
            phases.append((tuple(sorted(classes)), int(m.group(2))))
        return cls(tuple(phases), **kw)

    def format(self) -> str:
        return "; ".join(",".join(map(str, c)) + f":{n}" for c, n in self.phases)


def make_stream(dataset: Dataset, spec: StreamSpec) -> Dataset:
    """Concatenate the phases' samples in order.

    Each phase draws ``count`` distinct samples from its classes, in dataset
    order or shuffled by ``spec.seed``.
    """
    rng = np.random.default_rng(spec.seed)
    picks = []
    for classes, count in spec.phases:
        pool = np.flatnonzero(np.isin(dataset.labels, classes))
        if len(pool) < count:
            raise InputError(f"phase {classes} wants {count} samples, dataset has {len(pool)}")
        if spec.shuffle_within_phase:
            pool = rng.permutation(pool)
        picks.append(pool[:count])
    index = np.concatenate(picks) if picks else np.zeros(0, dtype=np.int64)
    return dataset.subset(index)
