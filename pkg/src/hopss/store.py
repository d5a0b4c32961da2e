"""HOPSSDS1 dataset container.

Layout (little-endian throughout, no padding)::

    b"HOPSSDS1"                      8-byte magic
    u32                              manifest byte length
    manifest                         canonical JSON, UTF-8
    per sample:
        u   float64[frames, *grid]   row-major
        f   float64[forcing_frames, *grid]
    u64                              sample count (truncation sentinel)

The manifest carries everything needed to rebuild the file bit-exactly,
including per-sample provenance.
"""

from __future__ import annotations

import csv
import json
import os
import struct
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Iterable, Iterator

import numpy as np

from .hopss import SolutionPair
from .pde import Trajectory, pde_from_dict
from .spectral import SpatialGrid

__all__ = [
    "MAGIC",
    "FORMAT_VERSION",
    "DatasetFormatError",
    "DatasetManifest",
    "canonical_json",
    "write_dataset",
    "read_dataset",
    "open_dataset",
    "export_csv",
]

MAGIC = b"HOPSSDS1"
FORMAT_VERSION = 1
_F8 = np.dtype("<f8")


class DatasetFormatError(ValueError):
    def __init__(self, message: str, offset: int):
        self.offset = offset
        super().__init__(f"{message} (at byte offset {offset})")


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), allow_nan=False, ensure_ascii=True)


@dataclass
class DatasetManifest:
    pde: dict
    grid: dict
    dt_coarse: float
    frames: int
    forcing_frames: int
    sample_count: int
    generation: dict
    forcing_per_interval: bool = True
    provenance: list = field(default_factory=list)
    t0: float = 0.0
    created_utc: str | None = None
    format_version: int = FORMAT_VERSION

    @property
    def spatial_grid(self) -> SpatialGrid:
        return SpatialGrid.from_dict(self.grid)

    @property
    def forcing_shape(self) -> tuple[int, ...]:
        grid = self.spatial_grid
        return (self.forcing_frames, *grid.shape) if self.forcing_per_interval else grid.shape

    @property
    def sample_floats(self) -> int:
        return (self.frames + self.forcing_frames) * self.spatial_grid.size

    def to_json(self) -> str:
        return canonical_json(asdict(self))

    @classmethod
    def from_json(cls, text: str) -> "DatasetManifest":
        return cls(**json.loads(text))

    @classmethod
    def for_pairs(cls, pairs: list[SolutionPair], generation: dict, created_utc: str | None = None):
        """Manifest describing ``pairs``; ``pairs`` may be empty only if shapes are unknown."""
        ref = pairs[0]
        return cls(
            pde=ref.pde.to_dict(),
            grid=ref.u.grid.to_dict(),
            dt_coarse=ref.u.dt,
            frames=len(ref.u),
            forcing_frames=ref.f.shape[0] if ref.per_interval else 1,
            sample_count=len(pairs),
            generation=generation,
            forcing_per_interval=ref.per_interval,
            provenance=[p.provenance for p in pairs],
            t0=ref.u.t0,
            created_utc=created_utc,
        )


def _check_pair(pair: SolutionPair, manifest: DatasetManifest, index: int):
    if pair.u.grid != manifest.spatial_grid or len(pair.u) != manifest.frames or pair.u.dt != manifest.dt_coarse:
        raise ValueError(f"sample {index}: trajectory shape/dt does not match the manifest")
    if pair.f.shape != manifest.forcing_shape:
        raise ValueError(f"sample {index}: forcing shape {pair.f.shape} does not match the manifest")
    if manifest.provenance and pair.provenance != manifest.provenance[index]:
        raise ValueError(f"sample {index}: provenance {pair.provenance} differs from the manifest")
    if not (np.all(np.isfinite(pair.u.frames)) and np.all(np.isfinite(pair.f))):
        raise ValueError(f"sample {index}: non-finite values")


def write_dataset(pairs: Iterable[SolutionPair], manifest: DatasetManifest, path) -> None:
    """Stream ``pairs`` to ``path``; ``manifest.sample_count`` must match."""
    header = manifest.to_json().encode("utf-8")
    count = 0
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<I", len(header)))
        fh.write(header)
        for pair in pairs:
            if count >= manifest.sample_count:
                raise ValueError(f"more samples than the manifest's {manifest.sample_count}")
            _check_pair(pair, manifest, count)
            fh.write(np.ascontiguousarray(pair.u.frames, dtype=_F8).tobytes())
            fh.write(np.ascontiguousarray(pair.f, dtype=_F8).tobytes())
            count += 1
        if count != manifest.sample_count:
            raise ValueError(f"wrote {count} samples, manifest declares {manifest.sample_count}")
        fh.write(struct.pack("<Q", count))


def _read_header(path) -> tuple[DatasetManifest, int, int]:
    size = os.path.getsize(path)
    with open(path, "rb") as fh:
        magic = fh.read(8)
        if magic != MAGIC:
            raise DatasetFormatError(f"bad magic {magic!r}, expected {MAGIC!r}", 0)
        raw = fh.read(4)
        if len(raw) < 4:
            raise DatasetFormatError("truncated header: missing manifest length", 8)
        (length,) = struct.unpack("<I", raw)
        text = fh.read(length)
        if len(text) < length:
            raise DatasetFormatError("truncated manifest", 12 + len(text))
    try:
        manifest = DatasetManifest.from_json(text.decode("utf-8"))
    except (ValueError, TypeError) as exc:
        raise DatasetFormatError(f"unreadable manifest: {exc}", 12) from exc
    if manifest.format_version != FORMAT_VERSION:
        raise DatasetFormatError(
            f"unsupported format version {manifest.format_version} (reader supports {FORMAT_VERSION})", 12
        )
    return manifest, 12 + length, size


def open_dataset(path) -> tuple[DatasetManifest, Iterator[SolutionPair]]:
    """Validate ``path`` and return its manifest with a lazy, memory-mapped sample iterator."""
    manifest, start, size = _read_header(path)
    per_sample = manifest.sample_floats * 8
    payload_end = start + manifest.sample_count * per_sample
    if size < payload_end + 8:
        raise DatasetFormatError(
            f"truncated file: sentinel check failed, expected {payload_end + 8} bytes, found {size}",
            size,
        )
    if size > payload_end + 8:
        raise DatasetFormatError(f"trailing data after the sentinel ({size - payload_end - 8} bytes)", payload_end + 8)
    with open(path, "rb") as fh:
        fh.seek(payload_end)
        (sentinel,) = struct.unpack("<Q", fh.read(8))
    if sentinel != manifest.sample_count:
        raise DatasetFormatError(
            f"sentinel check failed: sentinel says {sentinel} samples, manifest {manifest.sample_count}",
            payload_end,
        )

    grid = manifest.spatial_grid
    pde = pde_from_dict(manifest.pde)
    u_shape = (manifest.frames, *grid.shape)
    f_shape = manifest.forcing_shape

    def samples():
        if manifest.sample_count == 0:
            return
        data = np.memmap(path, dtype=_F8, mode="r", offset=start, shape=(manifest.sample_count, manifest.sample_floats))
        n_u = int(np.prod(u_shape))
        for s in range(manifest.sample_count):
            row = data[s]
            u = Trajectory(np.asarray(row[:n_u]).reshape(u_shape), manifest.dt_coarse, grid, manifest.t0)
            f = np.asarray(row[n_u:]).reshape(f_shape)
            prov = manifest.provenance[s] if manifest.provenance else {"kind": "base"}
            yield SolutionPair(u, f, pde, prov)

    return manifest, samples()


def read_dataset(path) -> tuple[list[SolutionPair], DatasetManifest]:
    manifest, samples = open_dataset(path)
    return list(samples), manifest


def export_csv(path, out_dir) -> list[Path]:
    """One CSV per sample (1D datasets only): rows ``field,frame,x_0..x_{n-1}``."""
    manifest, samples = open_dataset(path)
    grid = manifest.spatial_grid
    if grid.dims != 1:
        raise ValueError("CSV export supports 1D datasets only")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for s, pair in enumerate(samples):
        target = out_dir / f"sample_{s:06d}.csv"
        with open(target, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["field", "frame"] + [f"x_{i}" for i in range(grid.n)])
            for k, frame in enumerate(pair.u.frames):
                writer.writerow(["u", k] + [repr(float(v)) for v in frame])
            for k, frame in enumerate(np.atleast_2d(pair.f)):
                writer.writerow(["f", k] + [repr(float(v)) for v in frame])
        written.append(target)
    return written
