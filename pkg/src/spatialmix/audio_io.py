"""WAV (RIFF) reading/writing and manifest-driven HRIR / RIR bank loading."""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Sequence

import numpy as np

from .dsp import SUPPORTED_RATES, AudioBuffer
from .errors import Corrupt, ManifestError, UnsupportedFormat

WAVE_FORMAT_PCM = 0x0001
WAVE_FORMAT_IEEE_FLOAT = 0x0003
WAVE_FORMAT_EXTENSIBLE = 0xFFFE


def _data_dir() -> Path:
    return Path(str(resources.files("spatialmix") / "data"))


def shipped_hrir_manifest() -> Path:
    return _data_dir() / "hrir" / "manifest.json"


def shipped_rir_manifest() -> Path:
    return _data_dir() / "rir" / "manifest.json"


# ---------------------------------------------------------------- WAV

def _decode(raw: bytes, fmt: int, bits: int, channels: int) -> np.ndarray:
    if fmt == WAVE_FORMAT_IEEE_FLOAT:
        if bits != 32:
            raise UnsupportedFormat(f"float WAV with {bits} bits (only 32-bit float supported)")
        x = np.frombuffer(raw, dtype="<f4").astype(np.float64)
    elif bits == 16:
        x = np.frombuffer(raw, dtype="<i2").astype(np.float64) / 32768.0
    elif bits == 24:
        b = np.frombuffer(raw, dtype=np.uint8).reshape(-1, 3).astype(np.int32)
        ints = b[:, 0] | (b[:, 1] << 8) | (b[:, 2] << 16)
        ints = np.where(ints >= 1 << 23, ints - (1 << 24), ints)
        x = ints.astype(np.float64) / float(1 << 23)
    else:
        raise UnsupportedFormat(f"PCM WAV with {bits} bits (supported: 16, 24)")
    return x.reshape(-1, channels).T


def read_wav(path) -> AudioBuffer:
    """Read a 16/24-bit PCM or 32-bit float WAV. Non-audio chunks are skipped."""
    data = Path(path).read_bytes()
    if len(data) < 12 or data[:4] != b"RIFF" or data[8:12] != b"WAVE":
        raise UnsupportedFormat(f"{path}: not a RIFF/WAVE file (header {data[:4]!r}/{data[8:12]!r})")
    pos = 12
    fmt_info = None
    raw = None
    while pos + 8 <= len(data):
        chunk_id = data[pos:pos + 4]
        size = struct.unpack_from("<I", data, pos + 4)[0]
        body_start = pos + 8
        if chunk_id == b"fmt ":
            if size < 16 or body_start + size > len(data):
                raise Corrupt(f"{path}: truncated fmt chunk")
            tag, channels, rate, _, block_align, bits = struct.unpack_from("<HHIIHH", data, body_start)
            if tag == WAVE_FORMAT_EXTENSIBLE:
                if size < 40:
                    raise Corrupt(f"{path}: truncated WAVE_FORMAT_EXTENSIBLE fmt chunk")
                tag = struct.unpack_from("<H", data, body_start + 24)[0]
            fmt_info = (tag, channels, rate, block_align, bits)
        elif chunk_id == b"data":
            if body_start + size > len(data):
                raise Corrupt(f"{path}: data chunk declares {size} bytes, only {len(data) - body_start} present")
            raw = data[body_start:body_start + size]
            if fmt_info is not None:
                break
        pos = body_start + size + (size & 1)
    if fmt_info is None:
        raise Corrupt(f"{path}: no fmt chunk")
    if raw is None:
        raise Corrupt(f"{path}: no data chunk")
    tag, channels, rate, block_align, bits = fmt_info
    if tag not in (WAVE_FORMAT_PCM, WAVE_FORMAT_IEEE_FLOAT):
        raise UnsupportedFormat(f"{path}: format tag 0x{tag:04x}")
    if channels not in (1, 2):
        raise UnsupportedFormat(f"{path}: {channels} channels (supported: 1, 2)")
    if rate not in SUPPORTED_RATES:
        raise UnsupportedFormat(f"{path}: sample rate {rate} (supported: {SUPPORTED_RATES})")
    if block_align == 0 or len(raw) % block_align:
        raise Corrupt(f"{path}: data length {len(raw)} is not a multiple of block size {block_align}")
    return AudioBuffer(_decode(raw, tag, bits, channels), rate)


def _round_half_away(x: np.ndarray) -> np.ndarray:
    return np.sign(x) * np.floor(np.abs(x) + 0.5)


def encode_pcm(samples: np.ndarray, bits: int) -> np.ndarray:
    """Clamp to the integer range and round half away from zero. Returns int32 codes."""
    scale = float(1 << (bits - 1))
    clamped = np.clip(samples, -1.0, 1.0 - 1.0 / scale)
    return _round_half_away(clamped * scale).astype(np.int32)


def write_wav(buf: AudioBuffer, path, bit_depth=24) -> None:
    """Write ``buf`` as 16-bit, 24-bit or 32-bit float (``bit_depth="f32"``) WAV."""
    interleaved = buf.samples.T.reshape(-1)
    channels, rate = buf.channels, buf.sample_rate_hz
    if bit_depth in ("f32", "float32", 32):
        payload = interleaved.astype("<f4").tobytes()
        fmt = struct.pack("<HHIIHHH", WAVE_FORMAT_IEEE_FLOAT, channels, rate, rate * channels * 4, channels * 4, 32, 0)
        extra = b"fact" + struct.pack("<II", 4, buf.frames)
    elif bit_depth in (16, 24):
        codes = encode_pcm(interleaved, bit_depth)
        if bit_depth == 16:
            payload = codes.astype("<i2").tobytes()
        else:
            u = codes.astype("<i4").view(np.uint8).reshape(-1, 4)
            payload = u[:, :3].tobytes()
        width = bit_depth // 8
        fmt = struct.pack("<HHIIHH", WAVE_FORMAT_PCM, channels, rate, rate * channels * width, channels * width, bit_depth)
        extra = b""
    else:
        raise ValueError(f"bit_depth must be 16, 24 or 'f32', got {bit_depth!r}")
    body = b"WAVE" + b"fmt " + struct.pack("<I", len(fmt)) + fmt + extra
    body += b"data" + struct.pack("<I", len(payload)) + payload
    if len(payload) & 1:
        body += b"\x00"
    Path(path).write_bytes(b"RIFF" + struct.pack("<I", len(body)) + body)


# ---------------------------------------------------------------- banks

@dataclass(frozen=True)
class HrirEntry:
    index: int
    azimuth_deg: float
    elevation_deg: float
    hrir_left: AudioBuffer
    hrir_right: AudioBuffer


@dataclass(frozen=True)
class HrirBank:
    entries: tuple[HrirEntry, ...]
    sample_rate_hz: int

    def __len__(self):
        return len(self.entries)

    def positions(self) -> np.ndarray:
        return np.array([[e.azimuth_deg, e.elevation_deg] for e in self.entries], dtype=np.float64).reshape(-1, 2)


@dataclass(frozen=True)
class RirEntry:
    rir_id: str
    keywords: tuple[str, ...]
    ir: AudioBuffer
    description: str


@dataclass(frozen=True)
class RirBank:
    entries: tuple[RirEntry, ...]

    def ids(self) -> list[str]:
        return [e.rir_id for e in self.entries]

    def get(self, rir_id: str) -> RirEntry:
        for e in self.entries:
            if e.rir_id == rir_id:
                return e
        raise KeyError(rir_id)

    def __contains__(self, rir_id) -> bool:
        return any(e.rir_id == rir_id for e in self.entries)

    def __len__(self):
        return len(self.entries)


def _read_manifest(path: Path) -> list:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ManifestError(f"{path}: {exc}") from exc
    if not isinstance(doc, list):
        raise ManifestError(f"{path}: expected a JSON array")
    return doc


def _load_entry_wav(base: Path, name, i: int) -> AudioBuffer:
    if not isinstance(name, str):
        raise ManifestError(f"file reference must be a string, got {name!r}", i)
    p = base / name
    if not p.is_file():
        raise ManifestError(f"missing file {name}", i)
    try:
        return read_wav(p)
    except (UnsupportedFormat, Corrupt) as exc:
        raise ManifestError(str(exc), i) from exc


def _number(entry: dict, key: str, i: int) -> float:
    v = entry.get(key)
    if isinstance(v, bool) or not isinstance(v, (int, float)) or not np.isfinite(v):
        raise ManifestError(f"{key} must be a finite number, got {v!r}", i)
    return float(v)


def load_hrir_bank(manifest_path=None) -> HrirBank:
    """Load an HRIR bank. Entries give ``file`` (stereo) or ``file_left``/``file_right`` (mono pair)."""
    manifest_path = Path(manifest_path) if manifest_path is not None else shipped_hrir_manifest()
    base = manifest_path.parent
    entries = []
    rate = None
    length = None
    for i, entry in enumerate(_read_manifest(manifest_path)):
        if not isinstance(entry, dict):
            raise ManifestError("expected an object", i)
        az = _number(entry, "azimuth_deg", i)
        el = _number(entry, "elevation_deg", i)
        if "file" in entry:
            pair = _load_entry_wav(base, entry["file"], i)
            if pair.channels != 2:
                raise ManifestError("stereo HRIR file expected", i)
            left = AudioBuffer.mono(pair.left, pair.sample_rate_hz)
            right = AudioBuffer.mono(pair.right, pair.sample_rate_hz)
        elif "file_left" in entry and "file_right" in entry:
            left = _load_entry_wav(base, entry["file_left"], i)
            right = _load_entry_wav(base, entry["file_right"], i)
            if left.channels != 1 or right.channels != 1:
                raise ManifestError("_L/_R HRIR files must be mono", i)
            if left.sample_rate_hz != right.sample_rate_hz:
                raise ManifestError("left/right sample rates differ", i)
        else:
            raise ManifestError("needs 'file' or 'file_left' + 'file_right'", i)
        if rate is None:
            rate, length = left.sample_rate_hz, left.frames
        if left.sample_rate_hz != rate:
            raise ManifestError(f"sample rate {left.sample_rate_hz} differs from bank rate {rate}", i)
        if left.frames != length or right.frames != length:
            raise ManifestError(f"HRIR length differs from bank length {length}", i)
        entries.append(HrirEntry(i, az, el, left, right))
    return HrirBank(tuple(entries), rate or 48000)


def load_rir_bank(manifest_path=None) -> RirBank:
    manifest_path = Path(manifest_path) if manifest_path is not None else shipped_rir_manifest()
    base = manifest_path.parent
    entries = []
    seen = set()
    rate = None
    for i, entry in enumerate(_read_manifest(manifest_path)):
        if not isinstance(entry, dict):
            raise ManifestError("expected an object", i)
        rir_id = entry.get("rir_id")
        if not isinstance(rir_id, str) or not rir_id:
            raise ManifestError("rir_id must be a non-empty string", i)
        if rir_id in seen:
            raise ManifestError(f"duplicate rir_id {rir_id!r}", i)
        seen.add(rir_id)
        keywords = entry.get("keywords", [])
        if not isinstance(keywords, list) or not all(isinstance(k, str) for k in keywords):
            raise ManifestError("keywords must be a list of strings", i)
        ir = _load_entry_wav(base, entry.get("file"), i)
        if ir.channels != 1:
            raise ManifestError("RIR must be mono", i)
        if rate is None:
            rate = ir.sample_rate_hz
        elif ir.sample_rate_hz != rate:
            raise ManifestError(f"sample rate {ir.sample_rate_hz} differs from bank rate {rate}", i)
        entries.append(RirEntry(rir_id, tuple(k.lower() for k in keywords), ir, str(entry.get("description", ""))))
    return RirBank(tuple(entries))


def write_manifest(entries: Sequence[dict], path) -> None:
    Path(path).write_text(json.dumps(list(entries), indent=2) + "\n", encoding="utf-8")
