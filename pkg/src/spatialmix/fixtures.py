"""Generators for the synthetic impulse-response banks shipped in ``data/``.

These are stand-ins, not measurements: the HRIRs come from a spherical-head
model and the RIRs are exponentially decaying noise at a target RT60. Run
``python3 -m spatialmix.fixtures OUTDIR`` to regenerate them.
"""

import argparse
import math
from pathlib import Path

import numpy as np
from scipy import signal

from .audio_io import write_manifest, write_wav
from .dsp import AudioBuffer, HeadModel, shelf_array

HRIR_LENGTH = 256
HRIR_ONSET = 16  # samples of lead-in so the earlier ear is not clipped

# rir_id, RT60 seconds, keywords, description
ENVIRONMENTS = [
    ("concert_hall", 2.0, ["concert", "hall", "symphony", "auditorium"],
     "Large concert hall with natural reverberation for classical orchestras"),
    ("jazz_club", 0.7, ["club", "lounge", "bar"],
     "Intimate studio room for jazz ensembles"),
    ("dry_studio", 0.3, ["dry", "dead", "booth", "tight"],
     "Dry recording studio for controlled rock band setups"),
    ("small_chamber", 0.8, ["chamber", "salon", "parlor", "parlour"],
     "Small chamber for intimate music arrangements"),
    ("medium_venue", 1.2, ["venue", "warehouse", "nightclub", "ballroom"],
     "Medium-sized venue for electronic performances"),
    ("church", 3.5, ["church", "cathedral", "chapel", "basilica"],
     "Church with extended reverb for choir formations"),
    ("recital_hall", 1.5, ["recital"],
     "Recital hall for solo performances"),
    ("world_space", 1.0, ["courtyard", "temple", "pavilion"],
     "Acoustically diverse space for world music"),
    ("pro_studio", 0.4, ["studio", "professional", "control"],
     "Professional recording environment"),
    ("outdoor", 0.15, ["outdoor", "outdoors", "open", "field", "park"],
     "Simulated outdoor space with minimal reflections for festival configurations"),
]


def _sinc_delay(delay: float, length: int) -> np.ndarray:
    n = np.arange(length)
    h = np.sinc(n - delay) * np.kaiser(length, 8.0)
    return h / h.sum()


def synthetic_hrir(azimuth_deg: float, elevation_deg: float, rate: int = 48000, head: HeadModel = HeadModel()):
    """Left/right impulse responses of a crude spherical head with a rear pinna shadow."""
    az, el = math.radians(azimuth_deg), math.radians(elevation_deg)
    lateral = math.degrees(math.asin(max(-1.0, min(1.0, math.sin(az) * math.cos(el)))))
    tau = head.woodworth(lateral) * rate
    near = _sinc_delay(HRIR_ONSET, HRIR_LENGTH)
    far = _sinc_delay(HRIR_ONSET + tau, HRIR_LENGTH)
    half_ild = 6.0 * math.sin(math.radians(abs(lateral)))
    near = shelf_array(near, half_ild, 1500.0, rate, 1.0)
    far = shelf_array(far, -half_ild, 1500.0, rate, 1.0)
    if math.cos(az) < 0:
        # sources behind lose some treble
        b, a = signal.butter(1, 6000.0, fs=rate)
        depth = -math.cos(az)
        near = (1 - 0.5 * depth) * near + 0.5 * depth * signal.lfilter(b, a, near)
        far = (1 - 0.5 * depth) * far + 0.5 * depth * signal.lfilter(b, a, far)
    if elevation_deg:
        gain = 1.0 + 0.2 * math.sin(el)
        near, far = near * gain, far * gain
    left, right = (far, near) if lateral > 0 else (near, far)
    return left, right


def synthetic_rir(rt60_s: float, rate: int = 48000, seed: int = 0) -> np.ndarray:
    rng = np.random.default_rng(seed)
    n = math.ceil(rt60_s * rate)
    t = np.arange(n) / rate
    ir = rng.standard_normal(n) * 10.0 ** (-3.0 * t / rt60_s) * 0.3
    ir[0] = 1.0
    return ir / np.max(np.abs(ir))


def make_hrir_bank(outdir, rate: int = 48000, step_deg: int = 5) -> Path:
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    manifest = []
    for k, az in enumerate(range(-180, 180, step_deg)):
        left, right = synthetic_hrir(az, 0.0, rate)
        name = f"hrir_{k:03d}.wav"
        write_wav(AudioBuffer.stereo(left, right, rate), outdir / name, "f32")
        manifest.append({"azimuth_deg": az, "elevation_deg": 0, "file": name})
    path = outdir / "manifest.json"
    write_manifest(manifest, path)
    return path


def make_rir_bank(outdir, rate: int = 48000) -> Path:
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    manifest = []
    for seed, (rir_id, rt60, keywords, description) in enumerate(ENVIRONMENTS):
        name = f"{rir_id}.wav"
        write_wav(AudioBuffer.mono(synthetic_rir(rt60, rate, seed), rate), outdir / name, 16)
        manifest.append({"rir_id": rir_id, "keywords": keywords, "file": name,
                         "description": description, "rt60_s": rt60})
    path = outdir / "manifest.json"
    write_manifest(manifest, path)
    return path


def main(argv=None):
    ap = argparse.ArgumentParser(prog="python3 -m spatialmix.fixtures",
                                 description="Regenerate the synthetic HRIR and RIR banks.")
    ap.add_argument("outdir", nargs="?", type=Path, default=Path(__file__).parent / "data",
                    help="writes OUTDIR/hrir and OUTDIR/rir (default: the package data directory)")
    ap.add_argument("--rate", type=int, default=48000)
    args = ap.parse_args(argv)
    print(make_hrir_bank(args.outdir / "hrir", args.rate))
    print(make_rir_bank(args.outdir / "rir", args.rate))


if __name__ == "__main__":
    main()
