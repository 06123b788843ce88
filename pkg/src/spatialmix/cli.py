"""spatialmix command line: plan, render, analyze, templates.

Exit codes: 0 success, 1 analysis deviation beyond tolerance, 2 any error.
Data goes to stdout, diagnostics to stderr.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import warnings
from pathlib import Path

from . import __version__
from .analysis import DEFAULT_TOLERANCE_DEG, analyze_render
from .audio_io import load_hrir_bank, load_rir_bank, read_wav, write_wav
from .conductor import RuleBased, backend_from_env, build_plan
from .errors import MissingStem, NoStems, SpatialMixError, UnknownRir
from .lexicon import infer_instrument
from .render import RenderConfig, render
from .scene import OutputFormat, SpatialPlan, Stem, template_to_dict, validate_plan
from .templates import load_bank

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

log = logging.getLogger("spatialmix")


class CliError(Exception):
    pass


def _stem_files(stems_dir) -> dict[str, Path]:
    d = Path(stems_dir)
    if not d.is_dir():
        raise NoStems(f"stems directory {str(d)!r} does not exist")
    files = {p.stem: p for p in sorted(d.iterdir()) if p.suffix.lower() == ".wav" and p.is_file()}
    if not files:
        raise NoStems(f"no .wav files in {str(d)!r}")
    return files


def _load_stems(stems_dir) -> dict:
    return {stem_id: read_wav(path) for stem_id, path in _stem_files(stems_dir).items()}


def _load_config(path) -> RenderConfig:
    if path is None:
        return RenderConfig()
    p = Path(path)
    raw = p.read_bytes()
    doc = tomllib.loads(raw.decode("utf-8")) if p.suffix.lower() == ".toml" else json.loads(raw)
    if not isinstance(doc, dict):
        raise CliError(f"config {str(p)!r} must be a table/object")
    return RenderConfig.from_dict(doc)


def _read_plan(path) -> SpatialPlan:
    return SpatialPlan.from_json(Path(path).read_text(encoding="utf-8"))


def _write_text(path, text: str):
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        Path(path).write_text(text, encoding="utf-8")


def cmd_plan(args) -> int:
    files = _stem_files(args.stems)
    stems = [Stem(stem_id, infer_instrument(stem_id)) for stem_id in files]
    bank = load_bank(args.templates)
    rir_bank = load_rir_bank(args.rir) if args.rir else load_rir_bank()
    if args.backend == "remote":
        backend = backend_from_env()
        if isinstance(backend, RuleBased):
            raise CliError("--backend remote needs STASE_LLM_ENDPOINT to be set")
    else:
        backend = RuleBased()
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        plan = build_plan(args.prompt, stems, backend, bank, rir_bank=rir_bank,
                          output_format=OutputFormat(args.format), sample_rate_hz=args.sample_rate)
    for w in caught:
        print(f"warning: {w.message}", file=sys.stderr)
    _write_text(args.out, plan.to_json())
    return 0


def _check_plan(plan, stems, rir_bank):
    report = validate_plan(plan, list(stems), rir_bank.ids())
    if not report.ok:
        for v in report.violations:
            print(f"{v.code}: {v.path}: {v.message}", file=sys.stderr)
        # surface the most specific failure as the error name
        codes = report.codes()
        if "unknown_rir" in codes:
            raise UnknownRir("plan references an RIR not in the bank")
        if "missing_stem" in codes:
            raise MissingStem("plan references a stem not in the stems directory")
        raise CliError("plan failed validation: " + ", ".join(codes))


def cmd_render(args) -> int:
    plan = _read_plan(args.plan)
    stems = _load_stems(args.stems)
    hrir = load_hrir_bank(args.hrir) if args.hrir else load_hrir_bank()
    rir = load_rir_bank(args.rir) if args.rir else load_rir_bank()
    _check_plan(plan, stems, rir)
    cfg = _load_config(args.config)
    out, trace = render(plan, stems, hrir, rir, cfg)
    bit_depth = "f32" if args.bit_depth == "f32" else int(args.bit_depth)
    write_wav(out, args.out, bit_depth)
    if args.trace:
        out_path = Path(args.out)
        trace_path = out_path.with_name(out_path.stem + ".trace.json")
        trace_path.write_text(trace.to_json(), encoding="utf-8")
        print(f"trace: {trace_path}", file=sys.stderr)
    return 0


def cmd_analyze(args) -> int:
    plan = _read_plan(args.plan)
    stems = _load_stems(args.stems) if plan.sources else {}
    hrir = load_hrir_bank(args.hrir) if args.hrir else load_hrir_bank()
    rir = load_rir_bank(args.rir) if args.rir else load_rir_bank()
    cfg = _load_config(args.config)
    report = analyze_render(plan, stems, hrir, rir, cfg, args.tolerance)
    if args.report:
        Path(args.report).write_text(report.to_json(), encoding="utf-8")
    sys.stdout.write(report.table())
    if not report.ok:
        print(f"deviation beyond {args.tolerance} deg", file=sys.stderr)
        return 1
    return 0


def cmd_templates(args) -> int:
    bank = load_bank(args.templates)
    if args.action == "list":
        for t in bank:
            print(f"{t.template_id}\t{t.name}")
        return 0
    if not args.id:
        raise CliError("templates show needs a template id")
    try:
        t = bank.get(args.id)
    except KeyError:
        raise CliError(f"unknown template {args.id!r}") from None
    print(json.dumps(template_to_dict(t), indent=2, ensure_ascii=False))
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="spatialmix", description="Text-guided spatial audio mixing.")
    p.add_argument("--version", action="version", version=__version__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("plan", help="turn a prompt and a stems directory into plan.json")
    sp.add_argument("--prompt", required=True)
    sp.add_argument("--stems", required=True)
    sp.add_argument("--templates", default=None, help="template bank JSON (default: shipped bank)")
    sp.add_argument("--out", default="-")
    sp.add_argument("--backend", choices=["rules", "remote"], default="rules")
    sp.add_argument("--rir", default=None, help="RIR manifest used to pick the environment")
    sp.add_argument("--format", choices=[f.value for f in OutputFormat], default=OutputFormat.BINAURAL.value)
    sp.add_argument("--sample-rate", type=int, choices=[44100, 48000], default=48000)
    sp.set_defaults(func=cmd_plan)

    sr = sub.add_parser("render", help="render plan.json to a stereo WAV")
    sr.add_argument("--plan", required=True)
    sr.add_argument("--stems", required=True)
    sr.add_argument("--hrir", default=None)
    sr.add_argument("--rir", default=None)
    sr.add_argument("--out", required=True)
    sr.add_argument("--trace", action="store_true")
    sr.add_argument("--config", default=None, help="render config (.toml or .json)")
    sr.add_argument("--bit-depth", choices=["16", "24", "f32"], default="f32")
    sr.set_defaults(func=cmd_render)

    sa = sub.add_parser("analyze", help="solo-render each source and check its measured azimuth")
    sa.add_argument("--plan", required=True)
    sa.add_argument("--stems", required=True)
    sa.add_argument("--hrir", default=None)
    sa.add_argument("--rir", default=None)
    sa.add_argument("--report", default=None)
    sa.add_argument("--config", default=None)
    sa.add_argument("--tolerance", type=float, default=DEFAULT_TOLERANCE_DEG)
    sa.set_defaults(func=cmd_analyze)

    st = sub.add_parser("templates", help="list or show spatial templates")
    st.add_argument("action", choices=["list", "show"])
    st.add_argument("id", nargs="?")
    st.add_argument("--templates", default=None)
    st.set_defaults(func=cmd_templates)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (SpatialMixError, CliError, OSError, ValueError, KeyError) as exc:
        msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else exc
        print(f"{type(exc).__name__}: {msg}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
