"""Command line front end.

    diag run   --config cfg.json [--repeats N] [--dim P] [--methods a,b]
               [--seed N] [--format json|csv] [--workers N] [--out DIR]
    diag synth --spec spec.json --out DIR
    diag hdh   --source manifest.json --target manifest.json
               [--dim P] [--repeats N] [--seed N] [--out FILE]

Errors from the toolkit are reported as one JSON object on standard error
and a nonzero exit code.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from pathlib import Path

import numpy as np

from . import divergence, harness, signal_io, subspace, synth
from .exceptions import ConfigurationError, DiagnosisError
from .spectrum import featurize
from .subspace import DimPolicy

_SYNTH_SPEC_KEYS = ({"speeds_rpm", "per_class"} | harness.SYNTH_DOMAIN_KEYS) - {"shaft_speed_rpm"}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="diag",
        description="Bearing fault diagnosis across working conditions "
                    "via subspace alignment",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run the experiment grid from a config file")
    run.add_argument("--config", required=True, help="experiment config JSON")
    run.add_argument("--repeats", type=int, help="override repeat count")
    run.add_argument("--dim", help="override dim policy, e.g. fixed:30 or variance:0.9")
    run.add_argument("--methods", help="override methods, comma separated")
    run.add_argument("--seed", type=int, help="override base rng seed")
    run.add_argument("--format", choices=("json", "csv"), help="override report format")
    run.add_argument("--workers", type=int, help="override worker count")
    run.add_argument("--out", help="override output directory")

    gen = sub.add_parser("synth", help="generate synthetic datasets to disk")
    gen.add_argument("--spec", required=True, help="generator spec JSON")
    gen.add_argument("--out", required=True, help="output directory")

    hdh = sub.add_parser("hdh", help="estimate domain divergence for one pair")
    hdh.add_argument("--source", required=True, help="source dataset manifest")
    hdh.add_argument("--target", required=True, help="target dataset manifest")
    hdh.add_argument("--dim", default="fixed:30", help="dim policy (default fixed:30)")
    hdh.add_argument("--repeats", type=int, default=10, help="averaging repeats")
    hdh.add_argument("--seed", type=int, default=0, help="base rng seed")
    hdh.add_argument("--out", help="also write the JSON result to this file")
    return parser


def _cmd_run(args) -> int:
    config = harness.config_from_json(args.config)
    overrides = {}
    if args.repeats is not None:
        overrides["repeats"] = args.repeats
    if args.dim is not None:
        overrides["dim"] = DimPolicy.parse(args.dim)
    if args.methods is not None:
        overrides["methods"] = tuple(m.strip() for m in args.methods.split(",") if m.strip())
    if args.seed is not None:
        overrides["rng_seed"] = args.seed
    if args.format is not None:
        overrides["format"] = args.format
    if args.workers is not None:
        overrides["workers"] = args.workers
    if args.out is not None:
        overrides["output_dir"] = args.out
    if overrides:
        config = dataclasses.replace(config, **overrides)
    report, path = harness.run_experiment(config, base_dir=Path(args.config).parent)
    summary = {
        "report": str(path),
        "pairs": len(report.pairs),
        "methods": list(report.methods),
        "repeats": report.repeats,
    }
    print(json.dumps(summary, indent=2))
    return 0


def _cmd_synth(args) -> int:
    spec_path = Path(args.spec)
    try:
        doc = json.loads(spec_path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigurationError(
            f"{spec_path}: invalid JSON at line {exc.lineno}: {exc.msg}"
        ) from None
    if not isinstance(doc, dict):
        raise ConfigurationError(f"{spec_path}: spec root must be a JSON object")
    unknown = set(doc) - _SYNTH_SPEC_KEYS
    if unknown:
        raise ConfigurationError(f"unknown synth spec keys {sorted(unknown)}")
    try:
        speeds = [float(s) for s in doc.pop("speeds_rpm")]
        per_class = int(doc.pop("per_class"))
    except KeyError as exc:
        raise ConfigurationError(f"synth spec is missing {exc}") from None
    if not speeds:
        raise ConfigurationError("speeds_rpm must be nonempty")
    base_seed = int(doc.pop("rng_seed", 0))
    domain_seeds = np.random.SeedSequence(base_seed).generate_state(len(speeds))
    out_root = Path(args.out)
    written = []
    for rpm, seed in zip(speeds, domain_seeds):
        spec = synth.SynthSpec(shaft_speed_rpm=rpm, fault_type="NO",
                               rng_seed=int(seed), **doc)
        dataset = synth.generate_condition_set(spec, per_class)
        name = f"rpm{rpm:g}"
        manifest = signal_io.write_dataset(dataset, out_root / name, name)
        written.append(str(manifest))
    print(json.dumps({"manifests": written}, indent=2))
    return 0


def _cmd_hdh(args) -> int:
    source = signal_io.build_dataset(signal_io.read_manifest(args.source))
    target = signal_io.build_dataset(signal_io.read_manifest(args.target))
    source_feat = featurize(source)
    target_feat = featurize(target).without_labels()
    space_s = subspace.pca_full(source_feat)
    space_t = subspace.pca_full(target_feat)
    d = subspace.select_dim(space_s.eigenvalues, space_t.eigenvalues,
                            DimPolicy.parse(args.dim))
    z_s = space_s.truncate(d)
    z_t = space_t.truncate(d)
    m = subspace.align(z_s, z_t)
    raw = divergence.estimate_hdh_repeated(
        source_feat, target_feat, base_seed=args.seed, repeats=args.repeats
    )
    aligned = divergence.estimate_hdh_repeated(
        source_feat, target_feat, base_seed=args.seed, repeats=args.repeats,
        source_z=z_s, target_z=z_t, m=m,
    )
    result = {
        "source": str(args.source),
        "target": str(args.target),
        "subspace_dim": d,
        "hdh_raw_features": harness.divergence_to_dict(raw),
        "hdh_aligned": harness.divergence_to_dict(aligned),
    }
    text = json.dumps(result, indent=2)
    print(text)
    if args.out:
        Path(args.out).write_text(text + "\n", encoding="utf-8")
    return 0


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    handlers = {"run": _cmd_run, "synth": _cmd_synth, "hdh": _cmd_hdh}
    try:
        return handlers[args.command](args)
    except DiagnosisError as exc:
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}),
              file=sys.stderr)
        return 2
    except OSError as exc:
        print(json.dumps({"error": "OSError", "message": str(exc)}),
              file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
