"""Command-line front end.

Exit codes: 0 success, 1 usage or input error, 2 numerical blow-up,
3 verification failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

from .bench import BenchConfig, desk_config, run_benchmark
from .grf import GrfParams
from .hopss import HopssConfig
from .noise import NOISE_KINDS
from .pde import BlowUpError
from .pipeline import RECIPES, BaseConfig, recipe, regenerate, run_gen_base, run_hopss, run_mixup, verify_file
from .store import DatasetFormatError, canonical_json, export_csv, open_dataset

log = logging.getLogger("hopss")

EXIT_OK, EXIT_USAGE, EXIT_BLOWUP, EXIT_VERIFY = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--seed", type=int, default=None, help="master seed")
    p.add_argument("--threads", type=int, default=1, help="worker threads (output does not depend on it)")
    p.add_argument("--config", type=Path, default=None, help="JSON generation block")
    p.add_argument("--out", type=Path, default=None, help="output path")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    parser = _Parser(prog="hopss", description="PDE training-data generation by homologous perturbation")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    g = sub.add_parser("gen-base", parents=[common], help="traditional generation and downsampling")
    g.add_argument("--pde", choices=sorted(RECIPES))
    g.add_argument("--n", type=int)
    g.add_argument("--length", type=float)
    g.add_argument("--nu", type=float)
    g.add_argument("--conservative", action="store_true", help="NS advection in flux form")
    g.add_argument("--reynolds", type=float)
    g.add_argument("--lambda-adv", type=float)
    g.add_argument("--alpha-nl", type=float)
    g.add_argument("--beta-disp", type=float)
    g.add_argument("--dt", type=float)
    g.add_argument("--steps", type=int)
    g.add_argument("--stride", type=int)
    g.add_argument("--coarsen", type=int)
    g.add_argument("--count", type=int)
    for which in ("ic", "f"):
        for name in ("tau", "alpha", "sigma"):
            g.add_argument(f"--{which}-{name}", type=float)
    g.add_argument("--zero-ic", action="store_true", help="start every trajectory from rest")
    g.add_argument("--raw-forcing", action="store_true", help="store the subsampled fine forcing instead of R(u)")
    g.add_argument("--spectral-downsample", action="store_true", help="Fourier truncation instead of subsampling")

    h = sub.add_parser("hopss", parents=[common], help="homologous perturbation of a base set")
    h.add_argument("--base", type=Path)
    h.add_argument("--count", type=int)
    h.add_argument("--mu", type=float)
    h.add_argument("--noise", choices=NOISE_KINDS)
    h.add_argument("--sigma", type=float, help="absolute standard deviation of Gaussian noise")
    h.add_argument("--epsilon", type=float, help="noise level relative to max|u_i(t0)|")
    h.add_argument("--k-modes", type=int)
    h.add_argument("--cells", type=int)

    m = sub.add_parser("mixup", parents=[common], help="random normalised combinations of a base set")
    m.add_argument("--base", type=Path)
    m.add_argument("--count", type=int, default=1000)

    v = sub.add_parser("verify", parents=[common], help="discrete residual check")
    v.add_argument("--dataset", type=Path, required=True)
    v.add_argument("--tol", type=float, default=1e-8)
    v.add_argument("--base", type=Path, help="base set for the HOPSS consistency check")
    v.add_argument("--check-provenance", action="store_true", help="require --base and compare against it")

    b = sub.add_parser("bench", parents=[common], help="timing of traditional vs HOPSS generation")
    b.add_argument("--steps", type=int)
    b.add_argument("--n-base", type=int)
    b.add_argument("--n-new", type=int)
    b.add_argument("--tradition-count", type=int)
    b.add_argument("--tradition-measure", type=int)
    b.add_argument("--scaling-steps", type=int, nargs="*")

    e = sub.add_parser("export", parents=[common], help="one CSV per sample (1D datasets)")
    e.add_argument("--dataset", type=Path, required=True)
    e.add_argument("--format", choices=("csv",), default="csv")

    r = sub.add_parser("regenerate", parents=[common], help="rebuild a dataset from its manifest")
    r.add_argument("--dataset", type=Path, required=True)
    return parser


def _load_config(path: Path | None) -> dict:
    if path is None:
        return {}
    try:
        return json.loads(path.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from exc


def _require_out(args) -> Path:
    if args.out is None:
        raise UsageError(f"{args.command}: --out is required")
    return args.out


def _base_config(args) -> BaseConfig:
    conf = _load_config(args.config)
    kind = args.pde or conf.get("pde", {}).get("kind")
    if kind is None:
        raise UsageError("gen-base: --pde or a config with a pde block is required")
    cfg = BaseConfig.from_dict({**RECIPES[kind], **conf}) if conf else recipe(kind)
    pde = dict(cfg.pde)
    if pde["kind"] != kind:
        raise UsageError(f"gen-base: --pde {kind} conflicts with the config's {pde['kind']}")
    for flag, key in (("nu", "nu"), ("reynolds", "reynolds"), ("lambda_adv", "lambda_adv"),
                      ("alpha_nl", "alpha_nl"), ("beta_disp", "beta_disp")):
        value = getattr(args, flag)
        if value is not None:
            if key not in pde:
                raise UsageError(f"gen-base: --{flag.replace('_', '-')} does not apply to {kind}")
            pde[key] = value
    if args.conservative:
        if kind != "ns2d":
            raise UsageError("gen-base: --conservative applies to ns2d only")
        pde["conservative"] = True
    changes = {"pde": pde}
    for name in ("n", "length", "dt", "steps", "stride", "coarsen", "count", "seed"):
        value = getattr(args, name)
        if value is not None:
            changes[name] = value
    for which, key in (("ic", "ic"), ("f", "forcing")):
        current = getattr(cfg, key) or GrfParams(1.0, 2.5, 1.0)
        given = {name: getattr(args, f"{which}_{name}") for name in ("tau", "alpha", "sigma")}
        if any(v is not None for v in given.values()):
            changes[key] = GrfParams(**{k: (v if v is not None else getattr(current, k)) for k, v in given.items()})
    if args.zero_ic:
        changes["ic"] = None
    if args.raw_forcing:
        changes["forcing_mode"] = "raw"
    if args.spectral_downsample:
        changes["spatial_method"] = "spectral"
    return replace(cfg, **changes)


def _hopss_config(args) -> HopssConfig:
    conf = _load_config(args.config)
    cfg = HopssConfig.from_dict(conf["hopss"]) if "hopss" in conf else HopssConfig()
    noise = cfg.noise
    if args.noise is not None:
        noise = replace(noise, kind=args.noise)
    if args.epsilon is not None:
        noise = replace(noise, epsilon=args.epsilon, std=None)
    if args.sigma is not None:
        if noise.kind != "gaussian":
            raise UsageError("hopss: --sigma applies to gaussian noise only")
        noise = replace(noise, std=args.sigma)
    if noise.kind != "gaussian" and noise.std is not None:
        noise = replace(noise, std=None)
    if args.k_modes is not None:
        noise = replace(noise, k_modes=args.k_modes)
    if args.cells is not None:
        noise = replace(noise, cells=args.cells)
    changes = {"noise": noise}
    if args.mu is not None:
        changes["mu"] = args.mu
    if args.count is not None:
        changes["count"] = args.count
    return replace(cfg, **changes)


def _seed(args, conf: dict | None = None, default: int = 0) -> int:
    if args.seed is not None:
        return args.seed
    if conf and "seed" in conf:
        return int(conf["seed"])
    return default


def _cmd_gen_base(args) -> int:
    cfg = _base_config(args)
    out = _require_out(args)
    manifest = run_gen_base(cfg, out, args.threads)
    log.info("gen-base: wrote %d samples to %s", manifest.sample_count, out)
    return EXIT_OK


def _cmd_hopss(args) -> int:
    if args.base is None:
        raise UsageError("hopss: --base is required")
    config = _hopss_config(args)
    out = _require_out(args)
    manifest = run_hopss(args.base, config, _seed(args, _load_config(args.config)), out, args.threads)
    log.info("hopss: wrote %d samples to %s", manifest.sample_count, out)
    return EXIT_OK


def _cmd_mixup(args) -> int:
    if args.base is None:
        raise UsageError("mixup: --base is required")
    out = _require_out(args)
    manifest = run_mixup(args.base, args.count, _seed(args, _load_config(args.config)), out)
    log.info("mixup: wrote %d samples to %s", manifest.sample_count, out)
    return EXIT_OK


def _cmd_verify(args) -> int:
    if args.check_provenance and args.base is None:
        raise UsageError("verify: --check-provenance needs --base")
    report = verify_file(args.dataset, args.tol, args.base)
    summary = report.to_dict()
    if args.out is not None:
        args.out.write_text(canonical_json(summary) + "\n")
    print(
        f"verify: {summary['passed']}/{summary['sample_count']} samples within tol {args.tol:g} "
        f"(max residual {summary['max_residual']:.3e})"
    )
    if not report.ok:
        print(f"verify: failing samples {report.failures[:20]}", file=sys.stderr)
        return EXIT_VERIFY
    return EXIT_OK


def _cmd_bench(args) -> int:
    conf = _load_config(args.config)
    config = BenchConfig.from_dict(conf) if conf else BenchConfig(base=desk_config())
    changes = {}
    base = config.base
    if args.steps is not None:
        base = replace(base, steps=args.steps, stride=args.steps // (base.frames - 1))
    if args.n_base is not None:
        base = replace(base, count=args.n_base)
    if args.seed is not None:
        changes["seed"] = args.seed
    if args.n_new is not None:
        changes["hopss"] = replace(config.hopss, count=args.n_new)
    if args.tradition_count is not None:
        changes["tradition_count"] = args.tradition_count
    if args.tradition_measure is not None:
        changes["tradition_measure"] = args.tradition_measure
    if args.scaling_steps:
        changes["scaling_steps"] = tuple(args.scaling_steps)
    config = replace(config, base=base, threads=args.threads, **changes)
    report = run_benchmark(config)
    text = report.to_json()
    if args.out is not None:
        args.out.write_text(text + "\n")
    print(f"bench: speedup {report.speedup:.2f}x ({report.note})")
    return EXIT_OK


def _cmd_export(args) -> int:
    out = _require_out(args)
    written = export_csv(args.dataset, out)
    log.info("export: wrote %d CSV files to %s", len(written), out)
    return EXIT_OK


def _cmd_regenerate(args) -> int:
    out = _require_out(args)
    manifest, _ = open_dataset(args.dataset)
    regenerate(manifest.generation, out, args.threads)
    return EXIT_OK


COMMANDS = {
    "gen-base": _cmd_gen_base,
    "hopss": _cmd_hopss,
    "mixup": _cmd_mixup,
    "verify": _cmd_verify,
    "bench": _cmd_bench,
    "export": _cmd_export,
    "regenerate": _cmd_regenerate,
}


def main(argv=None) -> int:
    parser = build_parser()
    stage = "arguments"
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            raise UsageError("hopss: a subcommand is required")
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
        if args.threads < 1:
            raise UsageError(f"{args.command}: --threads must be >= 1")
        stage = args.command
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except BlowUpError as exc:
        print(f"error [{stage}]: {exc}", file=sys.stderr)
        return EXIT_BLOWUP
    except (ValueError, DatasetFormatError, OSError, KeyError) as exc:
        print(f"error [{stage}]: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
