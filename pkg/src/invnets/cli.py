"""Command-line front end.

One entry point with five subcommands:

    invnets run      --config scene.toml [--seed N] [--out DIR]
    invnets simulate [ir|acoustic]  [--config ...] [--seed ...] [--out ...]
    invnets invert   [ir|acoustic]  ...
    invnets train    [lista|transform] ...
    invnets pinn     [ode|pde] ...

``run`` executes whatever experiment the config names; the family
subcommands default to a bundled demo scene and check that an explicit
config belongs to the family.  Exit status 0 on success, 2 on usage or
configuration errors, 1 on runtime failures.
"""

import argparse
import sys
from importlib import resources

from invnets import config as cfglib
from invnets.errors import ConfigError, InvnetsError
from invnets.experiments import run_experiment

_FAMILIES = {
    "simulate": {"ir": "ir-simulate", "acoustic": "acoustic-bf"},
    "invert": {"ir": "ir-invert", "acoustic": "acoustic-deconv"},
    "train": {"lista": "lista-vs-ista", "transform": "transform-denoise"},
    "pinn": {"ode": "pinn-ode", "pde": "pinn-pde"},
}

_BUNDLED = {
    "ir-simulate": "ir_simulate.toml",
    "ir-invert": "ir_invert.toml",
    "acoustic-bf": "acoustic_bf.toml",
    "acoustic-deconv": "acoustic_deconv.toml",
    "lista-vs-ista": "lista_vs_ista.toml",
    "transform-denoise": "transform_denoise.toml",
    "pinn-ode": "pinn_ode.toml",
    "pinn-pde": "pinn_pde.toml",
}


def bundled_config_path(name):
    """Filesystem path of the bundled demo scene for an experiment."""
    return str(resources.files("invnets").joinpath("configs", _BUNDLED[name]))


def _add_common(sub):
    sub.add_argument("--config", help="TOML scene/experiment file")
    sub.add_argument("--seed", type=int, help="override the config seed")
    sub.add_argument("--out", help="output directory")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="invnets",
        description="structured networks for inverse problems: simulation, "
        "inversion, training and physics-informed runs",
    )
    subs = parser.add_subparsers(dest="command", required=True)
    run = subs.add_parser("run", help="run the experiment a config names")
    run.add_argument("--config", required=True)
    run.add_argument("--seed", type=int)
    run.add_argument("--out")
    for family, variants in _FAMILIES.items():
        sub = subs.add_parser(family, help=f"{'/'.join(variants)} experiments")
        sub.add_argument(
            "variant", nargs="?", default=next(iter(variants)), choices=sorted(variants)
        )
        _add_common(sub)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "run":
            cfg = cfglib.load_config(args.config)
            name = cfglib.experiment_name(cfg)
        else:
            name = _FAMILIES[args.command][args.variant]
            path = args.config or bundled_config_path(name)
            cfg = cfglib.load_config(path)
            actual = cfglib.experiment_name(cfg)
            if actual != name:
                raise ConfigError(
                    f"config names experiment {actual!r} but the "
                    f"{args.command} {args.variant} subcommand runs {name!r}"
                )
        name, manifest = run_experiment(cfg, out_dir=args.out, seed=args.seed)
    except ConfigError as exc:
        print(f"invnets: {exc}", file=sys.stderr)
        return 2
    except InvnetsError as exc:
        print(f"invnets: {exc}", file=sys.stderr)
        return 1
    print(f"{name}: wrote {len(manifest)} files")
    for fname, dig in manifest:
        print(f"  {fname}  {dig[:16]}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
