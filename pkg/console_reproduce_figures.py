import logging
import os
import sys
from dataclasses import replace
from pathlib import Path

from dotenv import load_dotenv

from paw1d.cli import RunConfig, cmd_compare, cmd_sweep
from paw1d.exceptions import PawError

load_dotenv()
logging.basicConfig(level=os.getenv('LOG_LEVEL', 'INFO').upper())


def reproduce_figures(config: RunConfig, out_dir: Path):
    """The four convergence studies, one CSV and gnuplot script each."""
    studies = [
        ("figure_paw_trunc", cmd_sweep, dict(method="paw_trunc", M=512)),
        ("figure_paw_pseudo", cmd_sweep, dict(method="paw_pseudo", M=1000)),
        ("figure_paw_pseudo_odd", cmd_sweep, dict(method="paw_pseudo_odd", M=1000, N_grid=(1, 2))),
        ("figure_paw_vpaw", cmd_compare, dict(d=6, eta=0.1)),
    ]
    for name, command, overrides in studies:
        study = replace(config, output=str(out_dir / f"{name}.csv"), plot=True, **overrides)
        logging.info(f"Running {name}")
        print(command(study.validate(command.__name__.removeprefix("cmd_"))))


def main():
    if len(sys.argv) > 1:
        config_file = sys.argv[1]
    else:
        config_file = input("Enter the path to the config file (blank for defaults):\n\t-> ").replace('"', '').replace("'", "").strip()

    if config_file and not os.path.exists(config_file):
        logging.error(f"Config file does not exist: {config_file}")
        sys.exit(2)

    try:
        config = RunConfig.from_file(config_file) if config_file else RunConfig()
        reproduce_figures(config, Path(config_file).parent if config_file else Path.cwd())
    except PawError as e:
        logging.error(f"{type(e).__name__}: {e.message}")
        sys.exit(e.exit_code)


if __name__ == "__main__":
    main()
