#!/usr/bin/python3
import argparse
import logging
import sys

from .application import ConfigError, CqiStudioApplication
from .core import DomainError

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DOMAIN = 3


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cqistudio",
        description="Standard and collective few-body interferometry simulator",
    )
    parser.add_argument("--config", required=True, help="YAML run configuration")
    parser.add_argument("--out", help="CSV output path, overrides the configuration")
    parser.add_argument(
        "--units", choices=("natural", "si"), help="unit mode, overrides the configuration"
    )
    parser.add_argument("--quiet", action="store_true", help="only log warnings and errors")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = make_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.WARNING if args.quiet else logging.INFO,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
    logger = logging.getLogger(__name__)

    app = CqiStudioApplication(units=args.units, output=args.out)
    try:
        config = app.load_file(args.config)
        app.run(config)
    except ConfigError as e:
        logger.error("Configuration error: %s", e)
        return EXIT_CONFIG
    except DomainError as e:
        logger.error("%s", e)
        return EXIT_DOMAIN
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
