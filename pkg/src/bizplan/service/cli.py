"""Command line launcher for the HTTP service."""

from __future__ import annotations

import argparse
import logging
import sys
from typing import Optional

import uvicorn

from .app import create_app
from .config import load_settings

logger = logging.getLogger(__name__)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bizplan-server", description="Run the plan service.")
    parser.add_argument("--config", metavar="PATH", help="JSON settings file")
    parser.add_argument(
        "--mock",
        action="store_true",
        help="force the deterministic offline provider regardless of other settings",
    )
    parser.add_argument("--port", type=int, help="listen port (overrides config)")
    return parser


def main(argv: Optional[list[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    settings = load_settings(args.config, mock=args.mock, port=args.port)
    if settings.generated_token:
        # Printed once at startup; never persisted in plain text.
        logger.info("generated auth token: %s", settings.auth_token)
    app = create_app(settings)
    uvicorn.run(app, host=settings.bind_addr, port=settings.port, log_level="warning")
    return 0


if __name__ == "__main__":
    sys.exit(main())
