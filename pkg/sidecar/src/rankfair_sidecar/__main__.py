"""Entry point: serve one encoder per process.

``RANKFAIR_MODEL`` overrides ``--model``, so orchestration can pin the
model without touching command lines.
"""

from __future__ import annotations

import argparse
import os

import uvicorn

from .app import DEFAULT_BATCH_LIMIT, create_app
from .encoders import make_encoder


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="rankfair-sidecar", description=__doc__)
    parser.add_argument(
        "--model",
        default="hash:384",
        help="encoder descriptor: st:<sentence-transformers id> or hash:<dim>",
    )
    parser.add_argument("--host", default="127.0.0.1")
    parser.add_argument("--port", type=int, default=8601)
    parser.add_argument("--batch-limit", type=int, default=DEFAULT_BATCH_LIMIT)
    parser.add_argument("--log-level", default="warning")
    args = parser.parse_args(argv)

    model = os.environ.get("RANKFAIR_MODEL") or args.model
    app = create_app(
        encoder_factory=lambda: make_encoder(model), batch_limit=args.batch_limit
    )
    uvicorn.run(app, host=args.host, port=args.port, log_level=args.log_level)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
