#!/usr/bin/env python3
"""
Development runner with detailed logging on stdout.

    python dev.py terrace --reaction data/example_c.json --out out/
"""

import os
import sys

from dotenv import load_dotenv

load_dotenv()

# Development logging unless .env or the shell asks for something else
os.environ.setdefault("TERRACE_LOG", "debug")

from app.cli import run  # noqa: E402

if __name__ == "__main__":
    sys.exit(run(sys.argv[1:]))
