#!/usr/bin/env python
"""Run the condpoisson test suite; arguments are passed through to pytest."""
import sys

import pytest

# -ra lists skipped and failed tests at the end of the run
DEFAULT_ARGS = ["tests", "-ra"]

if __name__ == "__main__":
    sys.exit(pytest.main(sys.argv[1:] or DEFAULT_ARGS))
