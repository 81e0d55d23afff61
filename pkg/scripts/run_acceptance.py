"""Run the acceptance criteria and show one PASS/FAIL line per criterion."""

import os
import sys

import pytest

if __name__ == "__main__":
    here = os.path.dirname(os.path.abspath(__file__))
    target = os.path.join(here, "..", "tests", "test_acceptance.py")
    sys.exit(pytest.main(["-v", "-p", "no:cacheprovider", target, *sys.argv[1:]]))
