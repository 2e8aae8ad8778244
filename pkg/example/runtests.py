#!/usr/bin/env python
import os
import sys
import unittest

if __name__ == "__main__":
    here = os.path.dirname(os.path.abspath(__file__))
    sys.path.insert(0, os.path.dirname(here))
    sys.path.insert(0, here)
    os.environ.setdefault("AIRY_BOUNCE_THREADS", "2")
    labels = sys.argv[1:]
    loader = unittest.defaultTestLoader
    if labels:
        suite = loader.loadTestsFromNames(labels)
    else:
        suite = loader.discover(here, pattern='tests.py', top_level_dir=here)
    result = unittest.TextTestRunner(verbosity=int(os.environ.get("VERBOSITY", 1))).run(suite)
    sys.exit(0 if result.wasSuccessful() else 1)
