"""Put the package sources, the runners and the shared oracles on the import path."""

import sys
from pathlib import Path

TEST_ROOT = Path(__file__).resolve().parent
REPO_ROOT = TEST_ROOT.parent

for path in (REPO_ROOT / "modules", TEST_ROOT, TEST_ROOT / "parcad", TEST_ROOT / "quality"):
    if str(path) not in sys.path:
        sys.path.insert(0, str(path))
