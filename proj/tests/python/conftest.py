import os
import pathlib

import pytest

ROOT = pathlib.Path(__file__).resolve().parents[2]


@pytest.fixture(scope="session")
def cli():
    path = pathlib.Path(os.environ.get("VPDIRAC_CLI", ROOT / "build" / "tools" / "vpdirac"))
    if not path.exists():
        pytest.skip(f"command line tool not built at {path}")
    return str(path)
