import os
import pathlib

import coag2d


def pytest_report_header(config):
    return f"coag2d from {pathlib.Path(coag2d.__file__).parent}"


if os.environ.get("COAG2D_EXPECT_STAGED"):
    # Under ctest the build-tree copy must win over any installed package.
    assert "pkg" in pathlib.Path(coag2d.__file__).parts, coag2d.__file__
