import sys
from pathlib import Path

import numpy as np
import pytest

ROOT_DIR = Path(__file__).resolve().parent.parent
SRC_DIR = ROOT_DIR / "src"

# 确保 src 布局可导入（用于 `import encoding` 等）
src_str = str(SRC_DIR)
if SRC_DIR.exists() and src_str not in sys.path:
    sys.path.insert(0, src_str)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(0)


@pytest.fixture
def repo_root(monkeypatch: pytest.MonkeyPatch) -> Path:
    """在仓库根目录下运行，使默认的 configs/base.yaml 生效。"""
    monkeypatch.chdir(ROOT_DIR)
    return ROOT_DIR
