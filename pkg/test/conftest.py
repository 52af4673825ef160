from typing import Iterator

import pytest
import structlog


@pytest.fixture(autouse=True)
def _reset_structlog() -> Iterator[None]:
    """CLI tests configure structlog onto pytest's captured stderr, which is closed afterwards; undo that per test."""
    yield
    structlog.reset_defaults()
