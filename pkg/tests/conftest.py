"""
Pytest configuration and fixtures for testing
"""

import pytest
import sys
from pathlib import Path

import numpy as np

# Add parent directory to path so we can import the modules
sys.path.insert(0, str(Path(__file__).parent.parent))

CONFIG_DIR = Path(__file__).parent.parent / "configs"


@pytest.fixture
def app():
    """Create Flask app for testing"""
    from app import app as flask_app, limiter

    # Set testing configuration
    flask_app.config['TESTING'] = True

    # Each test starts with fresh rate-limit counters
    if limiter is not None:
        limiter.reset()

    yield flask_app


@pytest.fixture
def client(app):
    """Create test client"""
    return app.test_client()


@pytest.fixture
def cli_runner():
    """Create click CLI runner"""
    from click.testing import CliRunner
    return CliRunner()


@pytest.fixture
def rng():
    """Seeded random generator"""
    return np.random.default_rng(20240517)


@pytest.fixture
def tmp_out(tmp_path):
    """Output directory for CLI artifacts"""
    out = tmp_path / "out"
    out.mkdir()
    return out


@pytest.fixture
def config_dir():
    """Directory holding the example run configurations"""
    return CONFIG_DIR
