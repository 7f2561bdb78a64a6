import json

import numpy as np
import pytest

from src.fields.analytic import CurlPotentialField, make_standard_field
from src.fields.grid import random_solenoidal
from src.main import main


@pytest.fixture
def abc():
    return make_standard_field("abc")


@pytest.fixture
def taylor_green():
    return make_standard_field("taylor_green")


@pytest.fixture
def swirl():
    """A single compactly supported swirl about an axis parallel to e3."""
    return CurlPotentialField(
        centers=np.array([[0.3, 0.1, 0.0]]),
        axes=np.array([[0.0, 0.0, 1.0]]),
        radius=1.0,
        power=8,
    )


@pytest.fixture
def random_grid():
    return random_solenoidal(seed=7, k_max=3, amplitude=1.0, n=16)


@pytest.fixture
def write_config(tmp_path):
    def _write(payload, name="run.json"):
        path = tmp_path / name
        path.write_text(json.dumps(payload))
        return path

    return _write


@pytest.fixture
def run_cli(capsys):
    """Run the command line in-process; returns (exit code, stdout)."""
    def _run(*argv):
        code = main([str(a) for a in argv])
        return code, capsys.readouterr().out

    return _run
