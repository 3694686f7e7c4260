import os
import subprocess
import sys

import pytest

from frodo._backend import available_backends


def _backend_in_subprocess(env_extra):
    env = dict(os.environ, **env_extra)
    out = subprocess.run([sys.executable, "-c", "import frodo; print(frodo.BACKEND)"],
                         env=env, capture_output=True, text=True, check=True)
    return out.stdout.strip()


def test_env_var_forces_pure_python():
    assert _backend_in_subprocess({"FRODO_PURE_PYTHON": "1"}) == "python"


def test_compiled_backend_preferred_when_built():
    if "cython" not in available_backends():
        pytest.skip("compiled extension not built")
    env = {k: v for k, v in os.environ.items() if k != "FRODO_PURE_PYTHON"}
    out = subprocess.run([sys.executable, "-c", "import frodo; print(frodo.BACKEND)"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "cython"
