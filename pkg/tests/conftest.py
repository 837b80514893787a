import io
import sys

import numpy as np
import pytest
from PIL import Image


def random_unit_quats(rng, n):
    q = rng.normal(size=(n, 4))
    q /= np.linalg.norm(q, axis=1)[:, None]
    q[q[:, 0] < 0] *= -1
    return q


def rodrigues(axis, angle):
    """Rotation matrix from axis-angle, written out independently of the package."""
    k = np.asarray(axis, dtype=float)
    k = k / np.linalg.norm(k)
    kx = np.array([[0, -k[2], k[1]], [k[2], 0, -k[0]], [-k[1], k[0], 0]])
    return np.eye(3) + np.sin(angle) * kx + (1 - np.cos(angle)) * kx @ kx


def make_jpeg(size=(16, 12), color=(200, 40, 90), make=None):
    img = Image.new("RGB", size, color)
    buf = io.BytesIO()
    if make is None:
        img.save(buf, "JPEG", quality=90)
    else:
        exif = Image.Exif()
        exif[0x010F] = make  # Make
        exif[0x0110] = "SimCam 1"  # Model
        img.save(buf, "JPEG", quality=90, exif=exif.tobytes())
    return buf.getvalue()


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def plain_jpeg():
    return make_jpeg()


@pytest.fixture
def camera_jpeg():
    return make_jpeg(make="Blender Cycles")


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in mod.format_results():
        terminalreporter.write_line(line)
