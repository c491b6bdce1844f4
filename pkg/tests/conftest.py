import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from labench.grids import Mask, Volume

settings.register_profile(
    "labench",
    max_examples=25,
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("labench")


def mask_from(bits, spacing=(1.0, 1.0, 1.0)) -> Mask:
    return Mask(np.asarray(bits, dtype=bool), spacing)


def volume_from(data, spacing=(1.0, 1.0, 1.0), dtype=np.float32) -> Volume:
    return Volume(np.asarray(data, dtype=dtype), spacing)


def random_blob_mask(rng, dims=(24, 24, 24), spacing=(1.0, 1.0, 1.0)) -> Mask:
    """Random ellipsoid-ish blob with a rough surface; always non-empty."""
    nx, ny, nz = dims
    center = rng.uniform(0.3, 0.7, size=3) * [nx, ny, nz]
    radii = rng.uniform(0.15, 0.35, size=3) * [nx, ny, nz]
    x, y, z = np.meshgrid(
        np.arange(nx), np.arange(ny), np.arange(nz), indexing="ij"
    )
    q = (
        ((x - center[0]) / radii[0]) ** 2
        + ((y - center[1]) / radii[1]) ** 2
        + ((z - center[2]) / radii[2]) ** 2
    )
    bits = q <= 1.0 + 0.35 * rng.standard_normal(dims)
    if not bits.any():
        bits[tuple(int(c) for c in center)] = True
    return Mask(bits, spacing)


@pytest.fixture
def rng():
    return np.random.default_rng(20180827)
