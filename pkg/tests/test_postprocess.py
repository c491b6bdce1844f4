import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from labench.grids import Mask
from labench.postprocess import (
    StructuringElement,
    close_mask,
    dilate,
    erode,
    largest_component,
    open_mask,
    smooth_surface,
)

from conftest import mask_from


def _flood_fill_components(bits, connectivity):
    """Independent component enumeration by explicit flood fill."""
    if connectivity == 6:
        neighbors = [(1, 0, 0), (-1, 0, 0), (0, 1, 0), (0, -1, 0), (0, 0, 1), (0, 0, -1)]
    else:
        neighbors = [
            (dx, dy, dz)
            for dx in (-1, 0, 1)
            for dy in (-1, 0, 1)
            for dz in (-1, 0, 1)
            if (dx, dy, dz) != (0, 0, 0)
        ]
    seen = np.zeros_like(bits, dtype=bool)
    components = []
    nx, ny, nz = bits.shape
    for start in zip(*np.nonzero(bits)):
        if seen[start]:
            continue
        stack, comp = [start], set()
        seen[start] = True
        while stack:
            x, y, z = stack.pop()
            comp.add((x, y, z))
            for dx, dy, dz in neighbors:
                j = (x + dx, y + dy, z + dz)
                if 0 <= j[0] < nx and 0 <= j[1] < ny and 0 <= j[2] < nz:
                    if bits[j] and not seen[j]:
                        seen[j] = True
                        stack.append(j)
        components.append(comp)
    return components


def test_largest_component_single_passes_through():
    bits = np.zeros((6, 6, 6), dtype=bool)
    bits[1:4, 1:4, 1:4] = True
    m = mask_from(bits)
    assert largest_component(m) == m


def test_largest_component_keeps_bigger(rng):
    bits = np.zeros((12, 12, 6), dtype=bool)
    bits[0:10, 0, 0] = True  # 10 voxels
    bits[0:5, 6, 3] = True  # 5 voxels
    out = largest_component(mask_from(bits), connectivity=6)
    comps = _flood_fill_components(bits, 6)
    expected = max(comps, key=len)
    assert set(map(tuple, np.argwhere(out.bits))) == expected


def test_diagonal_connectivity_difference():
    bits = np.zeros((4, 4, 4), dtype=bool)
    bits[1, 1, 1] = bits[2, 2, 2] = True  # touch only diagonally
    assert len(_flood_fill_components(bits, 26)) == 1
    assert len(_flood_fill_components(bits, 6)) == 2
    m = mask_from(bits)
    assert largest_component(m, connectivity=26).count == 2
    assert largest_component(m, connectivity=6).count == 1


def test_largest_component_tie_breaks_by_linear_index():
    bits = np.zeros((8, 4, 4), dtype=bool)
    bits[6, 0, 0] = True  # linear index 6
    bits[0, 0, 1] = True  # linear index 32: larger despite lower x? no: 0 + 0 + 1*32
    out = largest_component(mask_from(bits), connectivity=6)
    assert out.count == 1
    assert out.bits[6, 0, 0]


def test_largest_component_empty():
    e = mask_from(np.zeros((4, 4, 4)))
    assert largest_component(e) == e


def test_dilate_erode_empty():
    e = mask_from(np.zeros((4, 4, 4)))
    assert dilate(e) == e
    assert erode(e) == e


def test_single_voxel_cross_dilation_is_seven():
    bits = np.zeros((5, 5, 5), dtype=bool)
    bits[2, 2, 2] = True
    out = dilate(mask_from(bits), StructuringElement("cross", 1))
    assert out.count == 7
    expected = {(2, 2, 2), (1, 2, 2), (3, 2, 2), (2, 1, 2), (2, 3, 2), (2, 2, 1), (2, 2, 3)}
    assert set(map(tuple, np.argwhere(out.bits))) == expected


def test_cube_element_dilation_is_27():
    bits = np.zeros((5, 5, 5), dtype=bool)
    bits[2, 2, 2] = True
    assert dilate(mask_from(bits), StructuringElement("cube", 1)).count == 27


def test_closing_restores_solid_cube():
    bits = np.zeros((9, 9, 9), dtype=bool)
    bits[2:7, 2:7, 2:7] = True
    m = mask_from(bits)
    assert close_mask(m, StructuringElement("cross", 1)) == m


def test_erosion_treats_border_as_background():
    full = mask_from(np.ones((4, 4, 4)))
    out = erode(full, StructuringElement("cross", 1))
    # the outer shell erodes away; only the 2x2x2 core survives
    assert out.count == 8
    assert out.bits[1:3, 1:3, 1:3].all()


@given(st.integers(0, 2**31 - 1), st.sampled_from(["cross", "cube"]), st.integers(1, 2))
def test_duality_erode_is_complement_dilate(seed, kind, radius):
    rng = np.random.default_rng(seed)
    bits = rng.random((16, 16, 16)) < 0.5
    se = StructuringElement(kind, radius)
    eroded = erode(mask_from(bits), se)

    # complement-dilate with the border treated as foreground of the
    # complement: pad, dilate, crop back
    padded = np.pad(~bits, radius, constant_values=True)
    dilated = dilate(mask_from(padded), se)
    r = radius
    expected = ~dilated.bits[r:-r, r:-r, r:-r]
    assert np.array_equal(eroded.bits, expected)


@given(st.integers(0, 2**31 - 1), st.sampled_from(["cross", "cube"]))
def test_extensivity_chain(seed, kind):
    rng = np.random.default_rng(seed)
    bits = rng.random((12, 12, 12)) < 0.3
    m = mask_from(bits)
    se = StructuringElement(kind, 1)
    d, e = dilate(m, se), erode(m, se)
    assert np.all(~m.bits | d.bits)  # m subset of dilate(m)
    assert np.all(~e.bits | m.bits)  # erode(m) subset of m
    assert np.all(~m.bits | close_mask(m, se).bits)  # closing extensive
    assert np.all(~open_mask(m, se).bits | m.bits)  # opening anti-extensive


@given(st.integers(0, 2**31 - 1))
def test_largest_component_is_connected_subset(seed):
    rng = np.random.default_rng(seed)
    bits = rng.random((10, 10, 10)) < 0.2
    m = mask_from(bits)
    out = largest_component(m, connectivity=26)
    assert np.all(~out.bits | m.bits)
    if not out.is_empty:
        assert len(_flood_fill_components(out.bits, 26)) == 1


def test_smoothing_halfspace_unchanged():
    bits = np.zeros((8, 8, 8), dtype=bool)
    bits[:, :, 0:4] = True
    m = mask_from(bits)
    assert smooth_surface(m, iterations=1) == m
    assert smooth_surface(m, iterations=3) == m


def test_smoothing_removes_isolated_voxel():
    bits = np.zeros((7, 7, 7), dtype=bool)
    bits[3, 3, 3] = True
    assert smooth_surface(mask_from(bits), 1).is_empty
    # isolated voxel at a corner disappears too (replicated border)
    bits = np.zeros((7, 7, 7), dtype=bool)
    bits[0, 0, 0] = True
    assert smooth_surface(mask_from(bits), 1).is_empty


def test_smoothing_fills_interior_hole():
    bits = np.ones((7, 7, 7), dtype=bool)
    bits[3, 3, 3] = False
    out = smooth_surface(mask_from(bits), 1)
    assert out.bits[3, 3, 3]
    assert out.count == 7 * 7 * 7


def test_operators_preserve_binarity_and_empty_safety(rng):
    bits = rng.random((8, 8, 8)) < 0.4
    m = mask_from(bits)
    for op in (
        lambda x: dilate(x),
        lambda x: erode(x),
        lambda x: largest_component(x),
        lambda x: smooth_surface(x),
    ):
        out = op(m)
        assert out.bits.dtype == np.bool_
        empty = op(mask_from(np.zeros((8, 8, 8))))
        assert empty.count == 0
