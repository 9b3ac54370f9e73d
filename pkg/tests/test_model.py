import numpy as np
import pytest

from vidsr.model import (BlockNode, BlockPartition, FrameSyntax, GopConfig, Plane,
                         QuarterPelMV, block_region_view)


def test_picture_plane_dtype_enforced():
    with pytest.raises(ValueError):
        Plane(np.zeros((4, 4), dtype=np.int16))


def test_residual_range_enforced():
    with pytest.raises(ValueError):
        Plane.residual(np.full((2, 2), 300, dtype=np.int16))
    Plane.residual(np.full((2, 2), -255, dtype=np.int16))  # boundary ok


def test_plane_is_read_only():
    p = Plane.picture(np.zeros((4, 4), dtype=np.uint8))
    with pytest.raises(ValueError):
        p.data[0, 0] = 1


def test_plane_does_not_alias_source_buffer():
    src = np.zeros((4, 4), dtype=np.uint8)
    p = Plane.picture(src)
    src[0, 0] = 99
    assert p.data[0, 0] == 0


def test_block_region_view_corners():
    plane = Plane.picture(np.arange(256, dtype=np.uint8).reshape(16, 16))
    top_left = block_region_view(plane, BlockNode(0, 0, 8, 8))
    assert top_left.shape == (8, 8)
    assert np.array_equal(top_left, plane.data[:8, :8])
    bottom_right = block_region_view(plane, BlockNode(8, 8, 8, 8))
    assert np.array_equal(bottom_right, plane.data[8:, 8:])


def test_block_region_view_out_of_bounds():
    plane = Plane.picture(np.zeros((16, 16), dtype=np.uint8))
    with pytest.raises(ValueError):
        block_region_view(plane, BlockNode(12, 12, 8, 8))


def test_block_region_view_is_a_view():
    plane = Plane.picture(np.zeros((16, 16), dtype=np.uint8))
    region = block_region_view(plane, BlockNode(4, 4, 8, 8))
    assert region.base is plane.data


def test_partition_must_tile_exactly():
    nodes = [BlockNode(0, 0, 8, 8), BlockNode(8, 0, 8, 8)]
    BlockPartition(16, 8, tuple(nodes))
    with pytest.raises(ValueError):  # hole
        BlockPartition(16, 16, tuple(nodes))
    with pytest.raises(ValueError):  # overlap
        BlockPartition(16, 8, (BlockNode(0, 0, 8, 8), BlockNode(4, 0, 12, 8)))


def test_partition_pixel_count_matches_frame():
    nodes = (BlockNode(0, 0, 8, 8), BlockNode(8, 0, 4, 8), BlockNode(12, 0, 4, 8))
    part = BlockPartition(16, 8, nodes)
    assert sum(n.n_pixels for n in part) == part.frame_width * part.frame_height


def test_frame_syntax_rejects_nonzero_skip_residual():
    res = np.zeros((8, 8), dtype=np.int16)
    res[1, 1] = 5
    part = BlockPartition(8, 8, (BlockNode(0, 0, 8, 8, skip=True),))
    with pytest.raises(ValueError):
        FrameSyntax(1, part, Plane.residual(res))


def test_size_class_of_clipped_blocks():
    assert BlockNode(0, 0, 64, 64).size_class() == 64
    assert BlockNode(320, 0, 36, 64).size_class() == 64
    assert BlockNode(0, 0, 12, 16).size_class() == 16
    assert BlockNode(0, 0, 8, 4).size_class() == 8


def test_gop_keyframes():
    gop = GopConfig(4)
    assert [gop.is_keyframe(i) for i in range(6)] == [True, False, False, False, True, False]
    with pytest.raises(ValueError):
        GopConfig(0)


def test_mv_helpers():
    assert QuarterPelMV(0, 0).is_zero()
    assert QuarterPelMV(4, -8).is_integer()
    assert not QuarterPelMV(3, 0).is_integer()
    assert QuarterPelMV(1, -2).scaled(2) == QuarterPelMV(2, -4)
