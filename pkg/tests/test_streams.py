import numpy as np

from rtgraph.streams import block_sizes, map_indexed, mc_mean, stream


def test_streams_are_reproducible_and_distinct():
    a = stream(5, 1).random(4)
    assert np.array_equal(a, stream(5, 1).random(4))
    assert not np.array_equal(a, stream(5, 2).random(4))
    assert not np.array_equal(a, stream(5, 1, 0).random(4))


def test_map_indexed_preserves_order():
    assert map_indexed(lambda i: i * i, 6, threads=3) == [0, 1, 4, 9, 16, 25]


def test_block_sizes():
    assert block_sizes(10, 4) == [4, 4, 2]
    assert block_sizes(8, 4) == [4, 4]


def test_mc_mean_independent_of_threads():
    def draw(rng, size):
        return rng.random((size, 2))
    a = mc_mean(draw, 50_000, 3, block=4096, threads=1)
    b = mc_mean(draw, 50_000, 3, block=4096, threads=4)
    assert np.array_equal(a, b)
    assert np.all(np.abs(a[:, 0] - 0.5) < 4 * a[:, 1])
