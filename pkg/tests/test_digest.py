import random

import pytest

from griddisp.digest import FNV_OFFSET, fnv1a64, fnv1a64_reference


@pytest.mark.parametrize("data, expected", [
    (b"", 0xCBF29CE484222325),
    (b"a", 0xAF63DC4C8601EC8C),
    (b"foobar", 0x85944171F73967E8),
])
def test_known_vectors(data, expected):
    assert fnv1a64(data) == expected
    assert fnv1a64_reference(data) == expected


def test_compiled_matches_reference():
    rng = random.Random(4)
    for size in (1, 7, 64, 1000, 65536):
        data = bytes(rng.randrange(256) for _ in range(size))
        assert fnv1a64(data) == fnv1a64_reference(data)


def test_chaining_equals_concatenation():
    a, b = b"round 1\n", b"round 2\n"
    assert fnv1a64(b, fnv1a64(a, FNV_OFFSET)) == fnv1a64(a + b)
