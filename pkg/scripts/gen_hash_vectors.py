#!/usr/bin/env python3
"""Regenerate the pinned hash test vectors in tests/test_hashing.py.

A standalone transliteration of the hash construction (kept deliberately
separate from the package) prints rows of
(seed, row, key, bucket@cols, sign) for a fixed probe set.
"""

MASK = (1 << 64) - 1


def mix(x: int) -> int:
    x ^= x >> 33
    x = (x * 0xFF51AFD7ED558CCD) & MASK
    x ^= x >> 33
    x = (x * 0xC4CEB9FE1A85EC53) & MASK
    x ^= x >> 33
    return x


def probe(seed: int, row: int, key: int, cols: int):
    rs = mix((seed + row * 0x9E3779B97F4A7C15) & MASK)
    h = mix((key & MASK) ^ mix((key >> 64) ^ rs))
    sign = 1 if mix(h ^ 0xA5A5A5A5A5A5A5A5) & 1 else -1
    return h % cols, sign


if __name__ == "__main__":
    cases = [
        (0, 0, 0, 1024),
        (0, 0, 1, 1024),
        (42, 0, 123456789, 200000),
        (42, 7, 123456789, 200000),
        (42, 15, (1 << 127) | 12345, 200000),
        (2**64 - 1, 3, (1 << 100) + 77, 65536),
        (7, 1, 2**128 - 1, 101),
    ]
    for seed, row, key, cols in cases:
        bucket, sign = probe(seed, row, key, cols)
        print(f"    ({seed}, {row}, {key}, {cols}, {bucket}, {sign}),")
