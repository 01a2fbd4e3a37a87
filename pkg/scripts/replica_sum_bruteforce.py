#!/usr/bin/env python3
"""Independent brute force for the log_rank expansion size.

Replicas per rank r in a list of K: 1 + floor(log2(K / r)), computed by
integer doubling (no floats), summed over r = 1..K. Run before trusting
any expansion count: K=20000 -> 39995.
"""
import sys


def replicas(r: int, r_max: int) -> int:
    k = 0
    while (1 << (k + 1)) * r <= r_max:
        k += 1
    return 1 + k


if __name__ == "__main__":
    k = int(sys.argv[1]) if len(sys.argv) > 1 else 20000
    print(sum(replicas(r, k) for r in range(1, k + 1)))
