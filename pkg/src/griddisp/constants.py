"""Schedule and acceptance constants shared by protocols and checkers."""

import math

# rounds budgeted for one probe of a straight hop; a probe plus the joint
# move costs at most R_HOP + 1 rounds for a lone robot and R_HOP + 2 for a group
R_HOP = 80
HOP_COST = R_HOP + 2

K_ALG1_EVEN = 8
K_ALG1_ODD = 6
K_ALG2 = 200
K_ALG3 = 220
MEM_LOG_FACTOR = 32      # alg1 and alg2: peak bits <= 32 * ceil(log2 n)
ALG3_MEM_FACTOR = 8      # alg3: peak bits <= 8 * span * ceil(log2 n)


def clog2(x: int) -> int:
    """ceil(log2 x) for x >= 1, with clog2(1) == 0."""
    return (int(x) - 1).bit_length() if x > 1 else 0


def bits_for(maxval: int) -> int:
    """Bits needed to store integers in [0, maxval]."""
    return max(1, int(maxval).bit_length())


def log_n(n: int) -> int:
    return max(1, clog2(n))


def isqrt_ceil(x: int) -> int:
    r = math.isqrt(x)
    return r if r * r == x else r + 1
