"""Philox4x32-10 reference values and derived uniforms/normals."""
import math

M0, M1 = 0xD2511F53, 0xCD9E8D57
W0, W1 = 0x9E3779B9, 0xBB67AE85
MASK = 0xFFFFFFFF


def philox(ctr, key, rounds=10):
    c = list(ctr)
    k = list(key)
    for r in range(rounds):
        if r > 0:
            k = [(k[0] + W0) & MASK, (k[1] + W1) & MASK]
        p0 = M0 * c[0]
        p1 = M1 * c[2]
        c = [((p1 >> 32) ^ c[1] ^ k[0]) & MASK, p1 & MASK,
             ((p0 >> 32) ^ c[3] ^ k[1]) & MASK, p0 & MASK]
    return c


if __name__ == "__main__":
    for ctr, key in [((0, 0, 0, 0), (0, 0)),
                     ((MASK,) * 4, (MASK,) * 2),
                     ((0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344), (0xa4093822, 0x299f31d0))]:
        print(" ".join(f"{x:08x}" for x in philox(ctr, key)))
