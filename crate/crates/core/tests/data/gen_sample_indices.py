"""Reference draw order for the seeded sampler.

Re-implements seed expansion (PCG32 over the u64 seed), the ChaCha8 block
function with a 64-bit counter, and the partial Fisher-Yates shuffle with
rejection sampling. Prints JSON consumed by the dataset tests.
"""
import json
import struct

M32 = 0xFFFFFFFF
M64 = 0xFFFFFFFFFFFFFFFF


def seed_from_u64(state):
    mul, inc = 6364136223846793005, 11634580027462260723
    out = b""
    for _ in range(8):
        state = (state * mul + inc) & M64
        xorshifted = (((state >> 18) ^ state) >> 27) & M32
        rot = state >> 59
        x = ((xorshifted >> rot) | (xorshifted << ((32 - rot) % 32))) & M32
        out += struct.pack("<I", x)
    return out


def rotl(v, n):
    return ((v << n) | (v >> (32 - n))) & M32


def qr(s, a, b, c, d):
    s[a] = (s[a] + s[b]) & M32; s[d] = rotl(s[d] ^ s[a], 16)
    s[c] = (s[c] + s[d]) & M32; s[b] = rotl(s[b] ^ s[c], 12)
    s[a] = (s[a] + s[b]) & M32; s[d] = rotl(s[d] ^ s[a], 8)
    s[c] = (s[c] + s[d]) & M32; s[b] = rotl(s[b] ^ s[c], 7)


def block(key, counter):
    init = [0x61707865, 0x3320646E, 0x79622D32, 0x6B206574]
    init += list(struct.unpack("<8I", key))
    init += [counter & M32, counter >> 32, 0, 0]
    s = init[:]
    for _ in range(4):
        qr(s, 0, 4, 8, 12); qr(s, 1, 5, 9, 13); qr(s, 2, 6, 10, 14); qr(s, 3, 7, 11, 15)
        qr(s, 0, 5, 10, 15); qr(s, 1, 6, 11, 12); qr(s, 2, 7, 8, 13); qr(s, 3, 4, 9, 14)
    return [(x + y) & M32 for x, y in zip(s, init)]


class Rng:
    def __init__(self, seed):
        self.key = seed_from_u64(seed)
        self.words = []
        self.counter = 0

    def u32(self):
        if not self.words:
            self.words = block(self.key, self.counter)
            self.counter += 1
        return self.words.pop(0)

    def u64(self):
        lo = self.u32()
        hi = self.u32()
        return (hi << 32) | lo


def uniform(rng, bound):
    zone = M64 - (M64 % bound)
    while True:
        v = rng.u64()
        if v < zone:
            return v % bound


def sample_indices(n, size, seed):
    rng = Rng(seed)
    order = list(range(n))
    for k in range(size):
        pick = k + uniform(rng, n - k)
        order[k], order[pick] = order[pick], order[k]
    return order[:size]


if __name__ == "__main__":
    cases = [(5, 2, 42), (5, 5, 0), (1000, 10, 7), (7405, 20, 2024)]
    print(json.dumps([{"n": n, "size": s, "seed": seed, "indices": sample_indices(n, s, seed)} for n, s, seed in cases]))
