"""Reference Gaussian stream used to freeze the values in test_brownian.cpp.

Re-implements mt19937_64, the splitmix64 stream seeding and the Marsaglia
polar method independently of the C++ sources.
"""
import math
import sys

M64 = (1 << 64) - 1


class MT19937_64:
    def __init__(self, seed):
        self.mt = [0] * 312
        self.mt[0] = seed & M64
        for i in range(1, 312):
            prev = self.mt[i - 1]
            self.mt[i] = (6364136223846793005 * (prev ^ (prev >> 62)) + i) & M64
        self.index = 312

    def _twist(self):
        upper, lower = 0xFFFFFFFF80000000, 0x7FFFFFFF
        for i in range(312):
            x = (self.mt[i] & upper) | (self.mt[(i + 1) % 312] & lower)
            xa = x >> 1
            if x & 1:
                xa ^= 0xB5026F5AA96619E9
            self.mt[i] = self.mt[(i + 156) % 312] ^ xa
        self.index = 0

    def __call__(self):
        if self.index >= 312:
            self._twist()
        y = self.mt[self.index]
        self.index += 1
        y ^= (y >> 29) & 0x5555555555555555
        y ^= (y << 17) & 0x71D67FFFEDA60000
        y ^= (y << 37) & 0xFFF7EEE000000000
        y ^= y >> 43
        return y & M64


def mix64(x):
    x = (x + 0x9E3779B97F4A7C15) & M64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & M64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & M64
    return x ^ (x >> 31)


def stream_seed(seed, index):
    return mix64(seed ^ mix64(index))


def gaussians(seed, count):
    eng = MT19937_64(seed)
    out = []
    while len(out) < count:
        while True:
            u = 2.0 * ((eng() >> 11) * 2.0 ** -53) - 1.0
            v = 2.0 * ((eng() >> 11) * 2.0 ** -53) - 1.0
            s = u * u + v * v
            if 0.0 < s < 1.0:
                break
        f = math.sqrt(-2.0 * math.log(s) / s)
        out += [u * f, v * f]
    return out[:count]


if __name__ == "__main__":
    seed = int(sys.argv[1]) if len(sys.argv) > 1 else 42
    eng = MT19937_64(5489)
    for _ in range(9999):
        eng()
    assert eng() == 9981545732273789042  # standard mt19937_64 check value
    print("raw stream seed 42:", ["%.17g" % g for g in gaussians(seed, 4)])
    print("path 0 stream:", ["%.17g" % g for g in gaussians(stream_seed(seed, 0), 4)])
    print("path 1 stream:", ["%.17g" % g for g in gaussians(stream_seed(seed, 1), 2)])
