# Reference outputs of the synthetic-data generator: xorshift64* (shifts
# 12/25/27, multiplier 0x2545f4914f6cdd1d) seeded by one splitmix64 round.
M = (1 << 64) - 1


def seed_state(seed):
    z = (seed + 0x9E3779B97F4A7C15) & M
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & M
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & M
    z ^= z >> 31
    return z or 0x9E3779B97F4A7C15


def stream(seed, n):
    s = seed_state(seed)
    out = []
    for _ in range(n):
        s ^= s >> 12
        s = (s ^ (s << 25)) & M
        s ^= s >> 27
        out.append((s * 0x2545F4914F6CDD1D) & M)
    return out


if __name__ == "__main__":
    for seed in (0, 1, 42):
        vals = stream(seed, 3)
        print(seed, [hex(v) for v in vals], repr((vals[0] >> 11) * 2.0**-53))
