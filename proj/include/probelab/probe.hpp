#pragma once

#include <bit>
#include <cstdint>
#include <optional>
#include <stdexcept>

namespace probelab {

// 64-bit key. Trials generate 0..m-1; any distinct values work.
struct Key {
    std::uint64_t value = 0;
    friend bool operator==(Key, Key) = default;
};

// splitmix64 finalizer: bijective on 64 bits with full avalanche.
inline std::uint64_t mix64(std::uint64_t x) {
    x ^= x >> 30;
    x *= 0xbf58476d1ce4e5b9ULL;
    x ^= x >> 27;
    x *= 0x94d049bb133111ebULL;
    x ^= x >> 31;
    return x;
}

// Seed for trial t of a run with the given master seed.
inline std::uint64_t mix_seed(std::uint64_t master_seed, std::uint64_t trial) {
    return mix64(master_seed + 0x9e3779b97f4a7c15ULL * (trial + 1));
}

// Maps a full-width hash onto [0, range) without modulo bias worth measuring
// (range is at most 2^26 here).
inline std::uint64_t fastrange64(std::uint64_t hash, std::uint64_t range) {
    return static_cast<std::uint64_t>(
        (static_cast<unsigned __int128>(hash) * range) >> 64);
}

// ceil(log2(x)) for x >= 1.
inline unsigned ceil_log2(std::uint64_t x) {
    return x <= 1 ? 0 : static_cast<unsigned>(std::bit_width(x - 1));
}

// Deterministic probe generator. (master_seed, key, stream_id, probe_index)
// fully determine the slot; stream ids keep probe sequences independent
// across subarrays/levels of one table.
struct ProbeSource {
    std::uint64_t master_seed = 0;

    std::uint64_t probe(Key key, std::uint64_t stream_id, std::uint64_t probe_index,
                        std::uint64_t modulus) const {
        std::uint64_t h = master_seed;
        h = mix64(h ^ (key.value * 0x9e3779b97f4a7c15ULL));
        h = mix64(h ^ (stream_id * 0xbf58476d1ce4e5b9ULL));
        h = mix64(h ^ (probe_index * 0x94d049bb133111ebULL));
        return fastrange64(h, modulus);
    }
};

// (array index, within-array probe index); both are 1-based.
struct ProbeIndexPair {
    std::uint64_t i = 1;
    std::uint64_t j = 1;
    friend bool operator==(ProbeIndexPair, ProbeIndexPair) = default;
};

// Pairing injection: with a = bits of i and b = bits of j (MSB first), the
// encoding reads 1 b1 1 b2 ... 1 bq 0 a1 ... ap. The result has
// bit_width(i) + 2*bit_width(j) + 1 bits, so it stays under 16*i*j^2 and is
// trivially reversible. Pairs whose encoding would exceed 63 bits are
// rejected.
inline std::uint64_t phi_encode(ProbeIndexPair pair) {
    if (pair.i == 0 || pair.j == 0)
        throw std::domain_error("phi_encode: indices must be >= 1");
    const int p = std::bit_width(pair.i);
    const int q = std::bit_width(pair.j);
    if (p + 2 * q + 1 > 63)
        throw std::overflow_error("phi_encode: pair exceeds 63-bit encoding range");
    std::uint64_t v = 0;
    for (int t = q - 1; t >= 0; --t)
        v = (v << 2) | 0b10ULL | ((pair.j >> t) & 1ULL);
    v <<= 1;  // 0 separator
    return (v << p) | pair.i;
}

// Inverse of phi_encode; nullopt for values outside the image.
inline std::optional<ProbeIndexPair> phi_decode(std::uint64_t value) {
    if (value == 0) return std::nullopt;
    int pos = std::bit_width(value) - 1;
    std::uint64_t j = 0;
    int payload_bits = 0;
    while (pos >= 0 && ((value >> pos) & 1ULL)) {
        if (pos == 0) return std::nullopt;  // marker with no payload bit
        j = (j << 1) | ((value >> (pos - 1)) & 1ULL);
        ++payload_bits;
        pos -= 2;
    }
    if (pos < 0) return std::nullopt;  // ran out of bits before the separator
    if (payload_bits == 0 || std::bit_width(j) != payload_bits)
        return std::nullopt;  // j would need a leading zero
    if (pos == 0) return std::nullopt;  // no bits left for i
    const std::uint64_t i = value & ((std::uint64_t{1} << pos) - 1);
    if (static_cast<int>(std::bit_width(i)) != pos)
        return std::nullopt;  // i would need a leading zero
    return ProbeIndexPair{i, j};
}

}  // namespace probelab
