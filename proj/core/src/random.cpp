#include "asen/random.hpp"

namespace asen {

std::uint64_t mix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) noexcept {
    return mix64(mix64(seed) ^ mix64(stream * 0xd1b54a32d192ed03ULL + 1));
}

std::uint64_t fnv1a64(const void* data, std::size_t size, std::uint64_t basis) noexcept {
    const auto* bytes = static_cast<const unsigned char*>(data);
    std::uint64_t h = basis;
    for (std::size_t i = 0; i < size; ++i) {
        h ^= bytes[i];
        h *= 1099511628211ULL;
    }
    return h;
}

} // namespace asen
