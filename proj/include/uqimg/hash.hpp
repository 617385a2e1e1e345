#pragma once

#include <cstdint>
#include <cstring>
#include <string>
#include <vector>

namespace uqimg {

/// FNV-1a 64-bit. Used for provenance and artifact fingerprints, not for
/// anything adversarial.
class Fnv1a64 {
public:
    Fnv1a64& update(const void* data, std::size_t len) {
        const auto* bytes = static_cast<const unsigned char*>(data);
        for (std::size_t i = 0; i < len; ++i) {
            state_ ^= bytes[i];
            state_ *= 0x100000001B3ULL;
        }
        return *this;
    }

    Fnv1a64& update(const std::string& s) { return update(s.data(), s.size()); }

    Fnv1a64& update(const std::vector<double>& v) {
        return update(v.data(), v.size() * sizeof(double));
    }

    Fnv1a64& update_u64(std::uint64_t v) { return update(&v, sizeof(v)); }

    std::uint64_t digest() const { return state_; }

private:
    std::uint64_t state_ = 0xCBF29CE484222325ULL;
};

inline std::uint64_t fnv1a64(const void* data, std::size_t len) {
    return Fnv1a64().update(data, len).digest();
}

std::string hex64(std::uint64_t v);

}  // namespace uqimg
