#ifndef UDN_RNG_HPP
#define UDN_RNG_HPP

#include <complex>
#include <cstdint>
#include <random>

namespace udn {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Seed for snapshot `index` of a campaign keyed by `master`. Distinct indices
/// give statistically independent, individually reproducible streams.
inline std::uint64_t derive_stream_seed(std::uint64_t master, std::uint64_t index) {
    return splitmix64(splitmix64(master) ^ splitmix64(index + 0x51ed270b7a64fe1dULL));
}

/// Random stream with explicitly-coded output distributions so that results
/// do not depend on the standard library's distribution internals.
class RandomStream {
public:
    explicit RandomStream(std::uint64_t seed) : engine_(seed) {}

    /// Uniform on [0, 1) with 53-bit resolution.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Standard normal via Box-Muller.
    double normal() {
        // (0,1] for the log argument
        const double u1 = static_cast<double>((engine_() >> 11) + 1) * 0x1.0p-53;
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
    }

    /// Circularly-symmetric complex Gaussian, unit variance: E|z|^2 = 1.
    std::complex<double> cnormal() {
        const double s = 0.70710678118654752440;
        return {s * normal(), s * normal()};
    }

private:
    std::mt19937_64 engine_;
};

} // namespace udn

#endif
