#pragma once

#include <complex>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace roadsound::dsp {

inline bool is_power_of_two(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

inline std::size_t next_power_of_two(std::size_t n) {
    std::size_t p = 1;
    while (p < n) p <<= 1;
    return p;
}

// Radix-2 DIT transform with precomputed twiddles, reusable across frames.
class Fft {
public:
    explicit Fft(std::size_t n) : n_(n) {
        if (!is_power_of_two(n)) throw std::invalid_argument("Fft: size must be a power of two");
        twiddles_.resize(n / 2);
        for (std::size_t k = 0; k < n / 2; ++k) {
            const double angle = -2.0 * M_PI * static_cast<double>(k) / static_cast<double>(n);
            twiddles_[k] = {std::cos(angle), std::sin(angle)};
        }
        bit_reverse_.resize(n);
        std::size_t bits = 0;
        while ((std::size_t{1} << bits) < n) ++bits;
        for (std::size_t i = 0; i < n; ++i) {
            std::size_t r = 0;
            for (std::size_t b = 0; b < bits; ++b) r |= ((i >> b) & 1) << (bits - 1 - b);
            bit_reverse_[i] = r;
        }
    }

    std::size_t size() const { return n_; }

    void forward(std::vector<std::complex<double>>& a) const {
        if (a.size() != n_) throw std::invalid_argument("Fft: buffer size mismatch");
        for (std::size_t i = 0; i < n_; ++i) {
            const std::size_t j = bit_reverse_[i];
            if (i < j) std::swap(a[i], a[j]);
        }
        for (std::size_t len = 2; len <= n_; len <<= 1) {
            const std::size_t stride = n_ / len;
            for (std::size_t start = 0; start < n_; start += len) {
                for (std::size_t k = 0; k < len / 2; ++k) {
                    const std::complex<double> w = twiddles_[k * stride];
                    const std::complex<double> u = a[start + k];
                    const std::complex<double> v = a[start + k + len / 2] * w;
                    a[start + k] = u + v;
                    a[start + k + len / 2] = u - v;
                }
            }
        }
    }

private:
    std::size_t n_;
    std::vector<std::complex<double>> twiddles_;
    std::vector<std::size_t> bit_reverse_;
};

}  // namespace roadsound::dsp
