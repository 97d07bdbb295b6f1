#include "spikeattack/tensor.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace spikeattack {

std::size_t shape_product(const std::vector<std::size_t>& shape) {
    std::size_t n = 1;
    for (std::size_t extent : shape) {
        if (extent == 0) throw std::invalid_argument("tensor shape extent must be positive");
        n *= extent;
    }
    return n;
}

Tensor::Tensor(std::vector<std::size_t> shape)
    : shape_(std::move(shape)), data_(shape_product(shape_), 0.0) {}

Tensor::Tensor(std::vector<std::size_t> shape, std::vector<double> values)
    : shape_(std::move(shape)), data_(std::move(values)) {
    if (data_.size() != shape_product(shape_)) {
        throw std::invalid_argument("tensor data length does not match shape");
    }
}

Tensor Tensor::zeros(std::vector<std::size_t> shape) { return Tensor(std::move(shape)); }

Tensor Tensor::from_vector(std::vector<double> values) {
    std::vector<std::size_t> shape{values.size()};
    return Tensor(std::move(shape), std::move(values));
}

std::size_t Tensor::batch_stride() const {
    if (shape_.empty() || shape_[0] == 0) throw std::logic_error("batch_stride on rank-0 tensor");
    return data_.size() / shape_[0];
}

double frobenius_norm(const double* values, std::size_t count) {
    double sum = 0.0;
    for (std::size_t i = 0; i < count; ++i) sum += values[i] * values[i];
    return std::sqrt(sum);
}

double frobenius_norm(const Tensor& a) { return frobenius_norm(a.data(), a.size()); }

double relative_change(const double* a_t, const double* a_prev, std::size_t count) {
    double residual_sq = 0.0;
    double norm_sq = 0.0;
    for (std::size_t i = 0; i < count; ++i) {
        const double d = a_t[i] - a_prev[i];
        residual_sq += d * d;
        norm_sq += a_t[i] * a_t[i];
    }
    if (norm_sq == 0.0) {
        return residual_sq == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
    }
    return std::sqrt(residual_sq) / std::sqrt(norm_sq);
}

double relative_change(const Tensor& a_t, const Tensor& a_prev) {
    if (!a_t.same_shape(a_prev)) throw std::invalid_argument("relative_change: shape mismatch");
    return relative_change(a_t.data(), a_prev.data(), a_t.size());
}

SeededRandom::SeededRandom(std::uint64_t seed) : seed_(seed), engine_(seed) {}

std::uint64_t SeededRandom::next_u64() { return engine_(); }

double SeededRandom::next_unit() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double SeededRandom::uniform(double lo, double hi) {
    if (lo > hi) throw std::invalid_argument("uniform: lo > hi");
    return lo + next_unit() * (hi - lo);
}

double SeededRandom::gaussian() {
    double u1 = next_unit();
    const double u2 = next_unit();
    if (u1 <= 0.0) u1 = 0x1.0p-53;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
}

std::size_t SeededRandom::index(std::size_t bound) {
    if (bound == 0) throw std::invalid_argument("index: bound must be positive");
    return static_cast<std::size_t>(next_unit() * static_cast<double>(bound)) % bound;
}

void SeededRandom::shuffle(std::vector<std::size_t>& values) {
    for (std::size_t i = values.size(); i > 1; --i) {
        std::swap(values[i - 1], values[index(i)]);
    }
}

namespace {
std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}
}  // namespace

SeededRandom SeededRandom::fork(std::uint64_t stream) const {
    return SeededRandom(splitmix64(seed_ ^ splitmix64(stream + 1)));
}

Tensor uniform(SeededRandom& rng, double lo, double hi, std::vector<std::size_t> shape) {
    if (lo > hi) throw std::invalid_argument("uniform: lo > hi");
    Tensor t(std::move(shape));
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = rng.uniform(lo, hi);
    return t;
}

void assert_finite(const Tensor& t, const char* what) {
    for (std::size_t i = 0; i < t.size(); ++i) {
        if (!std::isfinite(t[i])) {
            throw std::runtime_error(std::string("non-finite value in ") + what);
        }
    }
}

}  // namespace spikeattack
