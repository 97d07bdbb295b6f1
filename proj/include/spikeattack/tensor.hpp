#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <vector>

namespace spikeattack {

// Dense n-dimensional array of doubles in row-major order.
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(std::vector<std::size_t> shape);
    Tensor(std::vector<std::size_t> shape, std::vector<double> values);

    static Tensor zeros(std::vector<std::size_t> shape);
    static Tensor from_vector(std::vector<double> values);

    const std::vector<std::size_t>& shape() const { return shape_; }
    std::size_t size() const { return data_.size(); }
    std::size_t rank() const { return shape_.size(); }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }
    double& operator[](std::size_t i) { return data_[i]; }
    double operator[](std::size_t i) const { return data_[i]; }

    bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }

    // Extent of one leading-dimension slice (size / shape[0]).
    std::size_t batch_stride() const;
    double* example(std::size_t i) { return data_.data() + i * batch_stride(); }
    const double* example(std::size_t i) const { return data_.data() + i * batch_stride(); }

    bool operator==(const Tensor& other) const {
        return shape_ == other.shape_ && data_ == other.data_;
    }

private:
    std::vector<std::size_t> shape_;
    std::vector<double> data_;
};

std::size_t shape_product(const std::vector<std::size_t>& shape);

double frobenius_norm(const Tensor& a);
double frobenius_norm(const double* values, std::size_t count);

// ||a_t - a_prev|| / ||a_t||. A zero denominator maps to 0 when the residual
// is also zero, otherwise to +infinity so downstream gates always fire.
double relative_change(const Tensor& a_t, const Tensor& a_prev);
double relative_change(const double* a_t, const double* a_prev, std::size_t count);

// Counter-free wrapper around mt19937_64 with uniform/gaussian draws that are
// reproducible across platforms (the raw engine output is mapped directly,
// no std::*_distribution involved).
class SeededRandom {
public:
    explicit SeededRandom(std::uint64_t seed);

    std::uint64_t seed() const { return seed_; }
    std::uint64_t next_u64();
    double next_unit();                      // [0, 1)
    double uniform(double lo, double hi);    // [lo, hi); throws if lo > hi
    double gaussian();                       // Box-Muller

    std::size_t index(std::size_t bound);    // [0, bound)
    void shuffle(std::vector<std::size_t>& values);

    // Independent child stream keyed by `stream`; deterministic in (seed, stream).
    SeededRandom fork(std::uint64_t stream) const;

private:
    std::uint64_t seed_ = 0;
    std::mt19937_64 engine_;
};

Tensor uniform(SeededRandom& rng, double lo, double hi, std::vector<std::size_t> shape);

// Throws std::runtime_error naming `what` if any entry is NaN or infinite.
void assert_finite(const Tensor& t, const char* what);

}  // namespace spikeattack
