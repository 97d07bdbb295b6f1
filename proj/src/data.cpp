#include "spikeattack/data.hpp"

#include <cmath>
#include <cstdint>
#include <fstream>
#include <stdexcept>

namespace spikeattack {

std::vector<std::size_t> Dataset::image_shape() const {
    if (images.rank() < 2) throw std::logic_error("dataset image shape on empty dataset");
    return std::vector<std::size_t>(images.shape().begin() + 1, images.shape().end());
}

Tensor Dataset::gather_images(const std::vector<std::size_t>& indices) const {
    const std::size_t stride = images.batch_stride();
    std::vector<std::size_t> shape = images.shape();
    shape[0] = indices.size();
    Tensor out(shape);
    for (std::size_t i = 0; i < indices.size(); ++i) {
        const double* src = images.example(indices[i]);
        std::copy(src, src + stride, out.example(i));
    }
    return out;
}

std::vector<std::size_t> Dataset::gather_labels(const std::vector<std::size_t>& indices) const {
    std::vector<std::size_t> out(indices.size());
    for (std::size_t i = 0; i < indices.size(); ++i) out[i] = labels[indices[i]];
    return out;
}

Dataset Dataset::subset(std::size_t first, std::size_t count) const {
    if (first + count > size()) throw std::invalid_argument("dataset subset out of range");
    std::vector<std::size_t> idx(count);
    for (std::size_t i = 0; i < count; ++i) idx[i] = first + i;
    Dataset out;
    out.images = gather_images(idx);
    out.labels = gather_labels(idx);
    out.class_count = class_count;
    out.split = split;
    return out;
}

Dataset load_cifar10(const std::string& path) {
    constexpr std::size_t kRecord = 3073;
    constexpr std::size_t kPixels = 3072;

    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open CIFAR-10 file: " + path);
    std::vector<char> raw((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (raw.size() % kRecord != 0) {
        throw std::runtime_error("malformed CIFAR-10 file (size not a multiple of 3073): " + path);
    }
    const std::size_t n = raw.size() / kRecord;

    Dataset out;
    out.class_count = 10;
    out.labels.resize(n);
    if (n == 0) {
        out.images = Tensor();
        return out;
    }
    out.images = Tensor({n, 3, 32, 32});
    for (std::size_t i = 0; i < n; ++i) {
        const unsigned char* rec = reinterpret_cast<const unsigned char*>(raw.data()) + i * kRecord;
        if (rec[0] > 9) throw std::runtime_error("CIFAR-10 label byte out of range");
        out.labels[i] = rec[0];
        double* dst = out.images.example(i);
        for (std::size_t p = 0; p < kPixels; ++p) {
            dst[p] = static_cast<double>(rec[1 + p]) / 255.0;
        }
    }
    return out;
}

Dataset synth_dataset(std::uint64_t seed, std::size_t n, std::size_t classes,
                      const std::vector<std::size_t>& image_shape) {
    if (image_shape.size() != 3) throw std::invalid_argument("synth_dataset: shape must be [C,H,W]");
    if (classes == 0 || n < classes) throw std::invalid_argument("synth_dataset: need n >= classes");
    const std::size_t c = image_shape[0], h = image_shape[1], w = image_shape[2];

    // Per-class template: a Gaussian bump at a class-specific position with a
    // class-specific channel mixture. Drawn once from a fixed stream so the
    // class geometry does not depend on n.
    SeededRandom proto_rng = SeededRandom(seed).fork(0xC1A55);
    std::vector<double> cy(classes), cx(classes);
    std::vector<std::vector<double>> mix(classes, std::vector<double>(c));
    for (std::size_t cls = 0; cls < classes; ++cls) {
        const double angle = 2.0 * 3.14159265358979323846 * static_cast<double>(cls) /
                             static_cast<double>(classes);
        cy[cls] = 0.5 * static_cast<double>(h - 1) + 0.30 * static_cast<double>(h) * std::sin(angle);
        cx[cls] = 0.5 * static_cast<double>(w - 1) + 0.30 * static_cast<double>(w) * std::cos(angle);
        for (std::size_t ch = 0; ch < c; ++ch) {
            mix[cls][ch] = 0.25 + 0.75 * proto_rng.next_unit();
        }
    }
    const double sigma = static_cast<double>(std::min(h, w)) / 5.0;

    SeededRandom rng = SeededRandom(seed).fork(0xDA7A);
    Dataset out;
    out.class_count = classes;
    out.images = Tensor({n, c, h, w});
    out.labels.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t cls = i % classes;
        out.labels[i] = cls;
        double* img = out.images.example(i);
        const double jitter_y = rng.uniform(-0.6, 0.6);
        const double jitter_x = rng.uniform(-0.6, 0.6);
        for (std::size_t ch = 0; ch < c; ++ch) {
            for (std::size_t y = 0; y < h; ++y) {
                for (std::size_t x = 0; x < w; ++x) {
                    const double dy = static_cast<double>(y) - (cy[cls] + jitter_y);
                    const double dx = static_cast<double>(x) - (cx[cls] + jitter_x);
                    const double bump = std::exp(-(dy * dy + dx * dx) / (2.0 * sigma * sigma));
                    double v = 0.15 + 0.70 * mix[cls][ch] * bump + 0.08 * rng.gaussian();
                    if (v < 0.0) v = 0.0;
                    if (v > 1.0) v = 1.0;
                    img[(ch * h + y) * w + x] = v;
                }
            }
        }
    }
    return out;
}

}  // namespace spikeattack
