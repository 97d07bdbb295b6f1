#pragma once

#include <string>
#include <vector>

#include "spikeattack/tensor.hpp"

namespace spikeattack {

// Labeled image batch. images is [N, C, H, W] with values in [0, 1].
struct Dataset {
    Tensor images;
    std::vector<std::size_t> labels;
    std::size_t class_count = 0;
    std::string split;

    std::size_t size() const { return labels.size(); }
    std::vector<std::size_t> image_shape() const;  // unbatched [C,H,W]

    Tensor gather_images(const std::vector<std::size_t>& indices) const;
    std::vector<std::size_t> gather_labels(const std::vector<std::size_t>& indices) const;
    Dataset subset(std::size_t first, std::size_t count) const;
};

// CIFAR-10 binary batch: records of 3073 bytes, 1 label byte followed by
// 3072 channel-major pixel bytes. Pixels map to [0,1] by /255. Rejects files
// whose size is not a multiple of 3073 and label bytes above 9.
Dataset load_cifar10(const std::string& path);

// Class-conditional blob images: each class has a distinct spatial bump and
// channel mixture, plus noise, clamped to [0,1]. Labels cycle 0..classes-1.
Dataset synth_dataset(std::uint64_t seed, std::size_t n, std::size_t classes,
                      const std::vector<std::size_t>& image_shape);

}  // namespace spikeattack
