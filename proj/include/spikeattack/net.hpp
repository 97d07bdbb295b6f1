#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "spikeattack/tensor.hpp"

namespace spikeattack {

enum class LayerKind { Dense, Conv2d, Relu, MaxPool2x2, Flatten };

const char* layer_kind_name(LayerKind kind);

// One layer of a sequential network. Dense and conv2d are the gated kinds
// (linear maps); relu/maxpool/flatten carry no parameters and are never gated.
struct LayerSpec {
    LayerKind kind = LayerKind::Relu;

    std::size_t in_features = 0, out_features = 0;               // dense
    std::size_t in_channels = 0, out_channels = 0, kernel_size = 0;  // conv2d, stride 1, same padding

    Tensor weight;  // dense [out,in]; conv2d [oc,ic,k,k]
    Tensor bias;    // dense [out];    conv2d [oc]

    static LayerSpec dense(std::size_t in, std::size_t out);
    static LayerSpec conv2d(std::size_t in_channels, std::size_t out_channels, std::size_t kernel_size);
    static LayerSpec relu();
    static LayerSpec maxpool2x2();
    static LayerSpec flatten();

    bool gated() const { return kind == LayerKind::Dense || kind == LayerKind::Conv2d; }
    bool has_params() const { return gated(); }
};

// Per-layer activations recorded during one forward pass. inputs[l]/outputs[l]
// are batched (leading dim = example count); pool_argmax[l] holds flat source
// indices for maxpool layers.
struct ForwardTape {
    std::size_t examples = 0;
    std::vector<Tensor> inputs;
    std::vector<Tensor> outputs;
    std::vector<std::vector<std::size_t>> pool_argmax;

    std::size_t layer_count() const { return inputs.size(); }
};

struct ParamGrads {
    std::vector<Tensor> weight;  // empty tensors for non-parameter layers
    std::vector<Tensor> bias;
};

// MAC count of one gated layer applied to one example with the given
// unbatched input shape. Non-gated kinds cost 0.
std::uint64_t mac_cost(const LayerSpec& layer, const std::vector<std::size_t>& input_shape);

// Input gradient of the linear map only (bias excluded): W^T g for dense,
// the transposed convolution for conv2d. g is batched with the layer's
// output shape. Throws for non-gated kinds.
Tensor transpose_apply(const LayerSpec& layer, const Tensor& g);
void transpose_apply_slice(const LayerSpec& layer, const double* g, double* out,
                           const std::vector<std::size_t>& input_shape);

// Sequential network. Shapes are validated at construction; the final layer
// must emit a class_count-length logit vector per example.
class Network {
public:
    Network(std::vector<std::size_t> input_shape, std::vector<LayerSpec> layers,
            std::size_t class_count);

    const std::vector<std::size_t>& input_shape() const { return input_shape_; }
    std::size_t class_count() const { return class_count_; }
    std::size_t layer_count() const { return layers_.size(); }
    const LayerSpec& layer(std::size_t l) const { return layers_[l]; }
    LayerSpec& layer(std::size_t l) { return layers_[l]; }

    // Unbatched input shape of layer l; layer_input_shape(layer_count()) is
    // the logit shape.
    const std::vector<std::size_t>& layer_input_shape(std::size_t l) const {
        return shapes_[l];
    }
    const std::vector<std::size_t>& layer_output_shape(std::size_t l) const {
        return shapes_[l + 1];
    }

    std::vector<std::size_t> gated_layers() const;
    std::vector<std::uint64_t> gated_layer_macs() const;  // per example
    std::uint64_t total_gated_macs() const;

    void init_params(SeededRandom& rng);

    // x is batched: shape {n} + input_shape.
    std::pair<Tensor, ForwardTape> forward(const Tensor& x) const;

    // Exact reverse-mode gradients. d_logits is batched like the logits.
    std::pair<Tensor, ParamGrads> backward(const ForwardTape& tape, const Tensor& d_logits) const;
    // Input gradient only; optionally captures the gradient at every layer
    // output (index l = gradient w.r.t. outputs[l]).
    Tensor backward_input(const ForwardTape& tape, const Tensor& d_logits,
                          std::vector<Tensor>* d_outputs = nullptr) const;

    // Non-gated layer application and its backward, shared with the gated
    // executor so both paths use identical arithmetic.
    Tensor apply_nongated(std::size_t l, const Tensor& input,
                          std::vector<std::size_t>* pool_argmax) const;
    Tensor nongated_backward(std::size_t l, const ForwardTape& tape, const Tensor& g) const;

    void apply_sgd_step(const ParamGrads& grads, double lr, double scale);

    std::vector<double> flat_params() const;

private:
    std::vector<std::size_t> input_shape_;
    std::vector<LayerSpec> layers_;
    std::size_t class_count_;
    std::vector<std::vector<std::size_t>> shapes_;  // shapes_[l] = input of layer l
};

// loss = -log softmax(logits)[label]; d_logits = softmax(logits) - onehot(label).
std::pair<double, Tensor> cross_entropy(const Tensor& logits, std::size_t label);

// Batched sum of per-example losses divided by n; d_logits rows are
// softmax - onehot, unscaled.
std::pair<double, Tensor> mean_cross_entropy(const Tensor& logits,
                                             const std::vector<std::size_t>& labels);

std::size_t argmax_row(const Tensor& logits, std::size_t row);
double accuracy(const Network& net, const Tensor& images, const std::vector<std::size_t>& labels);

struct Dataset;  // data.hpp

// One epoch of minibatch SGD on cross-entropy; mutates parameters in place
// and returns the mean training loss. Throws on an empty dataset.
double sgd_epoch(Network& net, const Dataset& data, double lr, SeededRandom& rng,
                 std::size_t batch_size = 32);

void save_network(const Network& net, const std::string& path);
Network load_network(const std::string& path);

}  // namespace spikeattack
