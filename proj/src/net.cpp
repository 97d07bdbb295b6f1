#include "spikeattack/net.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <stdexcept>

#include <json.hpp>

#include "spikeattack/data.hpp"
#include "spikeattack/kernels.hpp"

namespace spikeattack {

const char* layer_kind_name(LayerKind kind) {
    switch (kind) {
        case LayerKind::Dense: return "dense";
        case LayerKind::Conv2d: return "conv2d";
        case LayerKind::Relu: return "relu";
        case LayerKind::MaxPool2x2: return "maxpool2x2";
        case LayerKind::Flatten: return "flatten";
    }
    return "?";
}

LayerSpec LayerSpec::dense(std::size_t in, std::size_t out) {
    if (in == 0 || out == 0) throw std::invalid_argument("dense: zero dimension");
    LayerSpec s;
    s.kind = LayerKind::Dense;
    s.in_features = in;
    s.out_features = out;
    s.weight = Tensor({out, in});
    s.bias = Tensor({out});
    return s;
}

LayerSpec LayerSpec::conv2d(std::size_t in_channels, std::size_t out_channels,
                            std::size_t kernel_size) {
    if (in_channels == 0 || out_channels == 0) throw std::invalid_argument("conv2d: zero channels");
    if (kernel_size == 0 || kernel_size % 2 == 0) {
        throw std::invalid_argument("conv2d: kernel size must be odd for same-size output");
    }
    LayerSpec s;
    s.kind = LayerKind::Conv2d;
    s.in_channels = in_channels;
    s.out_channels = out_channels;
    s.kernel_size = kernel_size;
    s.weight = Tensor({out_channels, in_channels, kernel_size, kernel_size});
    s.bias = Tensor({out_channels});
    return s;
}

LayerSpec LayerSpec::relu() {
    LayerSpec s;
    s.kind = LayerKind::Relu;
    return s;
}

LayerSpec LayerSpec::maxpool2x2() {
    LayerSpec s;
    s.kind = LayerKind::MaxPool2x2;
    return s;
}

LayerSpec LayerSpec::flatten() {
    LayerSpec s;
    s.kind = LayerKind::Flatten;
    return s;
}

namespace {

std::vector<std::size_t> infer_output_shape(const LayerSpec& layer,
                                            const std::vector<std::size_t>& in) {
    switch (layer.kind) {
        case LayerKind::Dense:
            if (in.size() != 1 || in[0] != layer.in_features) {
                throw std::invalid_argument("dense: input shape mismatch");
            }
            return {layer.out_features};
        case LayerKind::Conv2d: {
            if (in.size() != 3 || in[0] != layer.in_channels) {
                throw std::invalid_argument("conv2d: input must be [C,H,W] with matching channels");
            }
            if (layer.kernel_size > in[1] || layer.kernel_size > in[2]) {
                throw std::invalid_argument("conv2d: kernel larger than input");
            }
            return {layer.out_channels, in[1], in[2]};
        }
        case LayerKind::Relu:
            return in;
        case LayerKind::MaxPool2x2:
            if (in.size() != 3 || in[1] % 2 != 0 || in[2] % 2 != 0) {
                throw std::invalid_argument("maxpool2x2: input must be [C,H,W] with even H,W");
            }
            return {in[0], in[1] / 2, in[2] / 2};
        case LayerKind::Flatten:
            return {shape_product(in)};
    }
    throw std::logic_error("unreachable");
}

std::vector<std::size_t> batched(std::size_t n, const std::vector<std::size_t>& shape) {
    std::vector<std::size_t> out;
    out.reserve(shape.size() + 1);
    out.push_back(n);
    out.insert(out.end(), shape.begin(), shape.end());
    return out;
}

}  // namespace

std::uint64_t mac_cost(const LayerSpec& layer, const std::vector<std::size_t>& input_shape) {
    switch (layer.kind) {
        case LayerKind::Dense:
            return static_cast<std::uint64_t>(layer.in_features) * layer.out_features;
        case LayerKind::Conv2d: {
            const std::uint64_t hw = static_cast<std::uint64_t>(input_shape[1]) * input_shape[2];
            return hw * layer.in_channels * layer.out_channels * layer.kernel_size *
                   layer.kernel_size;
        }
        default:
            return 0;
    }
}

void transpose_apply_slice(const LayerSpec& layer, const double* g, double* out,
                           const std::vector<std::size_t>& input_shape) {
    if (layer.kind == LayerKind::Dense) {
        kernels::dense_input_grad(layer.weight.data(), g, out, 1, layer.in_features,
                                  layer.out_features);
    } else if (layer.kind == LayerKind::Conv2d) {
        kernels::conv2d_input_grad(layer.weight.data(), g, out, 1, layer.in_channels,
                                   layer.out_channels, input_shape[1], input_shape[2],
                                   layer.kernel_size);
    } else {
        throw std::invalid_argument("transpose_apply: layer is not a linear map");
    }
}

Tensor transpose_apply(const LayerSpec& layer, const Tensor& g) {
    if (!layer.gated()) throw std::invalid_argument("transpose_apply: layer is not a linear map");
    const std::size_t n = g.shape().at(0);
    if (layer.kind == LayerKind::Dense) {
        if (g.batch_stride() != layer.out_features) {
            throw std::invalid_argument("transpose_apply: gradient shape mismatch");
        }
        Tensor out({n, layer.in_features});
        kernels::dense_input_grad(layer.weight.data(), g.data(), out.data(), n,
                                  layer.in_features, layer.out_features);
        return out;
    }
    const auto& gs = g.shape();
    if (gs.size() != 4 || gs[1] != layer.out_channels) {
        throw std::invalid_argument("transpose_apply: gradient shape mismatch");
    }
    Tensor out({n, layer.in_channels, gs[2], gs[3]});
    kernels::conv2d_input_grad(layer.weight.data(), g.data(), out.data(), n, layer.in_channels,
                               layer.out_channels, gs[2], gs[3], layer.kernel_size);
    return out;
}

Network::Network(std::vector<std::size_t> input_shape, std::vector<LayerSpec> layers,
                 std::size_t class_count)
    : input_shape_(std::move(input_shape)), layers_(std::move(layers)), class_count_(class_count) {
    if (layers_.empty()) throw std::invalid_argument("network: no layers");
    if (class_count_ == 0) throw std::invalid_argument("network: class_count must be positive");
    shapes_.push_back(input_shape_);
    for (const auto& layer : layers_) {
        shapes_.push_back(infer_output_shape(layer, shapes_.back()));
    }
    const auto& out = shapes_.back();
    if (out.size() != 1 || out[0] != class_count_) {
        throw std::invalid_argument("network: final layer must emit class_count logits");
    }
}

std::vector<std::size_t> Network::gated_layers() const {
    std::vector<std::size_t> idx;
    for (std::size_t l = 0; l < layers_.size(); ++l) {
        if (layers_[l].gated()) idx.push_back(l);
    }
    return idx;
}

std::vector<std::uint64_t> Network::gated_layer_macs() const {
    std::vector<std::uint64_t> macs;
    for (std::size_t l = 0; l < layers_.size(); ++l) {
        if (layers_[l].gated()) macs.push_back(mac_cost(layers_[l], shapes_[l]));
    }
    return macs;
}

std::uint64_t Network::total_gated_macs() const {
    std::uint64_t total = 0;
    for (auto m : gated_layer_macs()) total += m;
    return total;
}

void Network::init_params(SeededRandom& rng) {
    for (auto& layer : layers_) {
        if (!layer.has_params()) continue;
        double fan_in = 0.0, fan_out = 0.0;
        if (layer.kind == LayerKind::Dense) {
            fan_in = static_cast<double>(layer.in_features);
            fan_out = static_cast<double>(layer.out_features);
        } else {
            const double kk = static_cast<double>(layer.kernel_size * layer.kernel_size);
            fan_in = static_cast<double>(layer.in_channels) * kk;
            fan_out = static_cast<double>(layer.out_channels) * kk;
        }
        const double bound = std::sqrt(6.0 / (fan_in + fan_out));
        for (std::size_t i = 0; i < layer.weight.size(); ++i) {
            layer.weight[i] = rng.uniform(-bound, bound);
        }
        for (std::size_t i = 0; i < layer.bias.size(); ++i) layer.bias[i] = 0.0;
    }
}

Tensor Network::apply_nongated(std::size_t l, const Tensor& input,
                               std::vector<std::size_t>* pool_argmax) const {
    const LayerSpec& layer = layers_[l];
    const std::size_t n = input.shape().at(0);
    switch (layer.kind) {
        case LayerKind::Relu: {
            Tensor out = input;
            for (std::size_t i = 0; i < out.size(); ++i) {
                if (out[i] < 0.0) out[i] = 0.0;
            }
            return out;
        }
        case LayerKind::MaxPool2x2: {
            const auto& in_shape = shapes_[l];
            const std::size_t c = in_shape[0], h = in_shape[1], w = in_shape[2];
            const std::size_t oh = h / 2, ow = w / 2;
            Tensor out({n, c, oh, ow});
            if (pool_argmax) pool_argmax->assign(out.size(), 0);
            for (std::size_t row = 0; row < n; ++row) {
                const double* src = input.example(row);
                double* dst = out.example(row);
                for (std::size_t ch = 0; ch < c; ++ch) {
                    for (std::size_t y = 0; y < oh; ++y) {
                        for (std::size_t x = 0; x < ow; ++x) {
                            std::size_t best = (ch * h + 2 * y) * w + 2 * x;
                            double best_v = src[best];
                            const std::size_t cand[3] = {(ch * h + 2 * y) * w + 2 * x + 1,
                                                         (ch * h + 2 * y + 1) * w + 2 * x,
                                                         (ch * h + 2 * y + 1) * w + 2 * x + 1};
                            for (std::size_t q : cand) {
                                if (src[q] > best_v) {
                                    best_v = src[q];
                                    best = q;
                                }
                            }
                            const std::size_t o = (ch * oh + y) * ow + x;
                            dst[o] = best_v;
                            if (pool_argmax) {
                                (*pool_argmax)[row * c * oh * ow + o] =
                                    row * c * h * w + best;
                            }
                        }
                    }
                }
            }
            return out;
        }
        case LayerKind::Flatten: {
            Tensor out = input;
            return Tensor(batched(n, shapes_[l + 1]),
                          std::vector<double>(out.data(), out.data() + out.size()));
        }
        default:
            throw std::logic_error("apply_nongated called on gated layer");
    }
}

std::pair<Tensor, ForwardTape> Network::forward(const Tensor& x) const {
    if (x.rank() != input_shape_.size() + 1 ||
        !std::equal(input_shape_.begin(), input_shape_.end(), x.shape().begin() + 1)) {
        throw std::invalid_argument("forward: input shape mismatch");
    }
    const std::size_t n = x.shape()[0];
    ForwardTape tape;
    tape.examples = n;
    tape.inputs.reserve(layers_.size());
    tape.outputs.reserve(layers_.size());
    tape.pool_argmax.resize(layers_.size());

    Tensor a = x;
    for (std::size_t l = 0; l < layers_.size(); ++l) {
        const LayerSpec& layer = layers_[l];
        Tensor out;
        if (layer.kind == LayerKind::Dense) {
            out = Tensor({n, layer.out_features});
            kernels::dense_forward(layer.weight.data(), layer.bias.data(), a.data(), out.data(),
                                   n, layer.in_features, layer.out_features);
        } else if (layer.kind == LayerKind::Conv2d) {
            const auto& in_shape = shapes_[l];
            out = Tensor({n, layer.out_channels, in_shape[1], in_shape[2]});
            kernels::conv2d_forward(layer.weight.data(), layer.bias.data(), a.data(), out.data(),
                                    n, layer.in_channels, layer.out_channels, in_shape[1],
                                    in_shape[2], layer.kernel_size);
        } else {
            out = apply_nongated(l, a, &tape.pool_argmax[l]);
        }
        tape.inputs.push_back(a);
        tape.outputs.push_back(out);
        a = std::move(out);
    }
    return {a, std::move(tape)};
}

Tensor Network::nongated_backward(std::size_t l, const ForwardTape& tape, const Tensor& g) const {
    const LayerSpec& layer = layers_[l];
    switch (layer.kind) {
        case LayerKind::Relu: {
            Tensor out = g;
            const Tensor& in = tape.inputs[l];
            for (std::size_t i = 0; i < out.size(); ++i) {
                if (in[i] <= 0.0) out[i] = 0.0;
            }
            return out;
        }
        case LayerKind::MaxPool2x2: {
            Tensor out(tape.inputs[l].shape());
            const auto& argmax = tape.pool_argmax[l];
            for (std::size_t i = 0; i < g.size(); ++i) out[argmax[i]] += g[i];
            return out;
        }
        case LayerKind::Flatten: {
            return Tensor(tape.inputs[l].shape(),
                          std::vector<double>(g.data(), g.data() + g.size()));
        }
        default:
            throw std::logic_error("nongated_backward called on gated layer");
    }
}

namespace {

void check_tape(const Network& net, const ForwardTape& tape, const Tensor& d_logits) {
    if (tape.layer_count() != net.layer_count()) {
        throw std::invalid_argument("backward: tape does not match network");
    }
    if (d_logits.shape() !=
        std::vector<std::size_t>{tape.examples, net.class_count()}) {
        throw std::invalid_argument("backward: d_logits shape mismatch");
    }
}

}  // namespace

std::pair<Tensor, ParamGrads> Network::backward(const ForwardTape& tape,
                                                const Tensor& d_logits) const {
    check_tape(*this, tape, d_logits);
    const std::size_t n = tape.examples;
    ParamGrads grads;
    grads.weight.resize(layers_.size());
    grads.bias.resize(layers_.size());

    Tensor g = d_logits;
    for (std::size_t li = layers_.size(); li-- > 0;) {
        const LayerSpec& layer = layers_[li];
        if (layer.kind == LayerKind::Dense) {
            grads.weight[li] = Tensor(layer.weight.shape());
            grads.bias[li] = Tensor(layer.bias.shape());
            kernels::dense_param_grad(tape.inputs[li].data(), g.data(), grads.weight[li].data(),
                                      grads.bias[li].data(), n, layer.in_features,
                                      layer.out_features);
            g = transpose_apply(layer, g);
        } else if (layer.kind == LayerKind::Conv2d) {
            const auto& in_shape = shapes_[li];
            grads.weight[li] = Tensor(layer.weight.shape());
            grads.bias[li] = Tensor(layer.bias.shape());
            kernels::conv2d_param_grad(tape.inputs[li].data(), g.data(), grads.weight[li].data(),
                                       grads.bias[li].data(), n, layer.in_channels,
                                       layer.out_channels, in_shape[1], in_shape[2],
                                       layer.kernel_size);
            g = transpose_apply(layer, g);
        } else {
            g = nongated_backward(li, tape, g);
        }
    }
    return {std::move(g), std::move(grads)};
}

Tensor Network::backward_input(const ForwardTape& tape, const Tensor& d_logits,
                               std::vector<Tensor>* d_outputs) const {
    check_tape(*this, tape, d_logits);
    if (d_outputs) d_outputs->assign(layers_.size(), Tensor());
    Tensor g = d_logits;
    for (std::size_t li = layers_.size(); li-- > 0;) {
        if (d_outputs) (*d_outputs)[li] = g;
        const LayerSpec& layer = layers_[li];
        if (layer.gated()) {
            g = transpose_apply(layer, g);
        } else {
            g = nongated_backward(li, tape, g);
        }
    }
    return g;
}

void Network::apply_sgd_step(const ParamGrads& grads, double lr, double scale) {
    for (std::size_t l = 0; l < layers_.size(); ++l) {
        if (!layers_[l].has_params()) continue;
        LayerSpec& layer = layers_[l];
        const Tensor& dw = grads.weight[l];
        const Tensor& db = grads.bias[l];
        for (std::size_t i = 0; i < layer.weight.size(); ++i) {
            layer.weight[i] -= lr * scale * dw[i];
        }
        for (std::size_t i = 0; i < layer.bias.size(); ++i) {
            layer.bias[i] -= lr * scale * db[i];
        }
    }
}

std::vector<double> Network::flat_params() const {
    std::vector<double> out;
    for (const auto& layer : layers_) {
        if (!layer.has_params()) continue;
        out.insert(out.end(), layer.weight.data(), layer.weight.data() + layer.weight.size());
        out.insert(out.end(), layer.bias.data(), layer.bias.data() + layer.bias.size());
    }
    return out;
}

std::pair<double, Tensor> cross_entropy(const Tensor& logits, std::size_t label) {
    if (logits.rank() != 1) throw std::invalid_argument("cross_entropy: logits must be rank 1");
    const std::size_t k = logits.size();
    if (label >= k) throw std::invalid_argument("cross_entropy: label out of range");
    double m = logits[0];
    for (std::size_t i = 1; i < k; ++i) m = std::max(m, logits[i]);
    double z = 0.0;
    for (std::size_t i = 0; i < k; ++i) z += std::exp(logits[i] - m);
    const double log_z = m + std::log(z);
    const double loss = log_z - logits[label];
    Tensor d({k});
    for (std::size_t i = 0; i < k; ++i) d[i] = std::exp(logits[i] - log_z);
    d[label] -= 1.0;
    return {loss, std::move(d)};
}

std::pair<double, Tensor> mean_cross_entropy(const Tensor& logits,
                                             const std::vector<std::size_t>& labels) {
    if (logits.rank() != 2) {
        throw std::invalid_argument("mean_cross_entropy: logits must be [n, classes]");
    }
    const std::size_t n = logits.shape().at(0);
    if (labels.size() != n) throw std::invalid_argument("mean_cross_entropy: label count mismatch");
    const std::size_t k = logits.batch_stride();
    Tensor d(logits.shape());
    double total = 0.0;
    for (std::size_t row = 0; row < n; ++row) {
        Tensor row_logits({k}, std::vector<double>(logits.example(row), logits.example(row) + k));
        auto [loss, dr] = cross_entropy(row_logits, labels[row]);
        total += loss;
        std::copy(dr.data(), dr.data() + k, d.example(row));
    }
    return {total / static_cast<double>(n), std::move(d)};
}

std::size_t argmax_row(const Tensor& logits, std::size_t row) {
    const std::size_t k = logits.batch_stride();
    const double* p = logits.example(row);
    std::size_t best = 0;
    for (std::size_t i = 1; i < k; ++i) {
        if (p[i] > p[best]) best = i;
    }
    return best;
}

double accuracy(const Network& net, const Tensor& images, const std::vector<std::size_t>& labels) {
    auto [logits, tape] = net.forward(images);
    std::size_t correct = 0;
    for (std::size_t row = 0; row < labels.size(); ++row) {
        if (argmax_row(logits, row) == labels[row]) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(labels.size());
}

double sgd_epoch(Network& net, const Dataset& data, double lr, SeededRandom& rng,
                 std::size_t batch_size) {
    if (data.size() == 0) throw std::invalid_argument("sgd_epoch: empty dataset");
    if (lr < 0.0) throw std::invalid_argument("sgd_epoch: negative learning rate");
    std::vector<std::size_t> order(data.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    rng.shuffle(order);

    double total_loss = 0.0;
    for (std::size_t start = 0; start < order.size(); start += batch_size) {
        const std::size_t count = std::min(batch_size, order.size() - start);
        std::vector<std::size_t> idx(order.begin() + start, order.begin() + start + count);
        Tensor xb = data.gather_images(idx);
        std::vector<std::size_t> yb = data.gather_labels(idx);
        auto [logits, tape] = net.forward(xb);
        auto [loss, d_logits] = mean_cross_entropy(logits, yb);
        total_loss += loss * static_cast<double>(count);
        auto [d_input, grads] = net.backward(tape, d_logits);
        net.apply_sgd_step(grads, lr, 1.0 / static_cast<double>(count));
    }
    return total_loss / static_cast<double>(data.size());
}

namespace {

nlohmann::json tensor_to_json(const Tensor& t) {
    return nlohmann::json(std::vector<double>(t.data(), t.data() + t.size()));
}

std::vector<double> json_to_doubles(const nlohmann::json& j) {
    return j.get<std::vector<double>>();
}

}  // namespace

void save_network(const Network& net, const std::string& path) {
    nlohmann::json j;
    j["format"] = "spikeattack-model";
    j["version"] = 1;
    j["class_count"] = net.class_count();
    j["input_shape"] = net.input_shape();
    nlohmann::json layers = nlohmann::json::array();
    for (std::size_t l = 0; l < net.layer_count(); ++l) {
        const LayerSpec& layer = net.layer(l);
        nlohmann::json lj;
        lj["kind"] = layer_kind_name(layer.kind);
        if (layer.kind == LayerKind::Dense) {
            lj["in_features"] = layer.in_features;
            lj["out_features"] = layer.out_features;
            lj["weight"] = tensor_to_json(layer.weight);
            lj["bias"] = tensor_to_json(layer.bias);
        } else if (layer.kind == LayerKind::Conv2d) {
            lj["in_channels"] = layer.in_channels;
            lj["out_channels"] = layer.out_channels;
            lj["kernel_size"] = layer.kernel_size;
            lj["weight"] = tensor_to_json(layer.weight);
            lj["bias"] = tensor_to_json(layer.bias);
        }
        layers.push_back(std::move(lj));
    }
    j["layers"] = std::move(layers);
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open checkpoint for writing: " + path);
    out << j.dump();
    if (!out) throw std::runtime_error("checkpoint write failed: " + path);
}

Network load_network(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open checkpoint: " + path);
    nlohmann::json j;
    in >> j;
    if (j.value("format", "") != "spikeattack-model") {
        throw std::runtime_error("not a model checkpoint: " + path);
    }
    std::vector<std::size_t> input_shape = j.at("input_shape").get<std::vector<std::size_t>>();
    const std::size_t class_count = j.at("class_count").get<std::size_t>();
    std::vector<LayerSpec> layers;
    for (const auto& lj : j.at("layers")) {
        const std::string kind = lj.at("kind").get<std::string>();
        if (kind == "dense") {
            LayerSpec s = LayerSpec::dense(lj.at("in_features").get<std::size_t>(),
                                           lj.at("out_features").get<std::size_t>());
            s.weight = Tensor(s.weight.shape(), json_to_doubles(lj.at("weight")));
            s.bias = Tensor(s.bias.shape(), json_to_doubles(lj.at("bias")));
            layers.push_back(std::move(s));
        } else if (kind == "conv2d") {
            LayerSpec s = LayerSpec::conv2d(lj.at("in_channels").get<std::size_t>(),
                                            lj.at("out_channels").get<std::size_t>(),
                                            lj.at("kernel_size").get<std::size_t>());
            s.weight = Tensor(s.weight.shape(), json_to_doubles(lj.at("weight")));
            s.bias = Tensor(s.bias.shape(), json_to_doubles(lj.at("bias")));
            layers.push_back(std::move(s));
        } else if (kind == "relu") {
            layers.push_back(LayerSpec::relu());
        } else if (kind == "maxpool2x2") {
            layers.push_back(LayerSpec::maxpool2x2());
        } else if (kind == "flatten") {
            layers.push_back(LayerSpec::flatten());
        } else {
            throw std::runtime_error("unknown layer kind in checkpoint: " + kind);
        }
    }
    return Network(std::move(input_shape), std::move(layers), class_count);
}

}  // namespace spikeattack
