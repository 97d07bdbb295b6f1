#include "spikeattack/spike.hpp"

#include <algorithm>
#include <fstream>
#include <ostream>
#include <stdexcept>

#include "spikeattack/kernels.hpp"

namespace spikeattack {

GateDecision gate(const Tensor& a_t, const Tensor& a_ref, double rho) {
    return relative_change(a_t, a_ref) >= rho ? GateDecision::Fire : GateDecision::Reuse;
}

CostLedger::CostLedger(std::vector<std::uint64_t> mac_per_layer, std::size_t example_count)
    : mac_per_layer_(std::move(mac_per_layer)), example_count_(example_count) {
    for (std::uint64_t m : mac_per_layer_) per_iteration_potential_ += m * example_count_;
}

void CostLedger::record_iteration(const std::vector<std::uint8_t>& fired) {
    if (fired.size() != mac_per_layer_.size() * example_count_) {
        throw std::invalid_argument("ledger: fired column has wrong size");
    }
    for (std::size_t l = 0; l < mac_per_layer_.size(); ++l) {
        for (std::size_t i = 0; i < example_count_; ++i) {
            if (fired[l * example_count_ + i]) executed_ += mac_per_layer_[l];
        }
    }
    potential_ += per_iteration_potential_;
    fired_.push_back(fired);
}

bool CostLedger::fired(std::size_t iteration_1based, std::size_t layer, std::size_t example) const {
    if (iteration_1based == 0 || iteration_1based > fired_.size() ||
        layer >= mac_per_layer_.size() || example >= example_count_) {
        throw std::out_of_range("ledger: fired index out of range");
    }
    return fired_[iteration_1based - 1][layer * example_count_ + example] != 0;
}

double CostLedger::relative_cost_pct() const {
    if (potential_ == 0) throw std::logic_error("relative_cost on empty ledger");
    return 100.0 * static_cast<double>(executed_) / static_cast<double>(potential_);
}

void CostLedger::merge_totals(const CostLedger& other) {
    executed_ += other.executed_;
    potential_ += other.potential_;
    backward_executed_ += other.backward_executed_;
}

void CostLedger::export_csv(std::ostream& out) const {
    out << "iteration,layer,example,fired,layer_macs\n";
    for (std::size_t t = 0; t < fired_.size(); ++t) {
        for (std::size_t l = 0; l < mac_per_layer_.size(); ++l) {
            for (std::size_t i = 0; i < example_count_; ++i) {
                out << (t + 1) << ',' << (l + 1) << ',' << i << ','
                    << int(fired_[t][l * example_count_ + i] ? 1 : 0) << ',' << mac_per_layer_[l]
                    << '\n';
            }
        }
    }
}

void CostLedger::export_csv(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open ledger CSV for writing: " + path);
    export_csv(out);
}

double relative_cost(const CostLedger& ledger) { return ledger.relative_cost_pct(); }

SpikeState::SpikeState(const Network& net, SpikeGateConfig cfg, std::size_t example_count)
    : net_(&net), cfg_(cfg), n_(example_count) {
    if (cfg_.rho < 0.0 || cfg_.rho > 1.0) throw std::invalid_argument("rho must be in [0,1]");
    if (n_ == 0) throw std::invalid_argument("example count must be positive");
    gated_ = net.gated_layers();
    gated_macs_ = net.gated_layer_macs();
    caches_.resize(gated_.size());
    ledger_ = CostLedger(gated_macs_, n_);
}

SpikeForward SpikeState::spiking_forward(const Tensor& x_t) {
    return run_forward(x_t, nullptr);
}

SpikeForward SpikeState::spiking_forward_masked(const Tensor& x_t,
                                                const std::vector<std::uint8_t>& declared_row) {
    if (declared_row.size() != gated_.size()) {
        throw std::invalid_argument("mask row length does not match gated layer count");
    }
    return run_forward(x_t, &declared_row);
}

SpikeForward SpikeState::run_forward(const Tensor& x_t,
                                     const std::vector<std::uint8_t>* declared_row) {
    if (x_t.shape().at(0) != n_) throw std::invalid_argument("spiking_forward: batch size mismatch");
    ++t_;
    const bool first = (t_ == 1);

    SpikeForward result;
    result.iteration = t_;
    result.fired.assign(gated_.size() * n_, 0);
    result.backward_gate.assign(gated_.size() * n_, 1);
    ForwardTape& tape = result.tape;
    tape.examples = n_;
    tape.pool_argmax.resize(net_->layer_count());

    Tensor a = x_t;
    std::size_t go = 0;
    for (std::size_t l = 0; l < net_->layer_count(); ++l) {
        const LayerSpec& layer = net_->layer(l);
        Tensor out;
        if (layer.gated()) {
            LayerCache& cache = caches_[go];
            if (!first && !cache.valid) {
                throw std::logic_error("spiking_forward: cache invalid after first iteration");
            }
            const auto& in_shape = net_->layer_input_shape(l);
            const auto& out_shape = net_->layer_output_shape(l);
            out = Tensor([&] {
                std::vector<std::size_t> s{n_};
                s.insert(s.end(), out_shape.begin(), out_shape.end());
                return s;
            }());
            if (first) {
                cache.baseline_input = a;
                cache.cached_output = out;  // shape only, filled below
            }
            const std::size_t in_stride = a.batch_stride();
            const std::size_t out_stride = out.batch_stride();
            for (std::size_t i = 0; i < n_; ++i) {
                bool fire;
                if (first) {
                    fire = true;
                } else if (declared_row) {
                    fire = (*declared_row)[go] != 0;
                } else {
                    const double change = relative_change(a.example(i),
                                                          cache.baseline_input.example(i),
                                                          in_stride);
                    fire = change >= cfg_.rho;
                }
                if (fire) {
                    if (layer.kind == LayerKind::Dense) {
                        kernels::dense_forward(layer.weight.data(), layer.bias.data(),
                                               a.example(i), out.example(i), 1,
                                               layer.in_features, layer.out_features);
                    } else {
                        kernels::conv2d_forward(layer.weight.data(), layer.bias.data(),
                                                a.example(i), out.example(i), 1,
                                                layer.in_channels, layer.out_channels,
                                                in_shape[1], in_shape[2], layer.kernel_size);
                    }
                    std::copy(out.example(i), out.example(i) + out_stride,
                              cache.cached_output.example(i));
                    if (cfg_.baseline_mode == BaselineMode::LastFired) {
                        std::copy(a.example(i), a.example(i) + in_stride,
                                  cache.baseline_input.example(i));
                    }
                    result.fired[go * n_ + i] = 1;
                } else {
                    std::copy(cache.cached_output.example(i),
                              cache.cached_output.example(i) + out_stride, out.example(i));
                }
                result.backward_gate[go * n_ + i] =
                    declared_row ? (*declared_row)[go] : result.fired[go * n_ + i];
            }
            if (cfg_.baseline_mode == BaselineMode::PrevIteration) {
                cache.baseline_input = a;
            }
            cache.valid = true;
            ++go;
        } else {
            out = net_->apply_nongated(l, a, &tape.pool_argmax[l]);
        }
        tape.inputs.push_back(a);
        tape.outputs.push_back(out);
        a = std::move(out);
    }
    ledger_.record_iteration(result.fired);
    result.logits = a;
    return result;
}

Tensor SpikeState::spiking_backward(const SpikeForward& fwd, const Tensor& d_logits) {
    if (fwd.iteration != t_) {
        throw std::invalid_argument("spiking_backward: forward result is stale");
    }
    if (fwd.fired.size() != gated_.size() * n_ || fwd.backward_gate.size() != fwd.fired.size()) {
        throw std::invalid_argument("spiking_backward: fire column does not match state");
    }
    if (d_logits.shape() != std::vector<std::size_t>{n_, net_->class_count()}) {
        throw std::invalid_argument("spiking_backward: d_logits shape mismatch");
    }

    Tensor g = d_logits;
    std::size_t go = gated_.size();
    for (std::size_t li = net_->layer_count(); li-- > 0;) {
        const LayerSpec& layer = net_->layer(li);
        if (layer.gated()) {
            --go;
            const auto& in_shape = net_->layer_input_shape(li);
            std::vector<std::size_t> shape{n_};
            shape.insert(shape.end(), in_shape.begin(), in_shape.end());
            Tensor gin(shape);
            std::uint64_t applied = 0;
            for (std::size_t i = 0; i < n_; ++i) {
                const bool pass = cfg_.surrogate || fwd.backward_gate[go * n_ + i] != 0;
                if (pass) {
                    transpose_apply_slice(layer, g.example(i), gin.example(i), in_shape);
                    applied += gated_macs_[go];
                }
                // blocked entries stay zero
            }
            ledger_.add_backward_macs(applied);
            g = std::move(gin);
        } else {
            g = net_->nongated_backward(li, fwd.tape, g);
        }
    }
    return g;
}

}  // namespace spikeattack
