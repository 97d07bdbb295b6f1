#include "spikeattack/profile.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <stdexcept>

namespace spikeattack {

namespace {

inline double sign(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

std::string format_g17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

// mean over examples of per-example relative change between two batched tensors
double mean_example_change(const Tensor& current, const Tensor& previous) {
    const std::size_t n = current.shape().at(0);
    const std::size_t stride = current.batch_stride();
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        total += relative_change(current.example(i), previous.example(i), stride);
    }
    return total / static_cast<double>(n);
}

}  // namespace

RedundancyTrace trace_redundancy(const Network& net, const Tensor& x,
                                 const std::vector<std::size_t>& y, const AttackConfig& cfg,
                                 SeededRandom& rng, const std::string& model_tag) {
    cfg.validate();
    if (cfg.iterations < 2) {
        throw std::invalid_argument("trace_redundancy: need at least 2 iterations");
    }
    const std::vector<std::size_t> gated = net.gated_layers();
    const std::size_t L = gated.size();
    const std::size_t T = cfg.iterations;

    RedundancyTrace trace;
    trace.iterations = T;
    trace.layers = L;
    trace.model_tag = model_tag;
    for (std::size_t l = 0; l < L; ++l) {
        trace.layer_labels.push_back(std::string(layer_kind_name(net.layer(gated[l]).kind)) +
                                     "_" + std::to_string(l + 1));
    }
    trace.activation_change.assign((T - 1) * L, 0.0);
    trace.gradient_change.assign((T - 1) * L, 0.0);

    Tensor x_t = x;
    if (cfg.random_start) {
        Tensor start = x;
        Tensor delta = uniform(rng, -cfg.epsilon, cfg.epsilon, x.shape());
        for (std::size_t i = 0; i < start.size(); ++i) start[i] += delta[i];
        x_t = project(start, x, cfg);
    }

    std::vector<Tensor> prev_inputs(L), prev_grads(L);
    for (std::size_t t = 1; t <= T; ++t) {
        auto [logits, tape] = net.forward(x_t);
        auto [loss, d_logits] = mean_cross_entropy(logits, y);
        std::vector<Tensor> d_outputs;
        Tensor d_input = net.backward_input(tape, d_logits, &d_outputs);

        for (std::size_t l = 0; l < L; ++l) {
            const Tensor& a = tape.inputs[gated[l]];
            const Tensor& g = d_outputs[gated[l]];
            if (t >= 2) {
                trace.activation_change[(t - 2) * L + l] = mean_example_change(a, prev_inputs[l]);
                trace.gradient_change[(t - 2) * L + l] = mean_example_change(g, prev_grads[l]);
            }
            prev_inputs[l] = a;
            prev_grads[l] = g;
        }

        Tensor step(x_t.shape());
        for (std::size_t i = 0; i < step.size(); ++i) {
            step[i] = x_t[i] + cfg.alpha * sign(d_input[i]);
        }
        x_t = project(step, x, cfg);
    }
    return trace;
}

void export_trace(const RedundancyTrace& trace, std::ostream& out) {
    out << "metric,iteration,layer,value\n";
    for (const char* metric : {"activation_change", "gradient_change"}) {
        const bool activation = metric[0] == 'a';
        for (std::size_t row = 0; row < trace.rows(); ++row) {
            for (std::size_t l = 0; l < trace.layers; ++l) {
                const double v = activation ? trace.activation_at(row, l)
                                            : trace.gradient_at(row, l);
                out << metric << ',' << (row + 2) << ',' << (l + 1) << ',' << format_g17(v)
                    << '\n';
            }
        }
    }
}

void export_trace(const RedundancyTrace& trace, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open trace CSV for writing: " + path);
    export_trace(trace, out);
    if (!out) throw std::runtime_error("trace CSV write failed: " + path);
}

void export_trace_wide(const RedundancyTrace& trace, const std::string& metric,
                       std::ostream& out) {
    const bool activation = metric == "activation_change";
    if (!activation && metric != "gradient_change") {
        throw std::invalid_argument("unknown trace metric: " + metric);
    }
    out << "iteration";
    for (const auto& label : trace.layer_labels) out << ',' << label;
    out << '\n';
    for (std::size_t row = 0; row < trace.rows(); ++row) {
        out << (row + 2);
        for (std::size_t l = 0; l < trace.layers; ++l) {
            const double v =
                activation ? trace.activation_at(row, l) : trace.gradient_at(row, l);
            out << ',' << format_g17(v);
        }
        out << '\n';
    }
}

}  // namespace spikeattack
