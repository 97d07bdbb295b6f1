#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "spikeattack/attack.hpp"

namespace spikeattack {

// Per-layer relative changes of activations and output gradients between
// consecutive iterations of an exact attack, averaged over examples.
// Row r (0-based) holds the change between iterations r+1 and r+2, so a
// T-iteration attack yields T-1 rows.
struct RedundancyTrace {
    std::size_t iterations = 0;  // T
    std::size_t layers = 0;      // gated layer count
    std::string model_tag;
    std::vector<std::string> layer_labels;
    std::vector<double> activation_change;  // (T-1) x layers, row-major
    std::vector<double> gradient_change;

    std::size_t rows() const { return iterations - 1; }
    double activation_at(std::size_t row, std::size_t l) const {
        return activation_change[row * layers + l];
    }
    double gradient_at(std::size_t row, std::size_t l) const {
        return gradient_change[row * layers + l];
    }
};

// Runs exact PGD for cfg.iterations (>= 2) and records, for every gated
// layer, the relative change of its input activations and of the loss
// gradient at its output.
RedundancyTrace trace_redundancy(const Network& net, const Tensor& x,
                                 const std::vector<std::size_t>& y, const AttackConfig& cfg,
                                 SeededRandom& rng, const std::string& model_tag = "normal");

// Long form: metric,iteration,layer,value with 17 significant digits.
void export_trace(const RedundancyTrace& trace, std::ostream& out);
void export_trace(const RedundancyTrace& trace, const std::string& path);

// Wide form (one matrix per metric): iteration column then one column per layer.
void export_trace_wide(const RedundancyTrace& trace, const std::string& metric,
                       std::ostream& out);

}  // namespace spikeattack
