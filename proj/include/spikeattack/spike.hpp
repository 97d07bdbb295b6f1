#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "spikeattack/net.hpp"
#include "spikeattack/tensor.hpp"

namespace spikeattack {

enum class BaselineMode { PrevIteration, LastFired };

// Gate configuration. Gating is per example: each example in a batch decides
// fire/reuse independently. `surrogate = false` is the ablation that leaves
// the broken backward path in place (reused layers propagate zero).
struct SpikeGateConfig {
    double rho = 0.0;
    BaselineMode baseline_mode = BaselineMode::PrevIteration;
    bool surrogate = true;
};

enum class GateDecision { Fire, Reuse };

// Fire iff ||a_t - a_ref|| / ||a_t|| >= rho (equality fires; a vanished
// activation with nonzero residual fires via the infinity sentinel).
GateDecision gate(const Tensor& a_t, const Tensor& a_ref, double rho);

// MAC-weighted record of which (iteration, gated layer, example) computations
// executed. Executed/potential totals are exact integer arithmetic.
class CostLedger {
public:
    CostLedger() = default;
    CostLedger(std::vector<std::uint64_t> mac_per_layer, std::size_t example_count);

    std::size_t iterations() const { return fired_.size(); }
    std::size_t layer_count() const { return mac_per_layer_.size(); }
    std::size_t example_count() const { return example_count_; }
    const std::vector<std::uint64_t>& mac_per_layer() const { return mac_per_layer_; }

    // fired is layer-major: fired[l * example_count + i]. Appends iteration.
    void record_iteration(const std::vector<std::uint8_t>& fired);
    void add_backward_macs(std::uint64_t macs) { backward_executed_ += macs; }

    bool fired(std::size_t iteration_1based, std::size_t layer, std::size_t example) const;

    std::uint64_t executed_macs() const { return executed_; }
    std::uint64_t potential_macs() const { return potential_; }
    std::uint64_t backward_macs() const { return backward_executed_; }

    // 100 * executed / potential. Throws on an empty ledger.
    double relative_cost_pct() const;

    // Totals-only accumulation; used when aggregating independent runs.
    void merge_totals(const CostLedger& other);

    void export_csv(std::ostream& out) const;
    void export_csv(const std::string& path) const;

private:
    std::vector<std::uint64_t> mac_per_layer_;
    std::size_t example_count_ = 0;
    std::uint64_t per_iteration_potential_ = 0;
    std::vector<std::vector<std::uint8_t>> fired_;
    std::uint64_t executed_ = 0;
    std::uint64_t potential_ = 0;
    std::uint64_t backward_executed_ = 0;
};

// Result of one gated forward pass. `fired` is the realized gate column
// (layer-major, per example); `backward_gate` controls which entries the
// naive backward blocks and is the declared schedule row when a mask
// override is in effect.
struct SpikeForward {
    Tensor logits;
    ForwardTape tape;
    std::vector<std::uint8_t> fired;
    std::vector<std::uint8_t> backward_gate;
    std::size_t iteration = 0;
};

// Per-layer activation caches plus the gate; one instance per attack run.
// The first forward always fires every gated layer to populate the caches.
class SpikeState {
public:
    SpikeState(const Network& net, SpikeGateConfig cfg, std::size_t example_count);

    const Network& net() const { return *net_; }
    const SpikeGateConfig& config() const { return cfg_; }
    std::size_t iteration() const { return t_; }
    std::size_t gated_count() const { return gated_.size(); }

    CostLedger& ledger() { return ledger_; }
    const CostLedger& ledger() const { return ledger_; }

    // Threshold-gated forward.
    SpikeForward spiking_forward(const Tensor& x_t);
    // Gate bypassed: layer l fires iff declared_row[l] is set, for every
    // example. Iteration 1 fires regardless (caches must exist) but the
    // declared row still governs the backward gate.
    SpikeForward spiking_forward_masked(const Tensor& x_t,
                                        const std::vector<std::uint8_t>& declared_row);

    // Gradient of the loss w.r.t. the input for the most recent forward.
    // Fired layers run the exact linear backward; reused layers inject the
    // surrogate transpose_apply(layer, upstream), or zero in naive mode.
    Tensor spiking_backward(const SpikeForward& fwd, const Tensor& d_logits);

private:
    struct LayerCache {
        Tensor baseline_input;
        Tensor cached_output;
        bool valid = false;
    };

    SpikeForward run_forward(const Tensor& x_t, const std::vector<std::uint8_t>* declared_row);

    const Network* net_;
    SpikeGateConfig cfg_;
    std::size_t n_;
    std::vector<std::size_t> gated_;
    std::vector<std::uint64_t> gated_macs_;
    std::vector<LayerCache> caches_;
    CostLedger ledger_;
    std::size_t t_ = 0;
};

double relative_cost(const CostLedger& ledger);

}  // namespace spikeattack
