#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "spikeattack/attack.hpp"
#include "spikeattack/net.hpp"

namespace spikeattack {

// Gradient rule used when a scheduled layer reuses its cached output.
// `Naive` leaves the broken backward path (zero gradient through the layer),
// which is the semantics the block-mask embedding requires: an all-reused
// iteration performs no update. `Surrogate` injects the transpose map and
// lets reused iterations keep moving the input.
enum class MaskGradSemantics { Naive, Surrogate };

// Binary schedule over iterations x gated layers. delta[t*L + l] = 1 means
// layer l computes at iteration t+1.
struct Mask {
    std::size_t iterations = 0;  // T
    std::size_t layers = 0;      // L
    std::vector<std::uint8_t> delta;

    static Mask zeros(std::size_t iterations, std::size_t layers);
    std::uint8_t at(std::size_t t, std::size_t l) const { return delta[t * layers + l]; }
    void set(std::size_t t, std::size_t l, bool v) { delta[t * layers + l] = v ? 1 : 0; }
    std::string bit_string() const;  // row-major '0'/'1'
};

Mask embed_coarse(std::size_t S, std::size_t iterations, std::size_t layers);

struct MaskProblem {
    const Network* net = nullptr;
    Tensor x;
    std::vector<std::size_t> y;
    AttackConfig attack;  // random_start is ignored; evaluation is deterministic
    std::uint64_t budget = 0;
    MaskGradSemantics semantics = MaskGradSemantics::Naive;

    std::size_t iterations() const { return attack.iterations; }
    std::size_t layer_count() const { return net->gated_layers().size(); }
    // C_{t,l} for one iteration row: per-layer MACs times the example count.
    std::vector<std::uint64_t> layer_costs() const;
    std::uint64_t full_cost() const;                 // all-ones mask
    std::uint64_t mask_cost(const Mask& mask) const; // declared schedule, exact integers
};

struct MaskEvaluation {
    double value = 0.0;           // exact final loss of x_{T+1}
    std::uint64_t executed_cost = 0;
    bool first_row_corrected = false;
};

// Runs the masked attack. A zero entry in the first row is corrected to 1
// (caches must be populated) and its cost charged, but the declared row still
// governs gradient flow, so an all-zero mask leaves the input untouched.
MaskEvaluation evaluate_mask(const MaskProblem& problem, const Mask& mask);

// Enumerates S in {0..T} under the budget; the objective of S is the exact
// loss after S full attack iterations, evaluated by a truncated run of the
// ungated attack.
std::pair<std::size_t, double> solve_coarse(const MaskProblem& problem);

struct MaskSolution {
    Mask mask;
    double value = 0.0;
    std::uint64_t cost = 0;  // declared-mask cost
};

// Exhaustive search over masks with the first row pinned to ones. Rejects
// instances with T*L > 16. Ties break toward lower cost, then the
// lexicographically smallest bit string. Returns the empty schedule when
// even the pinned first row exceeds the budget.
MaskSolution solve_fine_bruteforce(const MaskProblem& problem);

// Seeds with the best coarse embedding, then hill-climbs over single-bit
// flips and swaps in rows 2..T while the budget allows.
MaskSolution solve_fine_greedy(const MaskProblem& problem);

void write_instance_json(const MaskProblem& problem, const MaskSolution& best,
                         const std::string& path);

}  // namespace spikeattack
