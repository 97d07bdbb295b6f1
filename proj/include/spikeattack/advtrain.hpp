#pragma once

#include <functional>
#include <vector>

#include "spikeattack/attack.hpp"
#include "spikeattack/data.hpp"

namespace spikeattack {

struct ATConfig {
    std::size_t epochs = 10;
    AttackConfig attack;        // inner maximization
    ScheduleSpec schedule;      // threshold over epochs; schedule.total_epochs == epochs
    double learning_rate = 0.05;
    std::size_t batch_size = 32;
    AttackConfig eval_attack;   // always run exact
    std::uint64_t seed = 0;
    BaselineMode baseline_mode = BaselineMode::PrevIteration;
    bool vanilla_pgd = false;   // exact inner attack, schedule ignored

    void validate() const;
};

struct ATEpochRow {
    std::size_t epoch = 0;  // 0-based; rho evaluated at this index
    double rho = 0.0;
    double clean_acc = 0.0;
    double robust_acc = 0.0;
    double precision_pct = 0.0;      // relative cost of this epoch's merged ledger
    double avg_precision_pct = 0.0;  // cost-weighted running mean
};

struct ATReport {
    std::vector<ATEpochRow> rows;
    double best_clean = 0.0;
    double best_robust = 0.0;
    double best_sum = 0.0;  // max over epochs of clean + robust
    double final_avg_precision_pct = 0.0;
};

using EpochCallback = std::function<void(std::size_t epoch, const Network& net)>;

// PGD adversarial training with a scheduled spiking gate (vanilla_pgd runs the
// exact inner attack). Evaluation attacks are always exact, so the reported
// robust accuracy is independent of the gate.
ATReport adversarial_train(Network& net, const Dataset& train, const Dataset& heldout,
                           const ATConfig& cfg, const EpochCallback& on_epoch = nullptr);

// Fraction of examples still classified correctly after an exact attack.
double evaluate_robust(const Network& net, const Dataset& data, const AttackConfig& cfg,
                       std::uint64_t seed);

}  // namespace spikeattack
