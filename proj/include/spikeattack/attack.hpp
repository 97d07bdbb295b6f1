#pragma once

#include <cstdint>
#include <vector>

#include "spikeattack/net.hpp"
#include "spikeattack/spike.hpp"
#include "spikeattack/tensor.hpp"

namespace spikeattack {

struct AttackConfig {
    double epsilon = 8.0 / 255.0;  // L-inf radius
    double alpha = 2.0 / 255.0;    // step size
    std::size_t iterations = 20;
    bool random_start = false;
    double momentum = 1.0;  // MI-FGSM decay
    double lo = 0.0, hi = 1.0;
    double reference_iterations = 20.0;  // T0 for baseline cost reporting

    void validate() const;
};

// Realized gate decisions of a run: iterations x gated layers x examples.
struct FireMask {
    std::size_t iterations = 0, layers = 0, examples = 0;
    std::vector<std::uint8_t> bits;  // [t][l][i]

    bool at(std::size_t t_1based, std::size_t l, std::size_t i) const {
        return bits[((t_1based - 1) * layers + l) * examples + i] != 0;
    }
};

struct AttackResult {
    Tensor x_adv;
    std::vector<double> losses;  // mean loss at x_t, t = 1..T
    FireMask fire_mask;          // all-true for the exact baselines
    CostLedger ledger;
    double accuracy_under_attack = 0.0;  // exact evaluation on x_adv
    double mean_final_loss = 0.0;        // exact loss of x_adv
};

// Entrywise clamp of x to [x0 - eps, x0 + eps], then to [lo, hi].
Tensor project(const Tensor& x, const Tensor& x0, const AttackConfig& cfg);

// MI-FGSM accumulator: per example, velocity <- mu * velocity + grad / |grad|_1.
// A zero-gradient example skips the normalization term.
void accumulate_momentum(Tensor& velocity, const Tensor& grad, double mu);

AttackResult pgd(const Network& net, const Tensor& x, const std::vector<std::size_t>& y,
                 const AttackConfig& cfg, SeededRandom& rng);
AttackResult ifgsm(const Network& net, const Tensor& x, const std::vector<std::size_t>& y,
                   const AttackConfig& cfg, SeededRandom& rng);
AttackResult mifgsm(const Network& net, const Tensor& x, const std::vector<std::size_t>& y,
                    const AttackConfig& cfg, SeededRandom& rng);
AttackResult spiking_pgd(const Network& net, const Tensor& x, const std::vector<std::size_t>& y,
                         const AttackConfig& cfg, const SpikeGateConfig& gate, SeededRandom& rng);

enum class ScheduleKind { Constant, Exponential };

struct ScheduleSpec {
    ScheduleKind kind = ScheduleKind::Constant;
    double rho0 = 0.1;
    double lambda = 2.0;
    double total_epochs = 1.0;  // N

    void validate() const;
};

// Constant: rho0. Exponential: rho0 * (exp(-lambda*t/N) - exp(-lambda)) /
// (1 - exp(-lambda)); equals rho0 at t = 0 and 0 at t = N. Throws outside
// [0, N].
double schedule_rho(const ScheduleSpec& spec, double t);

}  // namespace spikeattack
