#include "spikeattack/maskopt.hpp"

#include <fstream>
#include <stdexcept>

#include <json.hpp>

#include "spikeattack/spike.hpp"

namespace spikeattack {

Mask Mask::zeros(std::size_t iterations, std::size_t layers) {
    Mask m;
    m.iterations = iterations;
    m.layers = layers;
    m.delta.assign(iterations * layers, 0);
    return m;
}

std::string Mask::bit_string() const {
    std::string s;
    s.reserve(delta.size());
    for (std::uint8_t b : delta) s.push_back(b ? '1' : '0');
    return s;
}

Mask embed_coarse(std::size_t S, std::size_t iterations, std::size_t layers) {
    if (S > iterations) throw std::invalid_argument("embed_coarse: S exceeds iteration count");
    Mask m = Mask::zeros(iterations, layers);
    for (std::size_t t = 0; t < S; ++t) {
        for (std::size_t l = 0; l < layers; ++l) m.set(t, l, true);
    }
    return m;
}

std::vector<std::uint64_t> MaskProblem::layer_costs() const {
    const std::uint64_t n = x.shape().at(0);
    std::vector<std::uint64_t> costs = net->gated_layer_macs();
    for (auto& c : costs) c *= n;
    return costs;
}

std::uint64_t MaskProblem::full_cost() const {
    std::uint64_t total = 0;
    for (auto c : layer_costs()) total += c;
    return total * iterations();
}

std::uint64_t MaskProblem::mask_cost(const Mask& mask) const {
    if (mask.iterations != iterations() || mask.layers != layer_count()) {
        throw std::invalid_argument("mask dimensions do not match problem");
    }
    const auto costs = layer_costs();
    std::uint64_t total = 0;
    for (std::size_t t = 0; t < mask.iterations; ++t) {
        for (std::size_t l = 0; l < mask.layers; ++l) {
            if (mask.at(t, l)) total += costs[l];
        }
    }
    return total;
}

namespace {

void check_problem(const MaskProblem& problem) {
    if (!problem.net) throw std::invalid_argument("mask problem: missing network");
    problem.attack.validate();
}

inline double sign(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

double exact_mean_loss(const Network& net, const Tensor& x, const std::vector<std::size_t>& y) {
    auto [logits, tape] = net.forward(x);
    return mean_cross_entropy(logits, y).first;
}

}  // namespace

MaskEvaluation evaluate_mask(const MaskProblem& problem, const Mask& mask) {
    check_problem(problem);
    const std::size_t T = problem.iterations();
    const std::size_t L = problem.layer_count();
    if (mask.iterations != T || mask.layers != L) {
        throw std::invalid_argument("mask dimensions do not match problem");
    }

    SpikeGateConfig gate;
    gate.surrogate = (problem.semantics == MaskGradSemantics::Surrogate);
    SpikeState state(*problem.net, gate, problem.x.shape().at(0));

    MaskEvaluation eval;
    const AttackConfig& cfg = problem.attack;
    Tensor x_t = problem.x;
    for (std::size_t t = 0; t < T; ++t) {
        std::vector<std::uint8_t> row(mask.delta.begin() + t * L,
                                      mask.delta.begin() + (t + 1) * L);
        if (t == 0) {
            for (std::uint8_t b : row) {
                if (!b) eval.first_row_corrected = true;
            }
        }
        SpikeForward fwd = state.spiking_forward_masked(x_t, row);
        auto [loss, d_logits] = mean_cross_entropy(fwd.logits, problem.y);
        Tensor d_input = state.spiking_backward(fwd, d_logits);
        Tensor step(x_t.shape());
        for (std::size_t i = 0; i < step.size(); ++i) {
            step[i] = x_t[i] + cfg.alpha * sign(d_input[i]);
        }
        x_t = project(step, problem.x, cfg);
    }
    eval.value = exact_mean_loss(*problem.net, x_t, problem.y);
    eval.executed_cost = state.ledger().executed_macs();
    return eval;
}

std::pair<std::size_t, double> solve_coarse(const MaskProblem& problem) {
    check_problem(problem);
    const auto costs = problem.layer_costs();
    std::uint64_t row_cost = 0;
    for (auto c : costs) row_cost += c;

    std::size_t best_s = 0;
    double best_value = exact_mean_loss(*problem.net, problem.x, problem.y);
    for (std::size_t s = 1; s <= problem.iterations(); ++s) {
        if (row_cost * s > problem.budget) break;
        AttackConfig truncated = problem.attack;
        truncated.iterations = s;
        truncated.random_start = false;
        SeededRandom rng(0);
        AttackResult run = pgd(*problem.net, problem.x, problem.y, truncated, rng);
        if (run.mean_final_loss > best_value) {
            best_value = run.mean_final_loss;
            best_s = s;
        }
    }
    return {best_s, best_value};
}

MaskSolution solve_fine_bruteforce(const MaskProblem& problem) {
    check_problem(problem);
    const std::size_t T = problem.iterations();
    const std::size_t L = problem.layer_count();
    if (T * L > 16) {
        throw std::invalid_argument(
            "solve_fine_bruteforce: instance too large (T*L > 16); use solve_fine_greedy");
    }

    const std::size_t free_bits = (T - 1) * L;
    const std::uint64_t combos = 1ULL << free_bits;

    bool found = false;
    MaskSolution best;
    for (std::uint64_t code = 0; code < combos; ++code) {
        Mask mask = Mask::zeros(T, L);
        for (std::size_t l = 0; l < L; ++l) mask.set(0, l, true);
        // msb-first so enumeration order is lexicographic over the bit string
        for (std::size_t b = 0; b < free_bits; ++b) {
            if (code & (1ULL << (free_bits - 1 - b))) {
                mask.delta[L + b] = 1;
            }
        }
        const std::uint64_t cost = problem.mask_cost(mask);
        if (cost > problem.budget) continue;
        const double value = evaluate_mask(problem, mask).value;
        if (!found || value > best.value || (value == best.value && cost < best.cost)) {
            best = {mask, value, cost};
            found = true;
        }
    }
    if (!found) {
        // even the pinned first row exceeds the budget: no schedule runs
        Mask empty = Mask::zeros(T, L);
        best = {empty, exact_mean_loss(*problem.net, problem.x, problem.y), 0};
    }
    return best;
}

MaskSolution solve_fine_greedy(const MaskProblem& problem) {
    check_problem(problem);
    const std::size_t T = problem.iterations();
    const std::size_t L = problem.layer_count();
    const auto costs = problem.layer_costs();
    std::uint64_t row_cost = 0;
    for (auto c : costs) row_cost += c;

    if (row_cost > problem.budget) {
        Mask empty = Mask::zeros(T, L);
        return {empty, exact_mean_loss(*problem.net, problem.x, problem.y), 0};
    }

    // best feasible block embedding as the starting point
    Mask current = Mask::zeros(T, L);
    double current_value = evaluate_mask(problem, current).value;
    std::uint64_t current_cost = 0;
    for (std::size_t s = 1; s <= T && row_cost * s <= problem.budget; ++s) {
        Mask candidate = embed_coarse(s, T, L);
        const double value = evaluate_mask(problem, candidate).value;
        if (value > current_value) {
            current = candidate;
            current_value = value;
            current_cost = problem.mask_cost(candidate);
        }
    }

    bool improved = true;
    while (improved) {
        improved = false;
        Mask best_move;
        double best_move_value = current_value;
        std::uint64_t best_move_cost = 0;

        auto consider = [&](const Mask& candidate) {
            const std::uint64_t cost = problem.mask_cost(candidate);
            if (cost > problem.budget) return;
            const double value = evaluate_mask(problem, candidate).value;
            if (value > best_move_value) {
                best_move = candidate;
                best_move_value = value;
                best_move_cost = cost;
            }
        };

        for (std::size_t t = 1; t < T; ++t) {
            for (std::size_t l = 0; l < L; ++l) {
                if (!current.at(t, l)) {
                    Mask flip = current;
                    flip.set(t, l, true);
                    consider(flip);
                    for (std::size_t t2 = 1; t2 < T; ++t2) {
                        for (std::size_t l2 = 0; l2 < L; ++l2) {
                            if (current.at(t2, l2)) {
                                Mask swap = flip;
                                swap.set(t2, l2, false);
                                consider(swap);
                            }
                        }
                    }
                }
            }
        }
        if (best_move_value > current_value) {
            current = best_move;
            current_value = best_move_value;
            current_cost = best_move_cost;
            improved = true;
        }
    }
    return {current, current_value, current_cost};
}

void write_instance_json(const MaskProblem& problem, const MaskSolution& best,
                         const std::string& path) {
    nlohmann::json j;
    j["iterations"] = problem.iterations();
    j["layers"] = problem.layer_count();
    j["costs"] = problem.layer_costs();
    j["budget"] = problem.budget;
    j["semantics"] = problem.semantics == MaskGradSemantics::Naive ? "naive" : "surrogate";
    j["best_mask"] = best.mask.bit_string();
    j["value"] = best.value;
    j["cost"] = best.cost;
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open instance JSON for writing: " + path);
    out << j.dump(2) << '\n';
}

}  // namespace spikeattack
