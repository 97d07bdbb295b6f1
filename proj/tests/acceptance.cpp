// Acceptance suite: runs every criterion end to end and prints one
// [PASS]/[FAIL] line per criterion. Exit code is the number of failures.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <string>
#include <vector>

#include "spikeattack/advtrain.hpp"
#include "spikeattack/attack.hpp"
#include "spikeattack/data.hpp"
#include "spikeattack/maskopt.hpp"
#include "spikeattack/net.hpp"
#include "spikeattack/profile.hpp"
#include "spikeattack/spike.hpp"
#include "testutil.hpp"

using namespace spikeattack;
using namespace testutil;

namespace {

struct Check {
    bool ok = true;
    std::string detail;

    void expect(bool condition, const std::string& message) {
        if (!condition && ok) {
            ok = false;
            detail = message;
        }
    }
};

Network trained_desk_model(std::uint64_t seed) {
    Dataset train = synth_dataset(1000 + seed, 240, 4, {3, 8, 8});
    Network net = make_desk_net(3, 8, 4, 10 + seed);
    SeededRandom rng(20 + seed);
    for (int e = 0; e < 20; ++e) sgd_epoch(net, train, 0.05, rng, 16);
    return net;
}

AttackConfig eps8_cfg(std::size_t T) {
    AttackConfig cfg;
    cfg.epsilon = 8.0 / 255.0;
    cfg.alpha = 2.0 / 255.0;
    cfg.iterations = T;
    cfg.random_start = false;
    return cfg;
}

// --- criterion 1: rho = 0 equivalence ---------------------------------------
Check criterion_rho0_equivalence() {
    Check c;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        Network net = make_desk_net(3, 8, 4, 500 + seed);
        Dataset data = synth_dataset(600 + seed, 16, 4, {3, 8, 8});
        AttackConfig cfg = eps8_cfg(10);
        cfg.random_start = true;

        SeededRandom r1(seed), r2(seed);
        AttackResult exact = pgd(net, data.images, data.labels, cfg, r1);
        SpikeGateConfig gate;  // rho = 0
        AttackResult gated = spiking_pgd(net, data.images, data.labels, cfg, gate, r2);

        c.expect(max_abs_diff(exact.x_adv, gated.x_adv) <= 1e-12,
                 "adversarial examples diverge at seed " + std::to_string(seed));
        c.expect(exact.losses == gated.losses,
                 "per-iteration losses diverge at seed " + std::to_string(seed));
    }
    return c;
}

// --- criterion 2: gradient oracle -------------------------------------------
Check criterion_gradient_oracle() {
    Check c;
    SeededRandom data_rng(77);
    int instances = 0;
    auto check_net = [&](Network& net, std::vector<std::size_t> in_shape) {
        std::vector<std::size_t> shape{2};
        shape.insert(shape.end(), in_shape.begin(), in_shape.end());
        Tensor x = uniform(data_rng, 0.05, 0.95, shape);
        std::vector<std::size_t> y = {0, 1};
        auto [logits, tape] = net.forward(x);
        auto [loss, d_logits] = mean_cross_entropy(logits, y);
        Tensor analytic = net.backward_input(tape, d_logits);
        Tensor fd = fd_input_grad(net, x, y, 1e-5);
        const double scale = std::max(max_abs(fd), 1e-8);
        c.expect(max_abs_diff(analytic, fd) / scale < 1e-5,
                 "finite differences disagree at instance " + std::to_string(instances));
        ++instances;
    };

    for (std::uint64_t seed = 1; seed <= 4; ++seed) {
        {
            std::vector<LayerSpec> layers;
            layers.push_back(LayerSpec::dense(6, 3));
            Network net({6}, std::move(layers), 3);
            randomize_params(net, seed);
            check_net(net, {6});
        }
        {
            std::vector<LayerSpec> layers;
            layers.push_back(LayerSpec::conv2d(2, 3, 3));
            layers.push_back(LayerSpec::flatten());
            layers.push_back(LayerSpec::dense(3 * 4 * 4, 3));
            Network net({2, 4, 4}, std::move(layers), 3);
            randomize_params(net, seed + 10);
            check_net(net, {2, 4, 4});
        }
        {
            std::vector<LayerSpec> layers;
            layers.push_back(LayerSpec::dense(5, 4));
            layers.push_back(LayerSpec::relu());
            layers.push_back(LayerSpec::dense(4, 2));
            Network net({5}, std::move(layers), 2);
            randomize_params(net, seed + 20);
            check_net(net, {5});
        }
        {
            std::vector<LayerSpec> layers;
            layers.push_back(LayerSpec::maxpool2x2());
            layers.push_back(LayerSpec::flatten());
            layers.push_back(LayerSpec::dense(2 * 2 * 2, 2));
            Network net({2, 4, 4}, std::move(layers), 2);
            randomize_params(net, seed + 30);
            check_net(net, {2, 4, 4});
        }
        {
            Network net = make_desk_net(1, 8, 3, seed + 40);
            check_net(net, {1, 8, 8});
        }
    }
    c.expect(instances == 20, "expected 20 instances");
    return c;
}

// --- criterion 3: surrogate fidelity -----------------------------------------
Check criterion_surrogate_fidelity() {
    Check c;
    Network net = make_desk_net(3, 8, 4, 90);
    SeededRandom rng(91);
    Tensor x = uniform(rng, 0.0, 1.0, {2, 3, 8, 8});
    std::vector<std::size_t> y = {0, 2};

    {
        SpikeGateConfig gate;
        gate.rho = 0.9;
        SpikeState state(net, gate, 2);
        state.spiking_forward(x);
        SpikeForward second = state.spiking_forward(x);  // unchanged input: reuse everywhere
        for (std::uint8_t f : second.fired) {
            c.expect(f == 0, "layer fired despite unchanged input");
        }
        auto [loss, d_logits] = mean_cross_entropy(second.logits, y);
        Tensor surrogate = state.spiking_backward(second, d_logits);
        auto [logits, tape] = net.forward(x);
        Tensor exact = net.backward_input(tape, d_logits);
        c.expect(max_abs_diff(surrogate, exact) <= 1e-10, "surrogate gradient drifts beyond 1e-10");
    }
    {
        SpikeGateConfig gate;
        gate.rho = 0.9;
        gate.surrogate = false;
        SpikeState state(net, gate, 2);
        state.spiking_forward(x);
        SpikeForward second = state.spiking_forward(x);
        auto [loss, d_logits] = mean_cross_entropy(second.logits, y);
        Tensor naive = state.spiking_backward(second, d_logits);
        c.expect(max_abs(naive) == 0.0, "naive mode leaked gradient through a reused layer");
    }
    return c;
}

// --- criterion 4: proposition 1 ----------------------------------------------
Check criterion_proposition1() {
    Check c;
    int instances = 0;
    for (std::uint64_t seed = 0; instances < 100; ++seed) {
        const bool three = (seed % 2 == 1);
        Network net = three ? make_three_gate_net(4, 3000 + seed)
                            : make_tiny_net({4}, 5, 3, 3000 + seed);
        MaskProblem p;
        p.net = &net;
        SeededRandom rng(4000 + seed);
        p.x = uniform(rng, 0.05, 0.95, {1, 4});
        p.y = {rng.index(net.class_count())};
        p.attack = eps8_cfg(3);
        p.attack.epsilon = 0.2;
        p.attack.alpha = 0.05;
        p.budget = static_cast<std::uint64_t>(rng.next_unit() *
                                              static_cast<double>(p.full_cost()));

        auto [s, coarse_value] = solve_coarse(p);
        MaskSolution fine = solve_fine_bruteforce(p);
        c.expect(fine.value >= coarse_value,
                 "fine solver fell below coarse at instance " + std::to_string(instances));

        const std::size_t L = p.layer_count();
        for (std::size_t S = 0; S <= 3; ++S) {
            const double masked = evaluate_mask(p, embed_coarse(S, 3, L)).value;
            double truncated;
            if (S == 0) {
                auto [logits, tape] = net.forward(p.x);
                truncated = mean_cross_entropy(logits, p.y).first;
            } else {
                AttackConfig cfg = p.attack;
                cfg.iterations = S;
                SeededRandom r(0);
                truncated = pgd(net, p.x, p.y, cfg, r).mean_final_loss;
            }
            c.expect(std::abs(masked - truncated) <= 1e-12,
                     "block mask diverges from the truncated attack at S=" + std::to_string(S));
        }
        ++instances;
    }
    return c;
}

// --- criterion 5: cost accounting ---------------------------------------------
Check criterion_cost_accounting(const Network& trained) {
    Check c;
    Dataset data = synth_dataset(700, 64, 4, {3, 8, 8});
    const auto macs = trained.gated_layer_macs();

    double prev_cost = 1e9;
    for (const double rho : {0.0, 0.01, 0.02, 0.05, 0.1}) {
        AttackConfig cfg = eps8_cfg(10);
        SpikeGateConfig gate;
        gate.rho = rho;
        SeededRandom rng(701);
        AttackResult run = spiking_pgd(trained, data.images, data.labels, cfg, gate, rng);

        // ledger conservation in exact integer arithmetic
        std::uint64_t recount = 0;
        for (std::size_t t = 1; t <= run.fire_mask.iterations; ++t) {
            for (std::size_t l = 0; l < run.fire_mask.layers; ++l) {
                for (std::size_t i = 0; i < run.fire_mask.examples; ++i) {
                    if (run.fire_mask.at(t, l, i)) recount += macs[l];
                }
            }
        }
        c.expect(recount == run.ledger.executed_macs(), "ledger conservation broken");

        const double cost = run.ledger.relative_cost_pct();
        if (rho == 0.0) c.expect(cost == 100.0, "rho = 0 must cost exactly 100%");
        c.expect(cost <= prev_cost, "relative cost increased along the rho grid");
        prev_cost = cost;
    }
    return c;
}

// --- criterion 6: redundancy trend ---------------------------------------------
Check criterion_redundancy_trend(const Network& trained) {
    Check c;
    Dataset probe = synth_dataset(702, 32, 4, {3, 8, 8});
    SeededRandom rng(703);
    RedundancyTrace trace =
        trace_redundancy(trained, probe.images, probe.labels, eps8_cfg(10), rng);

    const std::size_t rows = trace.rows();
    const std::size_t third = rows / 3;
    double first = 0.0, last = 0.0;
    for (std::size_t r = 0; r < third; ++r) {
        for (std::size_t l = 0; l < trace.layers; ++l) first += trace.activation_at(r, l);
    }
    for (std::size_t r = rows - third; r < rows; ++r) {
        for (std::size_t l = 0; l < trace.layers; ++l) last += trace.activation_at(r, l);
    }
    c.expect(last < first, "activation change did not decay over iterations");
    return c;
}

// --- criterion 7: pareto dominance ----------------------------------------------
Check criterion_pareto_dominance() {
    Check c;
    const std::vector<std::size_t> t_grid = {1, 2, 3, 4, 5, 6, 8, 10, 12, 16, 20};
    const std::vector<double> rho_grid = {0.0, 0.005, 0.01, 0.02, 0.05, 0.1};
    const std::size_t t0 = 20;

    std::vector<double> pgd_cost(t_grid.size()), pgd_acc(t_grid.size(), 0.0);
    std::vector<double> spike_cost(rho_grid.size(), 0.0), spike_acc(rho_grid.size(), 0.0);

    const int seeds = 3;
    for (int seed = 0; seed < seeds; ++seed) {
        Network net = trained_desk_model(seed);
        Dataset data = synth_dataset(800 + seed, 128, 4, {3, 8, 8});

        for (std::size_t i = 0; i < t_grid.size(); ++i) {
            AttackConfig cfg = eps8_cfg(t_grid[i]);
            SeededRandom rng(900 + seed);
            AttackResult run = pgd(net, data.images, data.labels, cfg, rng);
            pgd_cost[i] = 100.0 * static_cast<double>(t_grid[i]) / static_cast<double>(t0);
            pgd_acc[i] += run.accuracy_under_attack / seeds;
        }
        for (std::size_t i = 0; i < rho_grid.size(); ++i) {
            AttackConfig cfg = eps8_cfg(t0);
            SpikeGateConfig gate;
            gate.rho = rho_grid[i];
            SeededRandom rng(900 + seed);
            AttackResult run = spiking_pgd(net, data.images, data.labels, cfg, gate, rng);
            spike_cost[i] += run.ledger.relative_cost_pct() / seeds;
            spike_acc[i] += run.accuracy_under_attack / seeds;
        }
    }

    bool matched_any = false;
    std::size_t matched_points = 0;
    for (std::size_t i = 0; i < rho_grid.size(); ++i) {
        for (std::size_t j = 0; j < t_grid.size(); ++j) {
            if (std::abs(spike_cost[i] - pgd_cost[j]) <= 5.0) {
                matched_any = true;
                ++matched_points;
                c.expect(spike_acc[i] <= pgd_acc[j],
                         "spiking attack weaker than early-stopped pgd near cost " +
                             std::to_string(pgd_cost[j]) + "%");
            }
        }
    }
    c.expect(matched_any, "no matched cost points in the sweep");
    std::printf("    criterion 7 detail: %zu matched pairs", matched_points);
    for (std::size_t i = 0; i < rho_grid.size(); ++i) {
        std::printf("  rho=%g:(%.0f%%, %.3f)", rho_grid[i], spike_cost[i], spike_acc[i]);
    }
    std::printf("\n");
    return c;
}

// --- criterion 8: schedule correctness -------------------------------------------
Check criterion_schedule() {
    Check c;
    ScheduleSpec expo;
    expo.kind = ScheduleKind::Exponential;
    expo.rho0 = 0.1;
    expo.lambda = 2.0;
    expo.total_epochs = 50;
    c.expect(schedule_rho(expo, 0.0) == 0.1, "rho(0) must equal rho0 exactly");
    c.expect(std::abs(schedule_rho(expo, 50.0)) <= 1e-15, "rho(N) must vanish");
    c.expect(std::abs(schedule_rho(expo, 25.0) - 0.0268941) <= 1e-6,
             "rho(N/2) misses the closed form");
    return c;
}

// --- criterion 9: adversarial training ---------------------------------------------
Check criterion_adversarial_training() {
    Check c;
    Dataset train = synth_dataset(820, 160, 3, {1, 8, 8});
    Dataset heldout = synth_dataset(821, 60, 3, {1, 8, 8});

    ATConfig cfg;
    cfg.epochs = 10;
    cfg.attack = eps8_cfg(7);
    cfg.attack.random_start = true;
    cfg.eval_attack = eps8_cfg(10);
    cfg.learning_rate = 0.05;
    cfg.batch_size = 20;
    cfg.seed = 17;
    cfg.schedule.kind = ScheduleKind::Constant;
    cfg.schedule.rho0 = 0.0;
    cfg.schedule.total_epochs = 10.0;

    // rho = 0 equivalence with the vanilla path
    {
        Network net_a = make_desk_net(1, 8, 3, 830);
        Network net_b = make_desk_net(1, 8, 3, 830);
        ATConfig vanilla = cfg;
        vanilla.vanilla_pgd = true;
        std::vector<std::vector<double>> pa, pb;
        adversarial_train(net_a, train, heldout, vanilla,
                          [&](std::size_t, const Network& n) { pa.push_back(n.flat_params()); });
        adversarial_train(net_b, train, heldout, cfg,
                          [&](std::size_t, const Network& n) { pb.push_back(n.flat_params()); });
        for (std::size_t e = 0; e < pa.size(); ++e) {
            double max_diff = 0.0;
            for (std::size_t i = 0; i < pa[e].size(); ++i) {
                max_diff = std::max(max_diff, std::abs(pa[e][i] - pb[e][i]));
            }
            c.expect(max_diff <= 1e-10,
                     "parameters diverge at epoch " + std::to_string(e));
        }
    }

    // exponential schedule saves computation while evaluation stays exact
    {
        Network net = make_desk_net(1, 8, 3, 831);
        ATConfig expo = cfg;
        expo.schedule.kind = ScheduleKind::Exponential;
        expo.schedule.rho0 = 0.1;
        expo.schedule.lambda = 2.0;
        ATReport report = adversarial_train(net, train, heldout, expo);
        c.expect(report.final_avg_precision_pct < 85.0,
                 "running-average precision " +
                     std::to_string(report.final_avg_precision_pct) + "% not below 85%");
        c.expect(report.rows.size() == 10, "missing epochs in the report");
        for (const auto& row : report.rows) {
            c.expect(row.clean_acc >= 0.0 && row.clean_acc <= 1.0, "clean accuracy out of range");
            c.expect(row.robust_acc >= 0.0 && row.robust_acc <= 1.0,
                     "robust accuracy out of range");
        }
        std::printf("    criterion 9 detail: best clean %.3f best robust %.3f avg precision %.1f%%\n",
                    report.best_clean, report.best_robust, report.final_avg_precision_pct);
    }
    return c;
}

// --- criterion 10: ingestion ---------------------------------------------------------
Check criterion_ingestion() {
    Check c;
    namespace fs = std::filesystem;
    const fs::path good = fs::temp_directory_path() / "spikeattack_accept_cifar.bin";
    {
        std::vector<unsigned char> record(3073, 0);
        record[0] = 7;
        for (std::size_t p = 0; p < 3072; ++p) record[1 + p] = static_cast<unsigned char>(p % 256);
        std::ofstream out(good, std::ios::binary);
        out.write(reinterpret_cast<const char*>(record.data()), 3073);
    }
    Dataset d = load_cifar10(good.string());
    c.expect(d.size() == 1, "expected one example");
    c.expect(d.labels[0] == 7, "label byte mishandled");
    bool pixels_ok = true;
    for (std::size_t p = 0; p < 3072; ++p) {
        if (d.images[p] != static_cast<double>(p % 256) / 255.0) pixels_ok = false;
    }
    c.expect(pixels_ok, "pixel scaling broken");
    fs::remove(good);

    const fs::path bad = fs::temp_directory_path() / "spikeattack_accept_cifar_bad.bin";
    {
        std::vector<unsigned char> bytes(3074, 0);
        std::ofstream out(bad, std::ios::binary);
        out.write(reinterpret_cast<const char*>(bytes.data()), 3074);
    }
    bool rejected = false;
    try {
        load_cifar10(bad.string());
    } catch (const std::exception&) {
        rejected = true;
    }
    c.expect(rejected, "malformed file size accepted");
    fs::remove(bad);
    return c;
}

}  // namespace

int main() {
    int failures = 0;
    Network trained = trained_desk_model(99);

    struct Criterion {
        int number;
        const char* name;
        std::function<Check()> run;
    };
    const std::vector<Criterion> criteria = {
        {1, "rho=0 equivalence of Spiking-PGD and PGD", criterion_rho0_equivalence},
        {2, "exact backward vs central finite differences", criterion_gradient_oracle},
        {3, "surrogate fidelity and naive-mode vanishing", criterion_surrogate_fidelity},
        {4, "fine/coarse dominance and block-mask embedding", criterion_proposition1},
        {5, "cost accounting and rho-sweep monotonicity",
         [&] { return criterion_cost_accounting(trained); }},
        {6, "activation redundancy decays over iterations",
         [&] { return criterion_redundancy_trend(trained); }},
        {7, "pareto dominance at matched cost", criterion_pareto_dominance},
        {8, "threshold schedule closed form", criterion_schedule},
        {9, "adversarial training equivalence and savings", criterion_adversarial_training},
        {10, "CIFAR-10 binary ingestion", criterion_ingestion},
    };

    for (const auto& criterion : criteria) {
        const auto start = std::chrono::steady_clock::now();
        Check result = criterion.run();
        const double secs =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        if (result.ok) {
            std::printf("[PASS] criterion %d: %s (%.1fs)\n", criterion.number, criterion.name,
                        secs);
        } else {
            std::printf("[FAIL] criterion %d: %s (%.1fs) - %s\n", criterion.number,
                        criterion.name, secs, result.detail.c_str());
            ++failures;
        }
        std::fflush(stdout);
    }
    return failures;
}
