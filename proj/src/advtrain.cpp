#include "spikeattack/advtrain.hpp"

#include <algorithm>
#include <stdexcept>

namespace spikeattack {

void ATConfig::validate() const {
    attack.validate();
    eval_attack.validate();
    schedule.validate();
    if (epochs == 0) throw std::invalid_argument("advtrain: epochs must be >= 1");
    if (static_cast<double>(epochs) != schedule.total_epochs) {
        throw std::invalid_argument("advtrain: schedule.total_epochs must equal epochs");
    }
    if (learning_rate <= 0.0) throw std::invalid_argument("advtrain: learning rate must be positive");
    if (batch_size == 0) throw std::invalid_argument("advtrain: batch size must be >= 1");
}

double evaluate_robust(const Network& net, const Dataset& data, const AttackConfig& cfg,
                       std::uint64_t seed) {
    if (data.size() == 0) throw std::invalid_argument("evaluate_robust: empty dataset");
    SeededRandom rng(seed);
    AttackResult run = pgd(net, data.images, data.labels, cfg, rng);
    return run.accuracy_under_attack;
}

ATReport adversarial_train(Network& net, const Dataset& train, const Dataset& heldout,
                           const ATConfig& cfg, const EpochCallback& on_epoch) {
    cfg.validate();
    if (train.size() == 0) throw std::invalid_argument("advtrain: empty training set");

    SeededRandom shuffle_rng = SeededRandom(cfg.seed).fork(0x5A);
    ATReport report;
    CostLedger cumulative;

    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        const double rho = cfg.vanilla_pgd
                               ? 0.0
                               : schedule_rho(cfg.schedule, static_cast<double>(epoch));

        std::vector<std::size_t> order(train.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        shuffle_rng.shuffle(order);

        CostLedger epoch_ledger;
        std::size_t batch_index = 0;
        for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
            const std::size_t count = std::min(cfg.batch_size, order.size() - start);
            std::vector<std::size_t> idx(order.begin() + start, order.begin() + start + count);
            Tensor xb = train.gather_images(idx);
            std::vector<std::size_t> yb = train.gather_labels(idx);

            SeededRandom attack_rng =
                SeededRandom(cfg.seed).fork(0xA77ULL + epoch * 1000003ULL + batch_index);
            AttackResult adv;
            if (cfg.vanilla_pgd) {
                adv = pgd(net, xb, yb, cfg.attack, attack_rng);
            } else {
                SpikeGateConfig gate;
                gate.rho = rho;
                gate.baseline_mode = cfg.baseline_mode;
                gate.surrogate = true;
                adv = spiking_pgd(net, xb, yb, cfg.attack, gate, attack_rng);
            }
            epoch_ledger.merge_totals(adv.ledger);

            auto [logits, tape] = net.forward(adv.x_adv);
            auto [loss, d_logits] = mean_cross_entropy(logits, yb);
            auto [d_input, grads] = net.backward(tape, d_logits);
            net.apply_sgd_step(grads, cfg.learning_rate, 1.0 / static_cast<double>(count));
            ++batch_index;
        }

        cumulative.merge_totals(epoch_ledger);

        ATEpochRow row;
        row.epoch = epoch;
        row.rho = rho;
        row.precision_pct = epoch_ledger.relative_cost_pct();
        row.avg_precision_pct = cumulative.relative_cost_pct();
        row.clean_acc = accuracy(net, heldout.images, heldout.labels);
        row.robust_acc = evaluate_robust(net, heldout, cfg.eval_attack,
                                         SeededRandom(cfg.seed).fork(0xE7A1 + epoch).seed());
        report.rows.push_back(row);

        report.best_clean = std::max(report.best_clean, row.clean_acc);
        report.best_robust = std::max(report.best_robust, row.robust_acc);
        report.best_sum = std::max(report.best_sum, row.clean_acc + row.robust_acc);
        if (on_epoch) on_epoch(epoch, net);
    }
    report.final_avg_precision_pct = report.rows.back().avg_precision_pct;
    return report;
}

}  // namespace spikeattack
