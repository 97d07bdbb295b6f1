#include "spikeattack/attack.hpp"

#include <cmath>
#include <stdexcept>

namespace spikeattack {

void AttackConfig::validate() const {
    if (epsilon <= 0.0) throw std::invalid_argument("attack: epsilon must be positive");
    if (alpha < 0.0) throw std::invalid_argument("attack: alpha must be nonnegative");
    if (iterations < 1) throw std::invalid_argument("attack: iterations must be >= 1");
    if (!(lo < hi)) throw std::invalid_argument("attack: lo must be below hi");
    if (momentum < 0.0) throw std::invalid_argument("attack: momentum must be >= 0");
}

Tensor project(const Tensor& x, const Tensor& x0, const AttackConfig& cfg) {
    if (!x.same_shape(x0)) throw std::invalid_argument("project: shape mismatch");
    Tensor out = x;
    for (std::size_t i = 0; i < out.size(); ++i) {
        double v = out[i];
        const double lo_ball = x0[i] - cfg.epsilon;
        const double hi_ball = x0[i] + cfg.epsilon;
        if (v < lo_ball) v = lo_ball;
        if (v > hi_ball) v = hi_ball;
        if (v < cfg.lo) v = cfg.lo;
        if (v > cfg.hi) v = cfg.hi;
        out[i] = v;
    }
    return out;
}

void accumulate_momentum(Tensor& velocity, const Tensor& grad, double mu) {
    if (!velocity.same_shape(grad)) {
        throw std::invalid_argument("accumulate_momentum: shape mismatch");
    }
    const std::size_t n = grad.shape().at(0);
    const std::size_t stride = grad.batch_stride();
    for (std::size_t row = 0; row < n; ++row) {
        double l1 = 0.0;
        const double* gp = grad.example(row);
        for (std::size_t i = 0; i < stride; ++i) l1 += std::abs(gp[i]);
        double* vp = velocity.example(row);
        if (l1 > 0.0) {
            for (std::size_t i = 0; i < stride; ++i) vp[i] = mu * vp[i] + gp[i] / l1;
        } else {
            for (std::size_t i = 0; i < stride; ++i) vp[i] = mu * vp[i];
        }
    }
}

namespace {

inline double sign(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

struct StepEval {
    double mean_loss;
    Tensor d_input;
};

// One attack loop shared by every method so that engines with identical
// arithmetic yield bit-identical trajectories.
template <typename Engine>
AttackResult run_attack(const Network& net, const Tensor& x, const std::vector<std::size_t>& y,
                        const AttackConfig& cfg, SeededRandom& rng, bool random_start,
                        bool use_momentum, Engine&& engine) {
    cfg.validate();
    const std::size_t n = x.shape().at(0);
    if (y.size() != n) throw std::invalid_argument("attack: label count mismatch");

    Tensor x_t = x;
    if (random_start) {
        Tensor start = x;
        Tensor delta = uniform(rng, -cfg.epsilon, cfg.epsilon, x.shape());
        for (std::size_t i = 0; i < start.size(); ++i) start[i] += delta[i];
        x_t = project(start, x, cfg);
    }

    AttackResult result;
    result.losses.reserve(cfg.iterations);

    Tensor velocity;  // MI-FGSM accumulator
    if (use_momentum) velocity = Tensor(x.shape());

    for (std::size_t t = 1; t <= cfg.iterations; ++t) {
        StepEval ev = engine(x_t, t);
        result.losses.push_back(ev.mean_loss);
        assert_finite(ev.d_input, "attack gradient");

        const Tensor& g = ev.d_input;
        Tensor step(x.shape());
        if (use_momentum) {
            accumulate_momentum(velocity, g, cfg.momentum);
            for (std::size_t i = 0; i < step.size(); ++i) {
                step[i] = x_t[i] + cfg.alpha * sign(velocity[i]);
            }
        } else {
            for (std::size_t i = 0; i < step.size(); ++i) {
                step[i] = x_t[i] + cfg.alpha * sign(g[i]);
            }
        }
        x_t = project(step, x, cfg);
    }

    for (std::size_t i = 0; i < x_t.size(); ++i) {
        if (std::abs(x_t[i] - x[i]) > cfg.epsilon + 1e-9 || x_t[i] < cfg.lo || x_t[i] > cfg.hi) {
            throw std::logic_error("attack iterate escaped the feasible set");
        }
    }
    result.x_adv = x_t;
    auto [logits, tape] = net.forward(x_t);
    auto [final_loss, d_unused] = mean_cross_entropy(logits, y);
    result.mean_final_loss = final_loss;
    std::size_t correct = 0;
    for (std::size_t row = 0; row < n; ++row) {
        if (argmax_row(logits, row) == y[row]) ++correct;
    }
    result.accuracy_under_attack = static_cast<double>(correct) / static_cast<double>(n);
    return result;
}

struct ExactEngine {
    const Network& net;
    const std::vector<std::size_t>& y;
    CostLedger ledger;
    std::vector<std::uint8_t> all_fired;

    ExactEngine(const Network& net_, const std::vector<std::size_t>& y_, std::size_t n)
        : net(net_), y(y_), ledger(net_.gated_layer_macs(), n),
          all_fired(net_.gated_layers().size() * n, 1) {}

    StepEval operator()(const Tensor& x_t, std::size_t) {
        auto [logits, tape] = net.forward(x_t);
        auto [loss, d_logits] = mean_cross_entropy(logits, y);
        Tensor d_input = net.backward_input(tape, d_logits);
        ledger.record_iteration(all_fired);
        ledger.add_backward_macs(net.total_gated_macs() *
                                 static_cast<std::uint64_t>(x_t.shape()[0]));
        return {loss, std::move(d_input)};
    }
};

FireMask mask_from_ledger(const CostLedger& ledger) {
    FireMask mask;
    mask.iterations = ledger.iterations();
    mask.layers = ledger.layer_count();
    mask.examples = ledger.example_count();
    mask.bits.resize(mask.iterations * mask.layers * mask.examples);
    for (std::size_t t = 1; t <= mask.iterations; ++t) {
        for (std::size_t l = 0; l < mask.layers; ++l) {
            for (std::size_t i = 0; i < mask.examples; ++i) {
                mask.bits[((t - 1) * mask.layers + l) * mask.examples + i] =
                    ledger.fired(t, l, i) ? 1 : 0;
            }
        }
    }
    return mask;
}

AttackResult exact_attack(const Network& net, const Tensor& x, const std::vector<std::size_t>& y,
                          const AttackConfig& cfg, SeededRandom& rng, bool random_start,
                          bool use_momentum) {
    ExactEngine engine(net, y, x.shape().at(0));
    AttackResult result = run_attack(net, x, y, cfg, rng, random_start, use_momentum, engine);
    result.ledger = std::move(engine.ledger);
    result.fire_mask = mask_from_ledger(result.ledger);
    return result;
}

}  // namespace

AttackResult pgd(const Network& net, const Tensor& x, const std::vector<std::size_t>& y,
                 const AttackConfig& cfg, SeededRandom& rng) {
    return exact_attack(net, x, y, cfg, rng, cfg.random_start, false);
}

AttackResult ifgsm(const Network& net, const Tensor& x, const std::vector<std::size_t>& y,
                   const AttackConfig& cfg, SeededRandom& rng) {
    return exact_attack(net, x, y, cfg, rng, false, false);
}

AttackResult mifgsm(const Network& net, const Tensor& x, const std::vector<std::size_t>& y,
                    const AttackConfig& cfg, SeededRandom& rng) {
    return exact_attack(net, x, y, cfg, rng, false, true);
}

AttackResult spiking_pgd(const Network& net, const Tensor& x, const std::vector<std::size_t>& y,
                         const AttackConfig& cfg, const SpikeGateConfig& gate, SeededRandom& rng) {
    const std::size_t n = x.shape().at(0);
    SpikeState state(net, gate, n);
    auto engine = [&](const Tensor& x_t, std::size_t) -> StepEval {
        SpikeForward fwd = state.spiking_forward(x_t);
        auto [loss, d_logits] = mean_cross_entropy(fwd.logits, y);
        Tensor d_input = state.spiking_backward(fwd, d_logits);
        return {loss, std::move(d_input)};
    };
    AttackResult result = run_attack(net, x, y, cfg, rng, cfg.random_start, false, engine);
    result.ledger = state.ledger();
    result.fire_mask = mask_from_ledger(result.ledger);
    return result;
}

void ScheduleSpec::validate() const {
    if (rho0 < 0.0 || rho0 > 1.0) throw std::invalid_argument("schedule: rho0 must be in [0,1]");
    if (total_epochs < 1.0) throw std::invalid_argument("schedule: N must be >= 1");
    if (kind == ScheduleKind::Exponential && lambda <= 0.0) {
        throw std::invalid_argument("schedule: lambda must be positive");
    }
}

double schedule_rho(const ScheduleSpec& spec, double t) {
    spec.validate();
    if (t < 0.0 || t > spec.total_epochs) {
        throw std::invalid_argument("schedule_rho: epoch outside [0, N]");
    }
    if (spec.kind == ScheduleKind::Constant) return spec.rho0;
    const double decay = std::exp(-spec.lambda);
    return spec.rho0 * (std::exp(-spec.lambda * t / spec.total_epochs) - decay) / (1.0 - decay);
}

}  // namespace spikeattack
