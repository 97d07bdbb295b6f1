#include "spikeattack/experiment.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

#include "spikeattack/advtrain.hpp"
#include "spikeattack/attack.hpp"
#include "spikeattack/config.hpp"
#include "spikeattack/data.hpp"
#include "spikeattack/maskopt.hpp"
#include "spikeattack/net.hpp"
#include "spikeattack/profile.hpp"

namespace spikeattack {

namespace {

namespace fs = std::filesystem;

std::string format_g17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

struct Context {
    KeyValueConfig cfg;
    std::uint64_t seed = 0;
    fs::path out;
    nlohmann::json errors = nlohmann::json::array();
};

Dataset make_split(const Context& ctx, const std::string& split) {
    const std::string source = ctx.cfg.get_string("dataset", "synth");
    if (source == "cifar10") {
        const std::string key = split == "train" ? "cifar_train_path" : "cifar_test_path";
        Dataset d = load_cifar10(ctx.cfg.require_string(key));
        const std::size_t limit = ctx.cfg.get_size(split + "_limit", d.size());
        if (limit < d.size()) d = d.subset(0, limit);
        d.split = split;
        return d;
    }
    if (source != "synth") throw std::runtime_error("unknown dataset source: " + source);
    const std::size_t classes = ctx.cfg.get_size("classes", 4);
    const std::size_t channels = ctx.cfg.get_size("channels", 3);
    const std::size_t hw = ctx.cfg.get_size("image_size", 8);
    const std::size_t n = split == "train" ? ctx.cfg.get_size("synth_train_n", 240)
                                           : ctx.cfg.get_size("synth_test_n", 120);
    const std::uint64_t stream = split == "train" ? 1 : 2;
    Dataset d = synth_dataset(SeededRandom(ctx.seed).fork(stream).seed(), n, classes,
                              {channels, hw, hw});
    d.split = split;
    return d;
}

Network make_model(const Context& ctx, const std::vector<std::size_t>& image_shape,
                   std::size_t classes) {
    const std::string preset = ctx.cfg.get_string("model", "desk");
    if (preset == "desk") {
        std::vector<LayerSpec> layers;
        layers.push_back(LayerSpec::conv2d(image_shape[0], 8, 3));
        layers.push_back(LayerSpec::relu());
        layers.push_back(LayerSpec::maxpool2x2());
        layers.push_back(LayerSpec::conv2d(8, 16, 3));
        layers.push_back(LayerSpec::relu());
        layers.push_back(LayerSpec::maxpool2x2());
        layers.push_back(LayerSpec::flatten());
        const std::size_t flat = 16 * (image_shape[1] / 4) * (image_shape[2] / 4);
        layers.push_back(LayerSpec::dense(flat, classes));
        return Network(image_shape, std::move(layers), classes);
    }
    if (preset == "tinydense") {
        const std::size_t flat = shape_product(image_shape);
        const std::size_t hidden = ctx.cfg.get_size("hidden", 6);
        std::vector<LayerSpec> layers;
        layers.push_back(LayerSpec::flatten());
        layers.push_back(LayerSpec::dense(flat, hidden));
        layers.push_back(LayerSpec::relu());
        layers.push_back(LayerSpec::dense(hidden, classes));
        return Network(image_shape, std::move(layers), classes);
    }
    throw std::runtime_error("unknown model preset: " + preset);
}

// Loads the checkpoint when given, otherwise trains the configured preset.
Network obtain_model(Context& ctx, const Dataset& train) {
    if (ctx.cfg.has("checkpoint")) {
        return load_network(ctx.cfg.require_string("checkpoint"));
    }
    Network net = make_model(ctx, train.image_shape(), train.class_count);
    SeededRandom init_rng = SeededRandom(ctx.seed).fork(3);
    net.init_params(init_rng);
    SeededRandom train_rng = SeededRandom(ctx.seed).fork(4);
    const std::size_t epochs = ctx.cfg.get_size("train_epochs", 20);
    const double lr = ctx.cfg.get_double("learning_rate", 0.05);
    const std::size_t batch = ctx.cfg.get_size("batch_size", 16);
    for (std::size_t e = 0; e < epochs; ++e) sgd_epoch(net, train, lr, train_rng, batch);
    return net;
}

AttackConfig attack_from_config(const KeyValueConfig& cfg) {
    AttackConfig a;
    a.epsilon = cfg.get_double("epsilon", 8.0 / 255.0);
    a.alpha = cfg.get_double("alpha", 2.0 / 255.0);
    a.iterations = cfg.get_size("iterations", 20);
    a.random_start = cfg.get_bool("random_start", false);
    a.momentum = cfg.get_double("momentum", 1.0);
    a.lo = cfg.get_double("pixel_lo", 0.0);
    a.hi = cfg.get_double("pixel_hi", 1.0);
    a.reference_iterations = cfg.get_double("reference_iterations", 20.0);
    return a;
}

SpikeGateConfig gate_from_config(const KeyValueConfig& cfg) {
    SpikeGateConfig g;
    g.rho = cfg.get_double("rho", 0.05);
    const std::string mode = cfg.get_string("baseline_mode", "prev_iteration");
    if (mode == "prev_iteration") {
        g.baseline_mode = BaselineMode::PrevIteration;
    } else if (mode == "last_fired") {
        g.baseline_mode = BaselineMode::LastFired;
    } else {
        throw std::runtime_error("unknown baseline_mode: " + mode);
    }
    g.surrogate = cfg.get_bool("surrogate", true);
    return g;
}

std::ofstream open_out(const fs::path& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open output file: " + path.string());
    return out;
}

const char* kRunHeader = "method,rho,epsilon,alpha,T,relative_cost_pct,accuracy_under_attack,mean_final_loss";

void write_run_row(std::ostream& out, const std::string& method, double rho,
                   const AttackConfig& cfg, std::size_t T, double cost_pct,
                   const AttackResult& result) {
    out << method << ',' << format_g17(rho) << ',' << format_g17(cfg.epsilon) << ','
        << format_g17(cfg.alpha) << ',' << T << ',' << format_g17(cost_pct) << ','
        << format_g17(result.accuracy_under_attack) << ','
        << format_g17(result.mean_final_loss) << '\n';
}

void task_train(Context& ctx) {
    Dataset train = make_split(ctx, "train");
    Dataset test = make_split(ctx, "test");
    Network net = make_model(ctx, train.image_shape(), train.class_count);
    SeededRandom init_rng = SeededRandom(ctx.seed).fork(3);
    net.init_params(init_rng);
    SeededRandom train_rng = SeededRandom(ctx.seed).fork(4);
    const std::size_t epochs = ctx.cfg.get_size("train_epochs", 20);
    const double lr = ctx.cfg.get_double("learning_rate", 0.05);
    const std::size_t batch = ctx.cfg.get_size("batch_size", 16);

    auto out = open_out(ctx.out / "train.csv");
    out << "epoch,mean_loss,clean_acc\n";
    for (std::size_t e = 0; e < epochs; ++e) {
        const double loss = sgd_epoch(net, train, lr, train_rng, batch);
        out << e << ',' << format_g17(loss) << ','
            << format_g17(accuracy(net, test.images, test.labels)) << '\n';
    }
    save_network(net, (ctx.out / "model.json").string());
}

void task_attack(Context& ctx) {
    Dataset train = make_split(ctx, "train");
    Dataset test = make_split(ctx, "test");
    Network net = obtain_model(ctx, train);
    const std::size_t limit = ctx.cfg.get_size("attack_examples", test.size());
    Dataset subset = test.subset(0, std::min(limit, test.size()));

    AttackConfig acfg = attack_from_config(ctx.cfg);
    const std::string method = ctx.cfg.get_string("method", "pgd");
    SeededRandom rng = SeededRandom(ctx.seed).fork(7);

    AttackResult result;
    double rho = 0.0;
    if (method == "pgd") {
        result = pgd(net, subset.images, subset.labels, acfg, rng);
    } else if (method == "ifgsm") {
        result = ifgsm(net, subset.images, subset.labels, acfg, rng);
    } else if (method == "mifgsm") {
        result = mifgsm(net, subset.images, subset.labels, acfg, rng);
    } else if (method == "spiking_pgd") {
        SpikeGateConfig gate = gate_from_config(ctx.cfg);
        rho = gate.rho;
        result = spiking_pgd(net, subset.images, subset.labels, acfg, gate, rng);
        result.ledger.export_csv((ctx.out / "ledger.csv").string());
    } else {
        throw std::runtime_error("unknown attack method: " + method);
    }

    auto out = open_out(ctx.out / "runs.csv");
    out << kRunHeader << '\n';
    write_run_row(out, method, rho, acfg, acfg.iterations, result.ledger.relative_cost_pct(),
                  result);
}

void task_pareto(Context& ctx) {
    Dataset train = make_split(ctx, "train");
    Dataset test = make_split(ctx, "test");
    Network net = obtain_model(ctx, train);
    const std::size_t limit = ctx.cfg.get_size("attack_examples", 64);
    Dataset subset = test.subset(0, std::min(limit, test.size()));

    AttackConfig base = attack_from_config(ctx.cfg);
    const std::size_t t0 = static_cast<std::size_t>(base.reference_iterations);
    const std::vector<std::size_t> t_grid =
        ctx.cfg.get_size_list("t_grid", {1, 2, 5, 10, 20});
    const std::vector<double> rho_grid =
        ctx.cfg.get_double_list("rho_grid", {0.0, 0.01, 0.02, 0.05, 0.1});
    SpikeGateConfig gate = gate_from_config(ctx.cfg);

    auto out = open_out(ctx.out / "pareto.csv");
    out << kRunHeader << '\n';
    for (const std::size_t T : t_grid) {
        AttackConfig cfg = base;
        cfg.iterations = T;
        const double cost = 100.0 * static_cast<double>(T) / static_cast<double>(t0);
        struct { const char* name; AttackResult (*fn)(const Network&, const Tensor&, const std::vector<std::size_t>&, const AttackConfig&, SeededRandom&); } methods[] = {
            {"pgd", &pgd}, {"ifgsm", &ifgsm}, {"mifgsm", &mifgsm}};
        for (const auto& m : methods) {
            try {
                SeededRandom rng = SeededRandom(ctx.seed).fork(11 + T);
                AttackResult result = m.fn(net, subset.images, subset.labels, cfg, rng);
                write_run_row(out, m.name, 0.0, cfg, T, cost, result);
            } catch (const std::exception& e) {
                ctx.errors.push_back({{"point", std::string(m.name) + " T=" + std::to_string(T)},
                                      {"error", e.what()}});
            }
        }
    }
    for (const double rho : rho_grid) {
        try {
            AttackConfig cfg = base;
            cfg.iterations = t0;
            SpikeGateConfig g = gate;
            g.rho = rho;
            SeededRandom rng = SeededRandom(ctx.seed).fork(77);
            AttackResult result = spiking_pgd(net, subset.images, subset.labels, cfg, g, rng);
            write_run_row(out, "spiking_pgd", rho, cfg, t0,
                          result.ledger.relative_cost_pct(), result);
        } catch (const std::exception& e) {
            ctx.errors.push_back({{"point", "spiking_pgd rho=" + format_g17(rho)},
                                  {"error", e.what()}});
        }
    }
}

void task_redundancy(Context& ctx) {
    Dataset train = make_split(ctx, "train");
    Dataset test = make_split(ctx, "test");
    Network net = obtain_model(ctx, train);
    const std::size_t limit = ctx.cfg.get_size("trace_examples", 32);
    Dataset subset = test.subset(0, std::min(limit, test.size()));

    AttackConfig acfg = attack_from_config(ctx.cfg);
    acfg.iterations = ctx.cfg.get_size("iterations", 10);
    SeededRandom rng = SeededRandom(ctx.seed).fork(13);
    RedundancyTrace trace = trace_redundancy(net, subset.images, subset.labels, acfg, rng,
                                             ctx.cfg.get_string("model_tag", "normal"));
    export_trace(trace, (ctx.out / "trace.csv").string());
    auto wide_a = open_out(ctx.out / "trace_activation_wide.csv");
    export_trace_wide(trace, "activation_change", wide_a);
    auto wide_g = open_out(ctx.out / "trace_gradient_wide.csv");
    export_trace_wide(trace, "gradient_change", wide_g);
}

void task_maskopt(Context& ctx) {
    Dataset train = make_split(ctx, "train");
    Network net = obtain_model(ctx, train);

    MaskProblem problem;
    problem.net = &net;
    const std::size_t examples = ctx.cfg.get_size("mask_examples", 1);
    Dataset subset = train.subset(0, examples);
    problem.x = subset.images;
    problem.y = subset.labels;
    problem.attack = attack_from_config(ctx.cfg);
    problem.attack.iterations = ctx.cfg.get_size("mask_iterations", 3);
    problem.semantics = ctx.cfg.get_string("mask_semantics", "naive") == "surrogate"
                            ? MaskGradSemantics::Surrogate
                            : MaskGradSemantics::Naive;
    const double fraction = ctx.cfg.get_double("budget_fraction", 0.6);
    problem.budget = static_cast<std::uint64_t>(fraction *
                                                static_cast<double>(problem.full_cost()));

    auto [coarse_s, coarse_value] = solve_coarse(problem);
    MaskSolution best;
    const std::string solver = ctx.cfg.get_string("solver", "auto");
    if (solver == "greedy" ||
        (solver == "auto" && problem.iterations() * problem.layer_count() > 16)) {
        best = solve_fine_greedy(problem);
    } else {
        best = solve_fine_bruteforce(problem);
    }
    write_instance_json(problem, best, (ctx.out / "instance.json").string());

    nlohmann::json j;
    j["coarse_s"] = coarse_s;
    j["coarse_value"] = coarse_value;
    j["fine_value"] = best.value;
    auto out = open_out(ctx.out / "solution_summary.json");
    out << j.dump(2) << '\n';
}

void task_advtrain(Context& ctx) {
    Dataset train = make_split(ctx, "train");
    Dataset test = make_split(ctx, "test");
    Network net = make_model(ctx, train.image_shape(), train.class_count);
    SeededRandom init_rng = SeededRandom(ctx.seed).fork(3);
    net.init_params(init_rng);

    ATConfig cfg;
    cfg.epochs = ctx.cfg.get_size("epochs", 10);
    cfg.attack = attack_from_config(ctx.cfg);
    cfg.attack.iterations = ctx.cfg.get_size("inner_iterations", 5);
    cfg.attack.random_start = ctx.cfg.get_bool("random_start", true);
    cfg.eval_attack = cfg.attack;
    cfg.eval_attack.iterations = ctx.cfg.get_size("eval_iterations", 10);
    cfg.eval_attack.random_start = false;
    cfg.learning_rate = ctx.cfg.get_double("learning_rate", 0.05);
    cfg.batch_size = ctx.cfg.get_size("batch_size", 32);
    cfg.seed = ctx.seed;
    cfg.vanilla_pgd = ctx.cfg.get_bool("vanilla", false);
    cfg.schedule.kind = ctx.cfg.get_string("schedule", "exponential") == "constant"
                            ? ScheduleKind::Constant
                            : ScheduleKind::Exponential;
    cfg.schedule.rho0 = ctx.cfg.get_double("rho0", 0.1);
    cfg.schedule.lambda = ctx.cfg.get_double("lambda", 2.0);
    cfg.schedule.total_epochs = static_cast<double>(cfg.epochs);

    ATReport report = adversarial_train(net, train, test, cfg);

    auto out = open_out(ctx.out / "advtrain.csv");
    out << "epoch,rho,clean_acc,robust_acc,precision_pct,avg_precision_pct\n";
    for (const auto& row : report.rows) {
        out << row.epoch << ',' << format_g17(row.rho) << ',' << format_g17(row.clean_acc)
            << ',' << format_g17(row.robust_acc) << ',' << format_g17(row.precision_pct)
            << ',' << format_g17(row.avg_precision_pct) << '\n';
    }
    save_network(net, (ctx.out / "model.json").string());
}

}  // namespace

int run_experiment(const ExperimentOptions& options) {
    Context ctx;
    ctx.cfg = KeyValueConfig::parse_file(options.config_path);
    if (options.seed) ctx.cfg.set("seed", std::to_string(*options.seed));
    if (options.out_dir) ctx.cfg.set("out_dir", *options.out_dir);
    ctx.seed = ctx.cfg.get_u64("seed", 0);
    ctx.out = ctx.cfg.get_string("out_dir", "out");
    fs::create_directories(ctx.out);

    const std::string& task = options.task;
    if (task == "train") {
        task_train(ctx);
    } else if (task == "attack") {
        task_attack(ctx);
    } else if (task == "pareto") {
        task_pareto(ctx);
    } else if (task == "redundancy") {
        task_redundancy(ctx);
    } else if (task == "maskopt") {
        task_maskopt(ctx);
    } else if (task == "advtrain") {
        task_advtrain(ctx);
    } else {
        throw std::runtime_error("unknown task: " + task);
    }

    nlohmann::json manifest;
    manifest["task"] = task;
    manifest["seed"] = ctx.seed;
    manifest["out_dir"] = ctx.out.string();
    manifest["version"] = kVersion;
    manifest["config"] = ctx.cfg.entries();
    manifest["errors"] = ctx.errors;
    auto out = open_out(ctx.out / "manifest.json");
    out << manifest.dump(2) << '\n';
    return ctx.errors.empty() ? 0 : 2;
}

}  // namespace spikeattack
