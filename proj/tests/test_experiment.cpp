#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "spikeattack/config.hpp"
#include "spikeattack/experiment.hpp"

using namespace spikeattack;
namespace fs = std::filesystem;

namespace {

std::string read_file(const fs::path& path) {
    std::ifstream in(path);
    REQUIRE(in.good());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

fs::path write_config(const std::string& name, const std::string& body) {
    const fs::path path = fs::temp_directory_path() / name;
    std::ofstream out(path);
    out << body;
    return path;
}

std::size_t count_lines(const std::string& text) {
    std::size_t n = 0;
    for (char c : text) {
        if (c == '\n') ++n;
    }
    return n;
}

const char* kSmallBase =
    "dataset = synth\n"
    "classes = 3\n"
    "channels = 1\n"
    "image_size = 8\n"
    "synth_train_n = 60\n"
    "synth_test_n = 30\n"
    "train_epochs = 6\n"
    "seed = 3\n";

}  // namespace

TEST_CASE("key-value config parsing") {
    KeyValueConfig cfg = KeyValueConfig::parse_string(
        "# comment\n"
        "alpha = 0.5\n"
        "name = desk model   # trailing comment\n"
        "flag = true\n"
        "grid = 1, 2, 5\n"
        "\n");
    CHECK(cfg.get_double("alpha", 0.0) == 0.5);
    CHECK(cfg.get_string("name", "") == "desk model");
    CHECK(cfg.get_bool("flag", false));
    CHECK(cfg.get_size_list("grid", {}) == std::vector<std::size_t>{1, 2, 5});
    CHECK(cfg.get_double("missing", 7.0) == 7.0);
    CHECK_THROWS(cfg.require_string("missing"));
    CHECK_THROWS(KeyValueConfig::parse_string("novalue\n"));
}

TEST_CASE("unknown task is rejected") {
    const fs::path cfg = write_config("spikeattack_cfg_unknown.conf", kSmallBase);
    ExperimentOptions options;
    options.task = "mystery";
    options.config_path = cfg.string();
    CHECK_THROWS(run_experiment(options));
    fs::remove(cfg);
}

TEST_CASE("pareto task emits the documented CSV") {
    const fs::path out_dir = fs::temp_directory_path() / "spikeattack_pareto_out";
    fs::remove_all(out_dir);
    const fs::path cfg = write_config("spikeattack_cfg_pareto.conf",
                                      std::string(kSmallBase) +
                                          "attack_examples = 16\n"
                                          "iterations = 4\n"
                                          "reference_iterations = 4\n"
                                          "t_grid = 1, 2, 4\n"
                                          "rho_grid = 0.0, 0.05\n");
    ExperimentOptions options;
    options.task = "pareto";
    options.config_path = cfg.string();
    options.out_dir = out_dir.string();
    CHECK(run_experiment(options) == 0);

    const std::string csv = read_file(out_dir / "pareto.csv");
    std::istringstream in(csv);
    std::string header;
    std::getline(in, header);
    CHECK(header ==
          "method,rho,epsilon,alpha,T,relative_cost_pct,accuracy_under_attack,mean_final_loss");
    CHECK(count_lines(csv) == 1 + 3 * 3 + 2);  // header + |T|*3 baselines + |rho|

    // no NaN anywhere, all rows parse
    CHECK(csv.find("nan") == std::string::npos);
    CHECK(csv.find("inf") == std::string::npos);

    const std::string manifest = read_file(out_dir / "manifest.json");
    auto j = nlohmann::json::parse(manifest);
    CHECK(j["task"] == "pareto");
    CHECK(j["config"]["t_grid"] == "1, 2, 4");
    CHECK(j["errors"].empty());

    fs::remove(cfg);
    fs::remove_all(out_dir);
}

TEST_CASE("pareto: rho 0 spiking row equals the pgd row at the reference budget") {
    const fs::path out_dir = fs::temp_directory_path() / "spikeattack_pareto_eq";
    fs::remove_all(out_dir);
    const fs::path cfg = write_config("spikeattack_cfg_eq.conf",
                                      std::string(kSmallBase) +
                                          "attack_examples = 12\n"
                                          "iterations = 3\n"
                                          "reference_iterations = 3\n"
                                          "t_grid = 3\n"
                                          "rho_grid = 0.0\n");
    ExperimentOptions options;
    options.task = "pareto";
    options.config_path = cfg.string();
    options.out_dir = out_dir.string();
    CHECK(run_experiment(options) == 0);

    std::istringstream in(read_file(out_dir / "pareto.csv"));
    std::string line, pgd_row, spiking_row;
    std::getline(in, line);  // header
    while (std::getline(in, line)) {
        if (line.rfind("pgd,", 0) == 0) pgd_row = line;
        if (line.rfind("spiking_pgd,", 0) == 0) spiking_row = line;
    }
    REQUIRE(!pgd_row.empty());
    REQUIRE(!spiking_row.empty());
    // equal cost (100%), accuracy, and loss columns
    const auto tail = [](const std::string& row) {
        std::vector<std::string> fields;
        std::istringstream s(row);
        std::string f;
        while (std::getline(s, f, ',')) fields.push_back(f);
        return std::vector<std::string>(fields.end() - 3, fields.end());
    };
    CHECK(tail(pgd_row) == tail(spiking_row));

    fs::remove(cfg);
    fs::remove_all(out_dir);
}

TEST_CASE("rerunning an experiment reproduces outputs byte for byte") {
    const fs::path out_a = fs::temp_directory_path() / "spikeattack_rerun_a";
    const fs::path out_b = fs::temp_directory_path() / "spikeattack_rerun_b";
    fs::remove_all(out_a);
    fs::remove_all(out_b);
    const fs::path cfg = write_config("spikeattack_cfg_rerun.conf",
                                      std::string(kSmallBase) +
                                          "attack_examples = 10\n"
                                          "iterations = 3\n"
                                          "method = spiking_pgd\n"
                                          "rho = 0.02\n");
    ExperimentOptions options;
    options.task = "attack";
    options.config_path = cfg.string();
    options.out_dir = out_a.string();
    CHECK(run_experiment(options) == 0);
    options.out_dir = out_b.string();
    CHECK(run_experiment(options) == 0);

    CHECK(read_file(out_a / "runs.csv") == read_file(out_b / "runs.csv"));
    CHECK(read_file(out_a / "ledger.csv") == read_file(out_b / "ledger.csv"));

    fs::remove(cfg);
    fs::remove_all(out_a);
    fs::remove_all(out_b);
}

TEST_CASE("advtrain task writes the report CSV") {
    const fs::path out_dir = fs::temp_directory_path() / "spikeattack_at_out";
    fs::remove_all(out_dir);
    const fs::path cfg = write_config("spikeattack_cfg_at.conf",
                                      std::string(kSmallBase) +
                                          "epochs = 2\n"
                                          "inner_iterations = 3\n"
                                          "eval_iterations = 3\n"
                                          "schedule = exponential\n"
                                          "rho0 = 0.1\n"
                                          "lambda = 2.0\n"
                                          "batch_size = 20\n");
    ExperimentOptions options;
    options.task = "advtrain";
    options.config_path = cfg.string();
    options.out_dir = out_dir.string();
    CHECK(run_experiment(options) == 0);

    std::istringstream in(read_file(out_dir / "advtrain.csv"));
    std::string header;
    std::getline(in, header);
    CHECK(header == "epoch,rho,clean_acc,robust_acc,precision_pct,avg_precision_pct");
    std::string line;
    std::size_t rows = 0;
    while (std::getline(in, line)) ++rows;
    CHECK(rows == 2);
    CHECK(fs::exists(out_dir / "model.json"));

    fs::remove(cfg);
    fs::remove_all(out_dir);
}

TEST_CASE("maskopt task dumps the instance") {
    const fs::path out_dir = fs::temp_directory_path() / "spikeattack_mask_out";
    fs::remove_all(out_dir);
    const fs::path cfg = write_config("spikeattack_cfg_mask.conf",
                                      std::string(kSmallBase) +
                                          "model = tinydense\n"
                                          "train_epochs = 2\n"
                                          "mask_iterations = 3\n"
                                          "budget_fraction = 0.7\n");
    ExperimentOptions options;
    options.task = "maskopt";
    options.config_path = cfg.string();
    options.out_dir = out_dir.string();
    CHECK(run_experiment(options) == 0);

    auto j = nlohmann::json::parse(read_file(out_dir / "instance.json"));
    CHECK(j["iterations"] == 3);
    CHECK(j["layers"] == 2);
    CHECK(j["best_mask"].get<std::string>().size() == 6);
    auto summary = nlohmann::json::parse(read_file(out_dir / "solution_summary.json"));
    CHECK(summary["fine_value"].get<double>() >= summary["coarse_value"].get<double>() - 1e-12);

    fs::remove(cfg);
    fs::remove_all(out_dir);
}

TEST_CASE("train task emits a loadable checkpoint") {
    const fs::path out_dir = fs::temp_directory_path() / "spikeattack_train_out";
    fs::remove_all(out_dir);
    const fs::path cfg = write_config("spikeattack_cfg_train.conf", kSmallBase);
    ExperimentOptions options;
    options.task = "train";
    options.config_path = cfg.string();
    options.out_dir = out_dir.string();
    options.seed = 9;  // CLI override
    CHECK(run_experiment(options) == 0);

    CHECK(fs::exists(out_dir / "model.json"));
    CHECK(fs::exists(out_dir / "train.csv"));
    const std::string manifest = read_file(out_dir / "manifest.json");
    auto j = nlohmann::json::parse(manifest);
    CHECK(j["seed"] == 9);

    fs::remove(cfg);
    fs::remove_all(out_dir);
}
