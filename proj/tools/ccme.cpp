#include "ccme/extraction.hpp"
#include "ccme/graph.hpp"
#include "ccme/io.hpp"
#include "ccme/metrics.hpp"
#include "ccme/null_model.hpp"
#include "ccme/wsbm.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <atomic>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitIo = 2;
constexpr int kExitConfig = 3;

struct CliFailure {
    int code;
    std::string message;
};

int log_level() {
    const char* v = std::getenv("CCME_LOG");
    if (!v)
        return 1;
    const std::string s(v);
    if (s == "quiet" || s == "0" || s == "error")
        return 0;
    if (s == "debug" || s == "2")
        return 2;
    return 1;
}

std::mutex log_mutex;

void log(int level, const std::string& msg) {
    if (level > log_level())
        return;
    std::lock_guard lock(log_mutex);
    std::cerr << "ccme: " << msg << '\n';
}

// Runs `work(i)` for i in [0, count) on up to `jobs` threads. The first
// failure is rethrown after all threads finish.
void run_parallel(std::size_t count, std::size_t jobs, const std::function<void(std::size_t)>& work) {
    jobs = std::max<std::size_t>(1, std::min(jobs, count));
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto worker = [&] {
        for (std::size_t i = next++; i < count; i = next++) {
            try {
                work(i);
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (!error)
                    error = std::current_exception();
            }
        }
    };
    std::vector<std::thread> pool;
    for (std::size_t t = 1; t < jobs; ++t)
        pool.emplace_back(worker);
    worker();
    for (auto& t : pool)
        t.join();
    if (error)
        std::rethrow_exception(error);
}

// Input-side failures map to exit 2.
template <class F>
auto io_stage(F&& f) -> decltype(f()) {
    try {
        return f();
    } catch (const CliFailure&) {
        throw;
    } catch (const std::exception& e) {
        throw CliFailure{kExitIo, e.what()};
    }
}

template <class F>
auto config_stage(F&& f) -> decltype(f()) {
    try {
        return f();
    } catch (const ccme::IoError& e) {
        throw CliFailure{kExitIo, e.what()};
    } catch (const std::exception& e) {
        throw CliFailure{kExitConfig, e.what()};
    }
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

fs::path replicate_dir(const fs::path& out, std::size_t index, std::size_t count) {
    if (count == 1)
        return out;
    char buf[32];
    std::snprintf(buf, sizeof buf, "rep_%03zu", index);
    return out / buf;
}

struct DetectOptions {
    std::vector<std::string> inputs;
    std::string out = ".";
    ccme::ExtractionConfig config;
    bool no_seed_filter = false;
    std::size_t jobs = 1;
};

void detect_one(const DetectOptions& opt, std::size_t index) {
    const auto t0 = std::chrono::steady_clock::now();
    const fs::path input = opt.inputs[index];
    const fs::path dir = opt.inputs.size() == 1
                             ? fs::path(opt.out)
                             : fs::path(opt.out) / (std::to_string(index) + "_" + input.stem().string());
    ccme::ExtractionConfig cfg = opt.config;
    cfg.seed = opt.config.seed + index;

    const auto net = io_stage([&] { return ccme::load_edge_list(input); });
    log(2, input.string() + ": " + std::to_string(net.num_nodes()) + " nodes, " +
               std::to_string(net.num_edges()) + " edges");
    const auto result = io_stage([&] { return ccme::run_ccme(net, cfg); });

    io_stage([&] {
        fs::create_directories(dir);
        ccme::save_cover(result.cover, net.labels(), dir / "cover.txt");
        ccme::save_json(ccme::communities_json(result, net.labels()), dir / "communities.json");
        ccme::RunManifest m;
        m.command = "detect";
        m.config = ccme::to_json(cfg);
        m.seed = cfg.seed;
        m.inputs = {input.string()};
        m.outputs = {(dir / "cover.txt").string(), (dir / "communities.json").string()};
        m.version = ccme::tool_version();
        m.wall_seconds = seconds_since(t0);
        ccme::save_json(m.json(), dir / "manifest.json");
        return 0;
    });
    log(1, input.string() + ": " + std::to_string(result.cover.communities.size()) +
               " communities, kappa " + std::to_string(result.params.kappa));
}

int cmd_detect(DetectOptions& opt) {
    opt.config.filter_seeds = !opt.no_seed_filter;
    config_stage([&] {
        opt.config.validate();
        return 0;
    });
    run_parallel(opt.inputs.size(), opt.jobs, [&](std::size_t i) { detect_one(opt, i); });
    return 0;
}

struct SimulateOptions {
    std::string config;
    std::string null_params;
    std::string family = "gamma";
    std::uint64_t seed = 0;
    std::string out = ".";
    std::size_t replicates = 1;
    std::size_t jobs = 1;
};

void simulate_one(const SimulateOptions& opt, const json& cfg_json,
                  const ccme::BenchmarkConfig* bench, const ccme::NullParams* null_params,
                  const ccme::WeightDistribution& null_dist, std::size_t index) {
    const auto t0 = std::chrono::steady_clock::now();
    const std::uint64_t seed = opt.seed + index;
    const fs::path dir = replicate_dir(opt.out, index, opt.replicates);
    ccme::RunManifest m;
    m.command = null_params ? "simulate --null" : "simulate";
    m.config = cfg_json;
    m.seed = seed;
    m.inputs = {null_params ? opt.null_params : opt.config};
    m.version = ccme::tool_version();

    io_stage([&] {
        fs::create_directories(dir);
        if (null_params) {
            const auto net = ccme::sample_null_network(*null_params, null_dist, seed);
            ccme::save_edge_list(net, dir / "network.tsv");
            json realized = ccme::to_json(*null_params);
            realized["weight_family"] = opt.family;
            realized["weight_variance"] = null_dist.variance;
            ccme::save_json(realized, dir / "params.json");
            m.outputs = {(dir / "network.tsv").string(), (dir / "params.json").string()};
            log(1, "null network: " + std::to_string(net.num_edges()) + " edges");
        } else {
            const auto b = config_stage([&] { return ccme::generate_benchmark(*bench, seed); });
            ccme::save_edge_list(b.net, dir / "network.tsv");
            ccme::save_ground_truth(b.truth, b.net.labels(), dir);
            json realized{{"benchmark", ccme::to_json(bench->resolved())},
                          {"wsbm", ccme::to_json(b.wsbm)}};
            if (bench->n_b > 0)
                realized["background"] = ccme::to_json(b.background);
            ccme::save_json(realized, dir / "params.json");
            m.outputs = {(dir / "network.tsv").string(), (dir / "nodes.txt").string(),
                         (dir / "communities.txt").string(), (dir / "background.txt").string(),
                         (dir / "params.json").string()};
            log(1, "benchmark: " + std::to_string(b.net.num_nodes()) + " nodes, " +
                       std::to_string(b.net.num_edges()) + " edges, " +
                       std::to_string(b.truth.cover.communities.size()) + " communities");
        }
        m.wall_seconds = seconds_since(t0);
        ccme::save_json(m.json(), dir / "manifest.json");
        return 0;
    });
}

int cmd_simulate(const SimulateOptions& opt) {
    if (opt.config.empty() == opt.null_params.empty())
        throw CliFailure{kExitConfig, "simulate: give exactly one of --config or --null"};
    if (opt.replicates == 0)
        throw CliFailure{kExitConfig, "--replicates: must be at least 1"};
    ccme::BenchmarkConfig bench;
    ccme::NullParams null_params;
    ccme::WeightDistribution dist;
    json cfg_json;
    const bool null_mode = !opt.null_params.empty();
    config_stage([&] {
        if (null_mode) {
            null_params = ccme::null_params_from_json(ccme::load_json(opt.null_params));
            if (opt.family != "gamma" && opt.family != "uniform")
                throw ccme::ValidationError("--weight-family: expected gamma or uniform");
            dist = {opt.family == "gamma" ? ccme::WeightDistribution::Family::Gamma
                                          : ccme::WeightDistribution::Family::Uniform,
                    null_params.kappa};
            dist.validate();
            cfg_json = ccme::to_json(null_params);
            cfg_json["weight_family"] = opt.family;
        } else {
            bench = ccme::benchmark_config_from_json(ccme::load_json(opt.config));
            cfg_json = ccme::to_json(bench);
        }
        return 0;
    });
    run_parallel(opt.replicates, opt.jobs, [&](std::size_t i) {
        simulate_one(opt, cfg_json, null_mode ? nullptr : &bench, null_mode ? &null_params : nullptr,
                     dist, i);
    });
    return 0;
}

struct EvalOptions {
    std::string result;
    std::string truth;
    std::string out;
    std::string variant = "max";
    double a = 0.05;
};

int cmd_eval(const EvalOptions& opt) {
    const auto t0 = std::chrono::steady_clock::now();
    const auto variant = config_stage([&] {
        if (opt.variant == "max")
            return ccme::OnmiVariant::Max;
        if (opt.variant == "lfk")
            return ccme::OnmiVariant::Lfk;
        throw ccme::ValidationError("--variant: expected max or lfk");
    });
    if (!(opt.a > 0.0))
        throw CliFailure{kExitConfig, "--a: must be positive"};
    const auto truth = io_stage([&] { return ccme::load_ground_truth(opt.truth); });
    const auto cover = io_stage([&] { return ccme::load_cover(opt.result, truth.labels); });
    const auto report = ccme::evaluate(cover, truth.truth, variant, opt.a);

    io_stage([&] {
        const bool fresh = !fs::exists(opt.out) || fs::file_size(opt.out) == 0;
        std::ofstream csv(opt.out, std::ios::app);
        if (!csv)
            throw ccme::IoError("cannot write " + opt.out);
        if (fresh)
            csv << ccme::EvalReport::csv_header() << '\n';
        csv << report.csv_row() << '\n';
        ccme::RunManifest m;
        m.command = "eval";
        m.config = json{{"variant", opt.variant}, {"a", opt.a}};
        m.inputs = {opt.result, opt.truth};
        m.outputs = {opt.out};
        m.version = ccme::tool_version();
        m.wall_seconds = seconds_since(t0);
        ccme::save_json(m.json(), opt.out + ".manifest.json");
        return 0;
    });
    if (report.empty_restriction)
        log(1, "warning: nothing to compare after restriction, onmi set to 0");
    log(0, "onmi " + std::to_string(report.onmi) + "  t_onmi " + std::to_string(report.t_onmi) +
               "  %cib " + std::to_string(report.pct_cib) + "  %bic " +
               std::to_string(report.pct_bic) + "  communities " +
               std::to_string(report.n_communities));
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Community extraction in weighted networks"};
    app.require_subcommand(1);

    DetectOptions det;
    auto* detect = app.add_subcommand("detect", "Extract communities from an edge list");
    detect->add_option("-i,--input", det.inputs, "Edge-list file(s)")->required();
    detect->add_option("-o,--out", det.out, "Output directory");
    detect->add_option("--alpha", det.config.alpha, "FDR level");
    detect->add_option("--tau", det.config.tau_overlap, "Overlap pruning threshold");
    detect->add_option("--seed", det.config.seed, "Random seed (input i uses seed + i)");
    detect->add_option("--max-iter", det.config.max_iter, "Iteration cap per search");
    detect->add_flag("--no-seed-filter", det.no_seed_filter, "Search from every seed");
    detect->add_flag("--conservative", det.config.conservative_set_sd,
                     "Inflate set-level sd by sqrt(2)");
    detect->add_flag("--strict", det.config.strict_fixed_points,
                     "Drop communities that are not fixed points");
    detect->add_option("-j,--jobs", det.jobs, "Parallel inputs")->check(CLI::PositiveNumber);

    SimulateOptions sim;
    auto* simulate = app.add_subcommand("simulate", "Generate benchmark or null networks");
    auto* cfg_opt = simulate->add_option("--config", sim.config, "BenchmarkConfig JSON");
    auto* null_opt = simulate->add_option("--null", sim.null_params, "NullParams JSON");
    cfg_opt->excludes(null_opt);
    simulate->add_option("--weight-family", sim.family, "Null weight family: gamma or uniform");
    simulate->add_option("--seed", sim.seed, "Base seed (replicate i uses seed + i)");
    simulate->add_option("-o,--out", sim.out, "Output directory");
    simulate->add_option("--replicates", sim.replicates, "Number of replicates");
    simulate->add_option("-j,--jobs", sim.jobs, "Parallel replicates")->check(CLI::PositiveNumber);

    EvalOptions ev;
    auto* eval = app.add_subcommand("eval", "Score a cover against ground truth");
    eval->add_option("--result", ev.result, "Cover file")->required();
    eval->add_option("--truth", ev.truth, "Ground-truth directory")->required();
    eval->add_option("--out", ev.out, "CSV file to append to")->required();
    eval->add_option("--variant", ev.variant, "oNMI variant: max or lfk");
    eval->add_option("--a", ev.a, "t-oNMI parameter");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitConfig;
    }

    try {
        if (*detect)
            return cmd_detect(det);
        if (*simulate)
            return cmd_simulate(sim);
        return cmd_eval(ev);
    } catch (const CliFailure& f) {
        log(0, "error: " + f.message);
        return f.code;
    } catch (const std::exception& e) {
        log(0, "error: " + std::string(e.what()));
        return 1;
    }
}
