#include "ccme/io.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

namespace ccme {

using nlohmann::json;

namespace {

void reject_unknown(const json& j, const std::set<std::string>& known, const char* what) {
    if (!j.is_object())
        throw ValidationError(std::string(what) + ": expected a JSON object");
    for (const auto& [key, value] : j.items()) {
        if (!known.count(key))
            throw ValidationError(std::string(what) + ": unknown field '" + key + "'");
    }
}

template <class T>
void read_field(const json& j, const char* key, T& out) {
    if (!j.contains(key))
        return;
    try {
        out = j.at(key).get<T>();
    } catch (const json::exception&) {
        throw ValidationError(std::string(key) + ": wrong type");
    }
}

json matrix_json(const BlockMatrix& m) {
    json rows = json::array();
    for (std::size_t i = 0; i < m.size(); ++i) {
        json row = json::array();
        for (std::size_t j = 0; j < m.size(); ++j)
            row.push_back(m(i, j));
        rows.push_back(row);
    }
    return rows;
}

const char* family_name(WeightDistribution::Family f) {
    return f == WeightDistribution::Family::Gamma ? "gamma" : "uniform";
}

std::ofstream open_out(const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out)
        throw IoError("cannot write " + path.string());
    return out;
}

std::ifstream open_in(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in)
        throw IoError("cannot open " + path.string());
    return in;
}

std::int64_t parse_label(std::string_view tok, std::size_t line) {
    std::int64_t x = 0;
    auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), x);
    if (ec != std::errc() || ptr != tok.data() + tok.size())
        throw ParseError(line, "bad node label '" + std::string(tok) + "'");
    return x;
}

} // namespace

json to_json(const NullParams& p) {
    return json{{"d", p.degree}, {"s", p.strength}, {"kappa", p.kappa}};
}

NullParams null_params_from_json(const json& j) {
    reject_unknown(j, {"d", "s", "kappa"}, "null params");
    for (const char* key : {"d", "s", "kappa"}) {
        if (!j.contains(key))
            throw ValidationError(std::string(key) + ": missing");
    }
    NullParams p;
    read_field(j, "d", p.degree);
    read_field(j, "s", p.strength);
    read_field(j, "kappa", p.kappa);
    p.validate();
    return p;
}

json to_json(const BenchmarkConfig& c) {
    return json{{"n", c.n},
                {"n_b", c.n_b},
                {"m_min", c.m_min},
                {"m_max", c.m_max},
                {"tau1", c.tau1},
                {"tau2", c.tau2},
                {"k_mean", c.k_mean},
                {"k_max", c.k_max},
                {"s_e", c.s_e},
                {"s_w", c.s_w},
                {"o_n", c.o_n},
                {"o_m", c.o_m},
                {"sigma2", c.sigma2},
                {"beta", c.beta},
                {"num_communities", c.num_communities},
                {"weight_family", family_name(c.weight_family)}};
}

BenchmarkConfig benchmark_config_from_json(const json& j) {
    reject_unknown(j,
                   {"n", "n_b", "m_min", "m_max", "tau1", "tau2", "k_mean", "k_max", "s_e", "s_w",
                    "o_n", "o_m", "sigma2", "beta", "num_communities", "weight_family"},
                   "benchmark config");
    BenchmarkConfig c;
    for (const char* key : {"n", "n_b", "o_n", "o_m", "num_communities"}) {
        if (j.contains(key) && !j.at(key).is_number_unsigned())
            throw ValidationError(std::string(key) + ": must be a non-negative integer");
    }
    read_field(j, "n", c.n);
    read_field(j, "n_b", c.n_b);
    read_field(j, "m_min", c.m_min);
    read_field(j, "m_max", c.m_max);
    read_field(j, "tau1", c.tau1);
    read_field(j, "tau2", c.tau2);
    read_field(j, "k_mean", c.k_mean);
    read_field(j, "k_max", c.k_max);
    read_field(j, "s_e", c.s_e);
    read_field(j, "s_w", c.s_w);
    read_field(j, "o_n", c.o_n);
    read_field(j, "o_m", c.o_m);
    read_field(j, "sigma2", c.sigma2);
    read_field(j, "beta", c.beta);
    read_field(j, "num_communities", c.num_communities);
    std::string family = family_name(c.weight_family);
    read_field(j, "weight_family", family);
    if (family == "gamma")
        c.weight_family = WeightDistribution::Family::Gamma;
    else if (family == "uniform")
        c.weight_family = WeightDistribution::Family::Uniform;
    else
        throw ValidationError("weight_family: expected 'gamma' or 'uniform'");
    c.validate();
    return c;
}

json to_json(const WsbmConfig& w) {
    return json{{"K", w.K},
                {"membership", w.membership},
                {"P", matrix_json(w.P)},
                {"M", matrix_json(w.M)},
                {"phi", w.phi},
                {"psi", w.psi},
                {"rho", w.rho},
                {"weight_family", family_name(w.dist.family)},
                {"weight_variance", w.dist.variance}};
}

json to_json(const ExtractionConfig& c) {
    return json{{"alpha", c.alpha},
                {"tau_overlap", c.tau_overlap},
                {"max_iter", c.max_iter},
                {"filter_seeds", c.filter_seeds},
                {"smart_skip", c.smart_skip},
                {"conservative_set_sd", c.conservative_set_sd},
                {"strict_fixed_points", c.strict_fixed_points},
                {"seed", c.seed}};
}

json to_json(const BackgroundFit& f) {
    return json{{"phi_prime", f.phi_prime},
                {"psi_prime", f.psi_prime},
                {"phi_prime_total", f.phi_prime_total},
                {"psi_prime_total", f.psi_prime_total},
                {"phi_residual", f.phi_residual},
                {"psi_residual", f.psi_residual}};
}

json load_json(const std::filesystem::path& path) {
    auto in = open_in(path);
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw ParseError(0, path.string() + ": " + e.what());
    }
}

void save_json(const json& j, const std::filesystem::path& path) {
    auto out = open_out(path);
    out << j.dump(2) << '\n';
    if (!out)
        throw IoError("write failed: " + path.string());
}

void write_cover(const Cover& cover, std::span<const std::int64_t> labels, std::ostream& out) {
    for (const auto& c : cover.communities) {
        std::vector<std::int64_t> row;
        for (NodeId v : c)
            row.push_back(labels[v]);
        std::sort(row.begin(), row.end());
        for (std::size_t i = 0; i < row.size(); ++i)
            out << (i ? " " : "") << row[i];
        out << '\n';
    }
}

void save_cover(const Cover& cover, std::span<const std::int64_t> labels,
                const std::filesystem::path& path) {
    auto out = open_out(path);
    write_cover(cover, labels, out);
}

Cover parse_cover(std::istream& in, std::span<const std::int64_t> universe) {
    Cover cover;
    cover.num_nodes = universe.size();
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line[0] == '#')
            continue;
        std::istringstream ls(line);
        std::string tok;
        NodeSet c;
        while (ls >> tok) {
            const auto label = parse_label(tok, lineno);
            auto it = std::lower_bound(universe.begin(), universe.end(), label);
            if (it == universe.end() || *it != label)
                throw ValidationError("line " + std::to_string(lineno) + ": label " +
                                      std::to_string(label) + " is not a known node");
            c.push_back(static_cast<NodeId>(it - universe.begin()));
        }
        if (!c.empty())
            cover.communities.push_back(canonicalize(c));
    }
    return cover;
}

Cover load_cover(const std::filesystem::path& path, std::span<const std::int64_t> universe) {
    auto in = open_in(path);
    return parse_cover(in, universe);
}

void save_labels(std::span<const std::int64_t> labels, const std::filesystem::path& path) {
    auto out = open_out(path);
    for (auto l : labels)
        out << l << '\n';
}

std::vector<std::int64_t> load_labels(const std::filesystem::path& path) {
    auto in = open_in(path);
    std::vector<std::int64_t> out;
    std::string tok;
    std::size_t lineno = 0;
    std::string line;
    while (std::getline(in, line)) {
        ++lineno;
        std::istringstream ls(line);
        while (ls >> tok)
            out.push_back(parse_label(tok, lineno));
    }
    return out;
}

void save_ground_truth(const GroundTruth& truth, std::span<const std::int64_t> labels,
                       const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    std::vector<std::int64_t> all(labels.begin(), labels.end());
    std::sort(all.begin(), all.end());
    save_labels(all, dir / "nodes.txt");
    save_cover(truth.cover, labels, dir / "communities.txt");
    std::vector<std::int64_t> bg;
    for (NodeId v : truth.background)
        bg.push_back(labels[v]);
    std::sort(bg.begin(), bg.end());
    save_labels(bg, dir / "background.txt");
}

LabeledTruth load_ground_truth(const std::filesystem::path& dir) {
    LabeledTruth out;
    out.labels = load_labels(dir / "nodes.txt");
    std::sort(out.labels.begin(), out.labels.end());
    if (std::adjacent_find(out.labels.begin(), out.labels.end()) != out.labels.end())
        throw ValidationError("nodes.txt: duplicate label");
    out.truth.cover = load_cover(dir / "communities.txt", out.labels);
    const auto bg = load_labels(dir / "background.txt");
    for (auto l : bg) {
        auto it = std::lower_bound(out.labels.begin(), out.labels.end(), l);
        if (it == out.labels.end() || *it != l)
            throw ValidationError("background.txt: label " + std::to_string(l) + " is not a known node");
        out.truth.background.push_back(static_cast<NodeId>(it - out.labels.begin()));
    }
    canonicalize(out.truth.background);
    return out;
}

json communities_json(const CcmeResult& result, std::span<const std::int64_t> labels) {
    json arr = json::array();
    for (std::size_t i = 0; i < result.cover.communities.size(); ++i) {
        const auto& c = result.cover.communities[i];
        const auto& info = result.info.at(i);
        std::vector<std::int64_t> members;
        for (NodeId v : c)
            members.push_back(labels[v]);
        std::sort(members.begin(), members.end());
        arr.push_back(json{{"id", i},
                           {"size", info.size},
                           {"z", info.z},
                           {"p", info.p},
                           {"origin", labels[info.origin]},
                           {"from_cycle_union", info.from_cycle_union},
                           {"fixed_point", info.fixed_point},
                           {"members", members}});
    }
    const auto& s = result.stats;
    return json{{"kappa", result.params.kappa},
                {"stats",
                 {{"seeds", s.seeds},
                  {"seeds_after_filter", s.seeds_after_filter},
                  {"searches", s.searches},
                  {"skipped", s.skipped},
                  {"stable", s.stable},
                  {"pruned", s.pruned}}},
                {"communities", arr}};
}

json RunManifest::json() const {
    return nlohmann::json{{"command", command},   {"config", config},
                          {"seed", seed},         {"inputs", inputs},
                          {"outputs", outputs},   {"version", version},
                          {"wall_seconds", wall_seconds}};
}

std::string tool_version() { return "ccme 0.1.0"; }

} // namespace ccme
