#pragma once

#include "ccme/extraction.hpp"
#include "ccme/graph.hpp"
#include "ccme/null_model.hpp"
#include "ccme/wsbm.hpp"

#include <json.hpp>

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace ccme {

/// JSON forms. Readers reject unknown keys and wrong types with a
/// ValidationError naming the field.
nlohmann::json to_json(const NullParams& params);
NullParams null_params_from_json(const nlohmann::json& j);

nlohmann::json to_json(const BenchmarkConfig& cfg);
BenchmarkConfig benchmark_config_from_json(const nlohmann::json& j);

nlohmann::json to_json(const WsbmConfig& cfg);
nlohmann::json to_json(const ExtractionConfig& cfg);
nlohmann::json to_json(const BackgroundFit& fit);

/// Reads a whole JSON file; IoError or ParseError on failure.
nlohmann::json load_json(const std::filesystem::path& path);
void save_json(const nlohmann::json& j, const std::filesystem::path& path);

/// Cover file: one community per line, node labels separated by spaces.
void write_cover(const Cover& cover, std::span<const std::int64_t> labels, std::ostream& out);
void save_cover(const Cover& cover, std::span<const std::int64_t> labels,
                const std::filesystem::path& path);

/// Parses a cover file against a label universe (sorted, unique). Unknown
/// labels throw ValidationError.
Cover parse_cover(std::istream& in, std::span<const std::int64_t> universe);
Cover load_cover(const std::filesystem::path& path, std::span<const std::int64_t> universe);

/// One label per line.
void save_labels(std::span<const std::int64_t> labels, const std::filesystem::path& path);
std::vector<std::int64_t> load_labels(const std::filesystem::path& path);

/// Ground-truth directory: nodes.txt (all labels), communities.txt,
/// background.txt.
void save_ground_truth(const GroundTruth& truth, std::span<const std::int64_t> labels,
                       const std::filesystem::path& dir);
struct LabeledTruth {
    std::vector<std::int64_t> labels;
    GroundTruth truth;
};
LabeledTruth load_ground_truth(const std::filesystem::path& dir);

/// Per-community records of a detection run.
nlohmann::json communities_json(const CcmeResult& result, std::span<const std::int64_t> labels);

struct RunManifest {
    std::string command;
    nlohmann::json config;
    std::uint64_t seed = 0;
    std::vector<std::string> inputs;
    std::vector<std::string> outputs;
    std::string version;
    double wall_seconds = 0.0;

    nlohmann::json json() const;
};

std::string tool_version();

} // namespace ccme
