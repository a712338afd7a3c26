#include "ccme/io.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace ccme;
using nlohmann::json;

TEST_CASE("null params json") {
    NullParams p{{1, 2}, {3, 4}, 0.5};
    const auto j = to_json(p);
    CHECK(j.contains("d"));
    CHECK(j.contains("s"));
    const auto back = null_params_from_json(j);
    CHECK(back.degree == p.degree);
    CHECK(back.strength == p.strength);
    CHECK(back.kappa == p.kappa);
    CHECK_THROWS_AS(null_params_from_json(json{{"d", {1}}, {"s", {1}}}), ValidationError);
    CHECK_THROWS_AS(null_params_from_json(json{{"d", {1}}, {"s", {1}}, {"kappa", 1}, {"x", 1}}),
                    ValidationError);
}

TEST_CASE("benchmark config json") {
    BenchmarkConfig c;
    c.n = 300;
    c.n_b = 50;
    c.weight_family = WeightDistribution::Family::Uniform;
    c.sigma2 = 0.1;
    const auto back = benchmark_config_from_json(to_json(c));
    CHECK(back.n == 300);
    CHECK(back.n_b == 50);
    CHECK(back.weight_family == WeightDistribution::Family::Uniform);

    CHECK_THROWS_WITH_AS(benchmark_config_from_json(json{{"nn", 3}}), doctest::Contains("nn"),
                         ValidationError);
    CHECK_THROWS_WITH_AS(benchmark_config_from_json(json{{"n", -3}}), doctest::Contains("n"),
                         ValidationError);
    CHECK_THROWS_AS(benchmark_config_from_json(json{{"weight_family", "lognormal"}}),
                    ValidationError);
    CHECK_THROWS_AS(benchmark_config_from_json(json{{"s_e", "big"}}), ValidationError);
}

TEST_CASE("cover files") {
    const std::vector<std::int64_t> labels = {3, 8, 20, 21};
    Cover c{4, {{0, 2}, {1, 2, 3}}};
    std::ostringstream out;
    write_cover(c, labels, out);
    CHECK(out.str() == "3 20\n8 20 21\n");
    std::istringstream in(out.str());
    const auto back = parse_cover(in, labels);
    CHECK(back.communities == c.communities);

    std::istringstream bad("3 9\n");
    CHECK_THROWS_AS(parse_cover(bad, labels), ValidationError);
    std::istringstream junk("3 x\n");
    CHECK_THROWS_AS(parse_cover(junk, labels), ParseError);
}

TEST_CASE("ground truth directory round trip") {
    const auto dir = std::filesystem::temp_directory_path() / "ccme_unit_truth";
    std::filesystem::remove_all(dir);
    const std::vector<std::int64_t> labels = {10, 11, 12, 13, 14};
    GroundTruth t{Cover{5, {{0, 1}, {1, 2}}}, {3, 4}};
    save_ground_truth(t, labels, dir);
    const auto back = load_ground_truth(dir);
    CHECK(back.labels == labels);
    CHECK(back.truth.cover.communities == t.cover.communities);
    CHECK(back.truth.background == t.background);
    std::filesystem::remove_all(dir);
    CHECK_THROWS_AS(load_ground_truth(dir), IoError);
}

TEST_CASE("bad json file") {
    const auto path = std::filesystem::temp_directory_path() / "ccme_unit_bad.json";
    {
        std::ofstream(path) << "{ not json";
    }
    CHECK_THROWS_AS(load_json(path), ParseError);
    std::filesystem::remove(path);
}
