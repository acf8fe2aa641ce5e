#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "gibbsrate/cli.hpp"
#include "gibbsrate/dataset_io.hpp"
#include "gibbsrate/error.hpp"

using namespace gibbsrate;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    int code;
    std::string out;
    std::string err;
};

fs::path scratch(const std::string& name) {
    const fs::path dir = fs::current_path() / "cli_scratch" / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

fs::path write_config(const fs::path& dir, const std::string& json) {
    const fs::path p = dir / "config.json";
    std::ofstream(p) << json;
    return p;
}

Outcome invoke(std::vector<std::string> args) {
    std::ostringstream out;
    std::ostringstream err;
    const int code = cli::run(args, out, err);
    return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

const char* kPartial = R"({
  "seed": 7,
  "model": {"type": "s2_partial", "I": 10, "J": 4, "sigma2_a": 1.0, "sigma2_e": 1.0, "A": 0.0},
  "sampler": {"iterations": 4000, "burn_in": 500}
})";

}  // namespace

TEST_CASE("analyze prints the closed form and the oracle") {
    const fs::path dir = scratch("analyze");
    const fs::path cfg = write_config(dir, kPartial);
    const Outcome r = invoke({"analyze", "--config", cfg.string()});
    REQUIRE(r.code == 0);
    const cli::Json j = cli::Json::parse(r.out);
    CHECK(j["command"] == "analyze");
    CHECK(j["model"] == "s2_partial");
    CHECK(j["analytic"].get<double>() == doctest::Approx(0.8));
    CHECK(j["oracle"].get<double>() == doctest::Approx(0.8));
    CHECK(j["abs_diff"].get<double>() < 1e-10);

    const Outcome again = invoke({"analyze", "--config", cfg.string(), "--out", (dir / "o").string()});
    CHECK(again.out == r.out);
    CHECK(slurp(dir / "o" / "analyze.json") == r.out);
}

TEST_CASE("sample writes a reproducible trace") {
    const fs::path dir = scratch("sample");
    const fs::path cfg = write_config(dir, kPartial);
    REQUIRE(invoke({"sample", "--config", cfg.string(), "--out", (dir / "a").string()}).code == 0);
    REQUIRE(invoke({"sample", "--config", cfg.string(), "--out", (dir / "b").string()}).code == 0);
    REQUIRE(invoke({"sample", "--config", cfg.string(), "--out", (dir / "c").string(), "--seed", "8"}).code == 0);
    for (const char* f : {"trace.csv", "data.csv"}) CHECK(slurp(dir / "a" / f) == slurp(dir / "b" / f));
    CHECK(slurp(dir / "a" / "trace.csv") != slurp(dir / "c" / "trace.csv"));

    const ChainTrace trace = read_trace_csv(dir / "a" / "trace.csv");
    CHECK(trace.length() == 3500);
    CHECK(trace.dim() == 11);
    const cli::Json meta = cli::Json::parse(slurp(dir / "a" / "trace.json"));
    CHECK(meta["seed"] == 7);
    CHECK(meta["rows"] == 3500);
    CHECK(meta["data_synthesized"] == true);
    CHECK(meta["model_digest"].get<std::string>().size() == 16);
}

TEST_CASE("verify on a stored trace") {
    const fs::path dir = scratch("verify");
    const fs::path cfg = write_config(dir, kPartial);
    REQUIRE(invoke({"sample", "--config", cfg.string(), "--out", dir.string()}).code == 0);
    const fs::path cfg2 = dir / "verify.json";
    std::ofstream(cfg2) << R"({
  "seed": 7,
  "model": {"type": "s2_partial", "I": 10, "J": 4, "sigma2_a": 1.0, "sigma2_e": 1.0, "A": 0.0},
  "data": {"path": ")" << (dir / "data.csv").generic_string() << R"("},
  "analysis": {"trace": ")" << (dir / "trace.csv").generic_string() << R"("}
})";
    const Outcome r = invoke({"verify", "--config", cfg2.string()});
    CHECK(r.code == 0);
    const cli::Json j = cli::Json::parse(r.out);
    CHECK(j["structural"]["pass"] == true);
}

TEST_CASE("optimize and sweep") {
    const fs::path dir = scratch("optimize");
    const fs::path cfg = write_config(dir, R"({
  "model": {"type": "s3", "I": 4, "J": 3, "K": 2, "tau_a": 1, "tau_b": 2, "tau_e": 1}
})");
    const Outcome r = invoke({"optimize", "--config", cfg.string()});
    REQUIRE(r.code == 0);
    const cli::Json j = cli::Json::parse(r.out);
    CHECK(j["optimal"]["A"].get<double>() == doctest::Approx(0.4));
    CHECK(j["optimal"]["B"].get<double>() == doctest::Approx(1.0 / 3.0));
    CHECK(j["optimal"]["C"].get<double>() == doctest::Approx(0.2));

    const fs::path sweep = write_config(dir, R"({
  "model": {"type": "s2_partial", "I": 10, "J": 4, "sigma2_a": 1.0, "sigma2_e": 1.0, "A": 0.0},
  "sweep": {"axes": [{"name": "A", "values": [0, 0.5, 1]}, {"name": "J", "values": [1, 4]}]}
})");
    const Outcome s1 = invoke({"sweep", "--config", sweep.string()});
    const Outcome s4 = invoke({"sweep", "--config", sweep.string(), "--threads", "4"});
    REQUIRE(s1.code == 0);
    CHECK(s1.out == s4.out);
    std::istringstream lines(s1.out);
    std::string header;
    std::getline(lines, header);
    CHECK(header == "point,A,J,analytic,oracle,empirical,empirical_se");
    int rows = 0;
    for (std::string line; std::getline(lines, line);) ++rows;
    CHECK(rows == 6);
    CHECK(s1.out.find("\n1,0,4,0.8,") != std::string::npos);  // first axis varies slowest
}

TEST_CASE("exit codes") {
    const fs::path dir = scratch("errors");
    CHECK(invoke({"analyze"}).code == 2);
    CHECK(invoke({"frobnicate", "--config", "x.json"}).code == 2);
    CHECK(invoke({"--help"}).code == 0);

    std::ofstream(dir / "broken.json") << "{ not json";
    CHECK(invoke({"analyze", "--config", (dir / "broken.json").string()}).code == 2);

    std::ofstream(dir / "unknown.json") << R"({"model": {"type": "s2_partial", "I": 3, "J": 2, "sigma2_a": 1,
      "sigma2_e": 1, "A": 0, "bogus": 1}})";
    const Outcome unknown = invoke({"analyze", "--config", (dir / "unknown.json").string()});
    CHECK(unknown.code == 2);
    CHECK(unknown.err.find("bogus") != std::string::npos);

    std::ofstream(dir / "negative.json") << R"({"model": {"type": "s2_partial", "I": 3, "J": 2, "sigma2_a": -1,
      "sigma2_e": 1, "A": 0}})";
    CHECK(invoke({"analyze", "--config", (dir / "negative.json").string()}).code == 2);

    std::ofstream(dir / "nosampler.json") << R"({"model": {"type": "s2_partial", "I": 3, "J": 2, "sigma2_a": 1,
      "sigma2_e": 1, "A": 0}})";
    CHECK(invoke({"sample", "--config", (dir / "nosampler.json").string()}).code == 2);

    std::ofstream(dir / "degenerate.json") << R"({"model": {"type": "s3", "I": 2, "J": 2, "K": 2,
      "sigma2_a": 1e200, "sigma2_b": 1e200, "sigma2_e": 1e200}})";
    CHECK(invoke({"optimize", "--config", (dir / "degenerate.json").string()}).code == 3);

    std::ofstream(dir / "missing.json") << R"({"model": {"type": "s2_partial", "I": 3, "J": 2, "sigma2_a": 1,
      "sigma2_e": 1, "A": 0}, "data": {"path": "/nonexistent/data.csv"}})";
    CHECK(invoke({"analyze", "--config", (dir / "missing.json").string()}).code == 3);

    CHECK(cli::exit_code_for(ErrorKind::InvalidConfig) == 2);
    CHECK(cli::exit_code_for(ErrorKind::InvalidPrior) == 2);
    CHECK(cli::exit_code_for(ErrorKind::Parse) == 3);
    CHECK(cli::exit_code_for(ErrorKind::DegenerateCondition) == 3);
}

TEST_CASE("config parsing is strict") {
    CHECK_THROWS_AS(cli::parse_config(cli::Json::parse(R"({"model": {"type": "nope"}})")), Error);
    CHECK_THROWS_AS(cli::parse_config(cli::Json::parse(R"({"model": {"type": "s2_partial", "I": 3, "J": 2,
      "sigma2_a": 1, "sigma2_e": 1, "A": 0}, "extra": 1})")), Error);
    const cli::RunConfig cfg = cli::parse_config(cli::Json::parse(R"({"model": {"type": "s2_partial", "I": 3, "J": 2,
      "sigma2_a": 1, "sigma2_e": 1, "A": "optimal"}})"), 99);
    CHECK(cfg.seed == 99);
    CHECK(std::get<PartialTwoLevelSpec>(cfg.model).A == doctest::Approx(2.0 / 3.0));
}
