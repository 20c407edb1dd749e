#include "doctest.h"
#include "instances.hpp"
#include "mflq/cli.hpp"
#include "mflq/model_io.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

using namespace mflq;
using namespace mflq::testing;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("mflq_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

nlohmann::json read_json(const fs::path& p) {
  std::ifstream in(p);
  return nlohmann::json::parse(in);
}

RunConfig config(Command c, const fs::path& model, const fs::path& out) {
  RunConfig cfg;
  cfg.command = c;
  cfg.model_path = model;
  cfg.out_dir = out;
  return cfg;
}

}  // namespace

TEST_CASE("command names") {
  CHECK(parse_command("solve") == Command::solve);
  CHECK(parse_command("certify") == Command::certify);
  CHECK_FALSE(parse_command("plot").has_value());
}

TEST_CASE("solve on the zero-cost model") {
  const fs::path dir = scratch("zero");
  ModelSpec s = zero_model(2, 1, 1.0, 100);
  s.x0 = Vector::Ones(2);
  save_model(s, dir / "model.json");
  std::ostringstream log;
  CHECK(run(config(Command::solve, dir / "model.json", dir), log) == exit_code::ok);
  CHECK(read_json(dir / "value.json")["value"] == 0.0);
  CHECK(fs::exists(dir / "riccati.csv"));
}

TEST_CASE("solve rejects N = 0 with exit 2") {
  const fs::path dir = scratch("singular");
  ModelSpec s = tanh_model(100);
  s.N = scalar(0.0);
  save_model(s, dir / "model.json");
  std::ostringstream log;
  CHECK(run(config(Command::solve, dir / "model.json", dir), log) == exit_code::invalid_input);
  CHECK(log.str().find("N not ⪰ δI") != std::string::npos);
}

TEST_CASE("numerical failure exits 3") {
  const fs::path dir = scratch("blowup");
  ModelSpec s = tanh_model(1000);
  s.A = scalar(20.0);
  s.B = scalar(0.0);
  s.G = scalar(1.0);
  save_model(s, dir / "model.json");
  std::ostringstream log;
  CHECK(run(config(Command::solve, dir / "model.json", dir), log) == exit_code::numerical_failure);
}

TEST_CASE("bad input exits 2") {
  const fs::path dir = scratch("bad");
  std::ofstream(dir / "model.json") << "{ not json";
  std::ostringstream log;
  CHECK(run(config(Command::solve, dir / "model.json", dir), log) == exit_code::invalid_input);
  RunConfig cfg = config(Command::simulate, dir / "model.json", dir);
  cfg.M = 0;
  CHECK(run(cfg, log) == exit_code::invalid_input);
}

TEST_CASE("grid override") {
  const fs::path dir = scratch("grid");
  save_model(tanh_model(10), dir / "model.json");
  RunConfig cfg = config(Command::solve, dir / "model.json", dir);
  cfg.h = 1e-3;
  std::ostringstream log;
  REQUIRE(run(cfg, log) == exit_code::ok);
  const auto j = read_json(dir / "value.json");
  CHECK(j["n_steps"] == 1000);
  CHECK(std::abs(j["value"].get<double>() - std::tanh(1.0)) <= 1e-8);
  cfg.h = 0.3;
  CHECK(run(cfg, log) == exit_code::invalid_input);
}

TEST_CASE("simulate summaries are reproducible") {
  const fs::path dir = scratch("sim");
  save_model(scalar_mixed_model(0.5, 100), dir / "model.json");
  RunConfig cfg = config(Command::simulate, dir / "model.json", dir / "a");
  cfg.M = 500;
  cfg.timestamp = false;
  cfg.save_paths = 3;
  std::ostringstream log;
  REQUIRE(run(cfg, log) == exit_code::ok);
  cfg.out_dir = dir / "b";
  cfg.workers = 3;
  cfg.save_paths = 0;
  REQUIRE(run(cfg, log) == exit_code::ok);
  std::ifstream a(dir / "a" / "summary.json"), b(dir / "b" / "summary.json");
  std::stringstream sa, sb;
  sa << a.rdbuf();
  sb << b.rdbuf();
  CHECK(sa.str() == sb.str());
  CHECK(fs::exists(dir / "a" / "paths.csv"));
  CHECK(fs::exists(dir / "a" / "mean.csv"));
  CHECK_FALSE(fs::exists(dir / "b" / "paths.csv"));

  cfg.timestamp = true;
  REQUIRE(run(cfg, log) == exit_code::ok);
  CHECK(read_json(dir / "b" / "summary.json").contains("timestamp"));
}

TEST_CASE("verify on the tanh instance passes") {
  const fs::path dir = scratch("verify");
  save_model(tanh_model(200), dir / "model.json");
  RunConfig cfg = config(Command::verify, dir / "model.json", dir);
  cfg.M = 200;
  std::ostringstream log;
  CHECK(run(cfg, log) == exit_code::ok);
  INFO(log.str());
  const auto j = read_json(dir / "verify.json");
  CHECK(j["passed"] == true);
  CHECK(j["checks"].size() == 12);
}

TEST_CASE("certify with a user model") {
  const fs::path dir = scratch("certify");
  ModelSpec s = tanh_model(400);
  s.C = scalar(0.3);
  save_model(s, dir / "extra.json");
  RunConfig cfg = config(Command::certify, dir / "extra.json", dir);
  cfg.steps = 6;
  std::ostringstream log;
  CHECK(run(cfg, log) == exit_code::ok);
  const auto j = read_json(dir / "certify.json");
  REQUIRE(j["instances"].size() == 6);
  CHECK(j["instances"][5]["instance_id"] == "extra");
  CHECK(j["instances"][5]["matched"] == "normalized");
}

TEST_CASE("coarsening and smooth directions") {
  ModelSpec s = scalar_mixed_model(1.0, 8);
  std::vector<Matrix> a;
  for (int i = 0; i <= 8; ++i) a.push_back(scalar(i));
  s.A = CoefficientTrack(a);
  const ModelSpec c = coarsen(s);
  CHECK(c.n_steps == 4);
  CHECK(c.A.length() == 5);
  CHECK(c.A.at(3)(0, 0) == 6.0);
  CHECK(validate_model(c).valid());

  const auto fine = smooth_direction(s, 42, 1);
  const auto coarse = smooth_direction(c, 42, 1);
  CHECK(fine[6] == coarse[3]);
  CHECK(fine[6] != smooth_direction(s, 42, 2)[6]);
}
