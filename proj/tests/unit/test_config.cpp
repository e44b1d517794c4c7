#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>

#include "doctest.h"
#include "mbip/experiment.hpp"
#include "mbip/expression.hpp"

using namespace mbip;
namespace fs = std::filesystem;
using std::numbers::pi;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string first_line(const fs::path& p) {
  std::ifstream in(p);
  std::string line;
  std::getline(in, line);
  return line;
}

std::size_t line_count(const fs::path& p) {
  std::ifstream in(p);
  std::size_t n = 0;
  std::string line;
  while (std::getline(in, line)) ++n;
  return n;
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("mbip_unit_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

int run_cli(const std::string& args, const fs::path& stderr_path) {
  const std::string cmd = std::string(MBIP_CLI_PATH) + " " + args + " > /dev/null 2> " + stderr_path.string();
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

const char* minimal_config = R"({
  "name": "tiny",
  "geometry": {"shape": "semi_ellipse", "n": 40},
  "problem": "elliptic",
  "truth": "kappa1",
  "prior": {"tau": 0.2, "s": 4, "m": 10},
  "kernel": {"k_closest": 10, "ghost_K": 4},
  "mcmc": {"zeta": 0.05, "iterations": 40, "burn_in": 20, "seed": 3},
  "noise_var": 0.01
})";

}  // namespace

TEST_CASE("expressions") {
  const double a[] = {0.5};
  CHECK(Expression("2 + cos(3*alpha)")(a) == doctest::Approx(2 + std::cos(1.5)));
  CHECK(Expression("2^3^2")(a) == 512.0);
  CHECK(Expression("-x^2")(a) == doctest::Approx(-0.25));
  CHECK(Expression("pi/2")(a) == doctest::Approx(pi / 2));
  CHECK(Expression("exp(1) - e")(a) == doctest::Approx(0.0));
  CHECK(Expression("1 + alpha*(alpha - pi)/5")(a) == doctest::Approx(1 + 0.5 * (0.5 - pi) / 5));
  CHECK(Expression("sqrt(abs(-4)) * log(e) / tan(pi/4)")(a) == doctest::Approx(2.0));
  CHECK(Expression("3").arity() == 0);
  CHECK(Expression("sin(alpha)").arity() == 1);
  CHECK(Expression("10*sin(alpha)*cos(2*beta)").arity() == 2);
  const double ab[] = {pi / 2, 0.0};
  CHECK(Expression("10*sin(alpha)*cos(2*beta)")(ab) == doctest::Approx(10.0));

  CHECK_THROWS_AS(Expression("2 +"), ExpressionError);
  CHECK_THROWS_AS(Expression("foo(1)"), ExpressionError);
  CHECK_THROWS_AS(Expression("(1 + 2"), ExpressionError);
  CHECK_THROWS_AS(Expression("gamma"), ExpressionError);
  try {
    Expression("1 + * 2");
  } catch (const ExpressionError& e) {
    CHECK(e.position() == 4);
  }
}

TEST_CASE("config parsing") {
  const ExperimentConfig c = parse_config(minimal_config, "tiny.json");
  CHECK(c.name == "tiny");
  CHECK(c.geometry.n == 40);
  CHECK(c.truth.kappa == "2 + cos(3*alpha)");
  CHECK(c.mcmc.pcn.zeta == 0.05);
  CHECK(c.prior.boundary_aware);
  CHECK(config_hash(c) == config_hash(parse_config(config_json(c))));
  CHECK(parse_config(config_json(c)).mcmc.pcn.iterations == 40);
}

TEST_CASE("config errors name the line") {
  std::string text = minimal_config;
  SUBCASE("out of range value") {
    text.replace(text.find("\"tau\": 0.2"), 10, "\"tau\": -1");
    try {
      parse_config(text, "tiny.json");
      FAIL("expected a config error");
    } catch (const ConfigError& e) {
      const std::string msg = e.what();
      CHECK(msg.find("tiny.json:6:") == 0);
      CHECK(msg.find("/prior/tau") != std::string::npos);
    }
  }
  SUBCASE("unknown key") {
    text.replace(text.find("\"noise_var\""), 11, "\"noise_vr\"");
    try {
      parse_config(text, "tiny.json");
      FAIL("expected a config error");
    } catch (const ConfigError& e) {
      CHECK(std::string(e.what()).find("tiny.json:9:") == 0);
      CHECK(std::string(e.what()).find("unknown key") != std::string::npos);
    }
  }
  SUBCASE("malformed json") {
    text.replace(text.find("\"n\": 40"), 7, "\"n\": 40,,");
    CHECK_THROWS_AS(parse_config(text, "tiny.json"), ConfigError);
  }
  SUBCASE("bad truth expression") {
    text.replace(text.find("\"kappa1\""), 8, R"j({"kappa": "2 + cos(", "u": "sin(alpha)"})j");
    CHECK_THROWS_AS(parse_config(text, "tiny.json"), ConfigError);
  }
  SUBCASE("beta on a curve") {
    text.replace(text.find("\"kappa1\""), 8, R"j({"kappa": "2 + cos(beta)", "u": "sin(alpha)"})j");
    const ExperimentConfig c = parse_config(text);
    CHECK_THROWS_AS(dry_run(c), ConfigError);
  }
}

TEST_CASE("shipped presets carry the reference settings and pass a dry run") {
  const auto names = list_presets();
  CHECK(names.size() >= 13);
  for (const auto& name : names) {
    CAPTURE(name);
    CHECK_NOTHROW(dry_run(load_preset(name)));
  }

  const ExperimentConfig k1 = load_preset("elliptic-1d-k1");
  CHECK(k1.geometry.n == 630);
  CHECK(k1.kernel.ghost_K == 10);
  CHECK(k1.prior.s == 4.0);
  CHECK(k1.prior.tau == 0.2);
  CHECK(k1.mcmc.pcn.zeta == 0.01);
  CHECK(k1.mcmc.pcn.iterations == 10000);
  CHECK(k1.mcmc.pcn.burn_in == 5000);
  CHECK(k1.noise_var == 0.01);

  const ExperimentConfig h2 = load_preset("heat-2d-a");
  CHECK(h2.geometry.n1 == 36);
  CHECK(h2.geometry.n2 == 36);
  CHECK(h2.prior.s == 4.0);
  CHECK(h2.prior.tau == 0.3);
  CHECK(h2.prior.L == 10);
  CHECK(h2.mcmc.pcn.zeta == 0.006);
  CHECK(h2.mcmc.pcn.iterations == 100000);
  CHECK(h2.t_star == 5.0);
  CHECK(h2.truth.u0 == truth_preset("heat_torus_a").u0);

  CHECK(load_preset("heat-2d-b").prior.tau == 0.012);
  CHECK(load_preset("elliptic-1d-quadrant").geometry.alpha_max == doctest::Approx(pi / 2));
  CHECK_THROWS_AS(load_preset("no-such-preset"), ConfigError);
}

TEST_CASE("desk-scale shrinking") {
  ExperimentConfig c = load_preset("elliptic-1d-k1");
  apply_scale(c, 0.5, Index{4000});
  CHECK(c.geometry.n == 315);
  CHECK(c.mcmc.pcn.iterations == 4000);
  CHECK(c.mcmc.pcn.burn_in == 2000);
  CHECK(c.scale == 0.5);
  CHECK(!c.scaling_rule.empty());

  ExperimentConfig t = load_preset("heat-2d-a");
  apply_scale(t, 0.25);
  CHECK(t.geometry.n1 == 18);
  CHECK(t.geometry.n2 == 18);
  CHECK(t.mcmc.pcn.iterations == 25000);
  CHECK(t.mcmc.pcn.burn_in == 12500);

  CHECK_THROWS_AS(apply_scale(c, 1.5), ConfigError);
  CHECK(config_hash(c) != config_hash(load_preset("elliptic-1d-k1")));
}

TEST_CASE("small end-to-end run writes every artifact") {
  const fs::path dir = scratch("run");
  ExperimentConfig c = parse_config(minimal_config);
  const RunResult r = run_experiment(c, dir);
  for (const char* f : {"manifest.json", "cloud.csv", "eps_calibration.csv", "prior_spectrum.csv", "observations.csv",
                        "chain.csv", "summary.csv", "forward_at_mean.csv"})
    CHECK(fs::exists(dir / f));
  CHECK(first_line(dir / "cloud.csv") == "idx,x1,x2,a1,is_boundary,component");
  CHECK(first_line(dir / "summary.csv") == "idx,mean,p025,p975");
  CHECK(first_line(dir / "observations.csv") == "obs_idx,y");
  CHECK(first_line(dir / "forward_at_mean.csv") == "idx,u");
  CHECK(first_line(dir / "prior_spectrum.csv").rfind("n,lambda,v_1,v_2,", 0) == 0);
  CHECK(line_count(dir / "chain.csv") == 21);
  CHECK(line_count(dir / "summary.csv") == 41);
  const std::string manifest = slurp(dir / "manifest.json");
  for (const char* key : {"\"seed\"", "\"zeta\"", "\"J\"", "\"burn_in\"", "\"acceptance_rate\"", "\"preset_name\"",
                          "\"config_hash\"", "\"wall_time_seconds\""})
    CHECK(manifest.find(key) != std::string::npos);
  CHECK(r.summary.mean.size() == 40);
  CHECK((r.summary.p025.array() <= r.summary.p975.array()).all());
  fs::remove_all(dir);
}

TEST_CASE("command-line interface") {
  const fs::path dir = scratch("cli");
  const fs::path err = dir / "stderr.txt";

  CHECK(run_cli("list-presets --validate", err) == 0);

  CHECK(run_cli("sample-prior --preset elliptic-1d-k1 --scale 0.2 --seed 7 --count 10 --out " + (dir / "prior").string(),
                err) == 0);
  const fs::path samples = dir / "prior" / "prior_samples.csv";
  CHECK(line_count(samples) == 11);
  CHECK(first_line(samples).rfind("seed,zeta_1,", 0) == 0);
  CHECK(first_line(samples).find(",mu_1,mu_2,theta_1,") != std::string::npos);

  CHECK(run_cli("generate-cloud --preset elliptic-1d-k1 --scale 0.2 --out " + (dir / "cloud").string(), err) == 0);
  CHECK(first_line(dir / "cloud" / "ghosts.csv") == "b_idx,k,companion_idx,x1,x2");
  CHECK(line_count(dir / "cloud" / "ghosts.csv") == 21);

  CHECK(run_cli("build-operator --preset elliptic-1d-k1 --scale 0.2 --kind truncated --out " + (dir / "op").string(),
                err) == 0);
  const std::string header = slurp(dir / "op" / "operator.json");
  CHECK(header.find("\"kind\": \"truncated\"") != std::string::npos);
  CHECK(header.find("\"N\": 126") != std::string::npos);

  std::ofstream(dir / "bad.json") << "{\n  \"name\": \"x\",\n  \"geometry\": {\"shape\": \"cube\"}\n}\n";
  CHECK(run_cli("calibrate-eps --config " + (dir / "bad.json").string(), err) == 2);
  const std::string message = slurp(err);
  CHECK(message.find("\"type\":\"config\"") != std::string::npos);
  CHECK(message.find("bad.json:3:") != std::string::npos);

  CHECK(run_cli("calibrate-eps --preset nope", err) == 2);
  CHECK(run_cli("frobnicate", err) != 0);
  fs::remove_all(dir);
}
