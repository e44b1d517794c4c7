#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "mbip/csv_io.hpp"
#include "mbip/experiment.hpp"
#include "mbip/ghost_operator.hpp"

namespace fs = std::filesystem;
using namespace mbip;

namespace {

struct Common {
  std::string preset;
  std::string config;
  double scale = 1.0;
  std::optional<Index> iters;
  std::optional<std::uint64_t> seed;
  std::string out;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--preset", c.preset, "Preset name (see list-presets)");
  cmd->add_option("--config", c.config, "Experiment config JSON file");
  cmd->add_option("--scale", c.scale, "Shrink N and J for desk-scale runs, in (0, 1]");
  cmd->add_option("--iters", c.iters, "Override the MCMC iteration count J");
  cmd->add_option("--seed", c.seed, "Seed (chain seed for inversions, draw seed for sample-prior)");
  cmd->add_option("--out", c.out, "Output directory");
}

ExperimentConfig resolve(const Common& c) {
  if (c.preset.empty() == c.config.empty()) throw ConfigError("give exactly one of --preset or --config");
  ExperimentConfig cfg = c.preset.empty() ? load_config(c.config) : load_preset(c.preset);
  if (c.scale != 1.0 || c.iters) apply_scale(cfg, c.scale, c.iters);
  return cfg;
}

fs::path out_dir(const Common& c, const ExperimentConfig& cfg, const std::string& sub) {
  if (!c.out.empty()) return c.out;
  if (!cfg.output_dir.empty()) return fs::path(cfg.output_dir) / sub;
  return default_output_root() / cfg.name / sub;
}

int fail(const std::string& type, const std::string& message, int code) {
  nlohmann::json err = {{"error", {{"type", type}, {"message", message}}}};
  std::cerr << err.dump() << '\n';
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Mesh-free Bayesian inverse problems on manifolds with boundary"};
  app.require_subcommand(1);

  Common common;
  std::string kind = "gpdm";
  int count = 1;
  int chains = 1;
  bool merge = false;
  std::string init;
  std::string chain_path;
  bool validate_presets = false;

  auto* gen = app.add_subcommand("generate-cloud", "Write the point cloud and its ghost points");
  add_common(gen, common);
  auto* cal = app.add_subcommand("calibrate-eps", "Tabulate log T(eps) and pick the kernel bandwidth");
  add_common(cal, common);
  auto* op = app.add_subcommand("build-operator", "Assemble a graph operator and write it as CSV + JSON");
  add_common(op, common);
  op->add_option("--kind", kind, "gpdm | weighted | self_tuned | truncated")
      ->check(CLI::IsMember({"gpdm", "weighted", "self_tuned", "truncated"}));
  auto* sp = app.add_subcommand("sample-prior", "Draw prior samples");
  add_common(sp, common);
  sp->add_option("--count", count, "Number of draws")->check(CLI::PositiveNumber);
  auto* fw = app.add_subcommand("forward-solve", "Solve the forward problem at the configured truth");
  add_common(fw, common);
  auto* inv = app.add_subcommand("run-inversion", "Run the full pipeline and write all artifacts");
  add_common(inv, common);
  inv->add_option("--chains", chains, "Independent chains run on threads")->check(CLI::Range(1, 256));
  inv->add_flag("--merge", merge, "Pool all chains in the summary");
  inv->add_option("--init", init, "Initial state: zero | prior")->check(CLI::IsMember({"zero", "prior"}));
  auto* sm = app.add_subcommand("summarize", "Summarize a chain CSV against a preset's prior");
  add_common(sm, common);
  sm->add_option("--chain", chain_path, "chain.csv written by run-inversion")->required()->check(CLI::ExistingFile);
  auto* lp = app.add_subcommand("list-presets", "List shipped presets");
  lp->add_flag("--validate", validate_presets, "Dry-run validate every preset");

  CLI11_PARSE(app, argc, argv);

  try {
    if (lp->parsed()) {
      for (const auto& name : list_presets()) {
        const ExperimentConfig cfg = load_preset(name);
        if (validate_presets) dry_run(cfg);
        std::cout << name << (validate_presets ? "  [ok]  " : "  ") << cfg.description << '\n';
      }
      return 0;
    }

    ExperimentConfig cfg = resolve(common);
    if (inv->parsed()) {
      if (chains > 1 || inv->count("--chains")) cfg.mcmc.chains = chains;
      if (merge) cfg.mcmc.merge_chains = true;
      if (!init.empty()) cfg.mcmc.init_from_prior = init == "prior";
      if (common.seed) cfg.mcmc.pcn.seed = *common.seed;
      validate(cfg);
      const fs::path dir = out_dir(common, cfg, "run");
      const RunResult r = run_experiment(cfg, dir);
      std::cout << "run directory: " << dir.string() << '\n'
                << "acceptance rate: " << r.summary.acceptance_rate << '\n'
                << "coverage: " << r.coverage << '\n'
                << "forward relative error: " << r.forward_relative_error << '\n';
      return 0;
    }

    const fs::path dir = out_dir(common, cfg, app.get_subcommands().front()->get_name());
    if (gen->parsed()) {
      validate(cfg);
      const auto s = build_setup(cfg);
      io::write_cloud(dir / "cloud.csv", s->cloud);
      io::write_ghosts(dir / "ghosts.csv", s->ghosts);
      std::cout << "wrote " << s->cloud.size() << " points and " << s->ghosts.size() << " ghosts to " << dir.string() << '\n';
    } else if (cal->parsed()) {
      const PointCloud cloud = build_setup(cfg)->cloud;
      const EpsilonCalibration c = calibrate_epsilon(
          cloud.points, cfg.kernel.k_closest, log_spaced(cfg.kernel.eps_min, cfg.kernel.eps_max, cfg.kernel.eps_count));
      io::write_calibration(dir / "eps_calibration.csv", c);
      std::cout << "log_epsilon,log_T,slope\n";
      for (std::size_t i = 0; i < c.log_epsilon.size(); ++i)
        std::cout << io::format(c.log_epsilon[i]) << ',' << io::format(c.log_T[i]) << ',' << io::format(c.slopes[i]) << '\n';
      std::cout << "epsilon* = " << io::format(c.epsilon) << "  slope = " << io::format(c.slope) << '\n';
    } else if (op->parsed()) {
      const auto s = build_setup(cfg);
      GraphOperator g;
      if (kind == "gpdm") {
        g = gpdm_operator(s->cloud, s->ghosts, Eigen::VectorXd::Ones(s->cloud.size()), s->epsilon).as_graph_operator();
      } else if (kind == "weighted") {
        g = weighted_laplacian(s->cloud.points, Eigen::VectorXd::Ones(s->cloud.size()), s->epsilon);
      } else if (kind == "self_tuned") {
        g = self_tuned_laplacian(s->cloud.points, cfg.prior.interior_knn);
      } else {
        Eigen::MatrixXd all(s->cloud.size() + s->ghosts.size(), s->cloud.ambient_dim());
        all << s->cloud.points, s->ghosts.points;
        g = truncated_laplacian(self_tuned_laplacian(all, cfg.prior.interior_knn), s->cloud.size());
      }
      io::write_operator(dir / "operator.csv", dir / "operator.json", g);
      std::cout << "wrote " << to_string(g.kind) << " operator (" << g.size() << "x" << g.size() << ") to " << dir.string()
                << '\n';
    } else if (sp->parsed()) {
      const auto s = build_setup(cfg);
      const std::uint64_t base = common.seed.value_or(cfg.mcmc.pcn.seed);
      std::vector<std::uint64_t> seeds;
      std::vector<PriorSample> draws;
      for (int k = 0; k < count; ++k) {
        seeds.push_back(base + static_cast<std::uint64_t>(k));
        Rng rng(seeds.back());
        draws.push_back(s->prior->sample(rng));
      }
      io::write_prior_samples(dir / "prior_samples.csv", seeds, draws);
      io::write_spectrum(dir / "prior_spectrum.csv", s->prior->spectrum());
      std::cout << "wrote " << count << " prior draws to " << dir.string() << '\n';
    } else if (fw->parsed()) {
      const auto s = build_setup(cfg);
      const Eigen::VectorXd u = s->elliptic ? s->elliptic->solve_kappa(s->truth_parameter) : s->truth_solution;
      io::write_node_function(dir / "forward.csv", u, "u");
      io::write_observations(dir / "observations.csv", s->observations.obs_idx, s->observations.y);
      std::cout << "relative L2 difference to the analytic field: " << (u - s->truth_solution).norm() / s->truth_solution.norm()
                << '\n';
    } else if (sm->parsed()) {
      const auto s = build_setup(cfg);
      Chain chain;
      chain.samples = io::read_chain(chain_path);
      if (chain.samples.cols() != s->prior->coefficient_count())
        throw std::runtime_error("chain has " + std::to_string(chain.samples.cols()) + " coefficients, prior expects " +
                                 std::to_string(s->prior->coefficient_count()));
      const PosteriorSummary summary = summarize(chain, s->parameter_map());
      io::write_summary(dir / "summary.csv", summary);
      std::cout << "wrote summary of " << chain.samples.rows() << " samples to " << (dir / "summary.csv").string() << '\n';
    }
    return 0;
  } catch (const ConfigError& e) {
    return fail("config", e.what(), 2);
  } catch (const SolverError& e) {
    return fail("solver", e.what(), 3);
  } catch (const std::exception& e) {
    return fail("runtime", e.what(), 1);
  }
}
