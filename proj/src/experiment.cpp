#include "mbip/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <map>
#include <sstream>

#include "json.hpp"
#include "mbip/csv_io.hpp"
#include "mbip/ghost_operator.hpp"

#ifndef MBIP_PRESET_DIR
#define MBIP_PRESET_DIR "presets"
#endif

namespace mbip {

namespace fs = std::filesystem;
using json = nlohmann::json;

std::string to_string(Problem p) { return p == Problem::elliptic ? "elliptic" : "heat"; }

namespace {

constexpr const char* kVersion = "0.1.0";

std::pair<std::size_t, std::size_t> line_col(const std::string& text, std::size_t offset) {
  std::size_t line = 1, col = 1;
  for (std::size_t i = 0; i < offset && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return {line, col};
}

/// Walks the JSON source looking for each key of `path` in turn.
std::size_t locate(const std::string& text, const std::vector<std::string>& path) {
  std::size_t pos = 0;
  for (const auto& key : path) {
    const std::size_t found = text.find('"' + key + '"', pos);
    if (found == std::string::npos) break;
    pos = found;
  }
  return pos;
}

class Reader {
 public:
  Reader(const std::string& text, std::string origin) : text_(text), origin_(std::move(origin)) {}

  [[noreturn]] void fail(const std::vector<std::string>& path, const std::string& message) const {
    const auto [line, col] = line_col(text_, locate(text_, path));
    std::string joined;
    for (const auto& p : path) joined += "/" + p;
    throw ConfigError(origin_ + ":" + std::to_string(line) + ":" + std::to_string(col) + ": " +
                      (joined.empty() ? "/" : joined) + ": " + message);
  }

  const json& object(const json& parent, const std::vector<std::string>& path, const std::string& key) const {
    auto sub = extend(path, key);
    if (!parent.contains(key)) fail(sub, "missing section");
    if (!parent[key].is_object()) fail(sub, "expected an object");
    return parent[key];
  }

  template <typename T>
  T get(const json& parent, const std::vector<std::string>& path, const std::string& key, const T& fallback) const {
    if (!parent.contains(key) || parent[key].is_null()) return fallback;
    return convert<T>(parent[key], extend(path, key));
  }

  template <typename T>
  T require(const json& parent, const std::vector<std::string>& path, const std::string& key) const {
    auto sub = extend(path, key);
    if (!parent.contains(key) || parent[key].is_null()) fail(sub, "missing required value");
    return convert<T>(parent[key], sub);
  }

  void known_keys(const json& obj, const std::vector<std::string>& path, const std::vector<std::string>& keys) const {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
      if (std::find(keys.begin(), keys.end(), it.key()) == keys.end()) fail(extend(path, it.key()), "unknown key");
    }
  }

  static std::vector<std::string> extend(std::vector<std::string> path, const std::string& key) {
    path.push_back(key);
    return path;
  }

 private:
  template <typename T>
  T convert(const json& v, const std::vector<std::string>& path) const {
    if constexpr (std::is_same_v<T, bool>) {
      if (!v.is_boolean()) fail(path, "expected true or false");
      return v.get<bool>();
    } else if constexpr (std::is_same_v<T, std::string>) {
      if (!v.is_string()) fail(path, "expected a string");
      return v.get<std::string>();
    } else if constexpr (std::is_integral_v<T>) {
      if (!v.is_number_integer()) fail(path, "expected an integer");
      if constexpr (std::is_unsigned_v<T>) {
        if (v.is_number_unsigned()) return static_cast<T>(v.get<std::uint64_t>());
        if (v.get<std::int64_t>() < 0) fail(path, "expected a nonnegative integer");
      }
      return static_cast<T>(v.get<std::int64_t>());
    } else {
      if (v.is_number()) return v.get<double>();
      if (v.is_string()) {
        try {
          return Expression(v.get<std::string>())(std::span<const double>{});
        } catch (const std::exception& e) {
          fail(path, std::string("cannot evaluate constant expression: ") + e.what());
        }
      }
      fail(path, "expected a number");
    }
  }

  const std::string& text_;
  std::string origin_;
};

const std::map<std::string, TruthConfig>& truth_table() {
  static const std::map<std::string, TruthConfig> table = {
      {"kappa1", {"kappa1", "2 + cos(3*alpha)", "sin(alpha)", ""}},
      {"kappa2", {"kappa2", "1 + cos(alpha)^2", "sin(alpha)", ""}},
      {"kappa3", {"kappa3", "1 + alpha*(alpha - pi)/5", "sin(alpha)", ""}},
      {"torus_kappa", {"torus_kappa", "10 + 8*sin(alpha)*cos(beta)", "10*sin(2*alpha)*cos(beta)", ""}},
      {"flat_sine", {"flat_sine", "1", "sin(pi*x)", ""}},
      {"heat_a", {"heat_a", "", "", "10*sin(alpha) + 2"}},
      {"heat_b", {"heat_b", "", "", "10*sin(2*alpha) + 2"}},
      {"heat_c", {"heat_c", "", "", "10*cos(alpha) + 2"}},
      {"heat_torus_a", {"heat_torus_a", "", "", "10*sin(alpha)*cos(2*beta)"}},
      {"heat_torus_b", {"heat_torus_b", "", "", "2 + sin(alpha)*cos(beta)"}},
  };
  return table;
}

Shape parse_shape(const std::string& s, const Reader& r, const std::vector<std::string>& path) {
  if (s == "flat_interval") return Shape::flat_interval;
  if (s == "semi_ellipse") return Shape::semi_ellipse;
  if (s == "semi_torus") return Shape::semi_torus;
  r.fail(path, "unknown shape '" + s + "' (flat_interval, semi_ellipse, semi_torus)");
}

int manifold_dim(Shape s) { return s == Shape::semi_torus ? 2 : 1; }

}  // namespace

TruthConfig truth_preset(const std::string& name) {
  const auto& table = truth_table();
  const auto it = table.find(name);
  if (it == table.end()) throw ConfigError("unknown truth preset '" + name + "'");
  return it->second;
}

ExperimentConfig parse_config(const std::string& text, const std::string& origin) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    const auto [line, col] = line_col(text, e.byte > 0 ? e.byte - 1 : 0);
    throw ConfigError(origin + ":" + std::to_string(line) + ":" + std::to_string(col) + ": malformed JSON: " + e.what());
  }
  const Reader r(text, origin);
  if (!root.is_object()) r.fail({}, "expected a JSON object");
  r.known_keys(root, {}, {"name", "description", "geometry", "problem", "truth", "prior", "kernel", "mcmc", "noise_var",
                          "data_seed", "t_star", "output_dir", "scale", "scaling_rule"});

  ExperimentConfig c;
  c.name = r.require<std::string>(root, {}, "name");
  c.description = r.get<std::string>(root, {}, "description", "");

  const json& geo = r.object(root, {}, "geometry");
  r.known_keys(geo, {"geometry"}, {"shape", "n", "n1", "n2", "alpha_max"});
  c.geometry.shape = parse_shape(r.require<std::string>(geo, {"geometry"}, "shape"), r, {"geometry", "shape"});
  if (c.geometry.shape == Shape::semi_torus) {
    c.geometry.n1 = r.require<Index>(geo, {"geometry"}, "n1");
    c.geometry.n2 = r.require<Index>(geo, {"geometry"}, "n2");
    c.geometry.n = c.geometry.n1 * c.geometry.n2;
  } else {
    c.geometry.n = r.require<Index>(geo, {"geometry"}, "n");
  }
  c.geometry.alpha_max = r.get<double>(geo, {"geometry"}, "alpha_max", c.geometry.alpha_max);

  const std::string problem = r.require<std::string>(root, {}, "problem");
  if (problem == "elliptic") c.problem = Problem::elliptic;
  else if (problem == "heat") c.problem = Problem::heat;
  else r.fail({"problem"}, "expected 'elliptic' or 'heat'");

  if (!root.contains("truth")) r.fail({"truth"}, "missing section");
  if (root["truth"].is_string()) {
    const std::string name = root["truth"].get<std::string>();
    if (!truth_table().count(name)) r.fail({"truth"}, "unknown truth preset '" + name + "'");
    c.truth = truth_table().at(name);
  } else {
    const json& t = r.object(root, {}, "truth");
    r.known_keys(t, {"truth"}, {"name", "kappa", "u", "u0"});
    c.truth.name = r.get<std::string>(t, {"truth"}, "name", "inline");
    c.truth.kappa = r.get<std::string>(t, {"truth"}, "kappa", "");
    c.truth.u = r.get<std::string>(t, {"truth"}, "u", "");
    c.truth.u0 = r.get<std::string>(t, {"truth"}, "u0", "");
    for (const char* key : {"kappa", "u", "u0"}) {
      const std::string src = r.get<std::string>(t, {"truth"}, key, "");
      if (src.empty()) continue;
      try {
        Expression{src};
      } catch (const ExpressionError& e) {
        r.fail({"truth", key}, e.what());
      }
    }
  }

  const json& pr = r.object(root, {}, "prior");
  r.known_keys(pr, {"prior"}, {"tau", "s", "m", "L", "boundary_knn", "interior_knn", "boundary_aware", "normalization"});
  c.prior.tau = r.require<double>(pr, {"prior"}, "tau");
  c.prior.s = r.require<double>(pr, {"prior"}, "s");
  c.prior.m = r.require<Index>(pr, {"prior"}, "m");
  c.prior.L = r.get<Index>(pr, {"prior"}, "L", c.prior.L);
  c.prior.boundary_knn = r.get<int>(pr, {"prior"}, "boundary_knn", c.prior.boundary_knn);
  c.prior.interior_knn = r.get<int>(pr, {"prior"}, "interior_knn", c.prior.interior_knn);
  c.prior.boundary_aware = r.get<bool>(pr, {"prior"}, "boundary_aware", true);
  const std::string norm = r.get<std::string>(pr, {"prior"}, "normalization", "retained");
  if (norm == "retained") c.prior.normalization = Normalization::retained;
  else if (norm == "full") c.prior.normalization = Normalization::full;
  else r.fail({"prior", "normalization"}, "expected 'retained' or 'full'");

  const json& ke = r.object(root, {}, "kernel");
  r.known_keys(ke, {"kernel"}, {"k_closest", "epsilon", "eps_min", "eps_max", "eps_count", "ghost_K"});
  c.kernel.k_closest = r.get<int>(ke, {"kernel"}, "k_closest", c.kernel.k_closest);
  if (ke.contains("epsilon") && !ke["epsilon"].is_null()) c.kernel.epsilon = r.get<double>(ke, {"kernel"}, "epsilon", 0.0);
  c.kernel.eps_min = r.get<double>(ke, {"kernel"}, "eps_min", c.kernel.eps_min);
  c.kernel.eps_max = r.get<double>(ke, {"kernel"}, "eps_max", c.kernel.eps_max);
  c.kernel.eps_count = r.get<int>(ke, {"kernel"}, "eps_count", c.kernel.eps_count);
  c.kernel.ghost_K = r.get<int>(ke, {"kernel"}, "ghost_K", c.kernel.ghost_K);

  const json& mc = r.object(root, {}, "mcmc");
  r.known_keys(mc, {"mcmc"}, {"zeta", "iterations", "burn_in", "seed", "thinning", "chains", "merge_chains", "init"});
  c.mcmc.pcn.zeta = r.require<double>(mc, {"mcmc"}, "zeta");
  c.mcmc.pcn.iterations = r.require<Index>(mc, {"mcmc"}, "iterations");
  c.mcmc.pcn.burn_in = r.require<Index>(mc, {"mcmc"}, "burn_in");
  c.mcmc.pcn.seed = r.get<std::uint64_t>(mc, {"mcmc"}, "seed", 1);
  c.mcmc.pcn.thinning = r.get<Index>(mc, {"mcmc"}, "thinning", 1);
  c.mcmc.chains = r.get<int>(mc, {"mcmc"}, "chains", 1);
  c.mcmc.merge_chains = r.get<bool>(mc, {"mcmc"}, "merge_chains", false);
  const std::string init = r.get<std::string>(mc, {"mcmc"}, "init", "zero");
  if (init == "zero") c.mcmc.init_from_prior = false;
  else if (init == "prior") c.mcmc.init_from_prior = true;
  else r.fail({"mcmc", "init"}, "expected 'zero' or 'prior'");

  c.noise_var = r.get<double>(root, {}, "noise_var", c.noise_var);
  c.data_seed = r.get<std::uint64_t>(root, {}, "data_seed", 0);
  c.t_star = r.get<double>(root, {}, "t_star", 0.0);
  c.output_dir = r.get<std::string>(root, {}, "output_dir", "");
  c.scale = r.get<double>(root, {}, "scale", 1.0);
  c.scaling_rule = r.get<std::string>(root, {}, "scaling_rule", "");

  try {
    validate(c);
  } catch (const ConfigError& e) {
    // validate() reports "<key path>: message"; map the path back to a source line
    const std::string msg = e.what();
    const auto colon = msg.find(": ");
    std::vector<std::string> path;
    if (!msg.empty() && msg[0] == '/' && colon != std::string::npos) {
      std::stringstream ss(msg.substr(1, colon - 1));
      std::string part;
      while (std::getline(ss, part, '/')) path.push_back(part);
      r.fail(path, msg.substr(colon + 2));
    }
    throw ConfigError(origin + ": " + msg);
  }
  return c;
}

ExperimentConfig load_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path.string());
}

void validate(const ExperimentConfig& c) {
  auto bad = [](const std::string& path, const std::string& msg) { throw ConfigError(path + ": " + msg); };
  if (c.name.empty()) bad("/name", "must not be empty");
  const auto& g = c.geometry;
  if (g.shape == Shape::semi_torus) {
    if (g.n1 < 4) bad("/geometry/n1", "semi-torus needs n1 >= 4");
    if (g.n2 < 3) bad("/geometry/n2", "semi-torus needs n2 >= 3");
  } else if (g.n < 3) {
    bad("/geometry/n", "need at least 3 points");
  }
  if (g.shape == Shape::semi_ellipse && !(g.alpha_max > 0.0 && g.alpha_max <= 3.141592653589793 + 1e-12))
    bad("/geometry/alpha_max", "must lie in (0, pi]");
  if (!(c.prior.tau > 0.0)) bad("/prior/tau", "must be positive");
  if (!(c.prior.s > 0.5 * manifold_dim(g.shape))) bad("/prior/s", "must exceed d/2");
  if (c.prior.m < 1 || c.prior.m > g.n) bad("/prior/m", "must lie in [1, N]");
  if (g.shape == Shape::semi_torus && (c.prior.L < 1 || c.prior.L >= g.n1)) bad("/prior/L", "must lie in [1, n1)");
  if (c.prior.boundary_knn < 1) bad("/prior/boundary_knn", "must be at least 1");
  if (c.prior.interior_knn < 1 || c.prior.interior_knn >= g.n) bad("/prior/interior_knn", "must lie in [1, N)");
  if (c.kernel.k_closest < 1 || c.kernel.k_closest >= g.n) bad("/kernel/k_closest", "must lie in [1, N)");
  if (c.kernel.epsilon && !(*c.kernel.epsilon > 0.0)) bad("/kernel/epsilon", "must be positive");
  if (!(c.kernel.eps_min > 0.0 && c.kernel.eps_max > c.kernel.eps_min)) bad("/kernel/eps_min", "need 0 < eps_min < eps_max");
  if (c.kernel.eps_count < 8) bad("/kernel/eps_count", "need at least 8 grid points");
  if (c.kernel.ghost_K < 1) bad("/kernel/ghost_K", "must be at least 1");
  const auto& p = c.mcmc.pcn;
  if (!(p.zeta > 0.0 && p.zeta < 1.0)) bad("/mcmc/zeta", "must lie in (0, 1)");
  if (p.iterations < 1) bad("/mcmc/iterations", "must be positive");
  if (p.burn_in < 0 || p.burn_in >= p.iterations) bad("/mcmc/burn_in", "must lie in [0, iterations)");
  if (p.thinning < 1) bad("/mcmc/thinning", "must be at least 1");
  if (c.mcmc.chains < 1 || c.mcmc.chains > 256) bad("/mcmc/chains", "must lie in [1, 256]");
  if (!(c.noise_var > 0.0)) bad("/noise_var", "must be positive");
  if (c.problem == Problem::heat) {
    if (!(c.t_star > 0.0) || !std::isfinite(c.t_star)) bad("/t_star", "heat problems need t_star > 0");
    if (c.truth.u0.empty()) bad("/truth", "heat problems need a u0 expression");
  } else {
    if (c.truth.kappa.empty() || c.truth.u.empty()) bad("/truth", "elliptic problems need kappa and u expressions");
  }
}

void dry_run(const ExperimentConfig& c) {
  validate(c);
  const int d = manifold_dim(c.geometry.shape);
  const std::vector<double> probe = {0.3, 0.7};
  for (const std::string* src : {&c.truth.kappa, &c.truth.u, &c.truth.u0}) {
    if (src->empty()) continue;
    const Expression e(*src);
    if (e.arity() > d)
      throw ConfigError("/truth: expression '" + *src + "' uses beta on a one-dimensional manifold");
    if (!std::isfinite(e(std::span<const double>(probe.data(), 2))))
      throw ConfigError("/truth: expression '" + *src + "' is not finite at a probe point");
  }
}

fs::path preset_directory() {
  if (const char* env = std::getenv("MBIP_PRESET_DIR")) return env;
  return MBIP_PRESET_DIR;
}

std::vector<std::string> list_presets() {
  std::vector<std::string> names;
  const fs::path dir = preset_directory();
  if (!fs::is_directory(dir)) throw std::runtime_error("preset directory " + dir.string() + " not found");
  for (const auto& entry : fs::directory_iterator(dir))
    if (entry.path().extension() == ".json") names.push_back(entry.path().stem().string());
  std::sort(names.begin(), names.end());
  return names;
}

ExperimentConfig load_preset(const std::string& name) {
  const fs::path path = preset_directory() / (name + ".json");
  if (!fs::exists(path)) throw ConfigError("unknown preset '" + name + "' (see list-presets)");
  return load_config(path);
}

void apply_scale(ExperimentConfig& c, double scale, std::optional<Index> iterations) {
  if (!(scale > 0.0 && scale <= 1.0)) throw ConfigError("--scale must lie in (0, 1]");
  auto& g = c.geometry;
  if (g.shape == Shape::semi_torus) {
    g.n1 = std::max<Index>(4, std::llround(static_cast<double>(g.n1) * std::sqrt(scale)));
    g.n2 = std::max<Index>(3, std::llround(static_cast<double>(g.n2) * std::sqrt(scale)));
    g.n = g.n1 * g.n2;
  } else {
    g.n = std::max<Index>(3, std::llround(static_cast<double>(g.n) * scale));
  }
  c.kernel.k_closest = static_cast<int>(std::min<Index>(c.kernel.k_closest, g.n - 1));
  c.prior.m = std::min(c.prior.m, g.n);
  auto& p = c.mcmc.pcn;
  const double burn_fraction = static_cast<double>(p.burn_in) / static_cast<double>(p.iterations);
  p.iterations = iterations ? *iterations : std::max<Index>(2, std::llround(static_cast<double>(p.iterations) * scale));
  p.burn_in = std::min(p.iterations - 1, static_cast<Index>(std::llround(burn_fraction * static_cast<double>(p.iterations))));
  c.scale *= scale;
  c.scaling_rule =
      "1D: n -> round(n*scale); 2D: n1, n2 -> round(n*sqrt(scale)); J -> round(J*scale) unless --iters is given; "
      "burn-in keeps its fraction of J";
  validate(c);
}

std::string config_json(const ExperimentConfig& c) {
  json j;
  j["name"] = c.name;
  j["description"] = c.description;
  json geo = {{"shape", to_string(c.geometry.shape)}};
  if (c.geometry.shape == Shape::semi_torus) {
    geo["n1"] = c.geometry.n1;
    geo["n2"] = c.geometry.n2;
  } else {
    geo["n"] = c.geometry.n;
  }
  if (c.geometry.shape == Shape::semi_ellipse) geo["alpha_max"] = c.geometry.alpha_max;
  j["geometry"] = geo;
  j["problem"] = to_string(c.problem);
  json truth = {{"name", c.truth.name}};
  if (!c.truth.kappa.empty()) truth["kappa"] = c.truth.kappa;
  if (!c.truth.u.empty()) truth["u"] = c.truth.u;
  if (!c.truth.u0.empty()) truth["u0"] = c.truth.u0;
  j["truth"] = truth;
  j["prior"] = {{"tau", c.prior.tau},
                {"s", c.prior.s},
                {"m", c.prior.m},
                {"L", c.prior.L},
                {"boundary_knn", c.prior.boundary_knn},
                {"interior_knn", c.prior.interior_knn},
                {"boundary_aware", c.prior.boundary_aware},
                {"normalization", c.prior.normalization == Normalization::retained ? "retained" : "full"}};
  json kernel = {{"k_closest", c.kernel.k_closest}, {"eps_min", c.kernel.eps_min}, {"eps_max", c.kernel.eps_max},
                 {"eps_count", c.kernel.eps_count}, {"ghost_K", c.kernel.ghost_K}};
  kernel["epsilon"] = c.kernel.epsilon ? json(*c.kernel.epsilon) : json(nullptr);
  j["kernel"] = kernel;
  j["mcmc"] = {{"zeta", c.mcmc.pcn.zeta},         {"iterations", c.mcmc.pcn.iterations},
               {"burn_in", c.mcmc.pcn.burn_in},   {"seed", c.mcmc.pcn.seed},
               {"thinning", c.mcmc.pcn.thinning}, {"chains", c.mcmc.chains},
               {"merge_chains", c.mcmc.merge_chains}, {"init", c.mcmc.init_from_prior ? "prior" : "zero"}};
  j["noise_var"] = c.noise_var;
  j["data_seed"] = c.data_seed;
  if (c.problem == Problem::heat) j["t_star"] = c.t_star;
  if (!c.output_dir.empty()) j["output_dir"] = c.output_dir;
  j["scale"] = c.scale;
  if (!c.scaling_rule.empty()) j["scaling_rule"] = c.scaling_rule;
  return j.dump(2);
}

std::uint64_t config_hash(const ExperimentConfig& c) {
  // FNV-1a over the canonical JSON dump
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char ch : config_json(c)) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  return h;
}

namespace {

PointCloud make_cloud(const GeometryConfig& g) {
  switch (g.shape) {
    case Shape::flat_interval: return generate_flat_interval(g.n);
    case Shape::semi_ellipse: return generate_semi_ellipse(g.n, g.alpha_max);
    case Shape::semi_torus: return generate_semi_torus(g.n1, g.n2);
  }
  throw std::logic_error("unhandled shape");
}

Eigen::VectorXd evaluate(const Expression& e, const PointCloud& cloud) {
  Eigen::VectorXd out(cloud.size());
  std::vector<double> coords(static_cast<std::size_t>(cloud.intrinsic.cols()));
  for (Index i = 0; i < cloud.size(); ++i) {
    for (Index j = 0; j < cloud.intrinsic.cols(); ++j) coords[static_cast<std::size_t>(j)] = cloud.intrinsic(i, j);
    out[i] = e(coords);
  }
  if (!out.allFinite()) throw std::runtime_error("truth expression '" + e.source() + "' is not finite on the cloud");
  return out;
}

IntrinsicField field(const Expression& e) {
  return [e](std::span<const double> c) { return e(c); };
}

}  // namespace

PotentialFn ExperimentSetup::potential() const {
  const PriorModel* p = prior.get();
  const Observation* obs = &observations;
  if (elliptic) {
    const EllipticForwardModel* model = elliptic.get();
    return [p, obs, model](const Eigen::VectorXd& c) { return mbip::potential(*obs, model->observe(p->reconstruct(c))); };
  }
  const HeatForwardModel* model = heat.get();
  return [obs, model](const Eigen::VectorXd& c) { return mbip::potential(*obs, model->observe(c)); };
}

NodeMap ExperimentSetup::parameter_map() const {
  const PriorModel* p = prior.get();
  if (elliptic) return [p](const Eigen::VectorXd& c) { return Eigen::VectorXd(p->reconstruct(c).array().exp()); };
  return [p](const Eigen::VectorXd& c) { return p->reconstruct(c); };
}

Eigen::VectorXd ExperimentSetup::forward_at(const Eigen::VectorXd& parameter, const Eigen::VectorXd& mean_coefficients) const {
  if (elliptic) return elliptic->solve_kappa(parameter);
  return heat->solve(mean_coefficients);
}

std::vector<Eigen::VectorXd> ExperimentSetup::initial_states() const {
  const Index p = prior->coefficient_count();
  std::vector<Eigen::VectorXd> out;
  Rng rng(config.mcmc.pcn.seed ^ 0x9e3779b97f4a7c15ull);
  for (int c = 0; c < config.mcmc.chains; ++c)
    out.push_back(config.mcmc.init_from_prior ? standard_normal(p, rng) : Eigen::VectorXd::Zero(p));
  return out;
}

std::unique_ptr<ExperimentSetup> build_setup(const ExperimentConfig& config) {
  validate(config);
  auto s = std::make_unique<ExperimentSetup>();
  s->config = config;
  s->cloud = make_cloud(config.geometry);
  const PointCloud& cloud = s->cloud;
  const Index n = cloud.size();
  s->ghosts = construct_ghost_points(cloud, config.kernel.ghost_K);

  if (config.kernel.epsilon) {
    s->epsilon = *config.kernel.epsilon;
  } else {
    s->calibration = calibrate_epsilon(cloud.points, config.kernel.k_closest,
                                       log_spaced(config.kernel.eps_min, config.kernel.eps_max, config.kernel.eps_count));
    s->epsilon = s->calibration->epsilon;
  }

  const Index wanted = config.prior.normalization == Normalization::full ? n : config.prior.m;
  BoundaryBasis basis;
  if (config.prior.boundary_aware) {
    Eigen::MatrixXd all(n + s->ghosts.size(), cloud.ambient_dim());
    all << cloud.points, s->ghosts.points;
    const GraphOperator full = self_tuned_laplacian(all, config.prior.interior_knn);
    s->spectrum = spectral_decompose(truncated_laplacian(full, n), wanted);

    std::vector<std::pair<std::string, Eigen::MatrixXd>> data;
    for (const auto& comp : cloud.boundary_components) {
      if (cloud.d == 1) data.emplace_back(comp.label, unit_boundary_data());
      else data.emplace_back(comp.label, boundary_eigenbasis(cloud, comp.label, config.prior.L, config.prior.boundary_knn));
    }
    basis = build_boundary_basis(cloud, s->ghosts, s->epsilon, data);
  } else {
    s->spectrum = spectral_decompose(self_tuned_laplacian(cloud.points, config.prior.interior_knn), wanted);
  }
  const MaternSpec spec =
      make_matern_spec(config.prior.tau, config.prior.s, config.prior.m, s->spectrum.eigenvalues, n, config.prior.normalization);
  spec.validate(cloud.d, n);
  s->prior = std::make_unique<PriorModel>(spec, s->spectrum, std::move(basis), n);

  Rng data_rng(config.data_seed);
  const std::vector<Index> obs_idx = all_nodes(n);
  if (config.problem == Problem::elliptic) {
    const Expression kappa(config.truth.kappa), u(config.truth.u);
    s->truth_parameter = evaluate(kappa, cloud);
    s->truth_solution = evaluate(u, cloud);
    const Eigen::VectorXd f = manufacture_rhs(field(kappa), field(u), cloud);
    Eigen::VectorXd h(cloud.boundary_size());
    for (Index b = 0; b < h.size(); ++b) h[b] = s->truth_solution[cloud.boundary_idx[static_cast<std::size_t>(b)]];
    s->elliptic = std::make_unique<EllipticForwardModel>(cloud, s->ghosts, s->epsilon, f, h, obs_idx);
  } else {
    const Expression u0(config.truth.u0);
    s->truth_parameter = evaluate(u0, cloud);
    const RegressionFit fit = heat_regress_coefficients(s->truth_parameter, *s->prior);
    s->truth_coefficients = fit.coefficients();
    s->truth_fit_residual = fit.relative_residual;
    s->heat = std::make_unique<HeatForwardModel>(*s->prior, config.t_star, obs_idx);
    s->truth_solution = s->heat->solve(s->truth_coefficients);
  }
  s->observations = generate_observations(s->truth_solution, obs_idx, config.noise_var, data_rng);
  return s;
}

RunResult execute(const ExperimentConfig& config) {
  const auto start = std::chrono::steady_clock::now();
  RunResult out;
  out.setup = build_setup(config);
  const ExperimentSetup& s = *out.setup;
  const PotentialFn phi = s.potential();
  const auto initials = s.initial_states();
  if (initials.size() == 1) out.chains.push_back(run_chain(config.mcmc.pcn, initials.front(), phi));
  else out.chains = run_chains(config.mcmc.pcn, initials, phi);

  std::vector<const Chain*> pooled;
  if (config.mcmc.merge_chains)
    for (const auto& c : out.chains) pooled.push_back(&c);
  else
    pooled.push_back(&out.chains.front());
  out.summary = summarize(pooled, s.parameter_map());
  // per-chain acceptance is always reported, merged or not
  out.summary.chain_acceptance.clear();
  for (const auto& c : out.chains) out.summary.chain_acceptance.push_back(c.acceptance_rate());

  Eigen::VectorXd mean_coefficients = Eigen::VectorXd::Zero(s.prior->coefficient_count());
  Index count = 0;
  for (const Chain* c : pooled) {
    mean_coefficients += c->samples.colwise().sum().transpose();
    count += c->samples.rows();
  }
  mean_coefficients /= static_cast<double>(count);
  out.forward_at_mean = s.forward_at(out.summary.mean, mean_coefficients);

  const Index n = s.cloud.size();
  Index covered = 0;
  for (Index i = 0; i < n; ++i)
    covered += s.truth_parameter[i] >= out.summary.p025[i] && s.truth_parameter[i] <= out.summary.p975[i];
  out.coverage = static_cast<double>(covered) / static_cast<double>(n);
  out.forward_relative_error = (out.forward_at_mean - s.truth_solution).norm() / s.truth_solution.norm();
  for (const auto& comp : s.cloud.boundary_components) {
    double err = 0.0;
    for (Index i : comp.idx) err += std::abs(out.summary.mean[i] - s.truth_parameter[i]);
    out.boundary_abs_error.push_back(err / static_cast<double>(comp.idx.size()));
  }
  out.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return out;
}

namespace {

void write_manifest(const fs::path& path, const ExperimentConfig& config, const RunResult* result,
                    const std::vector<std::string>& artifacts, const std::string& status, const std::string& error,
                    double wall) {
  json m;
  m["tool"] = "mbip";
  m["version"] = kVersion;
  m["preset_name"] = config.name;
  m["status"] = status;
  if (!error.empty()) m["error"] = error;
  m["config"] = json::parse(config_json(config));
  std::ostringstream hash;
  hash << std::hex << config_hash(config);
  m["config_hash"] = "fnv1a64:" + hash.str();
  m["scale"] = config.scale;
  m["scaling_rule"] = config.scaling_rule.empty() ? "none (full scale)" : config.scaling_rule;
  json seeds = {{"data_seed", config.data_seed}};
  std::vector<std::uint64_t> chain_seeds;
  for (int c = 0; c < config.mcmc.chains; ++c) chain_seeds.push_back(config.mcmc.pcn.seed + static_cast<std::uint64_t>(c));
  seeds["chain_seeds"] = chain_seeds;
  m["seeds"] = seeds;
  m["seed"] = config.mcmc.pcn.seed;
  m["zeta"] = config.mcmc.pcn.zeta;
  m["J"] = config.mcmc.pcn.iterations;
  m["burn_in"] = config.mcmc.pcn.burn_in;
  if (result) {
    const auto& s = *result->setup;
    m["epsilon"] = s.epsilon;
    if (s.calibration) m["epsilon_slope"] = s.calibration->slope;
    m["acceptance_rate"] = result->summary.acceptance_rate;
    m["chain_acceptance"] = result->summary.chain_acceptance;
    json failures = json::array();
    for (const auto& c : result->chains) failures.push_back(c.failure_count);
    m["forward_failures"] = failures;
    m["merged_chains"] = config.mcmc.merge_chains;
    m["metrics"] = {{"coverage", result->coverage},
                    {"forward_relative_error", result->forward_relative_error},
                    {"boundary_abs_error", result->boundary_abs_error}};
    if (config.problem == Problem::heat) m["metrics"]["truth_fit_residual"] = s.truth_fit_residual;
  }
  m["artifacts"] = artifacts;
  m["wall_time_seconds"] = wall;
  const std::time_t now = std::time(nullptr);
  char stamp[32];
  std::strftime(stamp, sizeof(stamp), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
  m["timestamp"] = stamp;
  fs::create_directories(path.parent_path());
  std::ofstream(path) << m.dump(2) << '\n';
}

}  // namespace

RunResult run_experiment(const ExperimentConfig& config, const fs::path& run_dir) {
  const auto start = std::chrono::steady_clock::now();
  fs::create_directories(run_dir);
  std::vector<std::string> artifacts;
  auto elapsed = [&] { return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count(); };
  try {
    RunResult r = execute(config);
    const ExperimentSetup& s = *r.setup;
    auto emit = [&](const std::string& name) {
      artifacts.push_back(name);
      return run_dir / name;
    };
    io::write_cloud(emit("cloud.csv"), s.cloud);
    if (s.calibration) io::write_calibration(emit("eps_calibration.csv"), *s.calibration);
    io::write_spectrum(emit("prior_spectrum.csv"), s.prior->spectrum());
    io::write_observations(emit("observations.csv"), s.observations.obs_idx, s.observations.y);
    io::write_node_columns(emit("truth.csv"), {s.truth_parameter, s.truth_solution}, "field");
    io::write_chain(emit("chain.csv"), r.chains.front());
    io::write_potentials(emit("potentials.csv"), r.chains.front());
    if (r.chains.size() > 1) {
      for (std::size_t c = 0; c < r.chains.size(); ++c) {
        io::write_chain(emit("chain_" + std::to_string(c) + ".csv"), r.chains[c]);
        io::write_potentials(emit("potentials_" + std::to_string(c) + ".csv"), r.chains[c]);
      }
    }
    io::write_summary(emit("summary.csv"), r.summary);
    io::write_node_function(emit("forward_at_mean.csv"), r.forward_at_mean, "u");
    artifacts.push_back("manifest.json");
    write_manifest(run_dir / "manifest.json", config, &r, artifacts, "complete", "", elapsed());
    return r;
  } catch (const std::exception& e) {
    artifacts.push_back("manifest.json");
    write_manifest(run_dir / "manifest.json", config, nullptr, artifacts, artifacts.size() > 1 ? "partial" : "failed",
                   e.what(), elapsed());
    throw;
  }
}

fs::path default_output_root() {
  if (const char* env = std::getenv("MBIP_OUTPUT_ROOT")) return env;
  return "runs";
}

}  // namespace mbip
