#include "cflab/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <ostream>
#include <set>
#include <utility>
#include <vector>

#include "cflab/errors.hpp"
#include "cflab/format.hpp"
#include "cflab/rng.hpp"

namespace cflab {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// ---------------------------------------------------------------------------
// Config parsing.  Unknown keys are rejected so that typos cannot silently
// fall back to defaults.

void expect_object(const json& j, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + " must be an object");
}

void reject_unknown(const json& j, const std::string& where,
                    std::initializer_list<const char*> keys) {
  for (const auto& item : j.items()) {
    bool known = false;
    for (const char* k : keys) known = known || item.key() == k;
    if (!known) {
      throw ConfigError("unknown key '" + item.key() + "' in " + where);
    }
  }
}

double get_number(const json& j, const char* key, double fallback,
                  const std::string& where) {
  if (!j.contains(key)) return fallback;
  if (!j.at(key).is_number()) {
    throw ConfigError(where + "." + key + " must be a number");
  }
  return j.at(key).get<double>();
}

std::int64_t get_integer(const json& j, const char* key, std::int64_t fallback,
                         const std::string& where) {
  if (!j.contains(key)) return fallback;
  if (!j.at(key).is_number_integer()) {
    throw ConfigError(where + "." + key + " must be an integer");
  }
  return j.at(key).get<std::int64_t>();
}

std::string get_string(const json& j, const char* key,
                       const std::string& fallback, const std::string& where) {
  if (!j.contains(key)) return fallback;
  if (!j.at(key).is_string()) {
    throw ConfigError(where + "." + key + " must be a string");
  }
  return j.at(key).get<std::string>();
}

GroupSpec parse_group(const json& j, const std::string& where) {
  expect_object(j, where);
  std::string kind = get_string(j, "kind", "", where);
  if (kind == "free" || kind == "abelian") {
    reject_unknown(j, where, {"kind", "rank"});
    if (!j.contains("rank")) throw ConfigError(where + " needs a rank");
    int rank = static_cast<int>(get_integer(j, "rank", 0, where));
    return kind == "free" ? GroupSpec::free_group(rank)
                          : GroupSpec::abelian(rank);
  }
  if (kind == "cyclic") {
    reject_unknown(j, where, {"kind", "order"});
    if (!j.contains("order")) throw ConfigError(where + " needs an order");
    return GroupSpec::cyclic(static_cast<int>(get_integer(j, "order", 0, where)));
  }
  if (kind == "free_product" || kind == "direct_product") {
    reject_unknown(j, where, {"kind", "factors"});
    if (!j.contains("factors") || !j.at("factors").is_array()) {
      throw ConfigError(where + " needs a factors array");
    }
    std::vector<GroupSpec> factors;
    int i = 0;
    for (const auto& f : j.at("factors")) {
      factors.push_back(
          parse_group(f, where + ".factors[" + format_int(i++) + "]"));
    }
    return kind == "free_product" ? GroupSpec::free_product(std::move(factors))
                                  : GroupSpec::direct_product(std::move(factors));
  }
  throw ConfigError(where + ".kind must be one of free, abelian, cyclic, "
                            "free_product, direct_product");
}

json group_to_json(const GroupSpec& g) {
  json j;
  switch (g.kind) {
    case GroupSpec::Kind::Free:
      j["kind"] = "free";
      j["rank"] = g.rank;
      break;
    case GroupSpec::Kind::Abelian:
      j["kind"] = "abelian";
      j["rank"] = g.rank;
      break;
    case GroupSpec::Kind::Cyclic:
      j["kind"] = "cyclic";
      j["order"] = g.order;
      break;
    case GroupSpec::Kind::FreeProduct:
    case GroupSpec::Kind::DirectProduct:
      j["kind"] = g.kind == GroupSpec::Kind::FreeProduct ? "free_product"
                                                         : "direct_product";
      j["factors"] = json::array();
      for (const auto& f : g.factors) j["factors"].push_back(group_to_json(f));
      break;
  }
  return j;
}

AdmissibleFunction parse_floyd(const json& j) {
  expect_object(j, "floyd");
  reject_unknown(j, "floyd", {"kind", "parameter"});
  std::string kind = get_string(j, "kind", "geometric", "floyd");
  double param = get_number(j, "parameter", kind == "geometric" ? 0.5 : 1.0,
                            "floyd");
  try {
    if (kind == "geometric") return AdmissibleFunction::geometric(param);
    if (kind == "exponential") return AdmissibleFunction::exponential(param);
    if (kind == "power") return AdmissibleFunction::power(param);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("floyd.parameter: ") + e.what());
  }
  throw ConfigError("floyd.kind must be geometric, exponential or power");
}

FieldSpec::Kind parse_field_kind(const std::string& kind) {
  if (kind == "spike") return FieldSpec::Kind::Spike;
  if (kind == "subtree") return FieldSpec::Kind::Subtree;
  if (kind == "halfplane") return FieldSpec::Kind::Halfplane;
  if (kind == "random") return FieldSpec::Kind::Random;
  if (kind == "constant") return FieldSpec::Kind::Constant;
  throw ConfigError("field.kind must be spike, subtree, halfplane, random or "
                    "constant");
}

std::string field_kind_name(FieldSpec::Kind k) {
  switch (k) {
    case FieldSpec::Kind::Spike: return "spike";
    case FieldSpec::Kind::Subtree: return "subtree";
    case FieldSpec::Kind::Halfplane: return "halfplane";
    case FieldSpec::Kind::Random: return "random";
    case FieldSpec::Kind::Constant: return "constant";
  }
  return "?";
}

std::string floyd_kind_name(AdmissibleFunction::Kind k) {
  switch (k) {
    case AdmissibleFunction::Kind::Geometric: return "geometric";
    case AdmissibleFunction::Kind::Exponential: return "exponential";
    case AdmissibleFunction::Kind::Power: return "power";
  }
  return "?";
}

// ---------------------------------------------------------------------------
// Output plumbing.

struct RunContext {
  fs::path dir;
  json outputs = json::array();

  void write_csv(const std::string& name, const std::string& header,
                 const std::vector<std::string>& rows) {
    fs::path path = dir / name;
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot open " + path.string() + " for writing");
    out << header << '\n';
    for (const auto& r : rows) out << r << '\n';
    out.flush();
    if (!out) throw ConfigError("failed writing " + path.string());
    outputs.push_back(json{{"file", name},
                           {"rows", static_cast<std::int64_t>(rows.size())}});
  }
};

std::string csv_join(const std::vector<std::string>& cells) {
  std::string row;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) row += ',';
    row += cells[i];
  }
  return row;
}

std::size_t find_generator(const GroupProvider& g, const std::string& name) {
  if (name.empty()) return 0;
  for (std::size_t i = 0; i < g.generator_count(); ++i) {
    if (g.generator_name(i) == name) return i;
  }
  if (name.size() > 3 && name.ends_with("^-1")) {
    std::string base = name.substr(0, name.size() - 3);
    for (std::size_t i = 0; i < g.generator_count(); ++i) {
      if (g.generator_name(i) == base) return g.inverse_generator(i);
    }
  }
  std::string available;
  for (std::size_t i = 0; i < g.generator_count(); ++i) {
    if (i) available += ", ";
    available += g.generator_name(i);
  }
  throw ConfigError("unknown generator '" + name + "' (available: " +
                    available + ")");
}

std::int64_t ball_size_at(const Ball& ball, int r) {
  std::int64_t total = 0;
  for (int n = 0; n <= r; ++n) {
    total += static_cast<std::int64_t>(ball.sphere(n).size());
  }
  return total;
}

DeltaEstimate delta_at_radius(const Ball& ball, const GromovProductTable& t,
                              const ExperimentConfig& cfg, int r,
                              DeltaScan::Mode mode) {
  DeltaScan scan;
  scan.mode = mode;
  scan.samples = cfg.scale.delta_samples;
  scan.seed = cfg.sampling.seed;
  scan.exhaustive_cap = cfg.caps.exhaustive_delta;
  scan.vertex_limit = ball_size_at(ball, r);
  return estimate_delta(ball, t, scan);
}

// Resolved delta_hat and scale parameter for commands that need them.
std::pair<double, double> resolve_scale(const Ball& ball,
                                        const GromovProductTable& table,
                                        const ExperimentConfig& cfg) {
  int dr = std::min(cfg.scale.delta_radius, ball.radius());
  double delta_hat =
      cfg.scale.delta_hat
          ? *cfg.scale.delta_hat
          : delta_at_radius(ball, table, cfg, dr, cfg.scale.delta_mode)
                .delta_hat;
  double a = cfg.scale.a ? *cfg.scale.a
                         : choose_scale_parameter(delta_hat, cfg.scale.safety);
  if (!scale_condition_holds(delta_hat, a)) {
    throw ConfigError("scale parameter a = " + format_double(a) +
                      " violates e^{3 delta a} - 1 < sqrt(2) - 1 for "
                      "delta_hat = " + format_double(delta_hat));
  }
  return {delta_hat, a};
}

}  // namespace

// ---------------------------------------------------------------------------

ExperimentConfig parse_config(const json& doc) {
  expect_object(doc, "config");
  reject_unknown(doc, "config",
                 {"group", "radius", "p", "floyd", "scale", "solver",
                  "sampling", "caps", "field", "ray_generator", "out_dir"});
  if (!doc.contains("group")) throw ConfigError("config needs a group");

  ExperimentConfig cfg;
  cfg.group = parse_group(doc.at("group"), "group");

  std::int64_t radius = get_integer(doc, "radius", cfg.radius, "config");
  if (radius < 0 || radius > 64) {
    throw ConfigError("radius must lie in [0, 64], got " + format_int(radius));
  }
  cfg.radius = static_cast<int>(radius);

  cfg.p = get_number(doc, "p", cfg.p, "config");
  if (!(cfg.p > 0.0) || !std::isfinite(cfg.p)) {
    throw ConfigError("p must be a positive number");
  }

  if (doc.contains("floyd")) cfg.floyd = parse_floyd(doc.at("floyd"));

  if (doc.contains("scale")) {
    const json& s = doc.at("scale");
    expect_object(s, "scale");
    reject_unknown(s, "scale",
                   {"a", "delta_hat", "safety", "delta_radius", "delta_mode",
                    "delta_samples"});
    if (s.contains("a") && !s.at("a").is_null()) {
      double a = get_number(s, "a", 0.0, "scale");
      if (!(a > 0.0)) throw ConfigError("scale.a must be positive");
      cfg.scale.a = a;
    }
    if (s.contains("delta_hat") && !s.at("delta_hat").is_null()) {
      double dh = get_number(s, "delta_hat", 0.0, "scale");
      if (dh < 0.0) throw ConfigError("scale.delta_hat must be >= 0");
      cfg.scale.delta_hat = dh;
    }
    cfg.scale.safety = get_number(s, "safety", cfg.scale.safety, "scale");
    if (!(cfg.scale.safety > 0.0 && cfg.scale.safety < 1.0)) {
      throw ConfigError("scale.safety must lie in (0, 1)");
    }
    std::int64_t dr = get_integer(s, "delta_radius", cfg.scale.delta_radius,
                                  "scale");
    if (dr < 1 || dr > 64) throw ConfigError("scale.delta_radius out of range");
    cfg.scale.delta_radius = static_cast<int>(dr);
    std::string mode = get_string(s, "delta_mode", "exhaustive", "scale");
    if (mode == "exhaustive") {
      cfg.scale.delta_mode = DeltaScan::Mode::Exhaustive;
    } else if (mode == "sampled") {
      cfg.scale.delta_mode = DeltaScan::Mode::Sampled;
    } else {
      throw ConfigError("scale.delta_mode must be exhaustive or sampled");
    }
    cfg.scale.delta_samples = get_integer(s, "delta_samples",
                                          cfg.scale.delta_samples, "scale");
    if (cfg.scale.delta_samples < 1) {
      throw ConfigError("scale.delta_samples must be >= 1");
    }
  }

  if (doc.contains("solver")) {
    const json& s = doc.at("solver");
    expect_object(s, "solver");
    reject_unknown(s, "solver",
                   {"residual_tol", "subproblem_tol", "max_sweeps"});
    cfg.solver.residual_tol = get_number(s, "residual_tol",
                                         cfg.solver.residual_tol, "solver");
    cfg.solver.subproblem_tol = get_number(s, "subproblem_tol",
                                           cfg.solver.subproblem_tol, "solver");
    std::int64_t sweeps = get_integer(s, "max_sweeps", cfg.solver.max_sweeps,
                                      "solver");
    if (!(cfg.solver.residual_tol > 0.0) || !(cfg.solver.subproblem_tol > 0.0) ||
        sweeps < 1 || sweeps > 10'000'000) {
      throw ConfigError("solver tolerances must be positive and max_sweeps in "
                        "[1, 1e7]");
    }
    cfg.solver.max_sweeps = static_cast<int>(sweeps);
  }

  if (doc.contains("sampling")) {
    const json& s = doc.at("sampling");
    expect_object(s, "sampling");
    reject_unknown(s, "sampling", {"seed", "max_pairs"});
    if (s.contains("seed")) {
      if (!s.at("seed").is_number_integer() || s.at("seed").get<double>() < 0) {
        throw ConfigError("sampling.seed must be a nonnegative integer");
      }
      cfg.sampling.seed = s.at("seed").get<std::uint64_t>();
    }
    cfg.sampling.max_pairs = get_integer(s, "max_pairs",
                                         cfg.sampling.max_pairs, "sampling");
    if (cfg.sampling.max_pairs < 1) {
      throw ConfigError("sampling.max_pairs must be >= 1");
    }
  }

  if (doc.contains("caps")) {
    const json& c = doc.at("caps");
    expect_object(c, "caps");
    reject_unknown(c, "caps",
                   {"ball_vertices", "table_elements", "all_pairs",
                    "exhaustive_delta"});
    cfg.caps.ball_vertices = get_integer(c, "ball_vertices",
                                         cfg.caps.ball_vertices, "caps");
    cfg.caps.table_elements = get_integer(c, "table_elements",
                                          cfg.caps.table_elements, "caps");
    cfg.caps.all_pairs = get_integer(c, "all_pairs", cfg.caps.all_pairs,
                                     "caps");
    cfg.caps.exhaustive_delta = get_integer(c, "exhaustive_delta",
                                            cfg.caps.exhaustive_delta, "caps");
    if (cfg.caps.ball_vertices < 1 || cfg.caps.table_elements < 1 ||
        cfg.caps.all_pairs < 1 || cfg.caps.exhaustive_delta < 1) {
      throw ConfigError("caps must be positive");
    }
  }

  if (doc.contains("field")) {
    const json& f = doc.at("field");
    expect_object(f, "field");
    reject_unknown(f, "field",
                   {"kind", "generator", "coordinate", "low", "high", "value"});
    cfg.field.kind = parse_field_kind(get_string(f, "kind", "spike", "field"));
    cfg.field.generator = get_string(f, "generator", "", "field");
    cfg.field.coordinate = static_cast<int>(get_integer(f, "coordinate", 0,
                                                        "field"));
    cfg.field.low = get_number(f, "low", 0.0, "field");
    cfg.field.high = get_number(f, "high", 1.0, "field");
    cfg.field.value = get_number(f, "value", 0.0, "field");
    if (cfg.field.coordinate < 0) {
      throw ConfigError("field.coordinate must be >= 0");
    }
    if (!(cfg.field.low <= cfg.field.high)) {
      throw ConfigError("field.low must not exceed field.high");
    }
  }

  cfg.ray_generator = get_string(doc, "ray_generator", "", "config");
  cfg.out_dir = get_string(doc, "out_dir", ".", "config");
  return cfg;
}

json config_to_json(const ExperimentConfig& cfg) {
  json j;
  j["group"] = group_to_json(cfg.group);
  j["radius"] = cfg.radius;
  j["p"] = cfg.p;
  j["floyd"] = {{"kind", floyd_kind_name(cfg.floyd.kind)},
                {"parameter", cfg.floyd.parameter}};
  j["scale"] = {{"a", cfg.scale.a ? json(*cfg.scale.a) : json(nullptr)},
                {"delta_hat", cfg.scale.delta_hat ? json(*cfg.scale.delta_hat)
                                                  : json(nullptr)},
                {"safety", cfg.scale.safety},
                {"delta_radius", cfg.scale.delta_radius},
                {"delta_mode",
                 cfg.scale.delta_mode == DeltaScan::Mode::Exhaustive
                     ? "exhaustive"
                     : "sampled"},
                {"delta_samples", cfg.scale.delta_samples}};
  j["solver"] = {{"residual_tol", cfg.solver.residual_tol},
                 {"subproblem_tol", cfg.solver.subproblem_tol},
                 {"max_sweeps", cfg.solver.max_sweeps}};
  j["sampling"] = {{"seed", cfg.sampling.seed},
                   {"max_pairs", cfg.sampling.max_pairs}};
  j["caps"] = {{"ball_vertices", cfg.caps.ball_vertices},
               {"table_elements", cfg.caps.table_elements},
               {"all_pairs", cfg.caps.all_pairs},
               {"exhaustive_delta", cfg.caps.exhaustive_delta}};
  j["field"] = {{"kind", field_kind_name(cfg.field.kind)},
                {"generator", cfg.field.generator},
                {"coordinate", cfg.field.coordinate},
                {"low", cfg.field.low},
                {"high", cfg.field.high},
                {"value", cfg.field.value}};
  j["ray_generator"] = cfg.ray_generator;
  j["out_dir"] = cfg.out_dir;
  return j;
}

ScalarField make_field(const Ball& ball, const FieldSpec& spec,
                       std::uint64_t seed) {
  const GroupProvider& g = ball.group();
  ScalarField f = ScalarField::Zero(ball.size());
  switch (spec.kind) {
    case FieldSpec::Kind::Spike:
      f[0] = 1.0;
      break;
    case FieldSpec::Kind::Subtree: {
      if (ball.radius() < 1) {
        throw ConfigError("subtree field needs radius >= 1");
      }
      std::size_t gi = find_generator(g, spec.generator);
      VertexIndex root = ball.neighbor(0, gi);
      // First generator step on the BFS tree; mark its whole branch.
      std::vector<VertexIndex> branch(static_cast<std::size_t>(ball.size()),
                                      Ball::kOutside);
      for (VertexIndex v = 1; v < ball.size(); ++v) {
        VertexIndex parent = ball.parent(v);
        branch[v] = parent == 0 ? v : branch[parent];
        if (branch[v] == root) f[v] = 1.0;
      }
      break;
    }
    case FieldSpec::Kind::Halfplane: {
      if (g.spec().kind != GroupSpec::Kind::Abelian) {
        throw ConfigError("halfplane field requires an abelian group");
      }
      if (spec.coordinate >= g.spec().rank) {
        throw ConfigError("field.coordinate exceeds the group rank");
      }
      for (VertexIndex v = 0; v < ball.size(); ++v) {
        if (ball.element(v).code()[spec.coordinate] >= 1) f[v] = 1.0;
      }
      break;
    }
    case FieldSpec::Kind::Random: {
      SplitMix64 rng(seed);
      for (VertexIndex v = 0; v < ball.size(); ++v) {
        f[v] = spec.low + (spec.high - spec.low) * rng.uniform01();
      }
      break;
    }
    case FieldSpec::Kind::Constant:
      f.setConstant(spec.value);
      break;
  }
  return f;
}

InequalityCheck verify_inequality(const Ball& ball,
                                  const GromovProductTable& products,
                                  double a, double delta_hat,
                                  const SamplingPolicy& policy) {
  InequalityCheck out;
  out.a = a;
  out.delta_hat = delta_hat;
  out.lower_coefficient = 3.0 - 2.0 * std::exp(3.0 * delta_hat * a);

  const VertexIndex n = ball.size();
  Eigen::MatrixXd theta = chain_distance_matrix(products, a, n);
  AdmissibleFunction fa = AdmissibleFunction::exponential(a);

  // Sources: everything when the pair budget allows, else a seeded sample.
  std::vector<VertexIndex> sources(static_cast<std::size_t>(n));
  for (VertexIndex i = 0; i < n; ++i) sources[i] = i;
  std::int64_t total_pairs = static_cast<std::int64_t>(n) * (n - 1) / 2;
  if (total_pairs > policy.max_pairs) {
    std::int64_t want =
        std::max<std::int64_t>(1, policy.max_pairs / std::max<VertexIndex>(1, n - 1));
    SplitMix64 rng(policy.seed);
    for (std::int64_t i = 0; i < want; ++i) {
      std::int64_t j = i + static_cast<std::int64_t>(
                               rng.below(static_cast<std::uint64_t>(n - i)));
      std::swap(sources[i], sources[j]);
    }
    sources.resize(static_cast<std::size_t>(want));
  }
  std::vector<std::int64_t> source_rank(static_cast<std::size_t>(n), -1);
  for (std::size_t r = 0; r < sources.size(); ++r) source_rank[sources[r]] = r;

  constexpr double kRelTol = 1e-12;
  double min_ratio = std::numeric_limits<double>::infinity();
  double max_ratio = 0.0;
  double max_rel = -std::numeric_limits<double>::infinity();
  for (std::size_t r = 0; r < sources.size(); ++r) {
    VertexIndex i = sources[r];
    Eigen::VectorXd df = floyd_distances_from(ball, i, fa);
    for (VertexIndex j = 0; j < n; ++j) {
      if (j == i) continue;
      if (source_rank[j] >= 0 && source_rank[j] < static_cast<std::int64_t>(r)) {
        continue;
      }
      double upper = std::exp(-a * products.value(i, j));
      double lower = out.lower_coefficient * upper;
      double t = theta(i, j);
      ++out.pairs;
      if (t > upper * (1.0 + kRelTol)) ++out.upper_violations;
      if (t < lower * (1.0 - kRelTol)) ++out.lower_violations;
      max_rel = std::max(max_rel, (t - upper) / upper);
      double ratio = df[j] / t;
      min_ratio = std::min(min_ratio, ratio);
      max_ratio = std::max(max_ratio, ratio);
    }
  }
  out.max_upper_rel_error = max_rel;
  out.min_df_over_theta = min_ratio;
  out.max_df_over_theta = max_ratio;
  return out;
}

// ---------------------------------------------------------------------------
// Subcommands.

namespace {

std::shared_ptr<const GroupProvider> provider_for(const ExperimentConfig& cfg) {
  return make_provider(cfg.group);
}

Ball ball_for(const ExperimentConfig& cfg,
              std::shared_ptr<const GroupProvider> provider) {
  return build_ball(std::move(provider), cfg.radius, cfg.caps.ball_vertices);
}

json run_ball(const ExperimentConfig& cfg, RunContext& ctx) {
  auto provider = provider_for(cfg);
  Ball ball = ball_for(cfg, provider);
  std::vector<std::string> rows;
  std::int64_t boundary = 0;
  for (VertexIndex v = 0; v < ball.size(); ++v) {
    if (!ball.interior(v)) ++boundary;
    rows.push_back(csv_join({format_int(v), format_int(ball.length(v)),
                             provider->to_string(ball.element(v))}));
  }
  ctx.write_csv("ball.csv", "index,length,word", rows);
  return json{{"group", provider->describe()},
              {"vertices", ball.size()},
              {"boundary_vertices", boundary},
              {"radius", ball.radius()}};
}

json run_growth(const ExperimentConfig& cfg, RunContext& ctx) {
  auto provider = provider_for(cfg);
  Ball ball = ball_for(cfg, provider);
  GrowthHistogram h = growth_histogram(ball);
  auto series = provider->sphere_sizes(cfg.radius);
  for (int n = 0; n <= cfg.radius; ++n) {
    if (series[n] != h.sphere_sizes[n]) {
      throw std::logic_error("growth series disagrees with enumeration at n=" +
                             format_int(n));
    }
  }
  std::vector<std::string> rows;
  for (int n = 0; n <= cfg.radius; ++n) {
    rows.push_back(csv_join({format_int(n), format_int(h.sphere_sizes[n]),
                             format_int(h.ball_sizes[n])}));
  }
  ctx.write_csv("growth.csv", "n,sphere,ball", rows);
  json summary{{"group", provider->describe()},
               {"vertices", ball.size()},
               {"series_cross_check", "ok"}};
  if (h.last_ratio) summary["last_ratio"] = *h.last_ratio;
  if (h.last_root) summary["last_root"] = *h.last_root;
  return summary;
}

json run_gromov_delta(const ExperimentConfig& cfg, RunContext& ctx) {
  if (cfg.radius < 1) throw ConfigError("gromov-delta needs radius >= 1");
  auto provider = provider_for(cfg);
  Ball ball = ball_for(cfg, provider);
  GromovProductTable table(ball, cfg.caps.table_elements);
  std::vector<std::string> rows;
  double last = 0.0;
  for (int r = 1; r <= cfg.radius; ++r) {
    DeltaEstimate est = delta_at_radius(ball, table, cfg, r,
                                        cfg.scale.delta_mode);
    last = est.delta_hat;
    rows.push_back(csv_join(
        {format_int(r), format_double(est.delta_hat),
         format_int(est.triples_examined),
         provider->to_string(ball.element(est.witness[0])),
         provider->to_string(ball.element(est.witness[1])),
         provider->to_string(ball.element(est.witness[2]))}));
  }
  ctx.write_csv("gromov-delta.csv",
                "R,delta_hat,triples_examined,witness_x,witness_y,witness_z",
                rows);
  return json{{"group", provider->describe()}, {"delta_hat", last}};
}

json run_choose_a(const ExperimentConfig& cfg, RunContext& ctx) {
  auto provider = provider_for(cfg);
  int dr = std::min(cfg.scale.delta_radius, cfg.radius);
  if (dr < 1) throw ConfigError("choose-a needs radius >= 1");
  Ball ball = build_ball(provider, dr, cfg.caps.ball_vertices);
  GromovProductTable table(ball, cfg.caps.table_elements);
  auto [delta_hat, a] = resolve_scale(ball, table, cfg);
  double lhs = std::exp(3.0 * delta_hat * a) - 1.0;
  double rhs = std::sqrt(2.0) - 1.0;
  ctx.write_csv("choose-a.csv",
                "delta_radius,delta_hat,safety,a,condition_lhs,condition_rhs",
                {csv_join({format_int(dr), format_double(delta_hat),
                           format_double(cfg.scale.safety), format_double(a),
                           format_double(lhs), format_double(rhs)})});
  return json{{"group", provider->describe()},
              {"delta_hat", delta_hat},
              {"a", a}};
}

json run_floyd_diameter(const ExperimentConfig& cfg, RunContext& ctx) {
  auto provider = provider_for(cfg);
  Ball ball = ball_for(cfg, provider);
  std::vector<std::string> rows;
  for (int n = 0; n <= cfg.radius; ++n) {
    if (ball.sphere(n).empty()) break;  // finite group exhausted
    SphereDiameterStats st = sphere_floyd_diameter(ball, n, cfg.floyd,
                                                   cfg.sampling);
    rows.push_back(csv_join({format_int(n), format_double(st.max),
                             format_double(st.min_antipodal),
                             format_double(st.mean), format_int(st.pairs)}));
  }
  ctx.write_csv("floyd-diameter.csv", "R,max,min_antipodal,mean,pairs", rows);
  return json{{"group", provider->describe()},
              {"weight", cfg.floyd.describe()},
              {"rows", static_cast<std::int64_t>(rows.size())}};
}

json run_verify_inequality(const ExperimentConfig& cfg, RunContext& ctx) {
  if (cfg.radius < 2) throw ConfigError("verify-inequality needs radius >= 2");
  auto provider = provider_for(cfg);
  Ball ball = ball_for(cfg, provider);
  if (ball.size() > cfg.caps.all_pairs) {
    throw ResourceLimitError("ball of " + format_int(ball.size()) +
                             " vertices exceeds caps.all_pairs = " +
                             format_int(cfg.caps.all_pairs));
  }
  GromovProductTable table(ball, cfg.caps.table_elements);

  // The chain-metric comparison is only meaningful at hyperbolic-looking
  // scales; groups whose delta estimate keeps growing with the radius are
  // refused (the paper's inequality has no usable a for them).
  int r_lo = std::min(2, cfg.radius);
  int r_hi = std::min(4, cfg.radius);
  double d_lo = delta_at_radius(ball, table, cfg, r_lo,
                                DeltaScan::Mode::Exhaustive).delta_hat;
  double d_hi = delta_at_radius(ball, table, cfg, r_hi,
                                DeltaScan::Mode::Exhaustive).delta_hat;
  if (d_hi - d_lo >= 1.0) {
    throw ConfigError("delta estimate grows with the radius (" +
                      format_double(d_lo) + " at R=" + format_int(r_lo) +
                      " to " + format_double(d_hi) + " at R=" +
                      format_int(r_hi) +
                      "); group does not look hyperbolic, refusing");
  }

  auto [delta_hat, a] = resolve_scale(ball, table, cfg);
  InequalityCheck chk = verify_inequality(ball, table, a, delta_hat,
                                          cfg.sampling);
  ctx.write_csv(
      "verify-inequality.csv",
      "pairs,a,delta_hat,lower_coefficient,lower_violations,upper_violations,"
      "max_upper_rel_error,min_df_over_theta,max_df_over_theta",
      {csv_join({format_int(chk.pairs), format_double(chk.a),
                 format_double(chk.delta_hat),
                 format_double(chk.lower_coefficient),
                 format_int(chk.lower_violations),
                 format_int(chk.upper_violations),
                 format_double(chk.max_upper_rel_error),
                 format_double(chk.min_df_over_theta),
                 format_double(chk.max_df_over_theta)})});
  return json{{"group", provider->describe()},
              {"pairs", chk.pairs},
              {"a", chk.a},
              {"delta_hat", chk.delta_hat},
              {"lower_violations", chk.lower_violations},
              {"upper_violations", chk.upper_violations}};
}

json run_witness(const ExperimentConfig& cfg, RunContext& ctx) {
  if (cfg.radius < 1) throw ConfigError("witness needs radius >= 1");
  auto provider = provider_for(cfg);
  Ball ball = ball_for(cfg, provider);
  std::size_t gi = find_generator(*provider, cfg.ray_generator);
  std::vector<std::string> rows;
  double last_ratio = 0.0, max_ratio = 0.0;
  for (int r = 1; r <= cfg.radius; ++r) {
    Ball sub = restrict_ball(ball, r);
    WitnessField wf = witness_field(sub, gi, cfg.floyd);
    WitnessEnergyReport rep = witness_energy_report(sub, wf, cfg.p);
    last_ratio = rep.ratio;
    max_ratio = std::max(max_ratio, rep.ratio);
    rows.push_back(csv_join({format_int(r), format_double(cfg.p),
                             format_double(rep.energy),
                             format_double(rep.bound),
                             format_double(rep.ratio)}));
  }
  ctx.write_csv("witness.csv", "R,p,energy,bound,ratio", rows);
  return json{{"group", provider->describe()},
              {"ray_generator", provider->generator_name(gi)},
              {"last_ratio", last_ratio},
              {"max_ratio", max_ratio}};
}

json run_summability(const ExperimentConfig& cfg, RunContext& ctx) {
  auto provider = provider_for(cfg);
  auto sizes = provider->sphere_sizes(cfg.radius);
  std::vector<std::string> rows;
  SummabilityReport last;
  for (int r = 0; r <= cfg.radius; ++r) {
    last = summability(
        std::span<const std::int64_t>(sizes.data(), static_cast<std::size_t>(r) + 1),
        cfg.floyd, cfg.p);
    rows.push_back(csv_join({format_int(r),
                             format_double(last.partial_sums[r]),
                             format_double(last.shell_terms[r]),
                             format_double(last.shell_ratio),
                             to_string(last.verdict)}));
  }
  ctx.write_csv("summability.csv", "R,partial_sum,shell_term,shell_ratio,verdict",
                rows);
  json summary{{"group", provider->describe()},
               {"weight", cfg.floyd.describe()},
               {"p", cfg.p},
               {"verdict", to_string(last.verdict)}};
  if (std::isfinite(last.extrapolated_limit)) {
    summary["extrapolated_limit"] = last.extrapolated_limit;
  }
  return summary;
}

void write_solution_csv(RunContext& ctx, const std::string& name,
                        const Ball& ball, const ScalarField& h) {
  std::vector<std::string> rows;
  for (VertexIndex v = 0; v < ball.size(); ++v) {
    rows.push_back(csv_join({format_int(v), format_int(ball.length(v)),
                             ball.group().to_string(ball.element(v)),
                             format_double(h[v])}));
  }
  ctx.write_csv(name, "index,length,word,value", rows);
}

void write_trace_csv(RunContext& ctx, const std::string& name,
                     const SolverReport& rep) {
  std::vector<std::string> rows;
  for (std::size_t i = 0; i < rep.energy_trace.size(); ++i) {
    rows.push_back(csv_join({format_int(static_cast<std::int64_t>(i) + 1),
                             format_double(rep.energy_trace[i]),
                             format_double(rep.residual_trace[i])}));
  }
  ctx.write_csv(name, "sweep,energy,residual", rows);
}

json run_solve_dirichlet(const ExperimentConfig& cfg, RunContext& ctx,
                         int& exit_code) {
  auto provider = provider_for(cfg);
  Ball ball = ball_for(cfg, provider);
  ScalarField field = make_field(ball, cfg.field, cfg.sampling.seed);
  std::map<VertexIndex, double> boundary;
  for (VertexIndex v : ball.sphere(ball.radius())) boundary[v] = field[v];
  DirichletSolution sol = solve_dirichlet(ball, boundary, cfg.p, cfg.solver);
  write_trace_csv(ctx, "solve-dirichlet.csv", sol.report);
  write_solution_csv(ctx, "solution.csv", ball, sol.field);
  if (!sol.report.converged) exit_code = kExitNoConvergence;
  return json{{"group", provider->describe()},
              {"p", cfg.p},
              {"converged", sol.report.converged},
              {"sweeps", sol.report.sweeps},
              {"final_residual", sol.report.final_residual},
              {"final_energy", sol.report.final_energy},
              {"value_at_identity", sol.field[0]}};
}

json run_decompose(const ExperimentConfig& cfg, RunContext& ctx,
                   int& exit_code) {
  auto provider = provider_for(cfg);
  Ball ball = ball_for(cfg, provider);
  ScalarField f = make_field(ball, cfg.field, cfg.sampling.seed);
  Decomposition dec = decompose(ball, f, cfg.p, cfg.solver);
  double ef = dirichlet_energy(ball, f, cfg.p);
  double eh = dirichlet_energy(ball, dec.harmonic_part, cfg.p);
  double eu = dirichlet_energy(ball, dec.lp_part, cfg.p);
  ctx.write_csv(
      "decompose.csv",
      "R,p,energy_f,energy_h,energy_u,h_at_identity,converged",
      {csv_join({format_int(ball.radius()), format_double(cfg.p),
                 format_double(ef), format_double(eh), format_double(eu),
                 format_double(dec.harmonic_part[0]),
                 dec.report.converged ? "true" : "false"})});
  std::vector<std::string> rows;
  for (VertexIndex v = 0; v < ball.size(); ++v) {
    rows.push_back(csv_join({format_int(v), format_int(ball.length(v)),
                             provider->to_string(ball.element(v)),
                             format_double(f[v]),
                             format_double(dec.harmonic_part[v]),
                             format_double(dec.lp_part[v])}));
  }
  ctx.write_csv("decompose-fields.csv", "index,length,word,f,h,u", rows);
  if (!dec.report.converged) exit_code = kExitNoConvergence;
  return json{{"group", provider->describe()},
              {"p", cfg.p},
              {"converged", dec.report.converged},
              {"sweeps", dec.report.sweeps},
              {"energy_f", ef},
              {"energy_h", eh},
              {"energy_u", eu},
              {"h_at_identity", dec.harmonic_part[0]}};
}

const std::set<std::string>& command_set() {
  static const std::set<std::string> commands{
      "ball",          "growth",     "gromov-delta",      "choose-a",
      "floyd-diameter", "verify-inequality", "witness",   "summability",
      "solve-dirichlet", "decompose"};
  return commands;
}

void report_error(std::ostream& err, const char* kind,
                  const std::string& message) {
  json j{{"error", kind}, {"message", message}};
  err << j.dump() << '\n';
}

}  // namespace

bool is_known_command(const std::string& command) {
  return command_set().count(command) > 0;
}

int run_command(const std::string& command, const ExperimentConfig& cfg,
                std::ostream& out, std::ostream& err) {
  int exit_code = kExitOk;
  const auto started = std::chrono::steady_clock::now();
  try {
    if (!is_known_command(command)) {
      throw ConfigError("unknown command '" + command + "'");
    }
    RunContext ctx;
    ctx.dir = cfg.out_dir;
    std::error_code ec;
    fs::create_directories(ctx.dir, ec);
    if (ec) {
      throw ConfigError("cannot create output directory " + ctx.dir.string() +
                        ": " + ec.message());
    }

    json summary;
    if (command == "ball") {
      summary = run_ball(cfg, ctx);
    } else if (command == "growth") {
      summary = run_growth(cfg, ctx);
    } else if (command == "gromov-delta") {
      summary = run_gromov_delta(cfg, ctx);
    } else if (command == "choose-a") {
      summary = run_choose_a(cfg, ctx);
    } else if (command == "floyd-diameter") {
      summary = run_floyd_diameter(cfg, ctx);
    } else if (command == "verify-inequality") {
      summary = run_verify_inequality(cfg, ctx);
    } else if (command == "witness") {
      summary = run_witness(cfg, ctx);
    } else if (command == "summability") {
      summary = run_summability(cfg, ctx);
    } else if (command == "solve-dirichlet") {
      summary = run_solve_dirichlet(cfg, ctx, exit_code);
    } else if (command == "decompose") {
      summary = run_decompose(cfg, ctx, exit_code);
    }

    const double elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                      started)
            .count();
    json manifest{{"tool", kToolName},
                  {"version", kToolVersion},
                  {"command", command},
                  {"config", config_to_json(cfg)},
                  {"elapsed_seconds", elapsed},
                  {"outputs", ctx.outputs},
                  {"summary", summary}};
    fs::path mpath = ctx.dir / "manifest.json";
    std::ofstream mout(mpath, std::ios::binary);
    if (!mout) throw ConfigError("cannot write " + mpath.string());
    mout << manifest.dump(2) << '\n';

    out << command << ": ";
    for (const auto& o : ctx.outputs) {
      out << o.at("file").get<std::string>() << " (" << o.at("rows")
          << " rows) ";
    }
    out << "-> " << ctx.dir.string() << '\n';
    if (exit_code == kExitNoConvergence) {
      report_error(err, "no_convergence",
                   "solver did not reach its tolerances; outputs record the "
                   "partial state");
    }
    return exit_code;
  } catch (const ConfigError& e) {
    report_error(err, "config", e.what());
    return kExitConfig;
  } catch (const std::invalid_argument& e) {
    report_error(err, "config", e.what());
    return kExitConfig;
  } catch (const std::out_of_range& e) {
    report_error(err, "config", e.what());
    return kExitConfig;
  } catch (const ResourceLimitError& e) {
    report_error(err, "resource", e.what());
    return kExitResource;
  } catch (const std::bad_alloc&) {
    report_error(err, "resource", "out of memory");
    return kExitResource;
  } catch (const std::exception& e) {
    report_error(err, "internal", e.what());
    return 70;
  }
}

}  // namespace cflab
