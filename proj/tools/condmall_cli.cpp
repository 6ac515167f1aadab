#include <algorithm>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "condmall/error.hpp"
#include "condmall/fixtures.hpp"
#include "condmall/glauber.hpp"
#include "condmall/hypergraph.hpp"
#include "condmall/model_io.hpp"
#include "condmall/parallel.hpp"
#include "condmall/suites.hpp"
#include "condmall/version.hpp"

namespace {

using nlohmann::json;
using namespace condmall;

constexpr int kExitPass = 0;
constexpr int kExitUsage = 1;
constexpr int kExitFail = 2;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Common {
  std::uint64_t seed = 1;
  unsigned workers = 1;
  std::string out;
  std::string format = "json";
  std::string config;
};

// Output of one subcommand: a report plus an optional experiment table.
struct Result {
  SuiteReport report;
  json parameters = json::object();
  std::vector<std::string> csv_header;
  std::vector<std::vector<std::string>> csv_rows;
  json rows = json::array();
};

std::string fmt(double x) {
  std::ostringstream os;
  os.precision(17);
  os << x;
  return os.str();
}

void add_common(CLI::App* sub, Common& c) {
  sub->add_option("--seed", c.seed, "root seed");
  sub->add_option("--workers", c.workers, "worker threads (results do not depend on this)")
      ->check(CLI::PositiveNumber);
  sub->add_option("--out", c.out, "write output here instead of stdout");
  sub->add_option("--format", c.format, "json or csv")->check(CLI::IsMember({"json", "csv"}));
  sub->add_option("--config", c.config, "JSON config; explicit flags take precedence");
}

void check_file(const std::string& path, const std::string& what) {
  if (!path.empty() && !std::filesystem::is_regular_file(path)) {
    throw UsageError(what + " not found: " + path);
  }
}

void check_writable(const std::string& path, const std::string& what) {
  if (path.empty()) return;
  auto parent = std::filesystem::path(path).parent_path();
  if (!parent.empty() && !std::filesystem::is_directory(parent)) {
    throw UsageError(what + " directory does not exist: " + parent.string());
  }
}

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw UsageError("cannot parse " + path + ": " + e.what());
  }
}

// Config values become flags placed before the user's own, so with TakeLast the
// command line wins.
std::vector<std::string> config_to_args(const json& j) {
  std::vector<std::string> args;
  auto emit = [&args](const std::string& key, const json& v) {
    if (v.is_boolean()) {
      if (v.get<bool>()) args.push_back("--" + key);
      return;
    }
    args.push_back("--" + key);
    if (v.is_array()) {
      std::string joined;
      for (const auto& x : v) {
        if (!joined.empty()) joined += ',';
        joined += x.is_string() ? x.get<std::string>() : x.dump();
      }
      args.push_back(joined);
    } else {
      args.push_back(v.is_string() ? v.get<std::string>() : v.dump());
    }
  };
  for (const auto& [key, v] : j.items()) {
    if (key == "command") continue;
    if (key == "params") {
      if (!v.is_object()) throw UsageError("config \"params\" must be an object");
      for (const auto& [k, x] : v.items()) emit(k, x);
    } else {
      emit(key, v);
    }
  }
  return args;
}

bool is_diagnosis(ErrorCode code) {
  switch (code) {
    case ErrorCode::ZeroVariance:
    case ErrorCode::DegenerateVariance:
    case ErrorCode::ConditionFailed:
    case ErrorCode::NotStandardized:
    case ErrorCode::NotCentered:
    case ErrorCode::NotPureChaos:
    case ErrorCode::NotHomogeneous:
    case ErrorCode::NonProductForm:
    case ErrorCode::EmptyFamily:
      return true;
    default:
      return false;
  }
}

std::vector<std::string> check_header() { return {"name", "value", "relation", "threshold", "pass"}; }

void fill_check_table(Result& r) {
  if (!r.csv_header.empty()) return;
  r.csv_header = check_header();
  for (const auto& c : r.report.checks) {
    std::string name = c.name;
    std::replace(name.begin(), name.end(), ',', ';');
    std::string th = c.relation == "in" ? fmt(c.threshold) + ";" + fmt(c.threshold_hi) : fmt(c.threshold);
    r.csv_rows.push_back({"\"" + name + "\"", fmt(c.value), c.relation, th, c.pass ? "true" : "false"});
  }
}

// ---- subcommands ----

struct OperatorsArgs {
  std::size_t models = 100;
  RandomModelLimits limits{};
  double tolerance = 1e-12;
};

Result run_operators(const OperatorsArgs& a, const Common& c) {
  OperatorSuiteOptions o;
  o.models = a.models;
  o.seed = c.seed;
  o.limits = a.limits;
  o.tolerance = a.tolerance;
  Result r{operator_suite(o)};
  r.parameters = {{"models", a.models}, {"tolerance", a.tolerance},
                  {"max_components", a.limits.max_components}, {"max_values", a.limits.max_values},
                  {"max_latent", a.limits.max_latent}};
  return r;
}

struct ChaosArgs {
  std::size_t models = 100;
  RandomModelLimits limits{};
  double tolerance = 1e-10;
  std::string model;
  std::string functional;
};

Result run_chaos(const ChaosArgs& a, const Common& c) {
  Result r;
  if (!a.model.empty()) {
    auto model = load_model_file(a.model);
    Functional f = a.functional.empty()
                       ? Functional::from_cells(model,
                                                [&](Eigen::Index, const std::vector<int>& d) {
                                                  double sum = 0.0;
                                                  for (std::size_t i = 0; i < d.size(); ++i) sum += model->value(i, d[i]);
                                                  return sum;
                                                })
                       : functional_from_json(model, read_json_file(a.functional));
    r.report = chaos_report(f, a.tolerance);
    r.parameters = {{"model", a.model}, {"functional", a.functional.empty() ? json("sum") : json(a.functional)},
                    {"tolerance", a.tolerance}};
    return r;
  }
  ChaosSuiteOptions o;
  o.models = a.models;
  o.seed = c.seed;
  o.limits = a.limits;
  o.tolerance = a.tolerance;
  r.report = chaos_suite(o);
  r.parameters = {{"models", a.models}, {"tolerance", a.tolerance}};
  return r;
}

struct GlauberArgs {
  std::size_t paths = 100000;
  std::vector<double> times{0.5, 1.0, 2.0};
  double ergodic_time = 20.0;
  double se = 4.0;
  std::string dump;
  std::size_t dump_count = 10;
};

Result run_glauber(const GlauberArgs& a, const Common& c) {
  GlauberSuiteOptions o;
  o.paths = a.paths;
  o.times = a.times;
  o.ergodic_time = a.ergodic_time;
  o.se_multiplier = a.se;
  o.seed = c.seed;
  o.workers = c.workers;
  Result r{glauber_suite(o)};
  r.parameters = {{"paths", a.paths}, {"times", a.times}, {"ergodic_time", a.ergodic_time},
                  {"se_multiplier", a.se}};
  if (!a.dump.empty()) {
    auto model = cm1_model();
    const double horizon = *std::max_element(a.times.begin(), a.times.end());
    RandomStream root = RandomStream(c.seed).split(0xd0);
    std::ofstream out(a.dump);
    if (!out) throw UsageError("cannot write " + a.dump);
    for (std::size_t k = 0; k < a.dump_count; ++k) {
      RandomStream rng = root.split(k);
      auto start = model->sample(rng);
      out << path_to_json(*model, simulate_path(*model, start.latent, start.digits, horizon, rng)).dump() << '\n';
    }
    r.parameters["dump_paths"] = a.dump;
    r.parameters["dump_count"] = a.dump_count;
  }
  return r;
}

struct ConcentrationArgs {
  std::size_t pairs = 100;
  std::size_t mcdiarmid = 20;
  std::vector<double> thresholds{0.5, 1.0, 2.0, 3.0};
};

Result run_concentration(const ConcentrationArgs& a, const Common& c) {
  ConcentrationSuiteOptions o;
  o.pairs = a.pairs;
  o.mcdiarmid_functionals = a.mcdiarmid;
  o.thresholds = a.thresholds;
  o.seed = c.seed;
  Result r{concentration_suite(o)};
  r.parameters = {{"pairs", a.pairs}, {"mcdiarmid", a.mcdiarmid}, {"thresholds", a.thresholds}};
  return r;
}

struct CltArgs {
  std::vector<std::size_t> ns{64, 256, 1024};
  std::vector<std::size_t> slope_ns{64, 256, 1024, 4096};
  std::vector<double> zs{0.3, 0.5, 0.7};
  std::vector<double> probs{1.0 / 3, 1.0 / 3, 1.0 / 3};
  std::size_t samples = 200000;
  bool no_slope = false;
};

Result run_clt(const CltArgs& a, const Common& c) {
  CltBernoulliSuiteOptions o;
  o.ns = a.ns;
  o.slope_ns = a.no_slope ? std::vector<std::size_t>{} : a.slope_ns;
  o.zs = a.zs;
  o.probs = a.probs;
  o.samples = a.samples;
  o.seed = c.seed;
  o.workers = c.workers;
  std::vector<CltRow> rows;
  Result r{clt_bernoulli_suite(o, &rows)};
  r.parameters = {{"n", a.ns}, {"slope_n", o.slope_ns}, {"zs", a.zs}, {"probs", a.probs}, {"samples", a.samples}};
  r.csv_header = {"n", "samples", "seed", "dw_empirical", "bound"};
  for (const auto& row : rows) {
    r.csv_rows.push_back({std::to_string(row.n), std::to_string(row.samples), std::to_string(row.seed),
                          fmt(row.dw_empirical), fmt(row.bound)});
    r.rows.push_back({{"n", row.n}, {"samples", row.samples}, {"seed", row.seed},
                      {"dw_empirical", row.dw_empirical}, {"bound", row.bound}});
  }
  return r;
}

struct WassArgs {
  std::size_t functionals = 50;
  RandomModelLimits limits{8, 3, 3, 1, 2};
};

Result run_wass(const WassArgs& a, const Common& c) {
  WassersteinSuiteOptions o;
  o.functionals = a.functionals;
  o.limits = a.limits;
  o.seed = c.seed;
  Result r{wasserstein_suite(o)};
  r.parameters = {{"functionals", a.functionals}, {"max_components", a.limits.max_components}};
  return r;
}

struct ChaosStatArgs {
  std::size_t functionals = 50;
  std::size_t max_degree = 3;
};

Result run_fourth(const ChaosStatArgs& a, const Common& c) {
  FourthMomentSuiteOptions o;
  o.functionals = a.functionals;
  o.max_degree = a.max_degree;
  o.seed = c.seed;
  o.workers = c.workers;
  Result r{fourth_moment_suite(o)};
  r.parameters = {{"functionals", a.functionals}, {"max_degree", a.max_degree}};
  return r;
}

Result run_dejong(const ChaosStatArgs& a, const Common& c) {
  DejongSuiteOptions o;
  o.functionals = a.functionals;
  o.max_degree = a.max_degree;
  o.seed = c.seed;
  o.workers = c.workers;
  Result r{dejong_suite(o)};
  r.parameters = {{"functionals", a.functionals}, {"max_degree", a.max_degree}};
  return r;
}

struct MotifArgs {
  std::string mode = "suite";
  std::string motif = "single";
  std::string model = "G3";
  std::vector<std::size_t> ns{10, 20, 40};
  std::vector<double> ps{0.3};
  std::vector<double> qs{1.0};
  std::size_t samples = 20000;
  std::string centering = "unconditional";
  double ratio_spread = 3.0;
  double budget = 2e10;
  std::size_t identity_samples = 1000;
  std::size_t moment_samples = 10000;
  std::size_t brute_force_samples = 100;
};

Motif resolve_motif(const std::string& s) {
  for (const auto& m : motif_library()) {
    if (m.id() == s) return m;
  }
  check_file(s, "motif file");
  return Motif::from_json(read_json_file(s));
}

std::vector<double> broadcast(const std::vector<double>& v, std::size_t n, const std::string& name) {
  if (v.size() == n) return v;
  if (v.size() == 1) return std::vector<double>(n, v[0]);
  throw UsageError("--" + name + " needs 1 or " + std::to_string(n) + " values");
}

void motif_rows(Result& r, const std::vector<MotifCltRow>& rows) {
  std::string header(kMotifCsvHeader);
  std::stringstream hs(header);
  for (std::string f; std::getline(hs, f, ',');) r.csv_header.push_back(f);
  for (const auto& row : rows) {
    std::vector<std::string> cells;
    std::stringstream ls(to_csv_line(row));
    for (std::string f; std::getline(ls, f, ',');) cells.push_back(f);
    r.csv_rows.push_back(cells);
    r.rows.push_back(to_json(row));
  }
}

Result run_motif(const MotifArgs& a, const Common& c) {
  Result r;
  if (a.mode == "suite") {
    HypergraphSuiteOptions o;
    o.identity_samples = a.identity_samples;
    o.moment_samples = a.moment_samples;
    o.brute_force_samples = a.brute_force_samples;
    o.experiment_ns = a.ns;
    o.experiment_p = a.ps.front();
    o.experiment_samples = a.samples;
    o.ratio_spread = a.ratio_spread;
    o.seed = c.seed;
    o.workers = c.workers;
    std::vector<MotifCltRow> rows;
    r.report = hypergraph_suite(o, &rows);
    r.parameters = {{"mode", a.mode}, {"n", a.ns}, {"p", a.ps.front()}, {"samples", a.samples},
                    {"ratio_spread", a.ratio_spread}, {"identity_samples", a.identity_samples},
                    {"moment_samples", a.moment_samples}, {"brute_force_samples", a.brute_force_samples}};
    motif_rows(r, rows);
    return r;
  }
  Motif motif = resolve_motif(a.motif);
  MotifCltConfig cfg;
  try {
    cfg.model = hypergraph_model_from_string(a.model);
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
  cfg.centering = a.centering == "conditional" ? Centering::Conditional : Centering::Unconditional;
  cfg.samples = a.samples;
  cfg.seed = c.seed;
  cfg.workers = c.workers;
  cfg.budget = a.budget;
  auto ps = broadcast(a.ps, a.ns.size(), "p");
  auto qs = broadcast(a.qs, a.ns.size(), "q");
  std::vector<MotifScheduleEntry> schedule;
  for (std::size_t i = 0; i < a.ns.size(); ++i) schedule.push_back({a.ns[i], ps[i], qs[i]});
  auto rows = clt_experiment(motif, schedule, cfg);

  SuiteReport& rep = r.report;
  rep.suite = "hypergraph-motif";
  bool decreasing = true;
  double lo = rows.front().ratio, hi = rows.front().ratio;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (i > 0) decreasing = decreasing && rows[i].dw_empirical < rows[i - 1].dw_empirical;
    lo = std::min(lo, rows[i].ratio);
    hi = std::max(hi, rows[i].ratio);
  }
  rep.require("d_W decreasing in n", decreasing);
  rep.less("max ratio / min ratio", hi / lo, a.ratio_spread);
  rep.details = {{"motif", motif.to_json()}, {"rate_relaxed", rows.front().rate_relaxed}};
  r.parameters = {{"mode", a.mode}, {"motif", motif.id()}, {"model", a.model}, {"n", a.ns}, {"p", ps},
                  {"q", qs}, {"samples", a.samples}, {"centering", a.centering},
                  {"ratio_spread", a.ratio_spread}, {"budget", a.budget},
                  {"rate_relaxed", rows.front().rate_relaxed}};
  motif_rows(r, rows);
  return r;
}

void add_limits(CLI::App* sub, RandomModelLimits& l) {
  sub->add_option("--max-components", l.max_components, "largest random model");
  sub->add_option("--max-values", l.max_values, "largest value alphabet");
  sub->add_option("--max-latent", l.max_latent, "largest latent alphabet");
}

std::string joined_usage(const CLI::App& app) { return app.help(); }

void write_output(const std::string& text, const std::string& path) {
  if (path.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream out(path);
  if (!out) throw UsageError("cannot write " + path);
  out << text;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Checks and experiments for conditional Malliavin calculus on finite product spaces."};
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kVersion));

  Common common;
  OperatorsArgs ops;
  ChaosArgs chaos;
  GlauberArgs glauber;
  ConcentrationArgs conc;
  CltArgs clt;
  WassArgs wass;
  ChaosStatArgs fourth, dejong;
  MotifArgs motif;

  auto* s_ops = app.add_subcommand("verify-operators", "gradient, divergence and integration-by-parts identities");
  s_ops->add_option("--models", ops.models, "random models");
  s_ops->add_option("--tolerance", ops.tolerance, "max allowed residual");
  add_limits(s_ops, ops.limits);

  auto* s_chaos = app.add_subcommand("chaos", "chaos decomposition invariants");
  s_chaos->add_option("--models", chaos.models, "random models");
  s_chaos->add_option("--tolerance", chaos.tolerance, "max allowed residual");
  s_chaos->add_option("--model", chaos.model, "model JSON; reports a single functional");
  s_chaos->add_option("--functional", chaos.functional, "functional JSON (default: sum of coordinates)");
  add_limits(s_chaos, chaos.limits);

  auto* s_gl = app.add_subcommand("glauber", "Monte Carlo semigroup against the spectral value");
  s_gl->add_option("--paths", glauber.paths, "paths per start cell");
  s_gl->add_option("--t", glauber.times, "times")->delimiter(',');
  s_gl->add_option("--ergodic-t", glauber.ergodic_time, "large time for the ergodic limit");
  s_gl->add_option("--se", glauber.se, "allowed standard errors");
  s_gl->add_option("--dump-paths", glauber.dump, "write sample paths as JSON lines");
  s_gl->add_option("--dump-count", glauber.dump_count, "paths to dump");

  auto* s_conc = app.add_subcommand("concentration", "Efron-Stein and McDiarmid checks");
  s_conc->add_option("--pairs", conc.pairs, "model/functional pairs");
  s_conc->add_option("--mcdiarmid", conc.mcdiarmid, "functionals for the tail check");
  s_conc->add_option("--thresholds", conc.thresholds, "tail thresholds")->delimiter(',');

  auto* s_clt = app.add_subcommand("clt-bernoulli", "conditionally Bernoulli sums");
  s_clt->add_option("--n", clt.ns, "sizes")->delimiter(',');
  s_clt->add_option("--slope-n", clt.slope_ns, "sizes for the log-log slope")->delimiter(',');
  s_clt->add_flag("--no-slope", clt.no_slope, "skip the slope fit");
  s_clt->add_option("--zs", clt.zs, "latent success probabilities")->delimiter(',');
  s_clt->add_option("--probs", clt.probs, "latent law")->delimiter(',');
  s_clt->add_option("--samples", clt.samples, "samples per size");

  auto* s_wass = app.add_subcommand("wass-bounds", "W1 bound against the exact distance");
  s_wass->add_option("--functionals", wass.functionals, "random functionals");
  s_wass->add_option("--max-components", wass.limits.max_components, "largest random model");

  auto* s_fourth = app.add_subcommand("fourth-moment", "fourth moment bound and Hermite check");
  s_fourth->add_option("--functionals", fourth.functionals, "random functionals");
  s_fourth->add_option("--max-degree", fourth.max_degree, "largest chaos order");

  auto* s_dj = app.add_subcommand("dejong", "de Jong quantities and conditions");
  s_dj->add_option("--functionals", dejong.functionals, "random functionals");
  s_dj->add_option("--max-degree", dejong.max_degree, "largest chaos order");

  auto* s_mo = app.add_subcommand("hypergraph-motif", "motif counts in random 3-uniform hypergraphs");
  s_mo->add_option("--mode", motif.mode, "suite or experiment")->check(CLI::IsMember({"suite", "experiment"}));
  s_mo->add_option("--motif", motif.motif, "library id or motif JSON file");
  s_mo->add_option("--model", motif.model, "G3 or T3")->check(CLI::IsMember({"G3", "T3"}));
  s_mo->add_option("--n", motif.ns, "sizes")->delimiter(',');
  s_mo->add_option("--p", motif.ps, "hyperedge probability, one or per size")->delimiter(',');
  s_mo->add_option("--q", motif.qs, "latent edge probability, one or per size")->delimiter(',');
  s_mo->add_option("--samples", motif.samples, "samples per size");
  s_mo->add_option("--centering", motif.centering, "unconditional or conditional")
      ->check(CLI::IsMember({"unconditional", "conditional"}));
  s_mo->add_option("--ratio-spread", motif.ratio_spread, "allowed max/min of d_W / rate");
  s_mo->add_option("--budget", motif.budget, "work cap per size");
  s_mo->add_option("--identity-samples", motif.identity_samples, "suite: decomposition samples");
  s_mo->add_option("--moment-samples", motif.moment_samples, "suite: moment samples");
  s_mo->add_option("--brute-force-samples", motif.brute_force_samples, "suite: counting samples");

  for (auto* sub : app.get_subcommands([](const CLI::App*) { return true; })) add_common(sub, common);

  std::vector<std::string> args(argv + 1, argv + argc);
  std::string command;
  try {
    // Splice config values in right after the subcommand name.
    std::string config_path;
    for (std::size_t i = 0; i < args.size(); ++i) {
      if (args[i] == "--config" && i + 1 < args.size()) config_path = args[i + 1];
      if (args[i].rfind("--config=", 0) == 0) config_path = args[i].substr(9);
    }
    std::set<std::string> names;
    for (const auto* sub : app.get_subcommands([](const CLI::App*) { return true; })) names.insert(sub->get_name());
    std::size_t at = 0;
    while (at < args.size() && names.count(args[at]) == 0) ++at;
    if (!config_path.empty()) {
      check_file(config_path, "config file");
      json cfg = read_json_file(config_path);
      if (!cfg.is_object()) throw UsageError("config must be a JSON object: " + config_path);
      if (at == args.size()) {
        if (!cfg.contains("command")) throw UsageError("no subcommand given and config has no \"command\"");
        args.insert(args.begin(), cfg["command"].get<std::string>());
        at = 0;
      }
      auto extra = config_to_args(cfg);
      args.insert(args.begin() + static_cast<std::ptrdiff_t>(at) + 1, extra.begin(), extra.end());
    }
    std::reverse(args.begin(), args.end());
    app.parse(args);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n\n" << joined_usage(app);
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n\n" << joined_usage(app);
    return kExitUsage;
  }

  CLI::App* sub = app.get_subcommands().front();
  command = sub->get_name();

  const auto start = std::chrono::steady_clock::now();
  Result result;
  try {
    check_writable(common.out, "--out");
    check_file(chaos.model, "model file");
    check_file(chaos.functional, "functional file");
    check_writable(glauber.dump, "--dump-paths");
    if (command == "verify-operators") result = run_operators(ops, common);
    if (command == "chaos") result = run_chaos(chaos, common);
    if (command == "glauber") result = run_glauber(glauber, common);
    if (command == "concentration") result = run_concentration(conc, common);
    if (command == "clt-bernoulli") result = run_clt(clt, common);
    if (command == "wass-bounds") result = run_wass(wass, common);
    if (command == "fourth-moment") result = run_fourth(fourth, common);
    if (command == "dejong") result = run_dejong(dejong, common);
    if (command == "hypergraph-motif") result = run_motif(motif, common);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const Error& e) {
    if (!is_diagnosis(e.code())) {
      std::cerr << "error: " << e.what() << '\n';
      return kExitUsage;
    }
    json failure = {{"command", command}, {"pass", false}, {"error", std::string(to_string(e.code()))},
                    {"message", e.what()}, {"seed", common.seed}};
    std::cerr << failure.dump(2) << '\n';
    return kExitFail;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  }
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  json metadata = {{"version", std::string(kVersion)},
                   {"seed", common.seed},
                   {"workers", common.workers},
                   {"wall_time_seconds", wall},
                   {"config", common.config.empty() ? json(nullptr) : json(common.config)},
                   {"parameters", result.parameters}};
  std::string text;
  if (common.format == "json") {
    json doc = {{"command", command}, {"metadata", metadata}, {"pass", result.report.pass},
                {"report", result.report.to_json()}};
    if (!result.rows.empty()) doc["rows"] = result.rows;
    text = doc.dump(2) + "\n";
  } else {
    fill_check_table(result);
    std::ostringstream os;
    os << "# command=" << command << ",version=" << kVersion << ",seed=" << common.seed
       << ",workers=" << common.workers << ",wall_time=" << wall << ",pass=" << (result.report.pass ? 1 : 0)
       << '\n';
    for (std::size_t i = 0; i < result.csv_header.size(); ++i) os << (i ? "," : "") << result.csv_header[i];
    os << '\n';
    for (const auto& row : result.csv_rows) {
      for (std::size_t i = 0; i < row.size(); ++i) os << (i ? "," : "") << row[i];
      os << '\n';
    }
    text = os.str();
  }
  try {
    write_output(text, common.out);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  }

  if (!result.report.pass) {
    json failed = json::array();
    for (const auto& c : result.report.checks) {
      if (!c.pass) failed.push_back({{"name", c.name}, {"value", c.value}, {"threshold", c.threshold}});
    }
    json failure = {{"command", command}, {"pass", false}, {"failed_checks", failed}, {"metadata", metadata}};
    std::cerr << failure.dump(2) << '\n';
    return kExitFail;
  }
  return kExitPass;
}
