#include "cli.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <optional>
#include <random>
#include <sstream>
#include <string_view>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "cbp/critset.hpp"
#include "cbp/csv.hpp"
#include "cbp/error.hpp"
#include "cbp/model.hpp"
#include "cbp/moments.hpp"
#include "cbp/oracle.hpp"
#include "cbp/sim.hpp"
#include "cbp/spectral.hpp"
#include "cbp/verify.hpp"

namespace cbp::cli {

namespace {

using json = nlohmann::json;
using csv::number;

struct Loaded {
  CbpModel model;
  json run;  // `run` section, or an empty object
};

Loaded load(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::InvalidConfig, "cannot open config " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  const std::string text = ss.str();
  CbpModel model = model::load_model(text);
  json doc = json::parse(text);
  json run = doc.contains("run") && doc.at("run").is_object() ? doc.at("run") : json::object();
  return {std::move(model), std::move(run)};
}

// run.<section>.<key>, if present.
const json* setting(const json& run, const char* section, const char* key) {
  if (!run.contains(section) || !run.at(section).is_object()) return nullptr;
  const json& s = run.at(section);
  return s.contains(key) ? &s.at(key) : nullptr;
}

template <typename T>
T setting_or(const json& run, const char* section, const char* key, T fallback) {
  const json* j = setting(run, section, key);
  if (!j) return fallback;
  try {
    return j->get<T>();
  } catch (const json::exception& e) {
    fail(ErrorCode::InvalidConfig, std::string("run.") + section + "." + key + ": " + e.what());
  }
}

std::string site_text(const json& j) {
  if (j.is_string()) return j.get<std::string>();
  if (j.is_number_integer()) return std::to_string(j.get<long long>());
  if (j.is_array()) {
    std::string out;
    for (std::size_t i = 0; i < j.size(); ++i) {
      if (i) out += ',';
      out += std::to_string(j.at(i).get<long long>());
    }
    return out;
  }
  fail(ErrorCode::InvalidConfig, "site must be a label, an integer or a coordinate array");
}

std::vector<std::string> site_list(const json& run, const char* section, const char* key) {
  std::vector<std::string> out;
  if (const json* j = setting(run, section, key)) {
    for (const json& s : *j) out.push_back(site_text(s));
  }
  return out;
}

Site parse(const CbpModel& model, const std::string& text) {
  const std::optional<Site> s = model.chain().parse_site(text);
  if (!s) fail(ErrorCode::UnknownSite, "unknown site '" + text + "'");
  return *s;
}

std::vector<Site> parse_all(const CbpModel& model, const std::vector<std::string>& texts) {
  std::vector<Site> out;
  for (const std::string& t : texts) out.push_back(parse(model, t));
  return out;
}

int workers_or_default(int requested) { return requested > 0 ? requested : sim::default_workers(); }

// classify

struct ClassifyArgs {
  std::string config;
  bool regime_only = false;
};

int do_classify(const ClassifyArgs& a, std::ostream& out) {
  const CbpModel model = load(a.config).model;
  ClassifyOptions opts;
  opts.regime_only = a.regime_only;
  const SpectralReport rep = spectral::classify(model, opts);
  out << "regime=" << to_string(rep.regime) << '\n';
  out << "rho_D=" << number(rep.rho_d) << '\n';
  out << "boundary=" << (rep.boundary ? "true" : "false") << '\n';
  if (rep.regime == Regime::Supercritical && !rep.nu) {
    out << "nu=na\n";
  } else {
    out << "nu=" << number(rep.nu.value_or(0.0)) << '\n';
  }
  if (rep.regime == Regime::Supercritical && rep.nu) {
    const double root = spectral::d_tilde_root(model, 0.0, rep.lambda_hi);
    out << "d_tilde_root=" << number(root) << '\n';
    out << "d_tilde_gap=" << number(std::abs(root - *rep.nu)) << '\n';
  } else {
    out << "d_tilde_root=na\n";
  }
  return 0;
}

// moments

struct MomentsArgs {
  std::string config;
  std::vector<std::string> x, y;
  int orders = 0;
};

int do_moments(const MomentsArgs& a, std::ostream& out) {
  const Loaded l = load(a.config);
  const CbpModel& model = l.model;
  std::vector<std::string> xs = a.x.empty() ? site_list(l.run, "moments", "x") : a.x;
  std::vector<std::string> ys = a.y.empty() ? site_list(l.run, "moments", "y") : a.y;
  std::vector<Site> x = parse_all(model, xs), y = parse_all(model, ys);
  if (x.empty()) x = model.sites();
  if (y.empty()) y = model.sites();
  const int orders = a.orders > 0 ? a.orders : setting_or<int>(l.run, "moments", "orders", model.n_max());
  const MomentTable t = moments::moment_table(model, x, y, orders);

  const ChainModel& c = model.chain();
  csv::write_row(out, {"regime", "nu", "kind", "x", "y", "order", "symbol", "value", "positive"});
  const std::string regime(to_string(t.regime));
  for (const LocalConstant& e : t.local) {
    csv::write_row(out, {regime, number(t.nu), "local", c.label(e.x), c.label(e.y), std::to_string(e.order),
                         std::string(1, e.symbol), number(e.value), e.positive ? "1" : "0"});
  }
  for (const TotalConstant& e : t.total) {
    csv::write_row(out, {regime, number(t.nu), "total", c.label(e.x), "TOTAL", std::to_string(e.order),
                         std::string(1, e.symbol), number(e.value), e.positive ? "1" : "0"});
  }
  return 0;
}

// critset

struct CritsetArgs {
  std::string config;
  int grid = 0;
  std::string skipped;
  int workers = 0;
};

int do_critset(const CritsetArgs& a, std::ostream& out) {
  const Loaded l = load(a.config);
  const int grid = a.grid > 0 ? a.grid : setting_or<int>(l.run, "critset", "grid", 101);
  const auto extra = setting_or<std::vector<std::vector<double>>>(l.run, "critset", "extra_points", {});
  const CritSetSolver solver(l.model);
  const CritSetResult r = solver.trace(grid, extra, workers_or_default(a.workers));

  const std::size_t n = l.model.size();
  std::vector<std::string> header;
  for (std::size_t i = 1; i <= n; ++i) header.push_back("m_" + std::to_string(i));
  header.push_back("residual");
  csv::write_row(out, header);
  for (const CritPoint& p : r.points) {
    std::vector<std::string> row;
    for (double v : p.m) row.push_back(number(v));
    row.push_back(number(p.residual));
    csv::write_row(out, row);
  }

  if (!a.skipped.empty()) {
    std::ofstream skip(a.skipped);
    if (!skip) fail(ErrorCode::InvalidArgument, "cannot write " + a.skipped);
    header.assign({});
    for (std::size_t i = 1; i < n; ++i) header.push_back("m_" + std::to_string(i));
    header.push_back("reason");
    csv::write_row(skip, header);
    for (const CritSkip& s : r.skipped) {
      std::vector<std::string> row;
      for (double v : s.prefix) row.push_back(number(v));
      row.emplace_back(to_string(s.reason));
      csv::write_row(skip, row);
    }
  }
  return 0;
}

// simulate

struct SimulateArgs {
  std::string config;
  std::string start;
  std::vector<double> times;
  std::size_t replicates = 0;
  std::optional<std::uint64_t> seed;
  std::size_t cap = 0;
  int order = 0;
  std::vector<std::string> sites;
  int workers = 0;
};

int do_simulate(const SimulateArgs& a, std::ostream& out) {
  const Loaded l = load(a.config);
  const CbpModel& model = l.model;
  SimConfig cfg;
  const std::string start = !a.start.empty() ? a.start
                            : setting(l.run, "simulate", "start")
                                ? site_text(*setting(l.run, "simulate", "start"))
                                : model.chain().label(model.catalyst(0).site);
  cfg.start = parse(model, start);
  cfg.sample_times = !a.times.empty() ? a.times
                                      : setting_or<std::vector<double>>(l.run, "simulate", "sample_times", {1.0});
  std::sort(cfg.sample_times.begin(), cfg.sample_times.end());
  cfg.horizon = cfg.sample_times.empty() ? 0.0 : cfg.sample_times.back();
  cfg.replicates = a.replicates > 0 ? a.replicates : setting_or<std::size_t>(l.run, "simulate", "replicates", 10000);
  cfg.seed = a.seed ? *a.seed : setting_or<std::uint64_t>(l.run, "simulate", "seed", 1);
  cfg.population_cap = a.cap > 0 ? a.cap : setting_or<std::size_t>(l.run, "simulate", "population_cap", 1'000'000);
  cfg.max_order = a.order > 0 ? a.order : setting_or<int>(l.run, "simulate", "max_order", 1);
  const std::vector<std::string> sites = !a.sites.empty() ? a.sites : site_list(l.run, "simulate", "sites");
  cfg.sites = sites.empty() ? model.sites() : parse_all(model, sites);
  cfg.workers = workers_or_default(a.workers);

  const std::vector<MomentEstimate> rows = sim::estimate_moments(model, cfg);
  csv::write_row(out, {"time", "site", "order", "estimate", "stderr", "replicates", "truncated"});
  for (const MomentEstimate& e : rows) {
    csv::write_row(out, {number(e.time), e.site ? model.chain().label(*e.site) : "TOTAL", std::to_string(e.order),
                         number(e.estimate), number(e.stderr_), std::to_string(e.replicates),
                         std::to_string(e.truncated)});
  }
  return 0;
}

// verify

struct VerifyArgs {
  std::string config;
  std::uint64_t seed = 1;
  std::size_t count = 200;
};

void print_suites(std::ostream& out, const std::string& scope, const SuiteLog& log) {
  for (const SuiteResult& r : log.results()) {
    csv::write_row(out, {scope, r.name, std::to_string(r.cases), std::to_string(r.failures), number(r.max_error),
                         number(r.tolerance), r.passed() ? "PASS" : "FAIL", r.first_failure});
  }
}

bool all_passed(const SuiteLog& log) {
  return std::all_of(log.results().begin(), log.results().end(), [](const SuiteResult& r) { return r.passed(); });
}

int do_verify(const VerifyArgs& a, std::ostream& out) {
  SuiteLog given;
  if (!a.config.empty()) {
    const CbpModel model = load(a.config).model;
    std::mt19937_64 rng(a.seed);
    verify::verify_model(model, rng, given);
  }
  const SuiteLog random = verify::verify_random(a.count, a.seed);
  csv::write_row(out, {"scope", "suite", "cases", "failures", "max_error", "tolerance", "status", "first_failure"});
  if (!a.config.empty()) print_suites(out, "config", given);
  print_suites(out, "random", random);
  return all_passed(given) && all_passed(random) ? 0 : 2;
}

// oracle

struct OracleArgs {
  std::string config;
  std::vector<double> times;
  double shift = 0.0;
};

int do_oracle(const OracleArgs& a, std::ostream& out) {
  const Loaded l = load(a.config);
  const CbpModel& model = l.model;
  std::vector<double> times = !a.times.empty() ? a.times
                                               : setting_or<std::vector<double>>(l.run, "oracle", "times", {1.0});
  const bool second = model.n_max() >= 2;
  const ChainModel& c = model.chain();
  const auto n = static_cast<Eigen::Index>(c.num_states());
  csv::write_row(out, {"time", "x", "y", "m1", "m2"});
  for (double t : times) {
    Eigen::MatrixXd m1, m2;
    Eigen::VectorXd M1, M2;
    if (second) {
      const oracle::SecondMoments s = oracle::second_moments(model, t, a.shift);
      m1 = s.m1, m2 = s.m2, M1 = s.M1, M2 = s.M2;
    } else {
      m1 = oracle::mean_field(model, t, a.shift);
      M1 = m1.rowwise().sum();
    }
    for (Eigen::Index x = 0; x < n; ++x) {
      const std::string lx = c.label(Site::index(static_cast<std::size_t>(x)));
      for (Eigen::Index y = 0; y < n; ++y) {
        csv::write_row(out, {number(t), lx, c.label(Site::index(static_cast<std::size_t>(y))), number(m1(x, y)),
                             second ? number(m2(x, y)) : ""});
      }
      csv::write_row(out, {number(t), lx, "TOTAL", number(M1(x)), second ? number(M2(x)) : ""});
    }
  }
  return 0;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Catalytic branching processes: criticality, moment asymptotics and simulation", "cbp"};
  app.require_subcommand(1);

  ClassifyArgs ca;
  auto* classify = app.add_subcommand("classify", "Regime, Perron root of D(0), Malthusian parameter");
  classify->add_option("config", ca.config, "Model JSON")->required();
  classify->add_flag("--regime-only", ca.regime_only, "Skip the Malthusian parameter");

  MomentsArgs ma;
  auto* mom = app.add_subcommand("moments", "Asymptotic moment constants as CSV");
  mom->add_option("config", ma.config, "Model JSON")->required();
  mom->add_option("--x", ma.x, "Start sites (default: run.moments.x or the catalysts)");
  mom->add_option("--y", ma.y, "Target sites (default: run.moments.y or the catalysts)");
  mom->add_option("--orders", ma.orders, "Highest order (default: run.moments.orders or n_max)");

  CritsetArgs cs;
  auto* crit = app.add_subcommand("critset", "Trace the criticality set as CSV");
  crit->add_option("config", cs.config, "Model JSON")->required();
  crit->add_option("--grid", cs.grid, "Points per axis (default: run.critset.grid or 101)");
  crit->add_option("--skipped", cs.skipped, "Write skipped grid cells to this CSV");
  crit->add_option("--workers", cs.workers, "Worker threads (default: CBP_WORKERS)");

  SimulateArgs sa;
  auto* simc = app.add_subcommand("simulate", "Monte Carlo factorial moment estimates as CSV");
  simc->add_option("config", sa.config, "Model JSON")->required();
  simc->add_option("--start", sa.start, "Start site");
  simc->add_option("--times", sa.times, "Sample times");
  simc->add_option("--replicates", sa.replicates, "Number of replicates");
  simc->add_option("--seed", sa.seed, "64-bit seed");
  simc->add_option("--cap", sa.cap, "Population cap per replicate");
  simc->add_option("--order", sa.order, "Highest factorial moment order");
  simc->add_option("--sites", sa.sites, "Sites with local estimates");
  simc->add_option("--workers", sa.workers, "Worker threads (default: CBP_WORKERS)");

  VerifyArgs va;
  auto* ver = app.add_subcommand("verify", "Identity suites on a model and on random finite models");
  ver->add_option("config", va.config, "Model JSON (optional)");
  ver->add_option("--seed", va.seed, "Seed for the random models")->capture_default_str();
  ver->add_option("--count", va.count, "Number of random models")->capture_default_str();

  OracleArgs oa;
  auto* orc = app.add_subcommand("oracle", "First and second moments from the mean-field ODE as CSV");
  orc->add_option("config", oa.config, "Model JSON (finite chain)")->required();
  orc->add_option("--times", oa.times, "Times (default: run.oracle.times)");
  orc->add_option("--shift", oa.shift, "Report e^{-shift t} m1 and e^{-2 shift t} m2")->capture_default_str();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error[" << to_string(ErrorCode::InvalidArgument) << "]: " << e.what() << '\n';
    return 1;
  }

  try {
    if (*classify) return do_classify(ca, out);
    if (*mom) return do_moments(ma, out);
    if (*crit) return do_critset(cs, out);
    if (*simc) return do_simulate(sa, out);
    if (*ver) return do_verify(va, out);
    if (*orc) return do_oracle(oa, out);
  } catch (const Error& e) {
    std::string_view msg = e.what();
    const std::string prefix = std::string(to_string(e.code())) + ": ";
    if (msg.substr(0, prefix.size()) == prefix) msg.remove_prefix(prefix.size());
    err << "error[" << to_string(e.code()) << "]: " << msg << '\n';
    return is_validation_error(e.code()) ? 1 : 2;
  } catch (const json::exception& e) {
    err << "error[" << to_string(ErrorCode::InvalidConfig) << "]: " << e.what() << '\n';
    return 1;
  }
  return 1;
}

}  // namespace cbp::cli
