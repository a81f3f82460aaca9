#include "bqo/cli.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "bqo/benchmarks.hpp"
#include "bqo/bundle.hpp"
#include "bqo/error.hpp"
#include "bqo/gramians.hpp"
#include "bqo/reduction.hpp"
#include "bqo/simulation.hpp"

namespace bqo {
namespace {

using nlohmann::json;

constexpr int kExitNumerical = 1;
constexpr int kExitUsage = 2;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string num(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

template <class T>
std::string join(const std::vector<T>& xs) {
  std::ostringstream os;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i) os << ',';
    if constexpr (std::is_floating_point_v<T>) {
      os << num(xs[i]);
    } else {
      os << xs[i];
    }
  }
  return os.str();
}

struct Options {
  std::string out;
  int threads = 0;

  // build
  int k = 0;
  std::string output_variant = "ones";
  double gamma = 1.0;
  int n = 0, m = 0, p = 0;
  std::uint64_t seed = 0;
  double margin = 0.5;

  // gramians / reduce / simulate
  std::string system;
  std::string gramians;
  std::string variant = "S";
  std::vector<double> phi;
  int depth = 8;
  int max_iter = 50;
  double tol = 1e-8;
  int r = 0;
  std::vector<std::string> reduced;
  std::string input = "cos";
  std::string table;
  double t_end = 5.0;
  int steps = 1000;
  std::vector<int> r_list;
};

fs::path output_dir(const Options& o, const std::string& command) {
  if (!o.out.empty()) return o.out;
  if (const char* env = std::getenv("BQO_OUTPUT_DIR"); env && *env) {
    return fs::path(env) / command;
  }
  throw UsageError("--out is required (or set BQO_OUTPUT_DIR)");
}

void finish(const fs::path& dir, RunManifest man, std::ostream& out) {
  man.output_dir = dir.string();
  man.tool_version = std::string(kToolVersion);
  write_run_manifest(dir, man);
  out << "wrote " << dir.string() << '\n';
}

BqoSystem load_for_gramians(const Options& o, const CLI::App& sub) {
  BqoSystem sys = load_system(o.system);
  if (sub.count("--gamma") > 0) sys = scale_input(sys.unscaled(), o.gamma);
  return sys;
}

InputFunction make_input(const Options& o, Eigen::Index m) {
  if (o.input == "exp") return exp_input(m);
  if (o.input == "cos") return cos_input(m);
  if (o.table.empty()) throw UsageError("--input table requires --table FILE");
  const Matrix tab = read_matrix_csv(o.table, true);
  if (tab.cols() != m + 1) {
    throw BqoError(ErrorCode::kShapeMismatch,
                   "input table needs 1 + m = " + std::to_string(m + 1) +
                       " columns");
  }
  return table_input(tab);
}

GramianOptions gramian_options(const Options& o) {
  GramianOptions go;
  go.solver.max_iter = o.max_iter;
  go.solver.residual_tol = o.tol;
  // A tighter --tol must not be cut short by the stagnation test.
  go.solver.rel_diff_tol = std::min(go.solver.rel_diff_tol, o.tol);
  go.phi = o.phi;
  go.series_depth = o.depth;
  return go;
}

GramianVariant variant_of(const Options& o) {
  const auto v = parse_gramian_variant(o.variant);
  if (!v) throw UsageError("unknown Gramian variant " + o.variant);
  return *v;
}

void cmd_build_heat(const Options& o, std::ostream& out) {
  const auto variant = parse_heat_output(o.output_variant);
  if (!variant) throw UsageError("unknown output variant " + o.output_variant);
  const BqoSystem sys = heat_system({o.k, *variant, o.gamma});
  const fs::path dir = output_dir(o, "build");
  save_system(dir, sys);
  finish(dir,
         {"build heat",
          {},
          {{"k", std::to_string(o.k)},
           {"output_variant", std::string(to_string(*variant))},
           {"gamma", num(o.gamma)}},
          {},
          {}},
         out);
}

void cmd_build_random(const Options& o, std::ostream& out) {
  const BqoSystem sys = random_admissible(o.n, o.m, o.p, o.seed, o.margin);
  const fs::path dir = output_dir(o, "build");
  save_system(dir, sys);
  finish(dir,
         {"build random",
          {},
          {{"n", std::to_string(o.n)},
           {"m", std::to_string(o.m)},
           {"p", std::to_string(o.p)},
           {"seed", std::to_string(o.seed)},
           {"margin", num(o.margin)}},
          {},
          {}},
         out);
}

void cmd_gramians(const Options& o, const CLI::App& sub, std::ostream& out) {
  const GramianVariant variant = variant_of(o);
  const BqoSystem sys = load_for_gramians(o, sub);
  const GramianSet g = compute_gramians(sys, variant, gramian_options(o));
  const fs::path dir = output_dir(o, "gramians");
  save_gramians(dir, g);
  for (const auto& w : g.warnings) out << "warning: " << w << '\n';
  for (const auto& [name, r] : g.residuals)
    out << "residual " << name << " = " << num(r) << '\n';
  finish(dir,
         {"gramians",
          {o.system},
          {{"variant", std::string(to_string(variant))},
           {"gamma", num(sys.input_scale())},
           {"phi", join(o.phi)},
           {"depth", std::to_string(o.depth)},
           {"max_iter", std::to_string(o.max_iter)},
           {"tol", num(o.tol)}},
          {},
          {}},
         out);
}

void cmd_reduce(const Options& o, std::ostream& out) {
  const BqoSystem sys = load_system(o.system);
  const GramianSet g = load_gramians(o.gramians);
  if (g.P.rows() != sys.n()) {
    throw BqoError(ErrorCode::kShapeMismatch,
                   "Gramian bundle does not match the system dimension");
  }
  const BalancingResult res = reduce_with(sys, g, o.r);
  const fs::path dir = output_dir(o, "reduce");
  save_system(dir, res.reduced);
  write_vector_csv(dir / "hsv.csv", "hsv", res.hsv);
  write_matrix_csv(dir / "W.csv", res.W);
  write_matrix_csv(dir / "V.csv", res.V);
  for (const auto& w : res.warnings) out << "warning: " << w << '\n';
  finish(dir,
         {"reduce",
          {o.system, o.gramians},
          {{"r", std::to_string(o.r)}},
          {},
          {}},
         out);
}

json error_json(const std::string& label, const ErrorReport& rep) {
  double peak = 0.0;
  for (double e : rep.pointwise_rel) peak = std::max(peak, e);
  return json{{"label", label},
              {"frobenius_rel", rep.frobenius_rel},
              {"max_pointwise_rel", peak}};
}

void cmd_simulate(const Options& o, std::ostream& out) {
  const BqoSystem full = load_system(o.system).unscaled();
  const InputFunction u = make_input(o, full.m());
  const fs::path dir = output_dir(o, "simulate");
  const Trajectory ref = simulate(full, u, o.t_end, o.steps);
  write_trajectory_csv(dir / "trajectory_full.csv", ref);
  json errs = json::array();
  for (std::size_t i = 0; i < o.reduced.size(); ++i) {
    const BqoSystem red = load_system(o.reduced[i]).unscaled();
    if (red.m() != full.m() || red.p() != full.p()) {
      throw BqoError(ErrorCode::kShapeMismatch,
                     "reduced system " + o.reduced[i] +
                         " has different input/output dimensions");
    }
    const Trajectory tr = simulate(red, u, o.t_end, o.steps);
    const std::string tag = "reduced" + std::to_string(i + 1);
    write_trajectory_csv(dir / ("trajectory_" + tag + ".csv"), tr);
    const ErrorReport rep = error_metrics(ref, tr);
    Vector pw = Eigen::Map<const Vector>(rep.pointwise_rel.data(),
                                         static_cast<Eigen::Index>(rep.pointwise_rel.size()));
    write_vector_csv(dir / ("error_" + tag + ".csv"), "pointwise_rel", pw);
    errs.push_back(error_json(o.reduced[i], rep));
    out << o.reduced[i] << ": frobenius_rel = " << num(rep.frobenius_rel) << '\n';
  }
  if (!o.reduced.empty()) {
    std::ofstream(dir / "errors.json") << errs.dump(2) << '\n';
  }
  std::vector<std::string> inputs{o.system};
  inputs.insert(inputs.end(), o.reduced.begin(), o.reduced.end());
  finish(dir,
         {"simulate",
          inputs,
          {{"input", o.input},
           {"table", o.table},
           {"t_end", num(o.t_end)},
           {"steps", std::to_string(o.steps)}},
          {},
          {}},
         out);
}

void cmd_errsweep(const Options& o, const CLI::App& sub, std::ostream& out) {
  if (o.r_list.empty()) throw UsageError("--r-list must not be empty");
  const GramianVariant variant = variant_of(o);
  const BqoSystem sys = load_for_gramians(o, sub);
  const GramianSet g = compute_gramians(sys, variant, gramian_options(o));
  const BqoSystem full = sys.unscaled();
  const InputFunction u = make_input(o, full.m());
  const Trajectory ref = simulate(full, u, o.t_end, o.steps);
  const Matrix lp = gramian_factor(g.P);
  const Matrix lq = gramian_factor(g.Q);

  const fs::path dir = output_dir(o, "errsweep");
  fs::create_directories(dir);
  std::ofstream csv(dir / "errsweep.csv");
  csv << "r,frobenius_rel,max_pointwise_rel\n";
  json rows = json::array();
  for (int r : o.r_list) {
    const BalancingResult res = balanced_truncation(sys, lp, lq, r);
    const Trajectory tr = simulate(res.reduced.unscaled(), u, o.t_end, o.steps);
    const ErrorReport rep = error_metrics(ref, tr);
    json row = error_json("r=" + std::to_string(r), rep);
    row["r"] = r;
    csv << r << ',' << num(rep.frobenius_rel) << ','
        << num(row["max_pointwise_rel"].get<double>()) << '\n';
    rows.push_back(row);
    out << "r = " << r << ": frobenius_rel = " << num(rep.frobenius_rel) << '\n';
  }
  std::ofstream(dir / "errsweep.json") << rows.dump(2) << '\n';
  write_vector_csv(dir / "hsv.csv", "hsv", hankel_singular_values(lp, lq));
  finish(dir,
         {"errsweep",
          {o.system},
          {{"variant", std::string(to_string(variant))},
           {"gamma", num(sys.input_scale())},
           {"phi", join(o.phi)},
           {"r_list", join(o.r_list)},
           {"input", o.input},
           {"table", o.table},
           {"t_end", num(o.t_end)},
           {"steps", std::to_string(o.steps)}},
          {},
          {}},
         out);
}

// Rebuilds the argument list that produced a run manifest.
std::vector<std::string> replay_args(const RunManifest& man, const std::string& out) {
  std::vector<std::string> args{"bqo"};
  std::istringstream words(man.command);
  for (std::string w; words >> w;) args.push_back(w);
  if (man.command == "gramians" || man.command == "errsweep") {
    if (man.inputs.size() != 1) throw UsageError("manifest inputs do not match command");
    args.insert(args.end(), {"--system", man.inputs[0]});
  } else if (man.command == "reduce") {
    if (man.inputs.size() != 2) throw UsageError("manifest inputs do not match command");
    args.insert(args.end(), {"--system", man.inputs[0], "--gramians", man.inputs[1]});
  } else if (man.command == "simulate") {
    if (man.inputs.empty()) throw UsageError("manifest inputs do not match command");
    args.insert(args.end(), {"--system", man.inputs[0]});
    for (std::size_t i = 1; i < man.inputs.size(); ++i)
      args.insert(args.end(), {"--reduced", man.inputs[i]});
  } else if (man.command != "build heat" && man.command != "build random") {
    throw UsageError("cannot replay command '" + man.command + "'");
  }
  for (const auto& [key, value] : man.options) {
    if (value.empty()) continue;
    std::string flag = "--" + key;
    std::replace(flag.begin(), flag.end(), '_', '-');
    args.insert(args.end(), {flag, value});
  }
  args.insert(args.end(), {"--out", out});
  return args;
}

int report(std::ostream& err, const std::string& code, const std::string& msg,
           int exit_code, json extra = json::object()) {
  extra["error"] = code;
  extra["message"] = msg;
  err << extra.dump() << '\n';
  return exit_code;
}

bool is_usage(ErrorCode c) {
  return c == ErrorCode::kBadOption || c == ErrorCode::kBadSpec ||
         c == ErrorCode::kBadGamma;
}

void add_gramian_flags(CLI::App* sub, Options& o) {
  sub->add_option("--variant", o.variant, "S|P|A|M|TS|TP|TA|reach|Treach");
  sub->add_option("--gamma", o.gamma, "input scaling replacing the bundle's");
  sub->add_option("--phi", o.phi, "mixed-Gramian weights, one per input")
      ->delimiter(',');
  sub->add_option("--depth", o.depth, "series depth for variant P");
  sub->add_option("--max-iter", o.max_iter, "fixed-point iteration cap");
  sub->add_option("--tol", o.tol, "relative residual tolerance");
}

void add_input_flags(CLI::App* sub, Options& o) {
  sub->add_option("--input", o.input, "exp|cos|table")
      ->check(CLI::IsMember({"exp", "cos", "table"}));
  sub->add_option("--table", o.table, "CSV with header and columns t,u1..um");
  sub->add_option("--t-end", o.t_end, "final time");
  sub->add_option("--steps", o.steps, "output intervals");
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out,
            std::ostream& err) {
  Options o;
  CLI::App app{"Balanced truncation for bilinear systems with quadratic outputs",
               "bqo"};
  app.set_version_flag("--version", std::string(kToolVersion));
  app.require_subcommand(1);
  app.add_option("--out", o.out, "output directory");
  app.add_option("--threads", o.threads, "maximum worker threads");

  auto* build = app.add_subcommand("build", "write a benchmark system bundle");
  build->require_subcommand(1);
  auto* heat = build->add_subcommand("heat", "heat-transfer benchmark");
  heat->add_option("--k", o.k, "grid points per side")->required();
  heat->add_option("--output-variant", o.output_variant, "ones|identity");
  heat->add_option("--gamma", o.gamma, "input scaling in (0, 1]");
  heat->add_option("--out", o.out, "output directory");
  auto* rnd = build->add_subcommand("random", "random admissible system");
  rnd->add_option("--n", o.n)->required();
  rnd->add_option("--m", o.m)->required();
  rnd->add_option("--p", o.p)->required();
  rnd->add_option("--seed", o.seed)->required();
  rnd->add_option("--margin", o.margin, "fraction of the existence threshold");
  rnd->add_option("--out", o.out, "output directory");

  auto* gram = app.add_subcommand("gramians", "compute a Gramian pair");
  gram->add_option("--system", o.system, "system bundle")->required();
  add_gramian_flags(gram, o);
  gram->add_option("--out", o.out, "output directory");

  auto* red = app.add_subcommand("reduce", "square-root balanced truncation");
  red->add_option("--system", o.system, "system bundle")->required();
  red->add_option("--gramians", o.gramians, "Gramian bundle")->required();
  red->add_option("--r", o.r, "reduced order")->required();
  red->add_option("--out", o.out, "output directory");

  auto* sim = app.add_subcommand("simulate", "simulate full and reduced models");
  sim->add_option("--system", o.system, "full system bundle")->required();
  sim->add_option("--reduced", o.reduced, "reduced system bundles");
  add_input_flags(sim, o);
  sim->add_option("--out", o.out, "output directory");

  auto* sweep = app.add_subcommand("errsweep", "output error versus order");
  sweep->add_option("--system", o.system, "full system bundle")->required();
  sweep->add_option("--r-list", o.r_list, "orders, comma separated")
      ->delimiter(',')
      ->required();
  add_gramian_flags(sweep, o);
  add_input_flags(sweep, o);
  sweep->add_option("--out", o.out, "output directory");

  std::string replay_from;
  auto* replay = app.add_subcommand("replay", "re-run the command recorded in run.json");
  replay->add_option("--run", replay_from, "directory holding run.json")->required();
  replay->add_option("--out", o.out, "output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    return report(err, "Usage", e.what(), kExitUsage);
  }

  try {
    if (o.threads > 0) Eigen::setNbThreads(o.threads);
    if (*replay) {
      const RunManifest man = read_run_manifest(replay_from);
      const std::vector<std::string> args =
          replay_args(man, output_dir(o, "replay").string());
      std::vector<const char*> ptrs;
      for (const auto& a : args) ptrs.push_back(a.c_str());
      return run_cli(static_cast<int>(ptrs.size()), ptrs.data(), out, err);
    }
    if (*heat) {
      cmd_build_heat(o, out);
    } else if (*rnd) {
      cmd_build_random(o, out);
    } else if (*gram) {
      cmd_gramians(o, *gram, out);
    } else if (*red) {
      cmd_reduce(o, out);
    } else if (*sim) {
      cmd_simulate(o, out);
    } else if (*sweep) {
      cmd_errsweep(o, *sweep, out);
    }
  } catch (const UsageError& e) {
    return report(err, "Usage", e.what(), kExitUsage);
  } catch (const RankDeficientError& e) {
    return report(err, std::string(to_string(e.code())), e.what(),
                  kExitNumerical, {{"achievable_r", e.achievable_order()}});
  } catch (const NoConvergenceError& e) {
    return report(err, std::string(to_string(e.code())), e.what(),
                  kExitNumerical,
                  {{"iterations", e.iterations()},
                   {"last_residual", e.last_residual()}});
  } catch (const BqoError& e) {
    return report(err, std::string(to_string(e.code())), e.what(),
                  is_usage(e.code()) ? kExitUsage : kExitNumerical);
  } catch (const std::exception& e) {
    return report(err, "Internal", e.what(), kExitNumerical);
  }
  return 0;
}

}  // namespace bqo
