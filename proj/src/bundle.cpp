#include "bqo/bundle.hpp"

#include <cctype>
#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "bqo/error.hpp"

namespace bqo {
namespace {

using nlohmann::json;

std::ofstream open_out(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw BqoError(ErrorCode::kIo, "cannot write " + path.string());
  return out;
}

std::ifstream open_in(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw BqoError(ErrorCode::kIo, "cannot read " + path.string());
  return in;
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.16e", v);
  return buf;
}

json read_json(const fs::path& path) {
  auto in = open_in(path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw BqoError(ErrorCode::kBadSpec, path.string() + ": " + e.what());
  }
}

void write_json(const fs::path& path, const json& j) {
  auto out = open_out(path);
  out << j.dump(2) << '\n';
}

}  // namespace

void write_matrix_csv(const fs::path& path, const Matrix& m) {
  auto out = open_out(path);
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j) out << ',';
      out << fmt(m(i, j));
    }
    out << '\n';
  }
}

Matrix read_matrix_csv(const fs::path& path, bool skip_header) {
  auto in = open_in(path);
  std::vector<std::vector<double>> rows;
  std::string line;
  if (skip_header) std::getline(in, line);
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      char* end = nullptr;
      errno = 0;
      const double v = std::strtod(cell.c_str(), &end);
      // ERANGE on underflow still yields the correctly rounded subnormal.
      const bool overflow = errno == ERANGE && std::isinf(v);
      while (end != nullptr && std::isspace(static_cast<unsigned char>(*end))) ++end;
      if (end == cell.c_str() || *end != '\0' || overflow) {
        throw BqoError(ErrorCode::kBadSpec,
                       path.string() + ": cannot parse '" + cell + "'");
      }
      row.push_back(v);
    }
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw BqoError(ErrorCode::kBadSpec, path.string() + ": ragged rows");
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) return Matrix(0, 0);
  Matrix m(rows.size(), rows.front().size());
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows[i].size(); ++j) m(i, j) = rows[i][j];
  return m;
}

void save_system(const fs::path& dir, const BqoSystem& sys) {
  fs::create_directories(dir);
  write_json(dir / "manifest.json", json{{"n", sys.n()},
                                         {"m", sys.m()},
                                         {"p", sys.p()},
                                         {"gamma_applied", sys.input_scale()}});
  write_matrix_csv(dir / "A.csv", sys.A());
  write_matrix_csv(dir / "B.csv", sys.unscaled_B());
  write_matrix_csv(dir / "C.csv", sys.C());
  for (std::size_t k = 0; k < sys.unscaled_N().size(); ++k) {
    write_matrix_csv(dir / ("N" + std::to_string(k + 1) + ".csv"),
                     sys.unscaled_N()[k]);
  }
  for (std::size_t j = 0; j < sys.M().size(); ++j) {
    write_matrix_csv(dir / ("M" + std::to_string(j + 1) + ".csv"), sys.M()[j]);
  }
}

BqoSystem load_system(const fs::path& dir) {
  const json man = read_json(dir / "manifest.json");
  Eigen::Index n = 0, m = 0, p = 0;
  double gamma = 1.0;
  try {
    n = man.at("n").get<Eigen::Index>();
    m = man.at("m").get<Eigen::Index>();
    p = man.at("p").get<Eigen::Index>();
    gamma = man.value("gamma_applied", 1.0);
  } catch (const json::exception& e) {
    throw BqoError(ErrorCode::kBadSpec, "system manifest: " + std::string(e.what()));
  }
  auto load = [&](const std::string& name, Eigen::Index rows, Eigen::Index cols) {
    Matrix x = read_matrix_csv(dir / name);
    if (x.size() == 0 && rows * cols == 0) return Matrix(rows, cols);
    if (x.rows() != rows || x.cols() != cols) {
      std::ostringstream os;
      os << name << " is " << x.rows() << "x" << x.cols() << ", expected "
         << rows << "x" << cols;
      throw BqoError(ErrorCode::kShapeMismatch, os.str());
    }
    return x;
  };
  Matrix a = load("A.csv", n, n);
  Matrix b = load("B.csv", n, m);
  Matrix c = load("C.csv", p, n);
  MatrixList ns, ms;
  for (Eigen::Index k = 0; k < m; ++k)
    ns.push_back(load("N" + std::to_string(k + 1) + ".csv", n, n));
  for (Eigen::Index j = 0; j < p; ++j)
    ms.push_back(load("M" + std::to_string(j + 1) + ".csv", n, n));
  BqoSystem sys = BqoSystem::build(std::move(a), std::move(b), std::move(c),
                                   std::move(ns), std::move(ms));
  return gamma == 1.0 ? sys : scale_input(sys, gamma);
}

void save_gramians(const fs::path& dir, const GramianSet& g) {
  fs::create_directories(dir);
  write_matrix_csv(dir / "P.csv", g.P);
  if (g.Q.size() > 0) write_matrix_csv(dir / "Q.csv", g.Q);
  json inter = json::array();
  for (const auto& [name, m] : g.intermediates) {
    write_matrix_csv(dir / (name + ".csv"), m);
    inter.push_back(name);
  }
  json res = json::object();
  for (const auto& [name, r] : g.residuals) res[name] = r;
  json its = json::object();
  for (const auto& [name, i] : g.iterations) its[name] = i;
  write_json(dir / "residuals.json", json{{"variant", to_string(g.variant)},
                                          {"residuals", res},
                                          {"iterations", its},
                                          {"phi", g.phi},
                                          {"intermediates", inter},
                                          {"warnings", g.warnings}});
}

GramianSet load_gramians(const fs::path& dir) {
  const json rep = read_json(dir / "residuals.json");
  GramianSet g;
  try {
    const auto tag = rep.at("variant").get<std::string>();
    const auto v = parse_gramian_variant(tag);
    if (!v) throw BqoError(ErrorCode::kBadSpec, "unknown variant " + tag);
    g.variant = *v;
    g.residuals = rep.at("residuals").get<std::map<std::string, double>>();
    g.iterations = rep.value("iterations", json::object())
                       .get<std::map<std::string, int>>();
    g.phi = rep.value("phi", std::vector<double>{});
    g.warnings = rep.value("warnings", std::vector<std::string>{});
    for (const auto& name : rep.value("intermediates", std::vector<std::string>{}))
      g.intermediates[name] = read_matrix_csv(dir / (name + ".csv"));
  } catch (const json::exception& e) {
    throw BqoError(ErrorCode::kBadSpec, "Gramian report: " + std::string(e.what()));
  }
  g.P = read_matrix_csv(dir / "P.csv");
  if (fs::exists(dir / "Q.csv")) g.Q = read_matrix_csv(dir / "Q.csv");
  return g;
}

void write_trajectory_csv(const fs::path& path, const Trajectory& traj) {
  auto out = open_out(path);
  out << 't';
  for (Eigen::Index j = 0; j < traj.outputs.rows(); ++j) out << ",y" << j + 1;
  out << '\n';
  for (std::size_t i = 0; i < traj.times.size(); ++i) {
    out << fmt(traj.times[i]);
    for (Eigen::Index j = 0; j < traj.outputs.rows(); ++j)
      out << ',' << fmt(traj.outputs(j, static_cast<Eigen::Index>(i)));
    out << '\n';
  }
}

void write_vector_csv(const fs::path& path, const std::string& name,
                      const Vector& v) {
  auto out = open_out(path);
  out << name << '\n';
  for (Eigen::Index i = 0; i < v.size(); ++i) out << fmt(v(i)) << '\n';
}

void write_run_manifest(const fs::path& dir, const RunManifest& manifest) {
  fs::create_directories(dir);
  write_json(dir / "run.json", json{{"command", manifest.command},
                                    {"inputs", manifest.inputs},
                                    {"options", manifest.options},
                                    {"output_dir", manifest.output_dir},
                                    {"tool_version", manifest.tool_version}});
}

RunManifest read_run_manifest(const fs::path& dir) {
  const json j = read_json(dir / "run.json");
  RunManifest m;
  try {
    m.command = j.at("command").get<std::string>();
    m.inputs = j.at("inputs").get<std::vector<std::string>>();
    m.options = j.at("options").get<std::map<std::string, std::string>>();
    m.output_dir = j.at("output_dir").get<std::string>();
    m.tool_version = j.at("tool_version").get<std::string>();
  } catch (const json::exception& e) {
    throw BqoError(ErrorCode::kBadSpec, "run manifest: " + std::string(e.what()));
  }
  return m;
}

}  // namespace bqo
