#pragma once

// File formats: CSV datasets (one sample per row, no header, '.' decimal,
// LF line ends) and JSON solution/pattern dumps.

#include <json.hpp>

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "scorekit/common.hpp"
#include "scorekit/core.hpp"
#include "scorekit/dsmnd.hpp"
#include "scorekit/prox.hpp"
#include "scorekit/sm1d.hpp"
#include "scorekit/smnd.hpp"

namespace scorekit::io {

using nlohmann::json;

// Shortest round-trip decimal rendering, locale-independent.
inline std::string format_double(double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  (void)ec;
  return std::string(buf, ptr);
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(errc::io_error, "cannot open " + path.string() + " for writing");
  out << text;
  if (!out) throw Error(errc::io_error, "write failed for " + path.string());
}

inline void write_matrix_csv(const std::filesystem::path& path, const MatrixXd& M,
                             const std::string& header = "") {
  std::string text;
  if (!header.empty()) text += header + "\n";
  for (Eigen::Index i = 0; i < M.rows(); ++i) {
    for (Eigen::Index j = 0; j < M.cols(); ++j) {
      if (j) text += ',';
      text += format_double(M(i, j));
    }
    text += '\n';
  }
  write_text(path, text);
}

inline MatrixXd read_matrix_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(errc::io_error, "cannot open " + path.string());
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      try {
        row.push_back(std::stod(cell));
      } catch (const std::exception&) {
        throw Error(errc::io_error, "bad numeric cell '" + cell + "' in " + path.string());
      }
    }
    if (!row.empty()) rows.push_back(std::move(row));
  }
  if (rows.empty()) throw Error(errc::empty_data, "no rows in " + path.string());
  const std::size_t d = rows.front().size();
  for (const auto& r : rows)
    if (r.size() != d) throw Error(errc::io_error, "ragged rows in " + path.string());
  MatrixXd M(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(d));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < d; ++j)
      M(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
  return M;
}

inline json to_json(const VectorXd& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

inline json to_json(const MatrixXd& M) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < M.rows(); ++i) {
    json r = json::array();
    for (Eigen::Index j = 0; j < M.cols(); ++j) r.push_back(M(i, j));
    rows.push_back(std::move(r));
  }
  return rows;
}

inline json to_json(const TwoLayerParams& p) {
  return json{{"activation", activation_name(p.activation)}, {"W1", to_json(p.W1)},
              {"b1", to_json(p.b1)},                         {"W2", to_json(p.W2)},
              {"b2", to_json(p.b2)},                         {"V", to_json(p.V)}};
}

inline json to_json(const prox::LassoSolution& sol) {
  return json{{"y_star", to_json(sol.y_star)},
              {"objective", sol.objective},
              {"kkt_residual", sol.kkt_residual},
              {"iterations", sol.iterations},
              {"status", prox::status_name(sol.status)}};
}

inline json sm_solution_json(const sm1d::SMProgram1D& prog, const prox::LassoSolution& sol,
                             const TwoLayerParams& params) {
  json j{{"variant", sm1d::variant_name(prog.variant)},
         {"beta", prog.beta},
         {"l1_coefficient", prog.l1_coefficient()},
         {"c_const", prog.c_const},
         {"solution", to_json(sol)},
         {"reported_objective", sol.objective + prog.c_const},
         {"network", to_json(params)}};
  return j;
}

inline json patterns_json(const std::vector<smnd::ActivationPattern>& patterns) {
  json arr = json::array();
  for (const auto& p : patterns) {
    arr.push_back(json{{"mask", p.mask_string()},
                       {"generator", to_json(p.generator_u)},
                       {"activation", activation_name(p.activation)}});
  }
  return arr;
}

inline json blocks_json(const smnd::MultiSMSolution& sol) {
  json blocks = json::array();
  for (const auto& W : sol.W_blocks) blocks.push_back(to_json(W));
  return json{{"objective", sol.objective},
              {"patterns", patterns_json(sol.patterns)},
              {"W_blocks", blocks}};
}

// Wedge feature dump: K and Z as plain CSV plus a JSON header carrying the
// multi-index map and the dropped degenerate columns.
inline void write_wedge(const std::filesystem::path& dir, const dsmnd::WedgeFeatureMap& f,
                        const MatrixXd& Z) {
  write_matrix_csv(dir / "wedge_K.csv", f.K);
  write_matrix_csv(dir / "wedge_Z.csv", Z);
  json cols = json::array();
  for (const auto& J : f.column_index) cols.push_back(J);
  json dropped = json::array();
  for (const auto& J : f.dropped) dropped.push_back(J);
  json header{{"p_norm", f.p_norm},
              {"columns", cols},
              {"dropped_columns", dropped},
              {"k_file", "wedge_K.csv"},
              {"z_file", "wedge_Z.csv"}};
  write_text(dir / "wedge_meta.json", header.dump(2) + "\n");
}

inline void write_json(const std::filesystem::path& path, const json& j) {
  write_text(path, j.dump(2) + "\n");
}

inline json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(errc::io_error, "cannot open " + path.string());
  json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw Error(errc::io_error, "bad JSON in " + path.string() + ": " + e.what());
  }
  return j;
}

inline VectorXd vector_from_json(const json& a) {
  VectorXd v(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) v[static_cast<Eigen::Index>(i)] = a[i].get<double>();
  return v;
}

inline MatrixXd matrix_from_json(const json& rows) {
  const Eigen::Index r = static_cast<Eigen::Index>(rows.size());
  if (r == 0) return MatrixXd(0, 0);
  const Eigen::Index c = static_cast<Eigen::Index>(rows[0].size());
  MatrixXd M(r, c);
  for (Eigen::Index i = 0; i < r; ++i)
    for (Eigen::Index j = 0; j < c; ++j)
      M(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)].get<double>();
  return M;
}

inline TwoLayerParams params_from_json(const json& j) {
  TwoLayerParams p;
  p.activation = j.at("activation").get<std::string>() == "abs" ? Activation::Abs : Activation::ReLU;
  p.W1 = matrix_from_json(j.at("W1"));
  p.b1 = vector_from_json(j.at("b1"));
  p.W2 = matrix_from_json(j.at("W2"));
  p.b2 = vector_from_json(j.at("b2"));
  p.V = matrix_from_json(j.at("V"));
  return p;
}

}  // namespace scorekit::io
