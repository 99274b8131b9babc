#include "screenopt/io.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <json.hpp>

#include "screenopt/error.hpp"

namespace screenopt {

namespace {

using nlohmann::ordered_json;

ordered_json spec_json(const PerturbationSpec& s) {
  ordered_json j;
  j["a"] = s.a;
  j["kappa"] = s.kappa;
  j["epsilon"] = s.epsilon;
  j["e"] = s.e;
  j["s_lo"] = s.s_lo;
  j["s_hi"] = s.s_hi;
  if (s.K) {
    j["K"] = {{"center", s.K->center}, {"half_length", s.K->half_length}, {"half_width", s.K->half_width}};
  }
  return j;
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  return out;
}

}  // namespace

void write_field_csv(std::ostream& out, const SurplusField& field) {
  const Grid& g = field.grid();
  const std::size_t d = g.theta_dim();
  for (std::size_t k = 0; k < d; ++k) out << "axis" << k << ',';
  if (g.extended()) out << "alpha,";
  out << 'v';
  for (std::size_t k = 0; k < d; ++k) out << ",p" << k;
  if (g.extended()) out << ",q";
  out << '\n' << std::setprecision(17);
  for (std::size_t i = 0; i < g.size(); ++i) {
    for (std::size_t k = 0; k < g.dim(); ++k) out << g.coord(i, k) << ',';
    out << field.v(i);
    for (std::size_t k = 0; k < g.dim(); ++k) out << ',' << field.grad(i, k);
    out << '\n';
  }
}

SurplusField read_field_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCode::Io, "empty field CSV");
  const std::vector<std::string> header = split(line);
  std::size_t axes = 0;
  bool extended = false;
  for (const auto& h : header) {
    if (h.rfind("axis", 0) == 0) ++axes;
    if (h == "alpha") extended = true;
  }
  if (axes == 0) throw Error(ErrorCode::Io, "field CSV has no axis columns");
  const std::size_t dim = axes + (extended ? 1 : 0);
  if (header.size() != 2 * dim + 1) throw Error(ErrorCode::Io, "unexpected field CSV header");

  std::vector<std::vector<double>> rows;
  std::ostringstream lattice;
  for (std::size_t k = 0; k < dim; ++k) lattice << "axis" << k << ',';
  lattice << "value\n" << std::setprecision(17);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const std::vector<std::string> cells = split(line);
    if (cells.size() != header.size()) throw Error(ErrorCode::Io, "ragged field CSV row");
    std::vector<double> row;
    for (const auto& c : cells) row.push_back(std::stod(c));
    for (std::size_t k = 0; k < dim; ++k) lattice << row[k] << ',';
    lattice << "1\n";
    rows.push_back(std::move(row));
  }
  std::istringstream lin(lattice.str());
  const Grid grid = read_density_csv(lin, extended).grid();

  SurplusField field(grid);
  std::vector<int> idx(dim);
  for (const auto& r : rows) {
    for (std::size_t k = 0; k < dim; ++k) {
      const double t = (r[k] - grid.lo(k)) / grid.spacing(k);
      idx[k] = static_cast<int>(std::lround(t));
    }
    const std::size_t i = grid.flat_index(idx);
    field.v(i) = r[dim];
    for (std::size_t k = 0; k < dim; ++k) field.grad(i, k) = r[dim + 1 + k];
  }
  return field;
}

std::string report_json(const SolveReport& r) {
  ordered_json j;
  j["objective"] = r.objective;
  j["iters"] = r.iterations;
  j["max_violation"] = r.max_violation;
  j["q_cap_bound"] = r.q_cap_bound;
  return j.dump(2) + "\n";
}

SolveReport read_report_json(std::istream& in) {
  ordered_json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::Io, std::string("malformed report: ") + e.what());
  }
  SolveReport r;
  r.objective = j.at("objective").get<double>();
  r.iterations = j.at("iters").get<int>();
  r.max_violation = j.at("max_violation").get<double>();
  r.q_cap_bound = j.at("q_cap_bound").get<bool>();
  return r;
}

std::string certificate_json(const Certificate1D& c) {
  ordered_json j;
  j["type"] = "1d";
  j["jprime0"] = c.jprime0;
  j["jprime0_kink_zero"] = c.jprime0_kink_zero;
  j["fd_slope"] = c.fd_slope;
  j["fd_epsilon"] = c.fd_epsilon;
  j["spec"] = spec_json(c.spec);
  j["positive"] = c.jprime0 > 0.0;
  return j.dump(2) + "\n";
}

std::string certificate_json(const Certificate2D& c) {
  ordered_json j;
  j["type"] = "2d";
  j["lower_bound"] = c.variation.lower_bound;
  j["exact"] = c.variation.exact;
  j["weight"] = c.weight;
  j["lift_gain"] = c.lift_gain;
  j["spec"] = spec_json(c.spec);
  j["positive"] = c.variation.lower_bound > 0.0;
  return j.dump(2) + "\n";
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  out << text;
  if (!out) throw Error(ErrorCode::Io, "failed writing " + path.string());
}

}  // namespace screenopt
