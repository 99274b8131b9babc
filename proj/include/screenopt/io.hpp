#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>

#include "screenopt/cone.hpp"
#include "screenopt/perturbation.hpp"
#include "screenopt/solver.hpp"

namespace screenopt {

/// Columns `axis0,...,axisK,v,p0,...,p{d-1}[,q]`, one node per row.
void write_field_csv(std::ostream& out, const SurplusField& field);
/// Inverse of write_field_csv; the grid is rebuilt from the distinct coordinates.
SurplusField read_field_csv(std::istream& in);

/// {objective, iters, max_violation, q_cap_bound}. Wall time goes to the run log only.
std::string report_json(const SolveReport& report);
SolveReport read_report_json(std::istream& in);

struct Certificate1D {
  double jprime0 = 0.0;
  double jprime0_kink_zero = 0.0;
  double fd_slope = 0.0;
  double fd_epsilon = 0.0;
  PerturbationSpec spec;
};

struct Certificate2D {
  FirstVariation2D variation;
  PerturbationSpec spec;
  double weight = 1.0;
  double lift_gain = 0.0;  // J_R(lift) - J_D at spec.epsilon
};

std::string certificate_json(const Certificate1D& c);
std::string certificate_json(const Certificate2D& c);

void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace screenopt
