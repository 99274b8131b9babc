#pragma once

#include <cstddef>
#include <iosfwd>
#include <string>
#include <vector>

#include "screenopt/cone.hpp"
#include "screenopt/domain.hpp"

namespace screenopt {

/// Contracts offered by a surplus field: good quality x = p, undesirable
/// quality y = q and tariff t = theta.x + alpha.y - v. Excluded nodes report
/// x = y = t = 0.
struct ContractMenu {
  Grid grid;
  std::vector<double> x;  // node-major, theta_dim per node
  std::vector<double> y;
  std::vector<double> t;
  std::vector<bool> participates;
  double participation_tol = 0.0;

  std::size_t size() const { return t.size(); }
  bool lottery(std::size_t i) const { return participates[i] && y[i] > 0.0; }
};

/// Participation tolerance 1e-7 * max(1, max v) when `participation_tol` <= 0.
ContractMenu extract_contracts(const SurplusField& field, double participation_tol = 0.0);

/// Surplus each node obtains from its best contract in the menu (or 0 by opting out).
std::vector<double> envelope(const ContractMenu& menu);

enum class Region { Excluded, Bunched, Screened };

const char* to_string(Region r);

struct SegmentationMap {
  Grid grid;
  std::vector<Region> labels;
  /// Cell-counted area fractions; a cell counts for a region when all its corners carry the label.
  double excluded_fraction = 0.0;
  double bunched_fraction = 0.0;
  double screened_fraction = 0.0;

  std::size_t count(Region r) const;
};

/// Omega_0 = {v <= tol}; remaining nodes are labelled Screened.
SegmentationMap exclusion_region(const SurplusField& field, double tol = 1e-7);

struct BunchingOptions {
  double tol = 1e-7;
  /// Two slopes count as equal within this distance; <= 0 selects 0.05 * spacing.
  double radius = 0.0;
  /// Bunching direction; empty means the diagonal.
  std::vector<double> e;
};

/// 2D only. A participating node is Bunched when a neighbour transverse to e
/// carries the same slope within the radius, Screened otherwise.
SegmentationMap bunching_map(const SurplusField& field, const BunchingOptions& opts = {});

struct IndependenceReport {
  bool product = false;
  /// Sup-norm distance between h and the product of its marginals.
  double distance = 0.0;
  double max_q = 0.0;
  double objective_gap = 0.0;
  bool passed = true;
};

/// When h factorizes (distance <= 1e-10) the extended optimum must carry no
/// aversion slope and match the classical value: max q <= tol and
/// |J_R - J_D| <= tol * max(1, |J_D|). Non-product densities pass vacuously.
IndependenceReport independence_check(const Density& h, const SurplusField& extended_field,
                                      double extended_objective, double classical_objective, double tol = 1e-4);

struct MinYReport {
  double min_q = 0.0;
  std::size_t participants = 0;
  bool passed = true;
};

/// Minimal aversion slope over participating nodes must be <= tol.
MinYReport min_y_property(const SurplusField& field, double tol = 1e-6, double participation_tol = 0.0);

void write_contracts_csv(std::ostream& out, const ContractMenu& menu);
void write_segmentation_csv(std::ostream& out, const SegmentationMap& map);

}  // namespace screenopt
