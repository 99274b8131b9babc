#include <algorithm>
#include <cmath>
#include <limits>

#include "screenopt/error.hpp"
#include "screenopt/solver.hpp"

namespace screenopt {

ClosedForm1D closed_form_1d(const Density& f) {
  const Grid& g = f.grid();
  if (g.dim() != 1 || g.extended()) throw Error(ErrorCode::Dimension, "closed form needs a 1D type density");
  const std::size_t n = g.size();
  for (std::size_t i = 0; i < n; ++i)
    if (!(f.value(i) > 0.0)) throw Error(ErrorCode::InvalidArgument, "closed form needs f > 0 at every node");

  const Cdf cdf(f);
  const double h = g.spacing(0);
  const double total = cdf.values().back();

  ClosedForm1D out{SurplusField(g), {}};
  for (std::size_t i = 0; i < n; ++i) {
    const double theta = g.coord(i, 0);
    const double tail = total - cdf.values()[i];
    out.field.p(i, 0) = theta - tail / f.value(i);
  }
  out.field.v(0) = 0.0;
  for (std::size_t i = 1; i < n; ++i)
    out.field.v(i) = out.field.v(i - 1) + 0.5 * h * (out.field.p(i - 1, 0) + out.field.p(i, 0));

  HazardReport& hz = out.hazard;
  hz.lower_endpoint_value = g.coord(0, 0) - total / f.value(0);
  hz.lower_endpoint_ok = hz.lower_endpoint_value >= -1e-12;
  hz.min_hazard = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) {
    double df;
    if (i == 0) df = (f.value(1) - f.value(0)) / h;
    else if (i + 1 == n) df = (f.value(n - 1) - f.value(n - 2)) / h;
    else df = (f.value(i + 1) - f.value(i - 1)) / (2.0 * h);
    const double tail = (total - cdf.values()[i]) / total;
    const double fi = f.value(i) / total;
    hz.min_hazard = std::min(hz.min_hazard, 2.0 + tail * (df / total) / (fi * fi));
  }
  hz.hazard_ok = hz.min_hazard >= -1e-12;
  return out;
}

}  // namespace screenopt
