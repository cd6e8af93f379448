#include "mrlab/closed_set.hpp"

#include <algorithm>

#include "mrlab/error.hpp"

namespace mrlab {

ClosedSetSample ClosedSetSample::from_points(std::vector<double> pts, Source source) {
  for (double p : pts) {
    if (!(p >= 0.0 && p <= 1.0)) throw InvalidArgument("ClosedSetSample: point outside [0,1]");
  }
  pts.push_back(0.0);
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  return {std::move(pts), source};
}

bool ClosedSetSample::valid() const {
  if (points.empty() || points.front() != 0.0 || points.back() > 1.0) return false;
  return std::adjacent_find(points.begin(), points.end(), [](double a, double b) { return a >= b; }) ==
         points.end();
}

std::string_view to_string(ClosedSetSample::Source s) {
  switch (s) {
    case ClosedSetSample::Source::Mrp: return "mrp";
    case ClosedSetSample::Source::Subordinator: return "subordinator";
    case ClosedSetSample::Source::Wetting: return "wetting";
  }
  return "unknown";
}

}  // namespace mrlab
