#pragma once

#include <string_view>
#include <vector>

namespace mrlab {

/// Finite representation of a random closed subset of [0, 1]: sorted,
/// deduplicated points, always starting with 0.
struct ClosedSetSample {
  enum class Source { Mrp, Subordinator, Wetting };

  std::vector<double> points;
  Source source = Source::Mrp;

  /// Sorts, deduplicates and inserts 0; throws if a point falls outside [0, 1].
  static ClosedSetSample from_points(std::vector<double> pts, Source source);

  bool valid() const;
};

std::string_view to_string(ClosedSetSample::Source s);

}  // namespace mrlab
