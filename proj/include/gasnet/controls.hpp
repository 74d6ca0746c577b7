#pragma once

#include <optional>

namespace gasnet {

enum class TopologyMode { fixed, enumerate };

/// Optional control-application extensions of the base program.
struct ControlOptions {
  /// Std of every injection capped at this fraction of its mean.
  std::optional<double> injection_cap;
  /// Weight of the expected squared pressure change between stages.
  double variability_penalty = 0.0;
  /// Std of every linepack capped at this fraction of its mean.
  std::optional<double> linepack_cap;
  TopologyMode topology_mode = TopologyMode::fixed;

  /// Throws ConfigError on negative factors.
  void check() const;
};

}  // namespace gasnet
