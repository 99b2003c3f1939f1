#ifndef DSGD_SYNTHETIC_HPP
#define DSGD_SYNTHETIC_HPP

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "dsgd/network.hpp"

namespace dsgd {

/// Generator ids: "teacher" (realizable targets from a random network) and
/// "clusters" (two Gaussian clusters, one-hot targets).
struct SyntheticSpec {
  std::string generator = "teacher";
  std::uint64_t seed = 0;
  std::size_t m = 100;
  /// Teacher: full layer sizes n_0..n_K. Clusters: only front() (input
  /// dimension) and back() (number of target slots, >= 2) are used.
  std::vector<std::size_t> sizes{4, 5, 3};
  Activation activation = Activation::sigmoid();
  double teacher_scale = 1.0;   // teacher weights ~ U(-s, s)
  double cluster_spread = 0.35;  // per-coordinate std of each cluster
};

struct SyntheticData {
  Dataset data;
  std::optional<NetworkParams> teacher;
};

/// Deterministic under spec.seed. Throws std::invalid_argument for an
/// unknown generator or m == 0.
SyntheticData synthetic_dataset(const SyntheticSpec& spec);

}  // namespace dsgd

#endif  // DSGD_SYNTHETIC_HPP
