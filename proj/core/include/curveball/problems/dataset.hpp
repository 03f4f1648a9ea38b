#pragma once

#include <cstddef>
#include <vector>

#include "curveball/numerics/rng.hpp"
#include "curveball/numerics/tensor.hpp"

namespace curveball::problems {

struct Dataset {
  Tensor features;                  ///< n x d
  std::vector<std::size_t> labels;  ///< n entries in [0, classes)
  std::size_t classes = 0;

  std::size_t size() const { return labels.size(); }
  std::size_t dimension() const { return features.cols(); }
  /// Throws InvalidDim / ShapeMismatch on inconsistent fields or non-finite features.
  void validate() const;
};

/// Gaussian clusters with unit variance around random centers whose
/// pairwise distance is at least `separation`. Rows are class-major.
Dataset make_blobs(std::size_t classes, std::size_t per_class, std::size_t dimension,
                   double separation, Rng& rng);

}  // namespace curveball::problems
