#include "curveball/problems/dataset.hpp"

#include <cmath>

#include "curveball/errors.hpp"

namespace curveball::problems {

void Dataset::validate() const {
  if (features.rank() != 2) throw ShapeMismatch("dataset: features must be a matrix");
  if (features.rows() != labels.size()) {
    throw ShapeMismatch("dataset: " + std::to_string(features.rows()) + " feature rows vs " +
                        std::to_string(labels.size()) + " labels");
  }
  for (std::size_t label : labels) {
    if (label >= classes) throw InvalidDim("dataset: label out of range");
  }
  if (!all_finite(features)) throw InvalidDim("dataset: non-finite feature");
}

Dataset make_blobs(std::size_t classes, std::size_t per_class, std::size_t dimension,
                   double separation, Rng& rng) {
  if (classes == 0 || per_class == 0 || dimension == 0) {
    throw InvalidDim("make_blobs: arguments must be >= 1");
  }
  Tensor centers({classes, dimension});
  double spread = std::max(separation, 1.0);
  for (std::size_t c = 0; c < classes; ++c) {
    for (int attempt = 0;; ++attempt) {
      for (std::size_t j = 0; j < dimension; ++j) centers(c, j) = spread * rng.normal();
      bool far_enough = true;
      for (std::size_t k = 0; k < c && far_enough; ++k) {
        double d2 = 0.0;
        for (std::size_t j = 0; j < dimension; ++j) {
          const double diff = centers(c, j) - centers(k, j);
          d2 += diff * diff;
        }
        far_enough = std::sqrt(d2) >= separation;
      }
      if (far_enough) break;
      if (attempt % 100 == 99) spread *= 2.0;
    }
  }

  Dataset data;
  data.classes = classes;
  data.features = Tensor({classes * per_class, dimension});
  data.labels.resize(classes * per_class);
  for (std::size_t c = 0; c < classes; ++c) {
    for (std::size_t i = 0; i < per_class; ++i) {
      const std::size_t row = c * per_class + i;
      data.labels[row] = c;
      for (std::size_t j = 0; j < dimension; ++j) {
        data.features(row, j) = centers(c, j) + rng.normal();
      }
    }
  }
  return data;
}

}  // namespace curveball::problems
