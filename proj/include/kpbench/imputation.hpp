#pragma once

#include "kpbench/dataset.hpp"

namespace kpbench {

// Per-column forward fill in row order; a leading gap (no earlier observed
// value) takes the column mean of the present values.
Dataset forward_fill(const Dataset& ds);

// K-nearest-neighbour imputation over the keypoint columns. Distance between
// two rows is Euclidean over the coordinates present in both, scaled by
// sqrt(30 / shared_count); a gap becomes the unweighted mean of that column
// over the k nearest donor rows that have it. Only original values are read.
Dataset knn_impute(const Dataset& ds, std::size_t k);

}  // namespace kpbench
