#ifndef LIPNN_DATA_HPP
#define LIPNN_DATA_HPP

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "lipnn/matrix.hpp"

namespace lipnn {

struct Dataset {
  Matrix features;  // samples x dims
  std::vector<int> labels;
  int class_count = 0;
  std::string split;  // "train" or "test"

  std::size_t size() const { return labels.size(); }
  std::size_t dims() const { return features.cols(); }
};

// Embedded Iris (150 rows, 4 features, 3 classes). Stratified 80/20 split
// (40 train / 10 test per class, seeded); features standardized per
// dimension using train statistics only.
std::pair<Dataset, Dataset> load_iris(std::uint64_t seed = 7);

// Reads the four IDX files (train/t10k images and labels, optionally
// .gz-compressed) from `dir`, scales pixels to [0, 1] by /255.
// Errors: "not an IDX file" on a wrong magic, "short read at offset N" on
// truncation, and a mismatch error when image and label counts differ.
std::pair<Dataset, Dataset> load_mnist(const std::string& dir);

// Deterministic minibatch order for (seed, epoch): a seeded shuffle of all
// indices, cut into batch_size chunks; the final short batch is kept.
std::vector<std::vector<std::size_t>> batches(const Dataset& ds, std::size_t batch_size,
                                              std::uint64_t seed, std::size_t epoch);

}  // namespace lipnn

#endif  // LIPNN_DATA_HPP
