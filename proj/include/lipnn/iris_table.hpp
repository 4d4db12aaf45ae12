#ifndef LIPNN_IRIS_TABLE_HPP
#define LIPNN_IRIS_TABLE_HPP

#include <array>

namespace lipnn::detail {

struct IrisRow {
  double sepal_length;
  double sepal_width;
  double petal_length;
  double petal_width;
  int label;
};

extern const std::array<IrisRow, 150> kIrisTable;

}  // namespace lipnn::detail

#endif  // LIPNN_IRIS_TABLE_HPP
