#include "lipnn/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include <zlib.h>

#include "lipnn/iris_table.hpp"
#include "lipnn/rng.hpp"

namespace lipnn {

std::pair<Dataset, Dataset> load_iris(std::uint64_t seed) {
  const auto& table = detail::kIrisTable;

  // Stratified 80/20: shuffle each class's indices, first 40 go to train.
  std::vector<std::size_t> train_idx, test_idx;
  Rng rng = Rng(seed).fork(0x1215);
  for (int cls = 0; cls < 3; ++cls) {
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < table.size(); ++i)
      if (table[i].label == cls) members.push_back(i);
    rng.shuffle(members);
    for (std::size_t k = 0; k < members.size(); ++k)
      (k < 40 ? train_idx : test_idx).push_back(members[k]);
  }
  std::sort(train_idx.begin(), train_idx.end());
  std::sort(test_idx.begin(), test_idx.end());

  auto fill = [&](const std::vector<std::size_t>& idx, const char* split) {
    Dataset ds;
    ds.features = Matrix(idx.size(), 4);
    ds.labels.reserve(idx.size());
    ds.class_count = 3;
    ds.split = split;
    for (std::size_t r = 0; r < idx.size(); ++r) {
      const auto& row = table[idx[r]];
      ds.features(r, 0) = row.sepal_length;
      ds.features(r, 1) = row.sepal_width;
      ds.features(r, 2) = row.petal_length;
      ds.features(r, 3) = row.petal_width;
      ds.labels.push_back(row.label);
    }
    return ds;
  };
  Dataset train = fill(train_idx, "train");
  Dataset test = fill(test_idx, "test");

  // Standardize with train statistics only.
  for (std::size_t j = 0; j < 4; ++j) {
    double mean = 0.0;
    for (std::size_t i = 0; i < train.size(); ++i) mean += train.features(i, j);
    mean /= static_cast<double>(train.size());
    double var = 0.0;
    for (std::size_t i = 0; i < train.size(); ++i) {
      const double d = train.features(i, j) - mean;
      var += d * d;
    }
    const double stddev = std::sqrt(var / static_cast<double>(train.size()));
    for (std::size_t i = 0; i < train.size(); ++i)
      train.features(i, j) = (train.features(i, j) - mean) / stddev;
    for (std::size_t i = 0; i < test.size(); ++i)
      test.features(i, j) = (test.features(i, j) - mean) / stddev;
  }
  return {std::move(train), std::move(test)};
}

namespace {

// Reads a whole file, transparently inflating gzip (magic 1f 8b).
std::vector<unsigned char> read_file_maybe_gz(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open " + path);
  std::vector<unsigned char> raw((std::istreambuf_iterator<char>(is)),
                                 std::istreambuf_iterator<char>());
  if (raw.size() >= 2 && raw[0] == 0x1f && raw[1] == 0x8b) {
    std::vector<unsigned char> out;
    out.resize(std::max<std::size_t>(raw.size() * 4, 1 << 20));
    z_stream zs{};
    if (inflateInit2(&zs, 16 + MAX_WBITS) != Z_OK) throw std::runtime_error("zlib init failed");
    zs.next_in = raw.data();
    zs.avail_in = static_cast<uInt>(raw.size());
    std::size_t written = 0;
    int rc = Z_OK;
    do {
      if (written == out.size()) out.resize(out.size() * 2);
      zs.next_out = out.data() + written;
      zs.avail_out = static_cast<uInt>(out.size() - written);
      rc = inflate(&zs, Z_NO_FLUSH);
      if (rc != Z_OK && rc != Z_STREAM_END) {
        inflateEnd(&zs);
        throw std::runtime_error("gzip decompression failed: " + path);
      }
      written = out.size() - zs.avail_out;
    } while (rc != Z_STREAM_END);
    inflateEnd(&zs);
    out.resize(written);
    return out;
  }
  return raw;
}

std::uint32_t read_be32(const std::vector<unsigned char>& buf, std::size_t offset,
                        const std::string& path) {
  if (offset + 4 > buf.size())
    throw std::runtime_error("short read at offset " + std::to_string(offset) + " in " + path);
  return (static_cast<std::uint32_t>(buf[offset]) << 24) |
         (static_cast<std::uint32_t>(buf[offset + 1]) << 16) |
         (static_cast<std::uint32_t>(buf[offset + 2]) << 8) |
         static_cast<std::uint32_t>(buf[offset + 3]);
}

std::string find_idx_file(const std::string& dir, const std::string& stem) {
  for (const char* suffix : {"", ".gz"}) {
    const std::string candidate = dir + "/" + stem + suffix;
    std::ifstream probe(candidate, std::ios::binary);
    if (probe) return candidate;
  }
  throw std::runtime_error("missing IDX file " + stem + " in " + dir);
}

Matrix parse_idx_images(const std::string& path) {
  const auto buf = read_file_maybe_gz(path);
  const std::uint32_t magic = read_be32(buf, 0, path);
  if (magic != 0x00000803u) throw std::runtime_error("not an IDX file: " + path);
  const std::uint32_t count = read_be32(buf, 4, path);
  const std::uint32_t rows = read_be32(buf, 8, path);
  const std::uint32_t cols = read_be32(buf, 12, path);
  const std::size_t need = 16 + static_cast<std::size_t>(count) * rows * cols;
  if (buf.size() < need)
    throw std::runtime_error("short read at offset " + std::to_string(buf.size()) + " in " + path);
  Matrix features(count, static_cast<std::size_t>(rows) * cols);
  for (std::size_t i = 0; i < features.data().size(); ++i)
    features.data()[i] = static_cast<double>(buf[16 + i]) / 255.0;
  return features;
}

std::vector<int> parse_idx_labels(const std::string& path) {
  const auto buf = read_file_maybe_gz(path);
  const std::uint32_t magic = read_be32(buf, 0, path);
  if (magic != 0x00000801u) throw std::runtime_error("not an IDX file: " + path);
  const std::uint32_t count = read_be32(buf, 4, path);
  if (buf.size() < 8 + count)
    throw std::runtime_error("short read at offset " + std::to_string(buf.size()) + " in " + path);
  std::vector<int> labels(count);
  for (std::uint32_t i = 0; i < count; ++i) labels[i] = buf[8 + i];
  return labels;
}

Dataset assemble(Matrix features, std::vector<int> labels, const char* split) {
  if (features.rows() != labels.size())
    throw std::runtime_error("image/label count mismatch in MNIST " + std::string(split) + " split");
  Dataset ds;
  ds.features = std::move(features);
  ds.labels = std::move(labels);
  ds.class_count = 10;
  ds.split = split;
  return ds;
}

}  // namespace

std::pair<Dataset, Dataset> load_mnist(const std::string& dir) {
  Dataset train = assemble(parse_idx_images(find_idx_file(dir, "train-images-idx3-ubyte")),
                           parse_idx_labels(find_idx_file(dir, "train-labels-idx1-ubyte")), "train");
  Dataset test = assemble(parse_idx_images(find_idx_file(dir, "t10k-images-idx3-ubyte")),
                          parse_idx_labels(find_idx_file(dir, "t10k-labels-idx1-ubyte")), "test");
  return {std::move(train), std::move(test)};
}

std::vector<std::vector<std::size_t>> batches(const Dataset& ds, std::size_t batch_size,
                                              std::uint64_t seed, std::size_t epoch) {
  if (batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
  std::vector<std::size_t> order(ds.size());
  std::iota(order.begin(), order.end(), 0);
  Rng rng = Rng(seed).fork(0xba7c).fork(epoch);
  rng.shuffle(order);
  std::vector<std::vector<std::size_t>> out;
  for (std::size_t start = 0; start < order.size(); start += batch_size) {
    const std::size_t stop = std::min(order.size(), start + batch_size);
    out.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(start),
                     order.begin() + static_cast<std::ptrdiff_t>(stop));
  }
  return out;
}

}  // namespace lipnn
