#include "lipnn/checkpoint.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace lipnn {

namespace {

std::string fmt17(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

void write_array(std::ostream& os, const Vec& v) {
  os << "[";
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) os << ",";
    os << fmt17(v[i]);
  }
  os << "]";
}

}  // namespace

void save_checkpoint(const Network& net, const std::string& path) {
  validate_network(net);
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open checkpoint for writing: " + path);
  os << "{\n";
  os << "  \"format_version\": 1,\n";
  os << "  \"norm_p\": \"" << to_string(net.norm_p) << "\",\n";
  os << "  \"input_dim\": " << net.input_dim << ",\n";
  os << "  \"layers\": [\n";
  for (std::size_t l = 0; l < net.layers.size(); ++l) {
    const LayerSpec& layer = net.layers[l];
    os << "    {\"rows\": " << layer.weight.rows() << ", \"cols\": " << layer.weight.cols()
       << ", \"activation\": ";
    if (layer.activation)
      os << "\"" << layer.activation->id() << "\"";
    else
      os << "null";
    os << ", \"weight\": ";
    write_array(os, layer.weight.data());
    os << ", \"bias\": ";
    if (layer.bias)
      write_array(os, *layer.bias);
    else
      os << "null";
    os << "}";
    if (l + 1 < net.layers.size()) os << ",";
    os << "\n";
  }
  os << "  ]\n}\n";
  if (!os) throw std::runtime_error("write failure: " + path);
}

Network load_checkpoint(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open checkpoint: " + path);
  nlohmann::json doc;
  try {
    is >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error("malformed checkpoint JSON: " + std::string(e.what()));
  }
  try {
    if (doc.at("format_version").get<int>() != 1)
      throw std::runtime_error("unsupported checkpoint format_version");
    Network net;
    net.norm_p = norm_from_string(doc.at("norm_p").get<std::string>());
    net.input_dim = doc.at("input_dim").get<std::size_t>();
    for (const auto& jl : doc.at("layers")) {
      LayerSpec layer;
      const std::size_t rows = jl.at("rows").get<std::size_t>();
      const std::size_t cols = jl.at("cols").get<std::size_t>();
      const auto& weight = jl.at("weight");
      if (weight.size() != rows * cols) throw std::runtime_error("checkpoint weight size mismatch");
      layer.weight = Matrix(rows, cols);
      for (std::size_t i = 0; i < weight.size(); ++i) layer.weight.data()[i] = weight[i].get<double>();
      if (!jl.at("activation").is_null())
        layer.activation = Polyactivation::by_id(jl.at("activation").get<std::string>());
      if (!jl.at("bias").is_null()) {
        const auto& bias = jl.at("bias");
        Vec b(bias.size());
        for (std::size_t i = 0; i < b.size(); ++i) b[i] = bias[i].get<double>();
        layer.bias = std::move(b);
      }
      net.layers.push_back(std::move(layer));
    }
    validate_network(net);
    return net;
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error("malformed checkpoint: " + std::string(e.what()));
  } catch (const std::invalid_argument& e) {
    throw std::runtime_error("malformed checkpoint: " + std::string(e.what()));
  }
}

}  // namespace lipnn
