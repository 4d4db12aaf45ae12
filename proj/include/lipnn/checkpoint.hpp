#ifndef LIPNN_CHECKPOINT_HPP
#define LIPNN_CHECKPOINT_HPP

#include <string>

#include "lipnn/network.hpp"

namespace lipnn {

// Checkpoint JSON schema (format_version 1):
// {
//   "format_version": 1,
//   "norm_p": "1" | "2" | "inf",
//   "input_dim": <int>,
//   "layers": [
//     {"rows": r, "cols": c, "activation": "<id>" | null,
//      "weight": [flat row-major numbers], "bias": [numbers] | null},
//     ...
//   ]
// }
// Weights are written with 17 significant digits so doubles round-trip
// exactly. Sinusoidal layers are stored bias-free by construction.
void save_checkpoint(const Network& net, const std::string& path);

// Throws std::runtime_error with a diagnostic on malformed input.
Network load_checkpoint(const std::string& path);

}  // namespace lipnn

#endif  // LIPNN_CHECKPOINT_HPP
