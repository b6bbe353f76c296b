#pragma once

#include <map>
#include <string>

#include "sdistill/neural/tensor.hpp"

namespace sdistill::neural {

inline constexpr int kCheckpointVersion = 1;

// Textual header (format version, model class, metadata echo, parameter
// shapes) followed by little-endian float64 arrays in declaration order.
struct CheckpointHeader {
  std::string model_class;
  std::map<std::string, std::string> meta;
};

void save_checkpoint(const std::string& path, const CheckpointHeader& header,
                     const ParameterSet& params);
// Reads only the header.
CheckpointHeader read_checkpoint_header(const std::string& path);
// Loads values into `params`, which must already declare the same names and
// shapes in the same order.
CheckpointHeader load_checkpoint(const std::string& path, ParameterSet& params);

}  // namespace sdistill::neural
