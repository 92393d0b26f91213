#pragma once

#include <string>

#include "sico/sample_set.hpp"

namespace sico {

// IDX binary format (big-endian, magic 2051 for images and 2049 for labels).
// Pixels are kept as 0-255 reals; rescaling is a separate step.

SampleSet load_idx(const std::string& images_path, const std::string& labels_path);

void save_idx(const SampleSet& set, const std::string& images_path,
              const std::string& labels_path);

}  // namespace sico
