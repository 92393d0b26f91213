#pragma once

#include <iosfwd>
#include <string>

#include "sico/network.hpp"

namespace sico {

// Self-describing text checkpoint: format version, network spec, seed and
// per-layer flat tensors with declared shapes. Doubles are written with 17
// significant digits so load -> save reproduces the file byte for byte.

void save_checkpoint(const NetworkParams& params, std::ostream& out);
void save_checkpoint(const NetworkParams& params, const std::string& path);

NetworkParams load_checkpoint(std::istream& in);
NetworkParams load_checkpoint(const std::string& path);

std::string checkpoint_string(const NetworkParams& params);

}  // namespace sico
