#pragma once

#include <string>

#include "sico/sample_set.hpp"

namespace sico {

// Generic signal CSV: header `window_id,channel,t0..t{L-1}[,label]`, one row
// per (window, channel), UTF-8, comma separated. The label column is present
// exactly when the set is labeled; multi-channel windows repeat the label on
// every row and must agree.

void save_signal_csv(const SampleSet& set, const std::string& path);
SampleSet load_signal_csv(const std::string& path);

}  // namespace sico
