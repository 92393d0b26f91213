#pragma once

#include <string>
#include <vector>

#include "sico/matrix.hpp"

namespace sico {

// A dataset: N feature rows (flattened images or channel-major 1D signal
// windows) with optional per-sample class labels. Feature layout is
// channel-major: row = [c0 t0..t(L-1), c1 t0..t(L-1), ...] with
// features.cols == channels * length.
struct SampleSet {
  Matrix features;
  std::vector<int> labels;  // empty when the set is unlabeled
  int class_count = 0;
  int channels = 1;
  int length = 0;
  std::string name;

  std::size_t size() const { return features.rows; }
  bool labeled() const { return !labels.empty(); }

  void validate() const {
    if (features.rows == 0) throw InputError("SampleSet '" + name + "' is empty");
    if (channels < 1 || length < 1 ||
        static_cast<std::size_t>(channels) * static_cast<std::size_t>(length) !=
            features.cols) {
      throw InputError("SampleSet '" + name +
                       "': channels*length does not match feature width");
    }
    if (!features.all_finite()) {
      throw InputError("SampleSet '" + name + "' contains non-finite features");
    }
    if (labeled()) {
      if (labels.size() != features.rows) {
        throw InputError("SampleSet '" + name + "': label count != sample count");
      }
      for (int y : labels) {
        if (y < 0 || y >= class_count) {
          throw InputError("SampleSet '" + name + "': label out of range");
        }
      }
    }
  }

  SampleSet subset(const std::vector<std::size_t>& indices) const {
    SampleSet out;
    out.features = features.gather_rows(indices);
    if (labeled()) {
      out.labels.reserve(indices.size());
      for (std::size_t i : indices) out.labels.push_back(labels[i]);
    }
    out.class_count = class_count;
    out.channels = channels;
    out.length = length;
    out.name = name;
    return out;
  }
};

}  // namespace sico
