#include "sico/idx.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <vector>

namespace sico {

namespace {

constexpr std::uint32_t kImageMagic = 2051;
constexpr std::uint32_t kLabelMagic = 2049;

std::uint32_t read_u32_be(std::istream& in, const std::string& path,
                          std::size_t offset) {
  unsigned char buf[4];
  in.read(reinterpret_cast<char*>(buf), 4);
  if (in.gcount() != 4) {
    throw FormatError(path + ": truncated at offset " + std::to_string(offset));
  }
  return (static_cast<std::uint32_t>(buf[0]) << 24) |
         (static_cast<std::uint32_t>(buf[1]) << 16) |
         (static_cast<std::uint32_t>(buf[2]) << 8) |
         static_cast<std::uint32_t>(buf[3]);
}

void write_u32_be(std::ostream& out, std::uint32_t v) {
  unsigned char buf[4] = {static_cast<unsigned char>(v >> 24),
                          static_cast<unsigned char>(v >> 16),
                          static_cast<unsigned char>(v >> 8),
                          static_cast<unsigned char>(v)};
  out.write(reinterpret_cast<char*>(buf), 4);
}

}  // namespace

SampleSet load_idx(const std::string& images_path,
                   const std::string& labels_path) {
  std::ifstream img(images_path, std::ios::binary);
  if (!img) throw InputError("cannot open IDX image file: " + images_path);
  std::ifstream lab(labels_path, std::ios::binary);
  if (!lab) throw InputError("cannot open IDX label file: " + labels_path);

  const std::uint32_t img_magic = read_u32_be(img, images_path, 0);
  if (img_magic != kImageMagic) {
    throw FormatError(images_path + ": bad magic " + std::to_string(img_magic) +
                      " at offset 0 (expected 2051)");
  }
  const std::uint32_t n_images = read_u32_be(img, images_path, 4);
  const std::uint32_t rows = read_u32_be(img, images_path, 8);
  const std::uint32_t cols = read_u32_be(img, images_path, 12);
  if (n_images == 0 || rows == 0 || cols == 0) {
    throw FormatError(images_path + ": zero dimension in header");
  }

  const std::uint32_t lab_magic = read_u32_be(lab, labels_path, 0);
  if (lab_magic != kLabelMagic) {
    throw FormatError(labels_path + ": bad magic " + std::to_string(lab_magic) +
                      " at offset 0 (expected 2049)");
  }
  const std::uint32_t n_labels = read_u32_be(lab, labels_path, 4);
  if (n_labels != n_images) {
    throw FormatError(labels_path + ": label count " + std::to_string(n_labels) +
                      " at offset 4 does not match image count " +
                      std::to_string(n_images));
  }

  SampleSet set;
  set.channels = 1;
  set.length = static_cast<int>(rows * cols);
  set.name = images_path;
  set.features = Matrix(n_images, rows * cols);

  std::vector<unsigned char> buf(static_cast<std::size_t>(rows) * cols);
  for (std::uint32_t i = 0; i < n_images; ++i) {
    img.read(reinterpret_cast<char*>(buf.data()),
             static_cast<std::streamsize>(buf.size()));
    if (img.gcount() != static_cast<std::streamsize>(buf.size())) {
      throw FormatError(images_path + ": truncated at offset " +
                        std::to_string(16 + static_cast<std::size_t>(i) * buf.size()));
    }
    double* row = set.features.row(i);
    for (std::size_t k = 0; k < buf.size(); ++k) {
      row[k] = static_cast<double>(buf[k]);
    }
  }

  set.labels.resize(n_labels);
  std::vector<unsigned char> lbuf(n_labels);
  lab.read(reinterpret_cast<char*>(lbuf.data()),
           static_cast<std::streamsize>(lbuf.size()));
  if (lab.gcount() != static_cast<std::streamsize>(lbuf.size())) {
    throw FormatError(labels_path + ": truncated at offset 8");
  }
  int max_label = 0;
  for (std::uint32_t i = 0; i < n_labels; ++i) {
    set.labels[i] = static_cast<int>(lbuf[i]);
    max_label = std::max(max_label, set.labels[i]);
  }
  set.class_count = max_label + 1;
  // Digit files always carry 10 classes even if a subset misses some.
  if (set.class_count < 2) set.class_count = 2;
  set.validate();
  return set;
}

void save_idx(const SampleSet& set, const std::string& images_path,
              const std::string& labels_path) {
  set.validate();
  if (!set.labeled()) throw InputError("save_idx: set has no labels");
  const int side = static_cast<int>(std::llround(std::sqrt(
      static_cast<double>(set.length))));
  const bool square = static_cast<std::size_t>(side) * side ==
                      static_cast<std::size_t>(set.length);
  const std::uint32_t rows = square ? static_cast<std::uint32_t>(side) : 1u;
  const std::uint32_t cols = square ? static_cast<std::uint32_t>(side)
                                    : static_cast<std::uint32_t>(set.length);

  std::ofstream img(images_path, std::ios::binary);
  if (!img) throw InputError("cannot open for writing: " + images_path);
  write_u32_be(img, kImageMagic);
  write_u32_be(img, static_cast<std::uint32_t>(set.size()));
  write_u32_be(img, rows);
  write_u32_be(img, cols);
  std::vector<unsigned char> buf(static_cast<std::size_t>(set.length));
  for (std::size_t i = 0; i < set.size(); ++i) {
    const double* row = set.features.row(i);
    for (std::size_t k = 0; k < buf.size(); ++k) {
      const double v = std::clamp(row[k], 0.0, 255.0);
      buf[k] = static_cast<unsigned char>(std::llround(v));
    }
    img.write(reinterpret_cast<char*>(buf.data()),
              static_cast<std::streamsize>(buf.size()));
  }
  if (!img) throw InputError("write failed: " + images_path);

  std::ofstream lab(labels_path, std::ios::binary);
  if (!lab) throw InputError("cannot open for writing: " + labels_path);
  write_u32_be(lab, kLabelMagic);
  write_u32_be(lab, static_cast<std::uint32_t>(set.size()));
  for (std::size_t i = 0; i < set.size(); ++i) {
    const unsigned char b = static_cast<unsigned char>(set.labels[i]);
    lab.write(reinterpret_cast<const char*>(&b), 1);
  }
  if (!lab) throw InputError("write failed: " + labels_path);
}

}  // namespace sico
