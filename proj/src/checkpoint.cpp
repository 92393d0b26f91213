#include "sico/checkpoint.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <vector>

namespace sico {

namespace {

constexpr const char* kMagic = "sico-checkpoint";
constexpr int kVersion = 1;

std::string fmt_double(double x) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

void write_layer_line(std::ostream& out, const LayerSpec& l) {
  switch (l.kind) {
    case LayerKind::Dense:
      out << "layer dense " << l.in << ' ' << l.out << '\n';
      break;
    case LayerKind::Conv1D:
      out << "layer conv1d " << l.in_channels << ' ' << l.out_channels << ' '
          << l.kernel << '\n';
      break;
    case LayerKind::MaxPool1D:
      out << "layer maxpool1d " << l.width << '\n';
      break;
    case LayerKind::ReLU:
      out << "layer relu\n";
      break;
    case LayerKind::Dropout:
      out << "layer dropout " << fmt_double(l.rate) << '\n';
      break;
    case LayerKind::Softmax:
      out << "layer softmax\n";
      break;
  }
}

void write_tensor(std::ostream& out, const std::string& name, const Matrix& m) {
  out << "tensor " << name << ' ' << m.rows << ' ' << m.cols << '\n';
  for (std::size_t r = 0; r < m.rows; ++r) {
    const double* row = m.row(r);
    for (std::size_t c = 0; c < m.cols; ++c) {
      if (c) out << ' ';
      out << fmt_double(row[c]);
    }
    out << '\n';
  }
}

struct LineReader {
  std::istream& in;
  int line_no = 0;

  std::string next() {
    std::string line;
    if (!std::getline(in, line)) {
      throw FormatError("checkpoint: unexpected end of file after line " +
                        std::to_string(line_no));
    }
    ++line_no;
    return line;
  }

  [[noreturn]] void fail(const std::string& what) const {
    throw FormatError("checkpoint line " + std::to_string(line_no) + ": " + what);
  }
};

std::vector<std::string> split_ws(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream iss(s);
  std::string tok;
  while (iss >> tok) out.push_back(tok);
  return out;
}

double parse_double(LineReader& r, const std::string& tok) {
  double v = 0.0;
  const char* begin = tok.data();
  const char* end = begin + tok.size();
  auto res = std::from_chars(begin, end, v);
  if (res.ec != std::errc{} || res.ptr != end) r.fail("bad number '" + tok + "'");
  return v;
}

long parse_long(LineReader& r, const std::string& tok) {
  long v = 0;
  auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (res.ec != std::errc{} || res.ptr != tok.data() + tok.size()) {
    r.fail("bad integer '" + tok + "'");
  }
  return v;
}

}  // namespace

void save_checkpoint(const NetworkParams& params, std::ostream& out) {
  out << kMagic << " v" << kVersion << '\n';
  out << "seed " << params.seed << '\n';
  out << "input " << params.spec.input.channels << ' '
      << params.spec.input.length << '\n';
  out << "layers " << params.spec.layers.size() << '\n';
  for (const LayerSpec& l : params.spec.layers) write_layer_line(out, l);

  std::size_t tensors = 0;
  for (const LayerParams& lp : params.layers) {
    if (!lp.w.empty()) tensors += 2;
  }
  out << "tensors " << tensors << '\n';
  for (std::size_t i = 0; i < params.layers.size(); ++i) {
    const LayerParams& lp = params.layers[i];
    if (lp.w.empty()) continue;
    write_tensor(out, "L" + std::to_string(i) + ".w", lp.w);
    write_tensor(out, "L" + std::to_string(i) + ".b", lp.b);
  }
  out << "end\n";
}

void save_checkpoint(const NetworkParams& params, const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw InputError("cannot open checkpoint for writing: " + path);
  save_checkpoint(params, f);
  if (!f) throw InputError("write failed: " + path);
}

std::string checkpoint_string(const NetworkParams& params) {
  std::ostringstream oss;
  save_checkpoint(params, oss);
  return oss.str();
}

NetworkParams load_checkpoint(std::istream& in) {
  LineReader r{in};

  {
    const auto head = split_ws(r.next());
    if (head.size() != 2 || head[0] != kMagic || head[1] != "v1") {
      r.fail("not a v1 checkpoint header");
    }
  }

  NetworkParams params;
  {
    const auto toks = split_ws(r.next());
    if (toks.size() != 2 || toks[0] != "seed") r.fail("expected 'seed'");
    unsigned long long s = 0;
    auto res = std::from_chars(toks[1].data(), toks[1].data() + toks[1].size(), s);
    if (res.ec != std::errc{}) r.fail("bad seed");
    params.seed = s;
  }
  {
    const auto toks = split_ws(r.next());
    if (toks.size() != 3 || toks[0] != "input") r.fail("expected 'input'");
    params.spec.input.channels = static_cast<int>(parse_long(r, toks[1]));
    params.spec.input.length = static_cast<int>(parse_long(r, toks[2]));
  }

  long layer_count = 0;
  {
    const auto toks = split_ws(r.next());
    if (toks.size() != 2 || toks[0] != "layers") r.fail("expected 'layers'");
    layer_count = parse_long(r, toks[1]);
    if (layer_count < 1) r.fail("layer count must be >= 1");
  }
  for (long i = 0; i < layer_count; ++i) {
    const auto toks = split_ws(r.next());
    if (toks.size() < 2 || toks[0] != "layer") r.fail("expected 'layer'");
    const std::string& kind = toks[1];
    if (kind == "dense" && toks.size() == 4) {
      params.spec.layers.push_back(LayerSpec::dense(
          static_cast<int>(parse_long(r, toks[2])),
          static_cast<int>(parse_long(r, toks[3]))));
    } else if (kind == "conv1d" && toks.size() == 5) {
      params.spec.layers.push_back(LayerSpec::conv1d(
          static_cast<int>(parse_long(r, toks[2])),
          static_cast<int>(parse_long(r, toks[3])),
          static_cast<int>(parse_long(r, toks[4]))));
    } else if (kind == "maxpool1d" && toks.size() == 3) {
      params.spec.layers.push_back(
          LayerSpec::maxpool1d(static_cast<int>(parse_long(r, toks[2]))));
    } else if (kind == "relu" && toks.size() == 2) {
      params.spec.layers.push_back(LayerSpec::relu());
    } else if (kind == "dropout" && toks.size() == 3) {
      params.spec.layers.push_back(LayerSpec::dropout(parse_double(r, toks[2])));
    } else if (kind == "softmax" && toks.size() == 2) {
      params.spec.layers.push_back(LayerSpec::softmax());
    } else {
      r.fail("unknown layer line '" + kind + "'");
    }
  }
  params.spec.shape_walk();  // reject inconsistent specs early

  long tensor_count = 0;
  {
    const auto toks = split_ws(r.next());
    if (toks.size() != 2 || toks[0] != "tensors") r.fail("expected 'tensors'");
    tensor_count = parse_long(r, toks[1]);
  }

  params.layers.resize(params.spec.layers.size());
  for (long t = 0; t < tensor_count; ++t) {
    const auto toks = split_ws(r.next());
    if (toks.size() != 4 || toks[0] != "tensor") r.fail("expected 'tensor'");
    const std::string& name = toks[1];
    const long rows = parse_long(r, toks[2]);
    const long cols = parse_long(r, toks[3]);
    if (rows < 1 || cols < 1) r.fail("bad tensor shape");

    // names are L<index>.w / L<index>.b
    if (name.size() < 4 || name[0] != 'L') r.fail("bad tensor name '" + name + "'");
    const auto dot = name.find('.');
    if (dot == std::string::npos || dot + 2 != name.size()) {
      r.fail("bad tensor name '" + name + "'");
    }
    const long layer_index = parse_long(r, name.substr(1, dot - 1));
    if (layer_index < 0 || layer_index >= layer_count) {
      r.fail("tensor names out-of-range layer");
    }
    const char which = name[dot + 1];
    Matrix m(static_cast<std::size_t>(rows), static_cast<std::size_t>(cols));
    for (long row = 0; row < rows; ++row) {
      const auto vals = split_ws(r.next());
      if (vals.size() != static_cast<std::size_t>(cols)) {
        r.fail("tensor row has wrong width");
      }
      for (long c = 0; c < cols; ++c) {
        m(static_cast<std::size_t>(row), static_cast<std::size_t>(c)) =
            parse_double(r, vals[static_cast<std::size_t>(c)]);
      }
    }
    if (which == 'w') {
      params.layers[static_cast<std::size_t>(layer_index)].w = std::move(m);
    } else if (which == 'b') {
      params.layers[static_cast<std::size_t>(layer_index)].b = std::move(m);
    } else {
      r.fail("tensor name must end in .w or .b");
    }
  }

  {
    const auto toks = split_ws(r.next());
    if (toks.size() != 1 || toks[0] != "end") r.fail("expected 'end'");
  }

  // Verify tensor shapes against the spec.
  const NetworkParams reference = init_network(params.spec, 0);
  for (std::size_t i = 0; i < reference.layers.size(); ++i) {
    const LayerParams& want = reference.layers[i];
    const LayerParams& got = params.layers[i];
    if (!want.w.same_shape(got.w) || !want.b.same_shape(got.b)) {
      throw FormatError("checkpoint: tensor shapes for layer " +
                        std::to_string(i) + " do not match the spec");
    }
  }
  return params;
}

NetworkParams load_checkpoint(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw InputError("cannot open checkpoint: " + path);
  return load_checkpoint(f);
}

}  // namespace sico
