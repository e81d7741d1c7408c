#include "mcmh/checkpoint.hpp"

#include <charconv>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

#include "mcmh/error.hpp"
#include "mcmh/format.hpp"

namespace mcmh {
namespace {

constexpr const char* kNetworks[] = {"generator", "predictor", "complement"};

const char* selection_name(Selection s) { return s == Selection::all ? "all" : "top_d"; }

void write_network(std::ostream& out, std::string_view name, const DenseParams& net) {
  out << "[network " << name << "]\n";
  out << "layers=" << net.layers.size() << '\n';
  for (std::size_t l = 0; l < net.layers.size(); ++l) {
    const auto& layer = net.layers[l];
    out << "layer " << l << ' ' << layer.weight.rows << ' ' << layer.weight.cols << '\n';
    for (std::size_t r = 0; r < layer.weight.rows; ++r) {
      for (std::size_t c = 0; c < layer.weight.cols; ++c) {
        if (c > 0) out << ' ';
        out << exact(layer.weight(r, c));
      }
      out << '\n';
    }
    out << "bias";
    for (const double b : layer.bias) out << ' ' << exact(b);
    out << '\n';
  }
}

class Reader {
 public:
  Reader(std::istream& in, std::string_view source) : in_(in), source_(source) {}

  std::string next() {
    std::string line;
    if (!std::getline(in_, line)) fail("unexpected end of checkpoint");
    ++line_no_;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return line;
  }

  [[noreturn]] void fail(const std::string& what) const {
    throw DataError(std::string(source_) + ":" + std::to_string(line_no_) + ": " + what);
  }

  std::size_t to_size(std::string_view text) const {
    std::size_t v = 0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc() || ptr != text.data() + text.size()) {
      fail("expected a non-negative integer, got '" + std::string(text) + "'");
    }
    return v;
  }

  double to_double(const std::string& text) const {
    try {
      std::size_t used = 0;
      const double v = std::stod(text, &used);
      if (used != text.size()) throw std::invalid_argument(text);
      return v;
    } catch (const std::exception&) {
      fail("expected a number, got '" + text + "'");
    }
  }

  std::vector<double> numbers(std::istringstream& row, std::size_t count) {
    std::vector<double> out;
    out.reserve(count);
    std::string token;
    while (row >> token) out.push_back(to_double(token));
    if (out.size() != count) {
      fail("expected " + std::to_string(count) + " values, got " + std::to_string(out.size()));
    }
    return out;
  }

  DenseParams network(std::string_view name) {
    if (next() != "[network " + std::string(name) + "]") fail("expected [network " + std::string(name) + "]");
    const auto count_line = next();
    if (!count_line.starts_with("layers=")) fail("expected layers=N");
    const auto n_layers = to_size(std::string_view(count_line).substr(7));
    DenseParams net;
    for (std::size_t l = 0; l < n_layers; ++l) {
      std::istringstream header(next());
      std::string word;
      std::size_t index = 0, rows = 0, cols = 0;
      if (!(header >> word >> index >> rows >> cols) || word != "layer" || index != l) {
        fail("expected 'layer " + std::to_string(l) + " ROWS COLS'");
      }
      if (l > 0 && cols != net.layers.back().weight.rows) fail("layer shapes do not chain");
      DenseLayer layer{Matrix(rows, cols), {}};
      for (std::size_t r = 0; r < rows; ++r) {
        std::istringstream row(next());
        const auto values = numbers(row, cols);
        std::copy(values.begin(), values.end(), layer.weight.values.begin() + static_cast<std::ptrdiff_t>(r * cols));
      }
      std::istringstream bias(next());
      if (!(bias >> word) || word != "bias") fail("expected bias line");
      layer.bias = numbers(bias, rows);
      net.layers.push_back(std::move(layer));
    }
    return net;
  }

 private:
  std::istream& in_;
  std::string_view source_;
  std::size_t line_no_ = 0;
};

}  // namespace

void write_checkpoint(std::ostream& out, const Checkpoint& checkpoint) {
  const auto& m = checkpoint.model;
  const auto& meta = checkpoint.meta;
  out << kCheckpointHeader << '\n';
  out << "[metadata]\n";
  out << "relation=" << meta.relation << '\n';
  out << "mode=" << meta.mode << '\n';
  out << "dim=" << m.dim << '\n';
  out << "d=" << m.d << '\n';
  out << "lambda_s=" << exact(m.lambda_s) << '\n';
  out << "arch=" << arch_name(m.predictor_arch) << '\n';
  out << "selection=" << selection_name(m.selection) << '\n';
  out << "seed=" << meta.seed << '\n';
  out << "best_dev_map=" << exact(meta.best_dev_map) << '\n';
  out << "epoch=" << meta.epoch << '\n';
  out << "vocabulary=" << meta.vocabulary << '\n';
  write_network(out, kNetworks[0], m.generator);
  write_network(out, kNetworks[1], m.predictor);
  write_network(out, kNetworks[2], m.complement);
}

Checkpoint read_checkpoint(std::istream& in, std::string_view source) {
  Reader reader(in, source);
  if (reader.next() != kCheckpointHeader) reader.fail("not an mcmh checkpoint (bad header)");
  if (reader.next() != "[metadata]") reader.fail("expected [metadata]");
  std::map<std::string, std::string> kv;
  const char* keys[] = {"relation", "mode", "dim", "d", "lambda_s", "arch",
                        "selection", "seed", "best_dev_map", "epoch", "vocabulary"};
  for (const char* key : keys) {
    const auto line = reader.next();
    const auto eq = line.find('=');
    if (eq == std::string::npos || line.substr(0, eq) != key) {
      reader.fail(std::string("expected ") + key + "=...");
    }
    kv[key] = line.substr(eq + 1);
  }

  Checkpoint cp;
  cp.meta.relation = kv["relation"];
  cp.meta.mode = kv["mode"];
  cp.meta.vocabulary = kv["vocabulary"];
  cp.meta.seed = reader.to_size(kv["seed"]);
  cp.meta.best_dev_map = reader.to_double(kv["best_dev_map"]);
  cp.meta.epoch = static_cast<int>(reader.to_size(kv["epoch"]));
  auto& m = cp.model;
  m.dim = reader.to_size(kv["dim"]);
  m.d = reader.to_size(kv["d"]);
  m.lambda_s = reader.to_double(kv["lambda_s"]);
  try {
    m.predictor_arch = parse_arch(kv["arch"].c_str());
  } catch (const std::invalid_argument& e) {
    reader.fail(e.what());
  }
  if (kv["selection"] == "all") {
    m.selection = Selection::all;
  } else if (kv["selection"] == "top_d") {
    m.selection = Selection::top_d;
  } else {
    reader.fail("unknown selection '" + kv["selection"] + "'");
  }
  m.generator = reader.network(kNetworks[0]);
  m.predictor = reader.network(kNetworks[1]);
  m.complement = reader.network(kNetworks[2]);

  if (m.generator.input_dim() != m.dim || m.generator.output_dim() != 2 * m.dim ||
      m.predictor.input_dim() != m.dim || m.complement.input_dim() != m.dim ||
      m.predictor.output_dim() != 2 || m.complement.output_dim() != 2) {
    throw DataError(std::string(source) + ": network shapes disagree with dim=" +
                    std::to_string(m.dim));
  }
  return cp;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write checkpoint " + path.string());
  write_checkpoint(out, checkpoint);
  if (!out) throw DataError("failed writing checkpoint " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open checkpoint " + path.string());
  return read_checkpoint(in, path.string());
}

}  // namespace mcmh
