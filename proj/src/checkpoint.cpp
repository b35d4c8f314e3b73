#include "evfuse/checkpoint.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

#include "evfuse/errors.hpp"

namespace evfuse {
namespace {

constexpr const char* kMagic = "evfuse-checkpoint";

void write_real(std::ostream& out, double value) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%a", value);
  out << buf;
}

double read_real(std::istream& in) {
  std::string token;
  if (!(in >> token)) fail(ErrorKind::kParse, "checkpoint truncated");
  char* end = nullptr;
  const double value = std::strtod(token.c_str(), &end);
  if (end != token.c_str() + token.size()) {
    fail(ErrorKind::kParse, "checkpoint: bad real '" + token + "'");
  }
  return value;
}

void expect(std::istream& in, const std::string& word) {
  std::string token;
  if (!(in >> token) || token != word) {
    fail(ErrorKind::kParse, "checkpoint: expected '" + word + "', got '" + token + "'");
  }
}

template <typename T>
T read_value(std::istream& in, const char* what) {
  T value{};
  if (!(in >> value)) fail(ErrorKind::kParse, std::string("checkpoint: cannot read ") + what);
  return value;
}

}  // namespace

void save_checkpoint(const EvidentialClassifier& model, std::ostream& out) {
  out << kMagic << " 1\n";
  out << "view_id " << model.view_id() << "\n";
  out << "seed " << model.seed() << "\n";
  out << "activation " << to_string(model.activation()) << "\n";
  out << "layer_dims";
  for (std::size_t d : model.layer_dims()) out << ' ' << d;
  out << "\n";
  const auto& layers = model.layers();
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const auto& w = layers[l].weights;
    out << "layer " << l << " weights " << w.rows() << ' ' << w.cols() << "\n";
    for (Eigen::Index r = 0; r < w.rows(); ++r) {
      for (Eigen::Index c = 0; c < w.cols(); ++c) {
        if (c) out << ' ';
        write_real(out, w(r, c));
      }
      out << "\n";
    }
    out << "layer " << l << " bias " << layers[l].bias.size() << "\n";
    for (Eigen::Index j = 0; j < layers[l].bias.size(); ++j) {
      if (j) out << ' ';
      write_real(out, layers[l].bias[j]);
    }
    out << "\n";
  }
}

EvidentialClassifier load_checkpoint(std::istream& in) {
  expect(in, kMagic);
  if (read_value<int>(in, "version") != 1) fail(ErrorKind::kParse, "unsupported checkpoint version");
  expect(in, "view_id");
  const auto view_id = read_value<std::string>(in, "view_id");
  expect(in, "seed");
  const auto seed = read_value<std::uint64_t>(in, "seed");
  expect(in, "activation");
  const Activation activation = parse_activation(read_value<std::string>(in, "activation"));
  expect(in, "layer_dims");
  std::string line;
  std::getline(in, line);
  std::istringstream dims_in(line);
  std::vector<std::size_t> dims;
  for (std::size_t d; dims_in >> d;) dims.push_back(d);
  if (dims.size() < 2) fail(ErrorKind::kParse, "checkpoint: layer_dims needs two entries");

  std::vector<DenseLayer> layers;
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    expect(in, "layer");
    if (read_value<std::size_t>(in, "layer index") != l) fail(ErrorKind::kParse, "checkpoint: layer order");
    expect(in, "weights");
    const auto rows = read_value<Eigen::Index>(in, "rows");
    const auto cols = read_value<Eigen::Index>(in, "cols");
    if (rows != static_cast<Eigen::Index>(dims[l + 1]) || cols != static_cast<Eigen::Index>(dims[l])) {
      fail(ErrorKind::kParse, "checkpoint: weight shape disagrees with layer_dims");
    }
    DenseLayer layer{Eigen::MatrixXd(rows, cols), Eigen::VectorXd(rows)};
    for (Eigen::Index r = 0; r < rows; ++r) {
      for (Eigen::Index c = 0; c < cols; ++c) layer.weights(r, c) = read_real(in);
    }
    expect(in, "layer");
    if (read_value<std::size_t>(in, "layer index") != l) fail(ErrorKind::kParse, "checkpoint: layer order");
    expect(in, "bias");
    if (read_value<Eigen::Index>(in, "bias size") != rows) {
      fail(ErrorKind::kParse, "checkpoint: bias size disagrees with layer_dims");
    }
    for (Eigen::Index j = 0; j < rows; ++j) layer.bias[j] = read_real(in);
    layers.push_back(std::move(layer));
  }
  return EvidentialClassifier(view_id, std::move(dims), activation, seed, std::move(layers));
}

void save_checkpoint(const EvidentialClassifier& model, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::kIo, "cannot write " + path.string());
  save_checkpoint(model, out);
}

EvidentialClassifier load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::kIo, "cannot open " + path.string());
  return load_checkpoint(in);
}

}  // namespace evfuse
