#include "evfuse/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <unordered_map>

#include "evfuse/csv.hpp"
#include "evfuse/errors.hpp"

namespace evfuse {

std::string_view to_string(Split split) {
  switch (split) {
    case Split::kTrain: return "train";
    case Split::kValidation: return "validation";
    case Split::kTest: return "test";
  }
  return "unknown";
}

std::vector<std::string> MultiViewDataset::view_ids() const {
  std::vector<std::string> ids;
  ids.reserve(views.size());
  for (const auto& v : views) ids.push_back(v.id);
  return ids;
}

std::size_t MultiViewDataset::view_index(std::string_view id) const {
  for (std::size_t v = 0; v < views.size(); ++v) {
    if (views[v].id == id) return v;
  }
  fail(ErrorKind::kConfiguration, "unknown view '" + std::string(id) + "'");
}

const ViewMatrix& MultiViewDataset::view(std::string_view id) const {
  return views[view_index(id)];
}

std::vector<std::size_t> MultiViewDataset::rows(Split which) const {
  if (split.size() != sample_count()) {
    fail(ErrorKind::kConfiguration, "dataset has no split assigned");
  }
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < split.size(); ++i) {
    if (split[i] == which) out.push_back(i);
  }
  return out;
}

void MultiViewDataset::validate() const {
  const std::size_t n = sample_count();
  if (views.empty()) fail(ErrorKind::kConfiguration, "dataset has no views");
  if (labels.size() != n) fail(ErrorKind::kAlignment, "label count differs from sample count");
  std::set<std::string> seen;
  for (const auto& v : views) {
    if (!seen.insert(v.id).second) fail(ErrorKind::kConfiguration, "duplicate view id " + v.id);
    if (static_cast<std::size_t>(v.values.rows()) != n) {
      fail(ErrorKind::kAlignment, "view " + v.id + " has " + std::to_string(v.values.rows()) +
                                      " rows, expected " + std::to_string(n));
    }
  }
  if (class_count < 2) fail(ErrorKind::kLabel, "need at least 2 classes");
  for (std::size_t i = 0; i < n; ++i) {
    if (labels[i] >= class_count) {
      fail(ErrorKind::kLabel, "label of " + sample_ids[i] + " out of range");
    }
  }
  if (!split.empty() && split.size() != n) {
    fail(ErrorKind::kAlignment, "split tags do not cover every sample");
  }
}

namespace {

std::string join_ids(const std::vector<std::string>& ids) {
  std::string out;
  const std::size_t shown = std::min<std::size_t>(ids.size(), 5);
  for (std::size_t i = 0; i < shown; ++i) {
    if (i) out += ", ";
    out += ids[i];
  }
  if (ids.size() > shown) out += ", ... (" + std::to_string(ids.size()) + " total)";
  return out;
}

struct LoadedView {
  std::vector<std::string> feature_names;
  std::vector<std::string> ids;  // empty when there is no id column
  Eigen::MatrixXd values;
};

LoadedView read_view(const ViewSource& source, IdColumn id_column) {
  const auto rows = csv::read_file(source.path);
  if (rows.empty()) fail(ErrorKind::kParse, source.path.string() + ": empty file");
  const std::size_t first_feature = id_column == IdColumn::kFirstColumn ? 1 : 0;
  const auto& header = rows.front();
  if (header.size() <= first_feature) {
    fail(ErrorKind::kParse, source.path.string() + ": header has no feature columns");
  }
  LoadedView out;
  out.feature_names.assign(header.begin() + static_cast<std::ptrdiff_t>(first_feature),
                           header.end());
  const auto n = static_cast<Eigen::Index>(rows.size() - 1);
  const auto m = static_cast<Eigen::Index>(out.feature_names.size());
  out.values.resize(n, m);
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    if (row.size() != header.size()) {
      fail(ErrorKind::kParse, source.path.string() + ": row " + std::to_string(r + 1) + " has " +
                                  std::to_string(row.size()) + " cells, header has " +
                                  std::to_string(header.size()));
    }
    if (id_column == IdColumn::kFirstColumn) out.ids.push_back(row[0]);
    for (std::size_t c = first_feature; c < row.size(); ++c) {
      const std::string where = source.path.string() + " row " + std::to_string(r + 1) +
                                " column " + std::to_string(c + 1);
      out.values(static_cast<Eigen::Index>(r - 1), static_cast<Eigen::Index>(c - first_feature)) =
          csv::parse_real(row[c], where);
    }
  }
  return out;
}

}  // namespace

MultiViewDataset load_dataset(std::span<const ViewSource> views,
                              const std::filesystem::path& label_path, IdColumn id_column) {
  if (views.empty()) fail(ErrorKind::kConfiguration, "no view files given");
  const auto label_rows = csv::read_file(label_path);
  if (label_rows.size() < 2) fail(ErrorKind::kParse, label_path.string() + ": no label rows");
  if (label_rows.front().size() != 2) {
    fail(ErrorKind::kParse, label_path.string() + ": expected columns sample_id,label");
  }

  MultiViewDataset ds;
  std::unordered_map<std::string, std::size_t> position;
  std::size_t max_label = 0;
  for (std::size_t r = 1; r < label_rows.size(); ++r) {
    const auto& row = label_rows[r];
    const std::string where = label_path.string() + " row " + std::to_string(r + 1);
    if (row.size() != 2) fail(ErrorKind::kParse, where + ": expected 2 cells");
    if (!position.emplace(row[0], ds.sample_ids.size()).second) {
      fail(ErrorKind::kAlignment, where + ": duplicate sample id " + row[0]);
    }
    const auto label = static_cast<std::size_t>(csv::parse_integer(row[1], where + " column 2"));
    max_label = std::max(max_label, label);
    ds.sample_ids.push_back(row[0]);
    ds.labels.push_back(label);
  }
  ds.class_count = max_label + 1;
  const std::size_t n = ds.sample_ids.size();

  for (const auto& source : views) {
    LoadedView loaded = read_view(source, id_column);
    ViewMatrix view{source.id, std::move(loaded.feature_names), {}};
    if (id_column == IdColumn::kNone) {
      if (static_cast<std::size_t>(loaded.values.rows()) != n) {
        fail(ErrorKind::kAlignment, "view " + source.id + " has " +
                                        std::to_string(loaded.values.rows()) +
                                        " rows but the label file has " + std::to_string(n));
      }
      view.values = std::move(loaded.values);
    } else {
      std::vector<std::string> unknown;
      std::vector<std::string> duplicated;
      std::vector<int> filled(n, 0);
      view.values.resize(static_cast<Eigen::Index>(n), loaded.values.cols());
      for (std::size_t r = 0; r < loaded.ids.size(); ++r) {
        const auto it = position.find(loaded.ids[r]);
        if (it == position.end()) {
          unknown.push_back(loaded.ids[r]);
          continue;
        }
        if (filled[it->second]++) duplicated.push_back(loaded.ids[r]);
        view.values.row(static_cast<Eigen::Index>(it->second)) =
            loaded.values.row(static_cast<Eigen::Index>(r));
      }
      std::vector<std::string> missing;
      for (std::size_t i = 0; i < n; ++i) {
        if (!filled[i]) missing.push_back(ds.sample_ids[i]);
      }
      if (!unknown.empty()) {
        fail(ErrorKind::kAlignment,
             "view " + source.id + " has ids absent from the label file: " + join_ids(unknown));
      }
      if (!duplicated.empty()) {
        fail(ErrorKind::kAlignment, "view " + source.id + " repeats ids: " + join_ids(duplicated));
      }
      if (!missing.empty()) {
        fail(ErrorKind::kAlignment, "view " + source.id + " lacks ids: " + join_ids(missing));
      }
    }
    ds.views.push_back(std::move(view));
  }
  ds.validate();
  return ds;
}

MultiViewDataset split_dataset(MultiViewDataset dataset, const SplitFractions& fractions,
                               std::uint64_t seed) {
  const double parts[] = {fractions.train, fractions.validation, fractions.test};
  for (double f : parts) {
    if (!(f > 0.0)) fail(ErrorKind::kConfiguration, "split fractions must be positive");
  }
  if (std::abs(fractions.train + fractions.validation + fractions.test - 1.0) > 1e-9) {
    fail(ErrorKind::kConfiguration, "split fractions must sum to 1");
  }
  std::vector<std::vector<std::size_t>> by_class(dataset.class_count);
  for (std::size_t i = 0; i < dataset.sample_count(); ++i) {
    by_class[dataset.labels[i]].push_back(i);
  }
  std::mt19937_64 rng(seed);
  dataset.split.assign(dataset.sample_count(), Split::kTest);
  for (std::size_t c = 0; c < by_class.size(); ++c) {
    auto& members = by_class[c];
    std::shuffle(members.begin(), members.end(), rng);
    const auto count = static_cast<double>(members.size());
    const auto n_train = static_cast<std::size_t>(std::llround(count * fractions.train));
    const auto n_val = static_cast<std::size_t>(std::llround(count * fractions.validation));
    if (n_train == 0 || n_val == 0 || n_train + n_val >= members.size()) {
      fail(ErrorKind::kStratification,
           "class " + std::to_string(c) + " with " + std::to_string(members.size()) +
               " samples cannot populate every split");
    }
    for (std::size_t j = 0; j < members.size(); ++j) {
      dataset.split[members[j]] = j < n_train           ? Split::kTrain
                                  : j < n_train + n_val ? Split::kValidation
                                                        : Split::kTest;
    }
  }
  return dataset;
}

MultiViewDataset split_dataset(MultiViewDataset dataset,
                               const std::vector<std::string>& train_ids,
                               const std::vector<std::string>& validation_ids,
                               const std::vector<std::string>& test_ids) {
  std::unordered_map<std::string, std::size_t> position;
  for (std::size_t i = 0; i < dataset.sample_count(); ++i) position[dataset.sample_ids[i]] = i;
  std::vector<int> assigned(dataset.sample_count(), -1);
  const std::pair<const std::vector<std::string>*, Split> lists[] = {
      {&train_ids, Split::kTrain}, {&validation_ids, Split::kValidation}, {&test_ids, Split::kTest}};
  for (const auto& [ids, tag] : lists) {
    if (ids->empty()) {
      fail(ErrorKind::kConfiguration, std::string(to_string(tag)) + " split is empty");
    }
    for (const auto& id : *ids) {
      const auto it = position.find(id);
      if (it == position.end()) {
        fail(ErrorKind::kAlignment, "split file names unknown sample " + id);
      }
      if (assigned[it->second] != -1) {
        fail(ErrorKind::kAlignment, "sample " + id + " appears in more than one split");
      }
      assigned[it->second] = static_cast<int>(tag);
    }
  }
  std::vector<std::string> unassigned;
  for (std::size_t i = 0; i < assigned.size(); ++i) {
    if (assigned[i] == -1) unassigned.push_back(dataset.sample_ids[i]);
  }
  if (!unassigned.empty()) {
    fail(ErrorKind::kAlignment, "split files leave samples unassigned: " + join_ids(unassigned));
  }
  dataset.split.resize(dataset.sample_count());
  for (std::size_t i = 0; i < assigned.size(); ++i) {
    dataset.split[i] = static_cast<Split>(assigned[i]);
  }
  return dataset;
}

std::vector<std::string> read_id_list(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::kIo, "cannot open " + path.string());
  std::vector<std::string> ids;
  std::string line;
  while (std::getline(in, line)) {
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
    if (!line.empty()) ids.push_back(line);
  }
  return ids;
}

NormalizedDataset normalize(const MultiViewDataset& dataset) {
  const auto train = dataset.rows(Split::kTrain);
  if (train.empty()) fail(ErrorKind::kConfiguration, "normalize needs training rows");
  NormalizedDataset out{dataset, {}};
  for (auto& view : out.dataset.views) {
    const Eigen::Index m = view.values.cols();
    FeatureScaling scaling{Eigen::RowVectorXd::Zero(m), Eigen::RowVectorXd::Ones(m)};
    for (std::size_t i : train) scaling.mean += view.values.row(static_cast<Eigen::Index>(i));
    scaling.mean /= static_cast<double>(train.size());
    Eigen::RowVectorXd var = Eigen::RowVectorXd::Zero(m);
    for (std::size_t i : train) {
      var += (view.values.row(static_cast<Eigen::Index>(i)) - scaling.mean).array().square().matrix();
    }
    var /= static_cast<double>(train.size());
    for (Eigen::Index c = 0; c < m; ++c) {
      const double sd = std::sqrt(var[c]);
      scaling.scale[c] = sd < kDegenerateStd ? 1.0 : sd;
    }
    view.values.rowwise() -= scaling.mean;
    view.values.array().rowwise() /= scaling.scale.array();
    out.scaling.push_back(std::move(scaling));
  }
  return out;
}

void SyntheticConfig::validate() const {
  if (classes < 2) fail(ErrorKind::kConfiguration, "synthetic classes must be at least 2");
  if (n_samples < classes) fail(ErrorKind::kConfiguration, "synthetic n_samples below class count");
  if (feature_dims.empty()) fail(ErrorKind::kConfiguration, "synthetic config needs at least one view");
  if (separations.size() != feature_dims.size()) {
    fail(ErrorKind::kConfiguration, "separations and feature_dims must have the same length");
  }
  for (std::size_t d : feature_dims) {
    if (d == 0) fail(ErrorKind::kConfiguration, "feature dims must be at least 1");
  }
  for (double s : separations) {
    if (!(s >= 0.0) || !std::isfinite(s)) {
      fail(ErrorKind::kConfiguration, "separations must be finite and non-negative");
    }
  }
  if (!(noise > 0.0) || !std::isfinite(noise)) {
    fail(ErrorKind::kConfiguration, "noise must be positive");
  }
  if (!view_ids.empty() && view_ids.size() != feature_dims.size()) {
    fail(ErrorKind::kConfiguration, "view_ids must name every view");
  }
}

std::vector<std::string> SyntheticConfig::resolved_view_ids() const {
  if (!view_ids.empty()) return view_ids;
  std::vector<std::string> ids;
  for (std::size_t v = 0; v < feature_dims.size(); ++v) ids.push_back("view" + std::to_string(v));
  return ids;
}

namespace {

std::string trim_copy(std::string s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<std::string> split_list(const std::string& value) {
  std::vector<std::string> items;
  std::stringstream ss(value);
  std::string item;
  while (std::getline(ss, item, ',')) items.push_back(trim_copy(item));
  return items;
}

}  // namespace

SyntheticConfig parse_synthetic_config(std::istream& in) {
  SyntheticConfig cfg;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim_copy(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    const std::string where = "synthetic config line " + std::to_string(line_no);
    if (eq == std::string::npos) fail(ErrorKind::kParse, where + ": expected key = value");
    const std::string key = trim_copy(line.substr(0, eq));
    const std::string value = trim_copy(line.substr(eq + 1));
    if (key == "n_samples") {
      cfg.n_samples = static_cast<std::size_t>(csv::parse_integer(value, where));
    } else if (key == "classes") {
      cfg.classes = static_cast<std::size_t>(csv::parse_integer(value, where));
    } else if (key == "feature_dims") {
      cfg.feature_dims.clear();
      for (const auto& item : split_list(value)) {
        cfg.feature_dims.push_back(static_cast<std::size_t>(csv::parse_integer(item, where)));
      }
    } else if (key == "separations") {
      cfg.separations.clear();
      for (const auto& item : split_list(value)) cfg.separations.push_back(csv::parse_real(item, where));
    } else if (key == "noise") {
      cfg.noise = csv::parse_real(value, where);
    } else if (key == "seed") {
      cfg.seed = static_cast<std::uint64_t>(csv::parse_integer(value, where));
    } else if (key == "view_ids") {
      cfg.view_ids = split_list(value);
    } else {
      fail(ErrorKind::kParse, where + ": unknown key '" + key + "'");
    }
  }
  cfg.validate();
  return cfg;
}

SyntheticConfig read_synthetic_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::kIo, "cannot open " + path.string());
  return parse_synthetic_config(in);
}

std::string format_synthetic_config(const SyntheticConfig& config) {
  std::ostringstream out;
  out.precision(17);
  const auto join = [&](const auto& items) {
    std::ostringstream s;
    s.precision(17);
    for (std::size_t i = 0; i < items.size(); ++i) s << (i ? "," : "") << items[i];
    return s.str();
  };
  out << "n_samples = " << config.n_samples << "\n"
      << "classes = " << config.classes << "\n"
      << "feature_dims = " << join(config.feature_dims) << "\n"
      << "separations = " << join(config.separations) << "\n"
      << "noise = " << config.noise << "\n"
      << "seed = " << config.seed << "\n"
      << "view_ids = " << join(config.resolved_view_ids()) << "\n";
  return out.str();
}

MultiViewDataset generate_synthetic(const SyntheticConfig& config) {
  config.validate();
  const std::size_t n = config.n_samples;
  const std::size_t k_count = config.classes;
  MultiViewDataset ds;
  ds.class_count = k_count;
  for (std::size_t i = 0; i < n; ++i) {
    std::ostringstream id;
    id << "s" << std::setfill('0') << std::setw(5) << i;
    ds.sample_ids.push_back(id.str());
    ds.labels.push_back(i % k_count);
  }
  std::mt19937_64 rng(config.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const auto ids = config.resolved_view_ids();
  for (std::size_t v = 0; v < config.feature_dims.size(); ++v) {
    const std::size_t dim = config.feature_dims[v];
    // Class k sits on axis (k mod dim), flipped for every wrap-around, so each
    // mean has norm `separation` and distinct classes differ while 2*dim >= K.
    Eigen::MatrixXd means = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(k_count),
                                                  static_cast<Eigen::Index>(dim));
    for (std::size_t k = 0; k < k_count; ++k) {
      const double sign = (k / dim) % 2 == 0 ? 1.0 : -1.0;
      means(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k % dim)) =
          sign * config.separations[v];
    }
    ViewMatrix view{ids[v], {}, Eigen::MatrixXd(static_cast<Eigen::Index>(n),
                                                static_cast<Eigen::Index>(dim))};
    for (std::size_t f = 0; f < dim; ++f) view.feature_names.push_back("f" + std::to_string(f));
    for (std::size_t i = 0; i < n; ++i) {
      const auto row = static_cast<Eigen::Index>(i);
      for (std::size_t f = 0; f < dim; ++f) {
        const auto col = static_cast<Eigen::Index>(f);
        view.values(row, col) =
            means(static_cast<Eigen::Index>(ds.labels[i]), col) + config.noise * gauss(rng);
      }
    }
    ds.views.push_back(std::move(view));
  }
  ds.validate();
  return ds;
}

std::vector<ViewSource> write_dataset_csv(const MultiViewDataset& dataset,
                                          const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::vector<ViewSource> sources;
  char buf[64];
  for (const auto& view : dataset.views) {
    const auto path = dir / (view.id + ".csv");
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(ErrorKind::kIo, "cannot write " + path.string());
    out << "sample_id";
    for (const auto& name : view.feature_names) out << ',' << name;
    out << '\n';
    for (std::size_t i = 0; i < dataset.sample_count(); ++i) {
      out << dataset.sample_ids[i];
      for (Eigen::Index c = 0; c < view.values.cols(); ++c) {
        std::snprintf(buf, sizeof buf, "%.17g", view.values(static_cast<Eigen::Index>(i), c));
        out << ',' << buf;
      }
      out << '\n';
    }
    sources.push_back({view.id, path});
  }
  const auto label_path = dir / "labels.csv";
  std::ofstream labels(label_path, std::ios::binary);
  if (!labels) fail(ErrorKind::kIo, "cannot write " + label_path.string());
  labels << "sample_id,label\n";
  for (std::size_t i = 0; i < dataset.sample_count(); ++i) {
    labels << dataset.sample_ids[i] << ',' << dataset.labels[i] << '\n';
  }
  return sources;
}

}  // namespace evfuse
