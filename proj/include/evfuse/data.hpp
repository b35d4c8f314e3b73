#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace evfuse {

enum class Split : std::uint8_t { kTrain, kValidation, kTest };

std::string_view to_string(Split split);

struct ViewMatrix {
  std::string id;
  std::vector<std::string> feature_names;
  Eigen::MatrixXd values;  // samples x features
};

/// Aligned per-view feature matrices. Row i of every view, labels[i] and
/// sample_ids[i] describe the same sample.
struct MultiViewDataset {
  std::vector<ViewMatrix> views;
  std::vector<std::size_t> labels;
  std::vector<std::string> sample_ids;
  std::vector<Split> split;  // empty until split_dataset runs
  std::size_t class_count = 0;

  std::size_t sample_count() const noexcept { return sample_ids.size(); }
  std::size_t view_count() const noexcept { return views.size(); }
  std::vector<std::string> view_ids() const;
  const ViewMatrix& view(std::string_view id) const;
  std::size_t view_index(std::string_view id) const;

  /// Row indices tagged with `which`, ascending. Throws kConfiguration before splitting.
  std::vector<std::size_t> rows(Split which) const;

  /// Checks the alignment and label invariants; throws on violation.
  void validate() const;
};

enum class IdColumn { kFirstColumn, kNone };

struct ViewSource {
  std::string id;
  std::filesystem::path path;
};

/// One CSV per view (header row of feature names) plus a label CSV with
/// columns sample_id,label. Samples follow the label file order.
MultiViewDataset load_dataset(std::span<const ViewSource> views,
                              const std::filesystem::path& label_path, IdColumn id_column);

struct SplitFractions {
  double train = 0.6;
  double validation = 0.2;
  double test = 0.2;
};

/// Seeded split stratified by label.
MultiViewDataset split_dataset(MultiViewDataset dataset, const SplitFractions& fractions,
                               std::uint64_t seed);

/// Explicit partition: one list of sample ids per split, which must partition the ids.
MultiViewDataset split_dataset(MultiViewDataset dataset,
                               const std::vector<std::string>& train_ids,
                               const std::vector<std::string>& validation_ids,
                               const std::vector<std::string>& test_ids);

/// Reads a split index file: one sample id per line.
std::vector<std::string> read_id_list(const std::filesystem::path& path);

struct FeatureScaling {
  Eigen::RowVectorXd mean;
  Eigen::RowVectorXd scale;  // 1 where the training std is degenerate
};

inline constexpr double kDegenerateStd = 1e-12;

struct NormalizedDataset {
  MultiViewDataset dataset;
  std::vector<FeatureScaling> scaling;  // one per view
};

/// z-scores every feature with statistics from the training rows only.
NormalizedDataset normalize(const MultiViewDataset& dataset);

struct SyntheticConfig {
  std::size_t n_samples = 600;
  std::size_t classes = 2;
  std::vector<std::size_t> feature_dims{20, 20, 20};
  std::vector<double> separations{6.0, 1.0, 1.0};
  double noise = 1.0;
  std::uint64_t seed = 0;
  std::vector<std::string> view_ids;  // defaults to view0, view1, ...

  void validate() const;
  std::vector<std::string> resolved_view_ids() const;
};

/// key = value lines; '#' starts a comment; lists are comma-separated.
SyntheticConfig parse_synthetic_config(std::istream& in);
SyntheticConfig read_synthetic_config(const std::filesystem::path& path);
std::string format_synthetic_config(const SyntheticConfig& config);

/// Class k of view v is drawn from N(mean_vk, noise^2 I) with |mean_vk| equal
/// to that view's separation. Labels cycle through the classes.
MultiViewDataset generate_synthetic(const SyntheticConfig& config);

/// Writes <dir>/<view>.csv per view and <dir>/labels.csv; returns the view sources.
std::vector<ViewSource> write_dataset_csv(const MultiViewDataset& dataset,
                                          const std::filesystem::path& dir);

}  // namespace evfuse
