#include "evfuse/pipeline.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

#include <openssl/evp.h>

#include <json.hpp>

#include "evfuse/checkpoint.hpp"
#include "evfuse/csv.hpp"
#include "evfuse/errors.hpp"
#include "evfuse/evidential_loss.hpp"
#include "evfuse/format.hpp"
#include "evfuse/fusion.hpp"

namespace evfuse {

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

namespace {

// Shortest text that reads back to the same double.
std::string shortest(double value) {
  char buf[32];
  const auto end = std::to_chars(buf, buf + sizeof buf, value).ptr;
  return std::string(buf, end);
}

std::string join(const std::vector<std::string>& items, const char* sep) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) out += sep;
    out += items[i];
  }
  return out;
}

}  // namespace

void RunConfig::validate() const {
  const bool from_files = !views.empty();
  if (from_files == synthetic.has_value()) {
    fail(ErrorKind::kConfiguration, "give either view files or a synthetic config, not both or neither");
  }
  if (from_files && labels.empty()) fail(ErrorKind::kConfiguration, "view files need a label file");
  if (synthetic) synthetic->validate();
  if (repeat < 1) fail(ErrorKind::kConfiguration, "repeat must be at least 1");
  if (grid_size == 0) fail(ErrorKind::kConfiguration, "grid size must be positive");
  if (histogram_bins == 0) fail(ErrorKind::kConfiguration, "histogram bins must be positive");
  for (const auto& t : {t1, t2}) {
    if (t && !(*t >= 0.0 && *t <= 1.0)) fail(ErrorKind::kConfiguration, "thresholds must lie in [0, 1]");
  }
  train.validate();
}

std::string RunConfig::describe() const {
  std::ostringstream out;
  if (synthetic) {
    std::istringstream lines(format_synthetic_config(*synthetic));
    for (std::string line; std::getline(lines, line);) out << "synthetic." << line << "\n";
  } else {
    for (const auto& v : views) out << "view = " << v.id << "=" << v.path.string() << "\n";
    out << "labels = " << labels.string() << "\n";
    out << "id_column = " << (id_column == IdColumn::kFirstColumn ? "first" : "none") << "\n";
  }
  if (split_files) {
    out << "split_files = " << (*split_files)[0].string() << "," << (*split_files)[1].string() << ","
        << (*split_files)[2].string() << "\n";
  } else {
    out << "split = " << shortest(fractions.train) << "," << shortest(fractions.validation) << ","
        << shortest(fractions.test) << "\n";
  }
  out << "epochs = " << train.epochs << "\n"
      << "lr = " << shortest(train.learning_rate) << "\n"
      << "anneal_epochs = " << train.anneal_epochs << "\n"
      << "batch_size = " << train.batch_size << "\n"
      << "optimizer = " << to_string(train.optimizer) << "\n"
      << "activation = " << to_string(train.activation) << "\n";
  out << "hidden =";
  for (std::size_t h : train.hidden) out << " " << h;
  out << "\n";
  out << "view_order = " << join(view_order, ",") << "\n";
  out << "t1 = " << (t1 ? format_real(*t1) : std::string("tuned")) << "\n";
  out << "t2 = " << (t2 ? format_real(*t2) : std::string("tuned")) << "\n";
  out << "grid = " << grid_size << "\n"
      << "tune_on_test = " << (tune_on_test ? "true" : "false") << "\n"
      << "repeat = " << repeat << "\n"
      << "seed = " << seed << "\n"
      << "hist_bins = " << histogram_bins << "\n";
  return out.str();
}

MultiViewDataset prepare_dataset(const RunConfig& config) {
  config.validate();
  MultiViewDataset ds = config.synthetic
                            ? generate_synthetic(*config.synthetic)
                            : load_dataset(config.views, config.labels, config.id_column);
  if (config.split_files) {
    const auto& files = *config.split_files;
    ds = split_dataset(std::move(ds), read_id_list(files[0]), read_id_list(files[1]),
                       read_id_list(files[2]));
  } else {
    ds = split_dataset(std::move(ds), config.fractions, config.seed);
  }
  return normalize(ds).dataset;
}

FeatureSource row_features(const MultiViewDataset& dataset, std::size_t row) {
  return [&dataset, row](std::string_view view_id) {
    const auto& values = dataset.view(view_id).values;
    const auto r = static_cast<Eigen::Index>(row);
    std::vector<double> x(static_cast<std::size_t>(values.cols()));
    for (Eigen::Index c = 0; c < values.cols(); ++c) x[static_cast<std::size_t>(c)] = values(r, c);
    return x;
  };
}

namespace {

// Opinions of every view (dataset order) for every listed row.
std::vector<std::vector<SubjectiveOpinion>> view_opinions(
    const MultiViewDataset& dataset, std::span<const EvidentialClassifier> models,
    std::span<const std::size_t> rows) {
  const TrainingBatch batch = make_batch(dataset, rows);
  std::vector<std::vector<SubjectiveOpinion>> out(rows.size());
  for (std::size_t v = 0; v < dataset.view_count(); ++v) {
    const auto& model = find_model(models, dataset.views[v].id);
    const Eigen::MatrixXd e = model.evidence(batch.views[v]);
    std::vector<double> row(static_cast<std::size_t>(e.cols()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
      for (Eigen::Index k = 0; k < e.cols(); ++k) row[static_cast<std::size_t>(k)] = e(static_cast<Eigen::Index>(i), k);
      out[i].push_back(opinion_from_dirichlet(dirichlet_from_evidence(row)));
    }
  }
  return out;
}

double positive_score(const SubjectiveOpinion& opinion) {
  return expected_probabilities(dirichlet_from_opinion(opinion))[1];
}

MetricReport report_for(const std::vector<SubjectiveOpinion>& opinions,
                        std::span<const std::size_t> truth, std::size_t class_count) {
  std::vector<std::size_t> predicted;
  std::vector<double> scores;
  for (const auto& o : opinions) {
    predicted.push_back(o.predicted_class());
    if (class_count == 2) scores.push_back(positive_score(o));
  }
  return evaluate_predictions(predicted, truth, class_count, scores);
}

}  // namespace

std::vector<CombinationReport> combination_report(const MultiViewDataset& dataset,
                                                  std::span<const EvidentialClassifier> models,
                                                  std::span<const std::size_t> rows) {
  if (rows.empty()) fail(ErrorKind::kEmptyInput, "combination report over no rows");
  const auto per_view = view_opinions(dataset, models, rows);
  const std::size_t view_count = dataset.view_count();
  std::vector<std::vector<std::size_t>> subsets;
  for (std::size_t v = 0; v < view_count; ++v) subsets.push_back({v});
  for (std::size_t a = 0; a < view_count; ++a) {
    for (std::size_t b = a + 1; b < view_count; ++b) subsets.push_back({a, b});
  }
  if (view_count >= 3) {
    std::vector<std::size_t> all(view_count);
    std::iota(all.begin(), all.end(), 0);
    subsets.push_back(all);
  }
  std::vector<std::size_t> truth;
  for (std::size_t r : rows) truth.push_back(dataset.labels[r]);

  std::vector<CombinationReport> out;
  for (const auto& subset : subsets) {
    std::vector<SubjectiveOpinion> fused;
    double total_u = 0.0;
    for (std::size_t i = 0; i < rows.size(); ++i) {
      std::vector<SubjectiveOpinion> parts;
      for (std::size_t v : subset) parts.push_back(per_view[i][v]);
      try {
        fused.push_back(combine_all(parts).opinion);
      } catch (const Error& err) {
        if (err.kind() != ErrorKind::kTotalConflict) throw;
        fail(ErrorKind::kTotalConflict, "sample " + dataset.sample_ids[rows[i]] + ": " + err.what());
      }
      total_u += fused.back().uncertainty();
    }
    CombinationReport rep;
    for (std::size_t v : subset) rep.views.push_back(dataset.views[v].id);
    rep.metrics = report_for(fused, truth, dataset.class_count);
    rep.mean_uncertainty = total_u / static_cast<double>(rows.size());
    out.push_back(std::move(rep));
  }
  return out;
}

ViewAccuracies view_accuracies(const std::vector<CombinationReport>& report) {
  ViewAccuracies acc;
  for (const auto& row : report) {
    if (row.views.size() == 1) acc.single[row.views[0]] = row.metrics.accuracy;
    if (row.views.size() == 2) acc.set_pair(row.views[0], row.views[1], row.metrics.accuracy);
  }
  return acc;
}

TuneOutcome tune_policy(const MultiViewDataset& dataset, std::span<const EvidentialClassifier> models,
                        const RunConfig& config) {
  TuneOutcome out;
  out.split = config.tune_on_test ? Split::kTest : Split::kValidation;
  const auto rows = dataset.rows(out.split);
  out.n = rows.size();
  out.view_order = config.view_order.empty()
                       ? select_view_order(view_accuracies(combination_report(dataset, models, rows)))
                       : config.view_order;
  StagedDecisionPolicy{out.view_order, 0.0, 0.0}.validate(dataset.view_ids());

  std::vector<double> u_single;
  std::vector<double> u_dual;
  std::vector<StagePredictions> predictions;
  std::vector<std::size_t> labels;
  for (std::size_t r : rows) {
    const StageOpinions s = stage_opinions(row_features(dataset, r), models, out.view_order);
    u_single.push_back(s.single.uncertainty());
    u_dual.push_back(s.dual.uncertainty());
    predictions.push_back({s.single.predicted_class(), s.dual.predicted_class(), s.tri.predicted_class()});
    labels.push_back(dataset.labels[r]);
  }
  out.choice = tune_thresholds(u_single, u_dual, predictions, labels, config.grid_size);
  return out;
}

EvaluationOutcome evaluate_policy(const MultiViewDataset& dataset,
                                  std::span<const EvidentialClassifier> models,
                                  const StagedDecisionPolicy& policy) {
  policy.validate(dataset.view_ids());
  const auto rows = dataset.rows(Split::kTest);
  if (rows.empty()) fail(ErrorKind::kEmptyInput, "no test rows to evaluate");
  EvaluationOutcome out;
  std::vector<SubjectiveOpinion> tri;
  for (std::size_t r : rows) {
    const FeatureSource features = row_features(dataset, r);
    out.records.push_back(staged_predict(dataset.sample_ids[r], features, models, policy));
    tri.push_back(stage_opinions(features, models, policy.view_order).tri);
  }
  out.audit.push_back("predictions fixed for " + std::to_string(rows.size()) + " test samples");
  for (std::size_t r : rows) out.truth.push_back(dataset.labels[r]);
  out.audit.push_back("test labels read");

  std::vector<SubjectiveOpinion> deciding;
  for (const auto& rec : out.records) deciding.push_back(rec.opinion);
  out.staged = report_for(deciding, out.truth, dataset.class_count);
  out.tri_view = report_for(tri, out.truth, dataset.class_count);
  out.distribution = stage_distribution(out.records, policy.view_order);
  return out;
}

UncertaintySplit uncertainty_by_correctness(const EvaluationOutcome& outcome) {
  UncertaintySplit s;
  for (std::size_t i = 0; i < outcome.records.size(); ++i) {
    const double u = outcome.records[i].opinion.uncertainty();
    if (outcome.records[i].predicted_class == outcome.truth[i]) {
      s.correct_mean += u;
      ++s.correct;
    } else {
      s.incorrect_mean += u;
      ++s.incorrect;
    }
  }
  if (s.correct) s.correct_mean /= static_cast<double>(s.correct);
  if (s.incorrect) s.incorrect_mean /= static_cast<double>(s.incorrect);
  return s;
}

// ---------------------------------------------------------------------------
// Command implementations and artifact IO.

namespace {

void write_text(const fs::path& path, const std::string& text) {
  fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::kIo, "cannot write " + path.string());
  out << text;
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::kIo, "cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::string sha256_file(const fs::path& path) {
  const std::string data = read_text(path);
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int length = 0;
  EVP_Digest(data.data(), data.size(), digest, &length, EVP_sha256(), nullptr);
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < length; ++i) {
    out += hex[digest[i] >> 4];
    out += hex[digest[i] & 0xf];
  }
  return out;
}

constexpr const char* kCommandOrder[] = {"generate", "train", "tune", "evaluate", "all"};

// manifest.txt keeps one section per command; rerunning a command replaces its section.
void update_manifest(const fs::path& dir, const std::string& command, const RunConfig& config,
                     const std::vector<std::string>& audit, const std::vector<fs::path>& artifacts) {
  const fs::path path = dir / "manifest.txt";
  std::map<std::string, std::string> sections;
  if (fs::exists(path)) {
    std::istringstream in(read_text(path));
    std::string current;
    for (std::string line; std::getline(in, line);) {
      if (line.size() > 2 && line.front() == '[' && line.back() == ']') {
        current = line.substr(1, line.size() - 2);
        continue;
      }
      if (!current.empty()) sections[current] += line + "\n";
    }
  }
  std::ostringstream body;
  body << "config:\n";
  std::istringstream cfg(config.describe());
  for (std::string line; std::getline(cfg, line);) body << "  " << line << "\n";
  body << "seeds:\n  run = " << config.seed << "\n";
  if (config.synthetic) body << "  synthetic = " << config.synthetic->seed << "\n";
  body << "audit:\n";
  for (std::size_t i = 0; i < audit.size(); ++i) body << "  " << i + 1 << ". " << audit[i] << "\n";
  body << "artifacts:\n";
  for (const auto& a : artifacts) {
    body << "  " << sha256_file(a) << "  " << fs::relative(a, dir).generic_string() << "\n";
  }
  sections[command] = body.str();

  std::ostringstream out;
  out << "evfuse manifest\n";
  for (const char* name : kCommandOrder) {
    const auto it = sections.find(name);
    if (it == sections.end()) continue;
    out << "[" << name << "]\n" << it->second;
  }
  write_text(path, out.str());
}

Json metric_json(const MetricReport& m) {
  Json j;
  j["n"] = m.n;
  j["accuracy"] = round_real(m.accuracy);
  if (m.f1_binary) j["f1"] = round_real(*m.f1_binary);
  if (m.auc) j["auc"] = round_real(*m.auc);
  j["weighted_f1"] = round_real(m.weighted_f1);
  j["macro_f1"] = round_real(m.macro_f1);
  return j;
}

std::string optional_cell(const std::optional<double>& v) { return v ? format_real(*v) : ""; }

fs::path model_path(const fs::path& dir, const std::string& view_id) {
  return dir / "models" / (view_id + ".ckpt");
}

std::vector<EvidentialClassifier> load_models(const RunConfig& config, const MultiViewDataset& ds) {
  std::vector<EvidentialClassifier> models;
  for (const auto& view : ds.views) {
    const fs::path path = model_path(config.output_dir, view.id);
    if (!fs::exists(path)) {
      fail(ErrorKind::kConfiguration, "missing checkpoint " + path.string() + " (run train first)");
    }
    models.push_back(load_checkpoint(path));
    if (models.back().input_dim() != static_cast<std::size_t>(view.values.cols()) ||
        models.back().class_count() != ds.class_count) {
      fail(ErrorKind::kConfiguration, "checkpoint " + path.string() + " does not fit the dataset");
    }
  }
  return models;
}

std::string split_csv(const MultiViewDataset& ds) {
  std::string out = "sample_id,split\n";
  for (std::size_t i = 0; i < ds.sample_count(); ++i) {
    out += ds.sample_ids[i] + "," + std::string(to_string(ds.split[i])) + "\n";
  }
  return out;
}

void check_split(const RunConfig& config, const MultiViewDataset& ds) {
  const fs::path path = config.output_dir / "split.csv";
  if (!fs::exists(path)) fail(ErrorKind::kConfiguration, "missing " + path.string() + " (run train first)");
  if (read_text(path) != split_csv(ds)) {
    fail(ErrorKind::kConfiguration, "data split differs from the one recorded at training time");
  }
}

std::string combination_csv(const std::vector<std::pair<Split, std::vector<CombinationReport>>>& reports) {
  std::string out = "split,views,n,accuracy,f1,auc,weighted_f1,macro_f1,mean_uncertainty\n";
  for (const auto& [split, rows] : reports) {
    for (const auto& r : rows) {
      out += std::string(to_string(split)) + "," + join(r.views, "+") + "," + std::to_string(r.metrics.n) +
             "," + format_real(r.metrics.accuracy) + "," + optional_cell(r.metrics.f1_binary) + "," +
             optional_cell(r.metrics.auc) + "," + format_real(r.metrics.weighted_f1) + "," +
             format_real(r.metrics.macro_f1) + "," + format_real(r.mean_uncertainty) + "\n";
    }
  }
  return out;
}

struct Thresholds {
  double t1 = 0.0;
  double t2 = 0.0;
  std::vector<std::string> view_order;
};

Thresholds read_thresholds(const fs::path& path) {
  std::istringstream in(read_text(path));
  Thresholds t;
  bool has_t1 = false, has_t2 = false;
  for (std::string line; std::getline(in, line);) {
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    std::string key = line.substr(0, eq);
    std::string value = line.substr(eq + 1);
    key.erase(key.find_last_not_of(' ') + 1);
    value.erase(0, value.find_first_not_of(' '));
    if (key == "t1") {
      t.t1 = csv::parse_real(value, path.string());
      has_t1 = true;
    } else if (key == "t2") {
      t.t2 = csv::parse_real(value, path.string());
      has_t2 = true;
    } else if (key == "view_order") {
      std::istringstream items(value);
      for (std::string id; std::getline(items, id, ',');) t.view_order.push_back(id);
    }
  }
  if (!has_t1 || !has_t2 || t.view_order.empty()) {
    fail(ErrorKind::kParse, path.string() + ": needs t1, t2 and view_order");
  }
  return t;
}

std::string histogram_csv(const std::vector<std::string>& columns,
                          const std::vector<std::pair<double, std::size_t>>& values,
                          std::size_t bins) {
  std::vector<std::vector<std::size_t>> counts(bins, std::vector<std::size_t>(columns.size()));
  for (const auto& [u, column] : values) {
    auto bin = static_cast<std::size_t>(u * static_cast<double>(bins));
    bin = std::min(bin, bins - 1);
    ++counts[bin][column];
  }
  std::string out = "bin_lower,bin_upper";
  for (const auto& c : columns) out += "," + c;
  out += "\n";
  for (std::size_t b = 0; b < bins; ++b) {
    out += format_real(static_cast<double>(b) / static_cast<double>(bins)) + "," +
           format_real(static_cast<double>(b + 1) / static_cast<double>(bins));
    for (std::size_t c : counts[b]) out += "," + std::to_string(c);
    out += "\n";
  }
  return out;
}

Json evaluation_json(const EvaluationOutcome& e, const StagedDecisionPolicy& policy) {
  Json j;
  j["staged"] = metric_json(e.staged);
  j["tri_view"] = metric_json(e.tri_view);
  j["thresholds"] = {{"t1", round_real(policy.t1)}, {"t2", round_real(policy.t2)}};
  j["view_order"] = policy.view_order;
  Json stages = Json::array();
  for (std::size_t s = 0; s < 3; ++s) {
    stages.push_back({{"stage", s + 1},
                      {"views", e.distribution.views[s]},
                      {"count", e.distribution.counts[s]},
                      {"fraction", round_real(e.distribution.fractions[s])}});
  }
  j["stage_distribution"] = stages;
  const UncertaintySplit u = uncertainty_by_correctness(e);
  j["uncertainty"] = {{"correct_mean", round_real(u.correct_mean)},
                      {"correct_count", u.correct},
                      {"incorrect_mean", round_real(u.incorrect_mean)},
                      {"incorrect_count", u.incorrect}};
  return j;
}

struct EvaluateResult {
  StagedDecisionPolicy policy;
  EvaluationOutcome outcome;
};

EvaluateResult evaluate_command(const RunConfig& config) {
  const MultiViewDataset ds = prepare_dataset(config);
  check_split(config, ds);
  const auto models = load_models(config, ds);

  StagedDecisionPolicy policy;
  const fs::path thresholds_path = config.output_dir / "thresholds.txt";
  if (config.t1 && config.t2 && !config.view_order.empty()) {
    policy = {config.view_order, *config.t1, *config.t2};
  } else {
    if (!fs::exists(thresholds_path)) {
      fail(ErrorKind::kConfiguration, "missing " + thresholds_path.string() +
                                          " (run tune, or pass --t1, --t2 and --view-order)");
    }
    const Thresholds tuned = read_thresholds(thresholds_path);
    policy = {config.view_order.empty() ? tuned.view_order : config.view_order,
              config.t1.value_or(tuned.t1), config.t2.value_or(tuned.t2)};
  }
  EvaluationOutcome outcome = evaluate_policy(ds, models, policy);

  const fs::path& dir = config.output_dir;
  const Json metrics = evaluation_json(outcome, policy);
  write_text(dir / "metrics.json", metrics.dump(2) + "\n");

  std::string text = "[staged]\n" + to_text(outcome.staged) + "[tri_view]\n" + to_text(outcome.tri_view);
  text += "[policy]\nview_order = " + join(policy.view_order, ",") + "\nt1 = " + format_real(policy.t1) +
          "\nt2 = " + format_real(policy.t2) + "\n";
  write_text(dir / "metrics.txt", text);

  std::string dist = "stage,views,count,fraction\n";
  for (std::size_t s = 0; s < 3; ++s) {
    dist += std::to_string(s + 1) + "," + outcome.distribution.views[s] + "," +
            std::to_string(outcome.distribution.counts[s]) + "," +
            format_real(outcome.distribution.fractions[s]) + "\n";
  }
  write_text(dir / "stage_distribution.csv", dist);

  std::ostringstream preds;
  write_predictions_csv(outcome.records, outcome.truth, preds);
  write_text(dir / "predictions.csv", preds.str());

  std::vector<std::pair<double, std::size_t>> by_correct;
  std::vector<std::pair<double, std::size_t>> by_stage;
  for (std::size_t i = 0; i < outcome.records.size(); ++i) {
    const auto& r = outcome.records[i];
    const double u = r.opinion.uncertainty();
    by_correct.emplace_back(u, r.predicted_class == outcome.truth[i] ? 0 : 1);
    by_stage.emplace_back(u, static_cast<std::size_t>(r.stage - 1));
  }
  write_text(dir / "hist_correct_incorrect.csv",
             histogram_csv({"correct", "incorrect"}, by_correct, config.histogram_bins));
  write_text(dir / "hist_by_stage.csv",
             histogram_csv({"stage1", "stage2", "stage3"}, by_stage, config.histogram_bins));

  std::vector<std::string> audit{"dataset prepared (" + std::to_string(ds.sample_count()) + " samples)",
                                 "checkpoints loaded"};
  audit.insert(audit.end(), outcome.audit.begin(), outcome.audit.end());
  audit.push_back("metrics written");
  update_manifest(dir, "evaluate", config, audit,
                  {dir / "metrics.json", dir / "metrics.txt", dir / "stage_distribution.csv",
                   dir / "predictions.csv", dir / "hist_correct_incorrect.csv", dir / "hist_by_stage.csv"});
  return {std::move(policy), std::move(outcome)};
}

}  // namespace

void run_generate(const RunConfig& config) {
  if (!config.synthetic) fail(ErrorKind::kConfiguration, "generate needs a synthetic config");
  const MultiViewDataset ds = generate_synthetic(*config.synthetic);
  const fs::path data_dir = config.output_dir / "data";
  const auto sources = write_dataset_csv(ds, data_dir);
  write_text(data_dir / "synthetic.cfg", format_synthetic_config(*config.synthetic));
  std::vector<fs::path> artifacts;
  for (const auto& s : sources) artifacts.push_back(s.path);
  artifacts.push_back(data_dir / "labels.csv");
  artifacts.push_back(data_dir / "synthetic.cfg");
  update_manifest(config.output_dir, "generate", config,
                  {"generated " + std::to_string(ds.sample_count()) + " samples"}, artifacts);
}

void run_train(const RunConfig& config) {
  const MultiViewDataset ds = prepare_dataset(config);
  TrainConfig tc = config.train;
  tc.seed = config.seed;
  const TrainResult trained = train(ds, tc);
  const fs::path& dir = config.output_dir;
  fs::create_directories(dir / "models");
  std::vector<fs::path> artifacts;
  for (const auto& m : trained.models) {
    save_checkpoint(m, model_path(dir, m.view_id()));
    artifacts.push_back(model_path(dir, m.view_id()));
  }
  write_text(dir / "split.csv", split_csv(ds));
  artifacts.push_back(dir / "split.csv");

  std::string loss = "epoch,eta,loss\n";
  for (std::size_t e = 0; e < trained.epoch_loss.size(); ++e) {
    loss += std::to_string(e) + "," +
            format_real(anneal_coefficient(static_cast<int>(e), tc.anneal_epochs)) + "," +
            format_real(trained.epoch_loss[e]) + "\n";
  }
  write_text(dir / "training_loss.csv", loss);
  artifacts.push_back(dir / "training_loss.csv");

  std::vector<std::pair<Split, std::vector<CombinationReport>>> reports;
  for (Split s : {Split::kValidation, Split::kTest}) {
    reports.emplace_back(s, combination_report(ds, trained.models, ds.rows(s)));
  }
  write_text(dir / "train_report.csv", combination_csv(reports));
  Json report = Json::object();
  for (const auto& [split, rows] : reports) {
    Json arr = Json::array();
    for (const auto& r : rows) {
      Json j = metric_json(r.metrics);
      j["views"] = join(r.views, "+");
      j["mean_uncertainty"] = round_real(r.mean_uncertainty);
      arr.push_back(j);
    }
    report[std::string(to_string(split))] = arr;
  }
  write_text(dir / "train_report.json", report.dump(2) + "\n");
  artifacts.push_back(dir / "train_report.csv");
  artifacts.push_back(dir / "train_report.json");
  update_manifest(dir, "train", config,
                  {"dataset prepared (" + std::to_string(ds.sample_count()) + " samples)",
                   "trained " + std::to_string(trained.models.size()) + " view models for " +
                       std::to_string(tc.epochs) + " epochs",
                   "validation and test combination reports written"},
                  artifacts);
}

void run_tune(const RunConfig& config) {
  const MultiViewDataset ds = prepare_dataset(config);
  check_split(config, ds);
  const auto models = load_models(config, ds);
  const TuneOutcome t = tune_policy(ds, models, config);
  const fs::path path = config.output_dir / "thresholds.txt";
  write_text(path, "t1 = " + format_real(t.choice.t1) + "\nt2 = " + format_real(t.choice.t2) +
                       "\nview_order = " + join(t.view_order, ",") +
                       "\ncorrect = " + std::to_string(t.choice.correct) + "\nn = " + std::to_string(t.n) +
                       "\nsplit = " + std::string(to_string(t.split)) +
                       "\ngrid = " + std::to_string(config.grid_size) + "\n");
  update_manifest(config.output_dir, "tune", config,
                  {"dataset prepared", "checkpoints loaded",
                   "thresholds tuned on " + std::string(to_string(t.split)) + " split"},
                  {path});
}

void run_evaluate(const RunConfig& config) { evaluate_command(config); }

void run_all(const RunConfig& config) {
  config.validate();
  std::vector<EvaluateResult> results;
  std::vector<fs::path> artifacts;
  for (int r = 0; r < config.repeat; ++r) {
    RunConfig c = config;
    c.seed = config.seed + static_cast<std::uint64_t>(r);
    if (c.synthetic) c.synthetic->seed += static_cast<std::uint64_t>(r);
    c.output_dir = config.output_dir / ("repeat_" + std::to_string(r));
    run_train(c);
    run_tune(c);
    results.push_back(evaluate_command(c));
    artifacts.push_back(c.output_dir / "metrics.json");
  }

  // mean and sample standard deviation across repeats
  const auto summarize = [&](auto getter) {
    std::vector<double> v;
    for (const auto& res : results) {
      const std::optional<double> x = getter(res);
      if (x) v.push_back(*x);
    }
    Json j;
    if (v.empty()) return j;
    const double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
    double ss = 0.0;
    for (double x : v) ss += (x - mean) * (x - mean);
    const double sd = v.size() > 1 ? std::sqrt(ss / static_cast<double>(v.size() - 1)) : 0.0;
    j["mean"] = round_real(mean);
    j["std"] = round_real(sd);
    j["values"] = Json::array();
    for (double x : v) j["values"].push_back(round_real(x));
    return j;
  };
  using R = EvaluateResult;
  Json summary;
  summary["repeats"] = config.repeat;
  const std::pair<const char*, std::function<std::optional<double>(const R&)>> fields[] = {
      {"accuracy", [](const R& r) { return std::optional<double>(r.outcome.staged.accuracy); }},
      {"f1", [](const R& r) { return r.outcome.staged.f1_binary; }},
      {"auc", [](const R& r) { return r.outcome.staged.auc; }},
      {"weighted_f1", [](const R& r) { return std::optional<double>(r.outcome.staged.weighted_f1); }},
      {"macro_f1", [](const R& r) { return std::optional<double>(r.outcome.staged.macro_f1); }},
      {"tri_view_accuracy", [](const R& r) { return std::optional<double>(r.outcome.tri_view.accuracy); }},
      {"stage1_fraction", [](const R& r) { return std::optional<double>(r.outcome.distribution.fractions[0]); }},
      {"stage2_fraction", [](const R& r) { return std::optional<double>(r.outcome.distribution.fractions[1]); }},
      {"stage3_fraction", [](const R& r) { return std::optional<double>(r.outcome.distribution.fractions[2]); }},
      {"t1", [](const R& r) { return std::optional<double>(r.policy.t1); }},
      {"t2", [](const R& r) { return std::optional<double>(r.policy.t2); }},
  };
  std::string text;
  for (const auto& [name, getter] : fields) {
    Json s = summarize(getter);
    if (s.is_null()) continue;
    text += std::string(name) + " = " + format_real(s["mean"].get<double>()) + " ± " +
            format_real(s["std"].get<double>()) + "\n";
    summary[name] = std::move(s);
  }
  write_text(config.output_dir / "metrics.json", summary.dump(2) + "\n");
  write_text(config.output_dir / "metrics.txt", text);
  artifacts.push_back(config.output_dir / "metrics.json");
  artifacts.push_back(config.output_dir / "metrics.txt");
  update_manifest(config.output_dir, "all", config,
                  {std::to_string(config.repeat) + " repeats, run seed " + std::to_string(config.seed) +
                   " + repeat index"},
                  artifacts);
}

}  // namespace evfuse
