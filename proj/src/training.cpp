#include "evfuse/training.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "evfuse/errors.hpp"
#include "evfuse/evidential_loss.hpp"
#include "evfuse/fusion.hpp"
#include "evfuse/special_functions.hpp"

namespace evfuse {

std::string_view to_string(Optimizer optimizer) {
  switch (optimizer) {
    case Optimizer::kGradientDescent: return "sgd";
    case Optimizer::kAdam: return "adam";
  }
  return "unknown";
}

Optimizer parse_optimizer(std::string_view name) {
  if (name == "sgd" || name == "gd") return Optimizer::kGradientDescent;
  if (name == "adam") return Optimizer::kAdam;
  fail(ErrorKind::kConfiguration, "unknown optimizer '" + std::string(name) + "'");
}

void TrainConfig::validate() const {
  if (epochs < 1) fail(ErrorKind::kConfiguration, "epochs must be at least 1");
  if (anneal_epochs < 1) fail(ErrorKind::kConfiguration, "anneal_epochs must be at least 1");
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
    fail(ErrorKind::kConfiguration, "learning_rate must be positive");
  }
  for (std::size_t h : hidden) {
    if (h == 0) fail(ErrorKind::kConfiguration, "hidden widths must be positive");
  }
}

TrainingBatch make_batch(const MultiViewDataset& dataset, std::span<const std::size_t> rows) {
  TrainingBatch batch;
  for (const auto& view : dataset.views) {
    Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()), view.values.cols());
    for (std::size_t r = 0; r < rows.size(); ++r) {
      m.row(static_cast<Eigen::Index>(r)) = view.values.row(static_cast<Eigen::Index>(rows[r]));
    }
    batch.views.push_back(std::move(m));
  }
  for (std::size_t r : rows) batch.labels.push_back(dataset.labels[r]);
  return batch;
}

namespace {

struct ForwardTrace {
  std::vector<Eigen::MatrixXd> pre;  // pre-activation of each layer
  std::vector<Eigen::MatrixXd> act;  // act[0] = input, act[l + 1] = output of layer l
};

ForwardTrace trace_forward(const EvidentialClassifier& model, const Eigen::MatrixXd& input) {
  if (static_cast<std::size_t>(input.cols()) != model.input_dim()) {
    fail(ErrorKind::kDimension, "view '" + model.view_id() + "' expects " +
                                    std::to_string(model.input_dim()) + " features, got " +
                                    std::to_string(input.cols()));
  }
  ForwardTrace t;
  t.act.push_back(input);
  const auto& layers = model.layers();
  for (std::size_t l = 0; l < layers.size(); ++l) {
    Eigen::MatrixXd z = t.act.back() * layers[l].weights.transpose();
    z.rowwise() += layers[l].bias.transpose();
    const bool output = l + 1 == layers.size();
    const Activation a = model.activation();
    t.act.push_back(z.unaryExpr([&](double x) { return output ? softplus(x) : activate(a, x); }));
    t.pre.push_back(std::move(z));
  }
  return t;
}

LayerGradients trace_backward(const EvidentialClassifier& model, const ForwardTrace& t,
                              const Eigen::MatrixXd& grad_evidence) {
  const auto& layers = model.layers();
  LayerGradients grads(layers.size());
  Eigen::MatrixXd gz = grad_evidence.cwiseProduct(
      t.pre.back().unaryExpr([](double x) { return sigmoid(x); }));
  for (std::size_t l = layers.size(); l-- > 0;) {
    grads[l].weights = gz.transpose() * t.act[l];
    grads[l].bias = gz.colwise().sum().transpose();
    if (l == 0) break;
    const Activation a = model.activation();
    Eigen::MatrixXd ga = gz * layers[l].weights;
    gz = ga.cwiseProduct(t.pre[l - 1].unaryExpr([&](double x) { return activate_derivative(a, x); }));
  }
  return grads;
}

// Loss gradient with respect to an opinion's belief and uncertainty masses.
struct MassGradient {
  std::vector<double> beliefs;
  double uncertainty = 0.0;
};

// Reverse pass of combine_pair: given d(loss)/d(output masses), accumulate
// d(loss)/d(input masses) for both operands.
void combine_pair_backward(const SubjectiveOpinion& a, const SubjectiveOpinion& b,
                           const SubjectiveOpinion& out, const MassGradient& g_out,
                           MassGradient& g_a, MassGradient& g_b) {
  const auto& ba = a.beliefs();
  const auto& bb = b.beliefs();
  const double ua = a.uncertainty();
  const double ub = b.uncertainty();
  const std::size_t k_count = ba.size();
  double sum_a = 0.0;
  double sum_b = 0.0;
  double same = 0.0;
  for (std::size_t k = 0; k < k_count; ++k) {
    sum_a += ba[k];
    sum_b += bb[k];
    same += ba[k] * bb[k];
  }
  const double norm = 1.0 - (sum_a * sum_b - same);
  // out = numerator / norm, so d(loss)/dC = (sum_k g_k out_k + g_U out_U) / norm
  double g_conflict = g_out.uncertainty * out.uncertainty();
  for (std::size_t k = 0; k < k_count; ++k) g_conflict += g_out.beliefs[k] * out.beliefs()[k];
  g_conflict /= norm;

  double g_ua = g_out.uncertainty * ub / norm;
  double g_ub = g_out.uncertainty * ua / norm;
  for (std::size_t k = 0; k < k_count; ++k) {
    const double gk = g_out.beliefs[k] / norm;
    g_a.beliefs[k] += gk * (bb[k] + ub) + g_conflict * (sum_b - bb[k]);
    g_b.beliefs[k] += gk * (ba[k] + ua) + g_conflict * (sum_a - ba[k]);
    g_ua += gk * bb[k];
    g_ub += gk * ba[k];
  }
  g_a.uncertainty += g_ua;
  g_b.uncertainty += g_ub;
}

std::vector<DenseLayer> zeros_like(const EvidentialClassifier& model) {
  std::vector<DenseLayer> z;
  for (const auto& layer : model.layers()) {
    z.push_back({Eigen::MatrixXd::Zero(layer.weights.rows(), layer.weights.cols()),
                 Eigen::VectorXd::Zero(layer.bias.size())});
  }
  return z;
}

}  // namespace

ObjectiveResult batch_objective(std::span<const EvidentialClassifier> models,
                                const TrainingBatch& batch, double eta, bool with_gradient) {
  const std::size_t view_count = models.size();
  if (view_count == 0) fail(ErrorKind::kEmptyInput, "objective needs at least one view model");
  if (batch.views.size() != view_count) {
    fail(ErrorKind::kDimension, "batch has " + std::to_string(batch.views.size()) +
                                    " views but there are " + std::to_string(view_count) +
                                    " models");
  }
  const std::size_t n = batch.labels.size();
  if (n == 0) fail(ErrorKind::kEmptyInput, "objective over an empty batch");
  const std::size_t k_count = models.front().class_count();

  std::vector<ForwardTrace> traces;
  for (std::size_t v = 0; v < view_count; ++v) {
    if (models[v].class_count() != k_count) {
      fail(ErrorKind::kDimension, "view models disagree on the class count");
    }
    if (static_cast<std::size_t>(batch.views[v].rows()) != n) {
      fail(ErrorKind::kDimension, "batch view rows differ from label count");
    }
    traces.push_back(trace_forward(models[v], batch.views[v]));
    if (!traces.back().act.back().allFinite()) {
      fail(ErrorKind::kDivergence, "non-finite evidence in view '" + models[v].view_id() + "'");
    }
  }

  std::vector<Eigen::MatrixXd> grad_evidence;
  if (with_gradient) {
    grad_evidence.assign(view_count, Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n),
                                                           static_cast<Eigen::Index>(k_count)));
  }

  ObjectiveResult result;
  std::vector<double> evidence(k_count);
  std::vector<DirichletEvidence> dirichlets;
  std::vector<SubjectiveOpinion> opinions;
  std::vector<SubjectiveOpinion> partial;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t label = batch.labels[i];
    const auto row = static_cast<Eigen::Index>(i);
    dirichlets.clear();
    opinions.clear();
    for (std::size_t v = 0; v < view_count; ++v) {
      const auto& e = traces[v].act.back();
      for (std::size_t k = 0; k < k_count; ++k) evidence[k] = e(row, static_cast<Eigen::Index>(k));
      dirichlets.push_back(dirichlet_from_evidence(evidence));
      opinions.push_back(opinion_from_dirichlet(dirichlets.back()));
      result.loss += sample_loss(dirichlets.back(), label, eta);
    }
    partial.clear();
    partial.push_back(opinions.front());
    for (std::size_t v = 1; v < view_count; ++v) {
      partial.push_back(combine_pair(partial.back(), opinions[v]).opinion);
    }
    const SubjectiveOpinion& fused = partial.back();
    const DirichletEvidence fused_dirichlet = dirichlet_from_opinion(fused);
    result.loss += sample_loss(fused_dirichlet, label, eta);
    if (!with_gradient) continue;

    // Fused Dirichlet d_k = b_k K / U + 1 back to the fused masses.
    const auto g_fused_d = sample_loss_gradient(fused_dirichlet, label, eta);
    const double k_real = static_cast<double>(k_count);
    const double u = fused.uncertainty();
    MassGradient g_partial{std::vector<double>(k_count), 0.0};
    for (std::size_t k = 0; k < k_count; ++k) {
      g_partial.beliefs[k] = g_fused_d[k] * k_real / u;
      g_partial.uncertainty -= g_fused_d[k] * fused.beliefs()[k] * k_real / (u * u);
    }
    // Unroll the left fold.
    std::vector<MassGradient> g_view(view_count, MassGradient{std::vector<double>(k_count), 0.0});
    for (std::size_t v = view_count; v-- > 1;) {
      MassGradient g_prev{std::vector<double>(k_count), 0.0};
      combine_pair_backward(partial[v - 1], opinions[v], partial[v], g_partial, g_prev, g_view[v]);
      g_partial = std::move(g_prev);
    }
    for (std::size_t k = 0; k < k_count; ++k) g_view[0].beliefs[k] += g_partial.beliefs[k];
    g_view[0].uncertainty += g_partial.uncertainty;

    // Opinion b_k = e_k / S, U = K / S back to d (and e, since d = e + 1).
    for (std::size_t v = 0; v < view_count; ++v) {
      const auto own = sample_loss_gradient(dirichlets[v], label, eta);
      const double s = dirichlets[v].strength();
      const auto& b = opinions[v].beliefs();
      double mix = g_view[v].uncertainty * opinions[v].uncertainty();
      for (std::size_t k = 0; k < k_count; ++k) mix += g_view[v].beliefs[k] * b[k];
      for (std::size_t k = 0; k < k_count; ++k) {
        grad_evidence[v](row, static_cast<Eigen::Index>(k)) =
            own[k] + (g_view[v].beliefs[k] - mix) / s;
      }
    }
  }

  if (with_gradient) {
    for (std::size_t v = 0; v < view_count; ++v) {
      result.gradients.push_back(trace_backward(models[v], traces[v], grad_evidence[v]));
    }
  }
  return result;
}

std::vector<EvidentialClassifier> init_models(const std::vector<std::string>& view_ids,
                                              const std::vector<std::size_t>& input_dims,
                                              std::size_t class_count, const TrainConfig& config) {
  if (view_ids.size() != input_dims.size()) {
    fail(ErrorKind::kDimension, "view ids and input dims differ in length");
  }
  std::vector<EvidentialClassifier> models;
  std::vector<std::uint64_t> seeds(view_ids.size());
  {
    std::mt19937_64 seeder(config.seed);
    for (auto& s : seeds) s = seeder();
  }
  for (std::size_t v = 0; v < view_ids.size(); ++v) {
    std::vector<std::size_t> dims{input_dims[v]};
    dims.insert(dims.end(), config.hidden.begin(), config.hidden.end());
    dims.push_back(class_count);
    models.emplace_back(view_ids[v], std::move(dims), config.activation, seeds[v]);
  }
  return models;
}

TrainResult train(const MultiViewDataset& dataset, const TrainConfig& config) {
  const auto rows = dataset.rows(Split::kTrain);
  if (rows.empty()) fail(ErrorKind::kConfiguration, "dataset has no training rows");
  std::vector<std::size_t> dims;
  for (const auto& view : dataset.views) dims.push_back(static_cast<std::size_t>(view.values.cols()));
  auto models = init_models(dataset.view_ids(), dims, dataset.class_count, config);
  return train(std::move(models), make_batch(dataset, rows), config);
}

namespace {

class AdamState {
 public:
  explicit AdamState(std::span<const EvidentialClassifier> models) {
    for (const auto& m : models) {
      first_.push_back(zeros_like(m));
      second_.push_back(zeros_like(m));
    }
  }

  void step(std::vector<EvidentialClassifier>& models, const std::vector<LayerGradients>& grads,
            double learning_rate, double scale) {
    ++t_;
    const double c1 = 1.0 - std::pow(kBeta1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(kBeta2, static_cast<double>(t_));
    for (std::size_t v = 0; v < models.size(); ++v) {
      auto& layers = models[v].layers();
      for (std::size_t l = 0; l < layers.size(); ++l) {
        update(layers[l].weights.array(), grads[v][l].weights.array() * scale,
               first_[v][l].weights.array(), second_[v][l].weights.array(), learning_rate, c1, c2);
        update(layers[l].bias.array(), grads[v][l].bias.array() * scale,
               first_[v][l].bias.array(), second_[v][l].bias.array(), learning_rate, c1, c2);
      }
    }
  }

 private:
  static constexpr double kBeta1 = 0.9;
  static constexpr double kBeta2 = 0.999;
  static constexpr double kEps = 1e-8;

  template <typename P, typename G, typename M>
  static void update(P&& param, const G& grad, M&& m, M&& s, double lr, double c1, double c2) {
    m = kBeta1 * m + (1.0 - kBeta1) * grad;
    s = kBeta2 * s + (1.0 - kBeta2) * grad.square();
    param -= lr * (m / c1) / ((s / c2).sqrt() + kEps);
  }

  std::vector<std::vector<DenseLayer>> first_;
  std::vector<std::vector<DenseLayer>> second_;
  long t_ = 0;
};

void gradient_step(std::vector<EvidentialClassifier>& models,
                   const std::vector<LayerGradients>& grads, double learning_rate, double scale) {
  for (std::size_t v = 0; v < models.size(); ++v) {
    auto& layers = models[v].layers();
    for (std::size_t l = 0; l < layers.size(); ++l) {
      layers[l].weights -= learning_rate * scale * grads[v][l].weights;
      layers[l].bias -= learning_rate * scale * grads[v][l].bias;
    }
  }
}

TrainingBatch slice(const TrainingBatch& batch, std::size_t start, std::size_t count) {
  TrainingBatch out;
  for (const auto& m : batch.views) {
    out.views.push_back(m.middleRows(static_cast<Eigen::Index>(start), static_cast<Eigen::Index>(count)));
  }
  out.labels.assign(batch.labels.begin() + static_cast<std::ptrdiff_t>(start),
                    batch.labels.begin() + static_cast<std::ptrdiff_t>(start + count));
  return out;
}

}  // namespace

TrainResult train(std::vector<EvidentialClassifier> models, const TrainingBatch& batch,
                  const TrainConfig& config) {
  config.validate();
  const std::size_t n = batch.labels.size();
  if (n == 0) fail(ErrorKind::kEmptyInput, "training batch is empty");
  const std::size_t step_rows = config.batch_size == 0 ? n : std::min(config.batch_size, n);

  TrainResult result;
  AdamState adam(models);
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    const double eta = anneal_coefficient(epoch, config.anneal_epochs);
    double total = 0.0;
    try {
      for (std::size_t start = 0; start < n; start += step_rows) {
        const std::size_t count = std::min(step_rows, n - start);
        const ObjectiveResult r = count == n
                                      ? batch_objective(models, batch, eta, true)
                                      : batch_objective(models, slice(batch, start, count), eta, true);
        if (!std::isfinite(r.loss)) fail(ErrorKind::kDivergence, "non-finite loss");
        total += r.loss;
        const double scale = 1.0 / static_cast<double>(count);
        if (config.optimizer == Optimizer::kAdam) {
          adam.step(models, r.gradients, config.learning_rate, scale);
        } else {
          gradient_step(models, r.gradients, config.learning_rate, scale);
        }
      }
    } catch (const Error& err) {
      switch (err.kind()) {
        case ErrorKind::kDivergence:
        case ErrorKind::kInvalidEvidence:
        case ErrorKind::kDegenerateOpinion:
        case ErrorKind::kTotalConflict:
          fail(ErrorKind::kDivergence,
               "training diverged at epoch " + std::to_string(epoch) + ": " + err.what());
        default:
          throw;
      }
    }
    result.epoch_loss.push_back(total / static_cast<double>(n));
  }
  result.models = std::move(models);
  return result;
}

GradientCheckReport gradient_check(std::span<const EvidentialClassifier> models,
                                   const TrainingBatch& batch, double eta, std::size_t coordinates,
                                   std::uint64_t seed, double step) {
  std::vector<EvidentialClassifier> work(models.begin(), models.end());
  const ObjectiveResult analytic = batch_objective(work, batch, eta, true);

  // Flat (view, index) addressing matching EvidentialClassifier::parameter.
  std::vector<std::pair<std::size_t, std::size_t>> slots;
  std::vector<double> flat_grad;
  for (std::size_t v = 0; v < work.size(); ++v) {
    std::size_t index = 0;
    for (const auto& layer : analytic.gradients[v]) {
      for (Eigen::Index j = 0; j < layer.weights.size(); ++j) {
        slots.emplace_back(v, index++);
        flat_grad.push_back(layer.weights.data()[j]);
      }
      for (Eigen::Index j = 0; j < layer.bias.size(); ++j) {
        slots.emplace_back(v, index++);
        flat_grad.push_back(layer.bias[j]);
      }
    }
  }

  std::mt19937_64 rng(seed);
  std::vector<std::size_t> picks(slots.size());
  for (std::size_t j = 0; j < picks.size(); ++j) picks[j] = j;
  if (picks.size() >= coordinates) {
    std::shuffle(picks.begin(), picks.end(), rng);
    picks.resize(coordinates);
  } else {
    // fewer parameters than requested: draw with replacement
    std::uniform_int_distribution<std::size_t> pick(0, slots.size() - 1);
    picks.resize(coordinates);
    for (auto& p : picks) p = pick(rng);
  }

  GradientCheckReport report;
  for (double g : flat_grad) report.gradients_finite = report.gradients_finite && std::isfinite(g);
  for (std::size_t p : picks) {
    auto [v, index] = slots[p];
    double& param = work[v].parameter(index);
    const double saved = param;
    param = saved + step;
    const double up = batch_objective(work, batch, eta, false).loss;
    param = saved - step;
    const double down = batch_objective(work, batch, eta, false).loss;
    param = saved;
    const double numeric = (up - down) / (2.0 * step);
    const double a = flat_grad[p];
    const double rel = std::abs(a - numeric) / std::max(1e-8, std::abs(a) + std::abs(numeric));
    report.relative_errors.push_back(rel);
    report.max_relative_error = std::max(report.max_relative_error, rel);
  }
  return report;
}

}  // namespace evfuse
