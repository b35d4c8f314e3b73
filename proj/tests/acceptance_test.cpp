// Acceptance suite: prints one PASS/FAIL/SKIP line per criterion and exits
// non-zero if any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "evfuse/decision.hpp"
#include "evfuse/errors.hpp"
#include "evfuse/evidential_loss.hpp"
#include "evfuse/fusion.hpp"
#include "evfuse/opinion.hpp"
#include "evfuse/pipeline.hpp"
#include "evfuse/special_functions.hpp"
#include "evfuse/training.hpp"

namespace fs = std::filesystem;
using namespace evfuse;

namespace {

enum class Verdict { kPass, kFail, kSkip };

struct Outcome {
  Verdict verdict;
  std::string detail;
};

Outcome pass_if(bool ok, std::string detail) { return {ok ? Verdict::kPass : Verdict::kFail, std::move(detail)}; }

std::string fmt(const char* pattern, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, pattern, a);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

// ---------------------------------------------------------------- 1

SubjectiveOpinion random_opinion(std::mt19937_64& rng, std::size_t k) {
  std::exponential_distribution<double> dist(0.25);
  std::vector<double> e(k);
  for (auto& x : e) x = dist(rng);
  return opinion_from_dirichlet(dirichlet_from_evidence(e));
}

double mass_gap(const SubjectiveOpinion& a, const SubjectiveOpinion& b) {
  double gap = std::abs(a.uncertainty() - b.uncertainty());
  for (std::size_t k = 0; k < a.class_count(); ++k) gap = std::max(gap, std::abs(a.beliefs()[k] - b.beliefs()[k]));
  return gap;
}

Outcome fusion_algebra() {
  const auto start = std::chrono::steady_clock::now();
  std::mt19937_64 rng(1);
  const std::size_t ks[] = {2, 3, 5};
  double worst = 0.0;
  std::size_t violations = 0;
  for (int t = 0; t < 10000; ++t) {
    const std::size_t k = ks[t % 3];
    const auto a = random_opinion(rng, k);
    const auto b = random_opinion(rng, k);
    const auto c = random_opinion(rng, k);
    const auto ab = combine_pair(a, b).opinion;
    const double comm = mass_gap(ab, combine_pair(b, a).opinion);
    const double assoc = mass_gap(combine_pair(ab, c).opinion, combine_pair(a, combine_pair(b, c).opinion).opinion);
    const double ident = mass_gap(combine_pair(a, SubjectiveOpinion::vacuous(k)).opinion, a);
    const double norm = std::abs(std::accumulate(ab.beliefs().begin(), ab.beliefs().end(), ab.uncertainty()) - 1.0);
    const double mono = std::max(0.0, ab.uncertainty() - std::min(a.uncertainty(), b.uncertainty()));
    const double m = std::max({comm, assoc, ident, norm, mono});
    worst = std::max(worst, m);
    if (m > 1e-9) ++violations;
  }
  const double secs = seconds_since(start);
  return pass_if(violations == 0 && secs < 5.0,
                 "10000 triples, worst deviation " + fmt("%.2e", worst) + ", " + fmt("%.2f s", secs));
}

// ---------------------------------------------------------------- 2

struct Direct {
  std::vector<double> b;
  double u;
};

// Reduced Dempster rule written out term by term.
Direct direct_combine(const std::vector<double>& b1, double u1, const std::vector<double>& b2, double u2) {
  double c = 0.0;
  for (std::size_t i = 0; i < b1.size(); ++i) {
    for (std::size_t j = 0; j < b2.size(); ++j) {
      if (i != j) c += b1[i] * b2[j];
    }
  }
  Direct d{std::vector<double>(b1.size()), u1 * u2 / (1.0 - c)};
  for (std::size_t k = 0; k < b1.size(); ++k) d.b[k] = (b1[k] * b2[k] + b1[k] * u2 + b2[k] * u1) / (1.0 - c);
  return d;
}

Outcome worked_fusion() {
  struct Case {
    std::vector<double> b1;
    double u1;
    std::vector<double> b2;
    double u2;
    std::vector<double> want_b;
    double want_u;
  };
  const Case cases[] = {{{0.6, 0.2}, 0.2, {0.4, 0.4}, 0.2, {0.6471, 0.2941}, 0.0588},
                        {{0.8, 0.0}, 0.2, {0.0, 0.8}, 0.2, {0.4444, 0.4444}, 0.1111}};
  double worst = 0.0;
  for (const auto& c : cases) {
    const auto got = combine_pair(SubjectiveOpinion(c.b1, c.u1), SubjectiveOpinion(c.b2, c.u2)).opinion;
    const auto ref = direct_combine(c.b1, c.u1, c.b2, c.u2);
    for (std::size_t k = 0; k < 2; ++k) {
      worst = std::max({worst, std::abs(got.beliefs()[k] - ref.b[k]), std::abs(got.beliefs()[k] - c.want_b[k])});
    }
    worst = std::max({worst, std::abs(got.uncertainty() - ref.u), std::abs(got.uncertainty() - c.want_u)});
  }
  return pass_if(worst < 1e-3, "two cases, worst deviation " + fmt("%.2e", worst));
}

// ---------------------------------------------------------------- 3

DirichletEvidence with_params(std::vector<double> d) {
  for (auto& x : d) x -= 1.0;
  return dirichlet_from_evidence(d);
}

Outcome loss_correctness() {
  double closed = 0.0;
  closed = std::max(closed, std::abs(expected_ce_loss(with_params({2.0, 1.0}), 0) - 0.5));
  closed = std::max(closed, std::abs(expected_ce_loss(with_params({1.0, 1.0}), 0) - 1.0));
  closed = std::max(closed, std::abs(expected_ce_loss(with_params({101.0, 1.0}), 0) - 1.0 / 101.0));

  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> param(0.5, 8.0);
  double worst_z = 0.0;
  for (int c = 0; c < 20; ++c) {
    const std::size_t k = 2 + static_cast<std::size_t>(c % 4);
    std::vector<double> d(k);
    for (auto& x : d) x = 1.0 + param(rng);
    const std::size_t y = static_cast<std::size_t>(c) % k;
    std::vector<std::gamma_distribution<double>> gammas;
    for (double a : d) gammas.emplace_back(a, 1.0);
    const int draws = 200000;
    double sum = 0.0;
    double sum_sq = 0.0;
    for (int i = 0; i < draws; ++i) {
      double total = 0.0;
      double target = 0.0;
      for (std::size_t j = 0; j < k; ++j) {
        const double g = gammas[j](rng);
        total += g;
        if (j == y) target = g;
      }
      const double v = -std::log(target / total);
      sum += v;
      sum_sq += v * v;
    }
    const double mean = sum / draws;
    const double se = std::sqrt((sum_sq / draws - mean * mean) / draws);
    worst_z = std::max(worst_z, std::abs(expected_ce_loss(with_params(d), y) - mean) / se);
  }
  const double kl11 = kl_uniform(std::vector<double>{1.0, 1.0});
  const double kl21 = kl_uniform(std::vector<double>{2.0, 1.0});
  const bool ok = closed < 1e-10 && worst_z < 3.0 && kl11 == 0.0 && std::abs(kl21 - 0.1931) < 1e-4 &&
                  std::abs(kl21 - (std::log(2.0) - 0.5)) < 1e-6;
  return pass_if(ok, "closed forms " + fmt("%.1e", closed) + ", Monte Carlo worst " + fmt("%.2f SE", worst_z) +
                         ", kl(1,1) = " + fmt("%g", kl11) + ", kl(2,1) = " + fmt("%.6f", kl21));
}

// ---------------------------------------------------------------- 4

Outcome gradient_check_criterion() {
  const auto start = std::chrono::steady_clock::now();
  SyntheticConfig syn;
  syn.n_samples = 40;
  syn.classes = 3;
  syn.feature_dims = {8, 6, 5};
  syn.separations = {3.0, 1.0, 1.0};
  syn.seed = 4;
  auto ds = generate_synthetic(syn);
  std::vector<std::size_t> rows(ds.sample_count());
  std::iota(rows.begin(), rows.end(), 0);
  TrainConfig cfg;
  cfg.hidden = {16};
  cfg.seed = 4;
  std::vector<std::size_t> dims;
  for (const auto& v : ds.views) dims.push_back(static_cast<std::size_t>(v.values.cols()));
  const auto models = init_models(ds.view_ids(), dims, ds.class_count, cfg);
  const auto batch = make_batch(ds, rows);
  const auto at0 = gradient_check(models, batch, 0.0, 250, 1);
  const auto at1 = gradient_check(models, batch, 1.0, 250, 2);
  const double secs = seconds_since(start);
  const bool ok = at0.gradients_finite && at1.gradients_finite && at0.max_relative_error < 1e-4 &&
                  at1.max_relative_error < 1e-4 && secs < 30.0;
  return pass_if(ok, "250 coordinates each, max rel error " + fmt("%.2e", at0.max_relative_error) +
                         " (eta 0), " + fmt("%.2e", at1.max_relative_error) + " (eta 1), " + fmt("%.2f s", secs));
}

// ---------------------------------------------------------------- 5

std::size_t brute_force_best(const std::vector<double>& u1, const std::vector<double>& u2,
                             const std::vector<StagePredictions>& p, const std::vector<std::size_t>& y,
                             std::size_t grid) {
  const auto axis = [grid](const std::vector<double>& u) {
    const double lo = *std::min_element(u.begin(), u.end());
    const double hi = *std::max_element(u.begin(), u.end());
    std::vector<double> g(grid);
    for (std::size_t i = 0; i < grid; ++i) g[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(grid - 1);
    g.back() = hi;
    return g;
  };
  std::size_t best = 0;
  for (double t1 : axis(u1)) {
    for (double t2 : axis(u2)) {
      std::size_t correct = 0;
      for (std::size_t i = 0; i < y.size(); ++i) {
        const std::size_t stage = u1[i] <= t1 ? 0 : (u2[i] <= t2 ? 1 : 2);
        correct += p[i][stage] == y[i];
      }
      best = std::max(best, correct);
    }
  }
  return best;
}

Outcome tuning_oracle() {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<std::size_t> size(2, 30);
  const auto instance = [&](std::size_t n, std::size_t grid) {
    std::vector<double> u1(n), u2(n);
    std::vector<StagePredictions> p(n);
    std::vector<std::size_t> y(n);
    for (std::size_t i = 0; i < n; ++i) {
      u1[i] = unit(rng);
      u2[i] = u1[i] * unit(rng);
      y[i] = unit(rng) < 0.5;
      for (auto& s : p[i]) s = unit(rng) < 0.5;
    }
    return tune_thresholds(u1, u2, p, y, grid).correct == brute_force_best(u1, u2, p, y, grid);
  };
  std::size_t agree = 0;
  for (int t = 0; t < 50; ++t) agree += instance(size(rng), 10);
  const bool full = instance(30, 100);
  return pass_if(agree == 50 && full, std::to_string(agree) + "/50 reduced-grid instances match, 100x100 instance " +
                                          (full ? "matches" : "differs"));
}

// ---------------------------------------------------------------- 6

Outcome degenerate_thresholds() {
  struct Shape {
    std::size_t classes;
    std::vector<std::size_t> dims;
    std::vector<double> separations;
  };
  const Shape shapes[] = {{2, {5, 5, 5}, {3.0, 1.0, 0.5}},
                          {3, {6, 4, 4}, {2.0, 2.0, 0.0}},
                          {2, {4, 4}, {1.0, 1.0}},
                          {4, {5, 5, 5, 5}, {1.5, 1.0, 0.5, 0.0}}};
  std::size_t equal = 0;
  std::string detail;
  for (std::size_t s = 0; s < std::size(shapes); ++s) {
    RunConfig cfg;
    SyntheticConfig syn;
    syn.n_samples = 200;
    syn.classes = shapes[s].classes;
    syn.feature_dims = shapes[s].dims;
    syn.separations = shapes[s].separations;
    syn.seed = 60 + s;
    cfg.synthetic = syn;
    cfg.train.epochs = 40;
    cfg.train.learning_rate = 1e-2;
    cfg.train.hidden = {8};
    cfg.seed = s;
    const auto ds = prepare_dataset(cfg);
    const auto models = train(ds, cfg.train).models;
    const auto outcome = evaluate_policy(ds, models, StagedDecisionPolicy{ds.view_ids(), 0.0, 0.0});
    const bool same = outcome.staged.accuracy == outcome.tri_view.accuracy;
    equal += same;
    detail += (s ? ", " : "") + fmt("%.4f", outcome.staged.accuracy) + (same ? "==" : "!=") +
              fmt("%.4f", outcome.tri_view.accuracy);
  }
  return pass_if(equal == std::size(shapes), std::to_string(std::size(shapes)) + " datasets: " + detail);
}

// ---------------------------------------------------------------- 7

struct SeedResult {
  bool a = false;
  bool b = false;
  bool c = false;
  double seconds = 0.0;
  std::string line;
};

SeedResult synthetic_seed(std::uint64_t seed) {
  const auto start = std::chrono::steady_clock::now();
  RunConfig cfg;
  SyntheticConfig syn;
  syn.n_samples = 600;
  syn.classes = 2;
  syn.feature_dims = {20, 20, 20};
  syn.separations = {6.0, 1.0, 1.0};
  syn.noise = 1.0;
  syn.seed = seed;
  syn.view_ids = {"strong", "weak_a", "weak_b"};
  cfg.synthetic = syn;
  cfg.seed = seed;
  const auto ds = prepare_dataset(cfg);
  const auto models = train(ds, cfg.train).models;
  const auto tuned = tune_policy(ds, models, cfg);
  const StagedDecisionPolicy policy{tuned.view_order, tuned.choice.t1, tuned.choice.t2};
  const auto outcome = evaluate_policy(ds, models, policy);

  const auto test_rows = ds.rows(Split::kTest);
  const auto report = combination_report(ds, models, test_rows);
  double best_single = 0.0;
  for (const auto& r : report) {
    if (r.views.size() == 1) best_single = std::max(best_single, r.metrics.accuracy);
  }

  SeedResult res;
  res.a = outcome.tri_view.accuracy >= best_single - 0.02;
  const double stage1 = outcome.distribution.fractions[0];
  res.b = stage1 >= 0.40 && outcome.staged.accuracy >= outcome.tri_view.accuracy - 0.02;

  // Uncertainty of correct and incorrect test predictions, pooled over every
  // view combination the model reports, and checked again inside each
  // combination that makes at least five mistakes.
  std::vector<std::vector<std::size_t>> subsets;
  const std::size_t v_count = ds.view_count();
  for (std::size_t a = 0; a < v_count; ++a) subsets.push_back({a});
  for (std::size_t a = 0; a < v_count; ++a) {
    for (std::size_t b = a + 1; b < v_count; ++b) subsets.push_back({a, b});
  }
  subsets.push_back({0, 1, 2});
  double pooled_right = 0.0, pooled_wrong = 0.0;
  std::size_t n_right = 0, n_wrong = 0;
  bool within = true;
  std::size_t checked = 0;
  for (const auto& subset : subsets) {
    double right = 0.0, wrong = 0.0;
    std::size_t nr = 0, nw = 0;
    for (std::size_t r : test_rows) {
      const FeatureSource features = row_features(ds, r);
      std::vector<SubjectiveOpinion> parts;
      for (std::size_t v : subset) parts.push_back(opinion_from_dirichlet(models[v].forward(features(ds.views[v].id))));
      const auto fused = combine_all(parts).opinion;
      if (fused.predicted_class() == ds.labels[r]) {
        right += fused.uncertainty();
        ++nr;
      } else {
        wrong += fused.uncertainty();
        ++nw;
      }
    }
    pooled_right += right;
    pooled_wrong += wrong;
    n_right += nr;
    n_wrong += nw;
    if (nw >= 5 && nr > 0) {
      ++checked;
      within = within && wrong / static_cast<double>(nw) > right / static_cast<double>(nr);
    }
  }
  const double mean_right = pooled_right / static_cast<double>(std::max<std::size_t>(n_right, 1));
  const double mean_wrong = pooled_wrong / static_cast<double>(std::max<std::size_t>(n_wrong, 1));
  res.c = n_wrong > 0 && n_right > 0 && mean_wrong > mean_right && within;
  res.seconds = seconds_since(start);

  const auto staged_split = uncertainty_by_correctness(outcome);
  std::ostringstream line;
  line << "seed " << seed << ": tri " << fmt("%.3f", outcome.tri_view.accuracy) << " best single "
       << fmt("%.3f", best_single) << " | stage-1 " << fmt("%.3f", stage1) << " staged "
       << fmt("%.3f", outcome.staged.accuracy) << " | U wrong " << fmt("%.3f", mean_wrong) << " (" << n_wrong
       << ") vs right " << fmt("%.3f", mean_right) << " (" << n_right << "), " << checked
       << " combinations checked | staged errors " << staged_split.incorrect << " | " << fmt("%.1f s", res.seconds)
       << " | " << (res.a ? "a" : "-") << (res.b ? "b" : "-") << (res.c ? "c" : "-");
  res.line = line.str();
  return res;
}

Outcome synthetic_behaviour() {
  std::size_t held = 0;
  std::string detail;
  bool fast = true;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto r = synthetic_seed(seed);
    std::printf("    %s\n", r.line.c_str());
    held += r.a && r.b && r.c;
    fast = fast && r.seconds < 120.0;
  }
  return pass_if(held >= 4 && fast, std::to_string(held) + "/5 seeds satisfy (a), (b) and (c)");
}

// ---------------------------------------------------------------- 8

Outcome benchmark_reproduction() {
  const char* root = std::getenv("EVFUSE_BENCHMARK_DIR");
  if (root == nullptr) return {Verdict::kSkip, "optional; set EVFUSE_BENCHMARK_DIR to <dir>/<NAME>/{labels.csv,<view>.csv}"};
  struct Target {
    const char* name;
    double accuracy;
    double stage1;  // negative when no reference fraction is used
  };
  const Target targets[] = {{"ROSMAP", 0.858, 0.6887}, {"LGG", 0.856, -1.0}, {"BRCA", 0.855, -1.0}, {"KIPAN", 1.000, -1.0}};
  std::size_t found = 0, ok = 0;
  std::string detail;
  for (const auto& t : targets) {
    const fs::path dir = fs::path(root) / t.name;
    if (!fs::exists(dir / "labels.csv")) continue;
    ++found;
    RunConfig cfg;
    for (const auto& entry : fs::directory_iterator(dir)) {
      if (entry.path().extension() == ".csv" && entry.path().filename() != "labels.csv") {
        cfg.views.push_back({entry.path().stem().string(), entry.path()});
      }
    }
    std::sort(cfg.views.begin(), cfg.views.end(), [](const ViewSource& a, const ViewSource& b) { return a.id < b.id; });
    cfg.labels = dir / "labels.csv";
    const auto ds = prepare_dataset(cfg);
    const auto models = train(ds, cfg.train).models;
    const auto tuned = tune_policy(ds, models, cfg);
    const auto outcome = evaluate_policy(ds, models, {tuned.view_order, tuned.choice.t1, tuned.choice.t2});
    bool good = std::abs(outcome.tri_view.accuracy - t.accuracy) <= 0.05;
    if (t.stage1 >= 0.0) good = good && std::abs(outcome.distribution.fractions[0] - t.stage1) <= 0.15;
    ok += good;
    detail += std::string(detail.empty() ? "" : ", ") + t.name + " " + fmt("%.3f", outcome.tri_view.accuracy);
  }
  if (found == 0) return {Verdict::kSkip, std::string("no dataset folders under ") + root};
  return pass_if(ok == found, detail);
}

// ---------------------------------------------------------------- 9

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

Outcome determinism() {
  const fs::path root = fs::temp_directory_path() / "evfuse_acceptance_determinism";
  fs::remove_all(root);
  const auto configure = [&](const std::string& name) {
    RunConfig cfg;
    SyntheticConfig syn;
    syn.n_samples = 200;
    syn.feature_dims = {8, 8, 8};
    syn.separations = {3.0, 1.0, 1.0};
    syn.seed = 9;
    cfg.synthetic = syn;
    cfg.train.epochs = 60;
    cfg.train.batch_size = 32;
    cfg.seed = 9;
    cfg.repeat = 2;
    cfg.output_dir = root / name;
    return cfg;
  };
  for (const char* name : {"first", "second"}) {
    const auto cfg = configure(name);
    run_all(cfg);
    auto staged = cfg;
    staged.output_dir = root / name / "commands";
    run_train(staged);
    run_tune(staged);
    run_evaluate(staged);
    run_evaluate(staged);
  }
  std::size_t compared = 0, identical = 0;
  for (const char* rel : {"metrics.json", "repeat_0/metrics.json", "repeat_1/metrics.json", "commands/metrics.json",
                          "repeat_0/train_report.json", "commands/predictions.csv"}) {
    ++compared;
    const std::string a = slurp(root / "first" / rel);
    identical += !a.empty() && a == slurp(root / "second" / rel);
  }
  fs::remove_all(root);
  return pass_if(identical == compared, std::to_string(identical) + "/" + std::to_string(compared) +
                                            " output files byte-identical across repeated runs");
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    std::function<Outcome()> run;
  };
  const Criterion criteria[] = {
      {1, "fusion algebra", fusion_algebra},
      {2, "worked fusion values", worked_fusion},
      {3, "loss correctness", loss_correctness},
      {4, "gradient check", gradient_check_criterion},
      {5, "threshold search oracle", tuning_oracle},
      {6, "zero thresholds equal tri-view fusion", degenerate_thresholds},
      {7, "synthetic end-to-end behaviour", synthetic_behaviour},
      {8, "benchmark reproduction", benchmark_reproduction},
      {9, "determinism", determinism},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    Outcome out;
    try {
      out = c.run();
    } catch (const std::exception& e) {
      out = {Verdict::kFail, std::string("exception: ") + e.what()};
    }
    const char* tag = out.verdict == Verdict::kPass ? "PASS" : out.verdict == Verdict::kFail ? "FAIL" : "SKIP";
    failures += out.verdict == Verdict::kFail;
    std::printf("%s %d %s: %s\n", tag, c.id, c.name, out.detail.c_str());
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
