#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "evfuse/errors.hpp"
#include "evfuse/opinion.hpp"

namespace evfuse {
namespace {

std::vector<double> random_evidence(std::mt19937_64& rng, std::size_t k) {
  std::exponential_distribution<double> dist(0.2);
  std::vector<double> e(k);
  for (auto& x : e) x = dist(rng);
  return e;
}

TEST(DirichletFromEvidence, WorkedExamples) {
  auto d = dirichlet_from_evidence(std::vector<double>{0.0, 0.0});
  EXPECT_EQ(d.params(), (std::vector<double>{1.0, 1.0}));
  EXPECT_EQ(d.strength(), 2.0);

  d = dirichlet_from_evidence(std::vector<double>{3.0, 1.0});
  EXPECT_EQ(d.params(), (std::vector<double>{4.0, 2.0}));
  EXPECT_EQ(d.strength(), 6.0);

  d = dirichlet_from_evidence(std::vector<double>{0.0, 0.0, 0.0, 0.0});
  EXPECT_EQ(d.params(), (std::vector<double>(4, 1.0)));
  EXPECT_EQ(d.strength(), 4.0);
}

TEST(DirichletFromEvidence, RejectsBadEvidence) {
  const auto kind_of = [](std::vector<double> e) {
    try {
      dirichlet_from_evidence(e);
    } catch (const Error& err) {
      return err.kind();
    }
    return ErrorKind::kIo;  // sentinel: no throw
  };
  EXPECT_EQ(kind_of({-0.1, 1.0}), ErrorKind::kInvalidEvidence);
  EXPECT_EQ(kind_of({std::nan(""), 1.0}), ErrorKind::kInvalidEvidence);
  EXPECT_EQ(kind_of({std::numeric_limits<double>::infinity(), 1.0}), ErrorKind::kInvalidEvidence);
  EXPECT_EQ(kind_of({1.0}), ErrorKind::kDimension);
}

TEST(OpinionFromDirichlet, WorkedExamples) {
  auto o = opinion_from_dirichlet(dirichlet_from_evidence(std::vector<double>{0.0, 0.0}));
  EXPECT_EQ(o.beliefs(), (std::vector<double>{0.0, 0.0}));
  EXPECT_EQ(o.uncertainty(), 1.0);

  o = opinion_from_dirichlet(dirichlet_from_evidence(std::vector<double>{3.0, 1.0}));
  EXPECT_NEAR(o.beliefs()[0], 0.5, 1e-12);
  EXPECT_NEAR(o.beliefs()[1], 1.0 / 6.0, 1e-12);
  EXPECT_NEAR(o.uncertainty(), 1.0 / 3.0, 1e-12);

  o = opinion_from_dirichlet(dirichlet_from_evidence(std::vector<double>(4, 0.0)));
  EXPECT_EQ(o.uncertainty(), 1.0);
  for (double b : o.beliefs()) EXPECT_EQ(b, 0.0);
}

TEST(DirichletFromOpinion, InvertsWorkedExamples) {
  auto d = dirichlet_from_opinion(SubjectiveOpinion::vacuous(2));
  EXPECT_EQ(d.evidence(), (std::vector<double>{0.0, 0.0}));

  d = dirichlet_from_opinion(SubjectiveOpinion({0.5, 1.0 / 6.0}, 1.0 / 3.0));
  EXPECT_NEAR(d.evidence()[0], 3.0, 1e-12);
  EXPECT_NEAR(d.evidence()[1], 1.0, 1e-12);
}

TEST(SubjectiveOpinion, RejectsInconsistentMasses) {
  EXPECT_THROW(SubjectiveOpinion({0.5, 0.5}, 0.0), Error);
  EXPECT_THROW(SubjectiveOpinion({0.5, 0.4}, 0.2), Error);
  EXPECT_THROW(SubjectiveOpinion({-0.1, 0.6}, 0.5), Error);
  try {
    SubjectiveOpinion({1.0, 0.0}, 0.0);
    FAIL() << "zero uncertainty accepted";
  } catch (const Error& err) {
    EXPECT_EQ(err.kind(), ErrorKind::kDegenerateOpinion);
  }
}

TEST(ExpectedProbabilities, WorkedExamples) {
  auto p = expected_probabilities(dirichlet_from_evidence(std::vector<double>{0.0, 0.0}));
  EXPECT_EQ(p, (std::vector<double>{0.5, 0.5}));
  p = expected_probabilities(dirichlet_from_evidence(std::vector<double>{3.0, 1.0}));
  EXPECT_NEAR(p[0], 2.0 / 3.0, 1e-12);
  EXPECT_NEAR(p[1], 1.0 / 3.0, 1e-12);
}

TEST(Argmax, LowestIndexWinsTies) {
  EXPECT_EQ(argmax(std::vector<double>{1.0, 3.0, 3.0}), 1u);
  EXPECT_EQ(argmax(std::vector<double>{2.0, 2.0}), 0u);
  EXPECT_THROW(argmax(std::vector<double>{}), Error);
}

TEST(OpinionProperties, MassesSumToOneAndArgmaxAgrees) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 10000; ++trial) {
    const std::size_t k = 2 + static_cast<std::size_t>(trial % 5);
    auto e = random_evidence(rng, k);
    if (trial % 7 == 0) e[trial % k] = e[(trial + 1) % k];  // exercise ties
    const auto d = dirichlet_from_evidence(e);
    const auto o = opinion_from_dirichlet(d);
    const double total = std::accumulate(o.beliefs().begin(), o.beliefs().end(), o.uncertainty());
    ASSERT_NEAR(total, 1.0, 1e-9);
    ASSERT_GT(o.uncertainty(), 0.0);
    const std::size_t cls = argmax(e);
    ASSERT_EQ(argmax(d.params()), cls);
    ASSERT_EQ(o.predicted_class(), cls);
    ASSERT_EQ(argmax(expected_probabilities(d)), cls);
  }
}

TEST(OpinionProperties, RoundTripIsIdentity) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int trial = 0; trial < 10000; ++trial) {
    const std::size_t k = 2 + static_cast<std::size_t>(trial % 4);
    // random valid opinion: uniform point on the (k+1)-simplex with u > 0
    std::vector<double> cut(k);
    for (auto& c : cut) c = unit(rng);
    cut.push_back(0.0);
    cut.push_back(1.0);
    std::sort(cut.begin(), cut.end());
    std::vector<double> beliefs(k);
    for (std::size_t j = 0; j < k; ++j) beliefs[j] = cut[j + 1] - cut[j];
    const double u = std::max(cut[k + 1] - cut[k], 1e-3);
    const double scale = (1.0 - u) / std::accumulate(beliefs.begin(), beliefs.end(), 0.0);
    for (auto& b : beliefs) b *= scale;
    const SubjectiveOpinion o(beliefs, u);
    const SubjectiveOpinion back = opinion_from_dirichlet(dirichlet_from_opinion(o));
    ASSERT_NEAR(back.uncertainty(), o.uncertainty(), 1e-9);
    for (std::size_t j = 0; j < k; ++j) ASSERT_NEAR(back.beliefs()[j], o.beliefs()[j], 1e-9);
  }
}

TEST(OpinionProperties, UncertaintyDecreasesWithTotalEvidence) {
  double previous = 2.0;
  for (double total = 0.0; total < 100.0; total += 0.5) {
    const auto o = opinion_from_dirichlet(dirichlet_from_evidence(std::vector<double>{total * 0.3, total * 0.7, 0.0}));
    EXPECT_LT(o.uncertainty(), previous);
    previous = o.uncertainty();
  }
}

}  // namespace
}  // namespace evfuse
