#include <algorithm>
#include <cmath>
#include <random>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "hdm/normal.hpp"
#include "hdm/ordered_probit.hpp"
#include "hdm/synthetic.hpp"

namespace hdm {
namespace {

// 25-digit reference values of the standard normal CDF.
struct CdfReference {
  double z;
  double phi;
};
constexpr CdfReference kCdf[] = {
    {0.0, 0.5},
    {0.5, 0.6914624612740131036377046},
    {1.0, 0.8413447460685429485852325},
    {1.5, 0.933192798731141933995506},
    {2.0, 0.9772498680518207927997174},
    {3.0, 0.9986501019683699054733482},
    {5.0, 0.9999997133484281208060883},
    {-0.5, 0.3085375387259868963622954},
    {-1.0, 0.1586552539314570514147675},
    {-1.5, 0.06680720126885806600449404},
    {-2.0, 0.02275013194817920720028264},
    {-3.0, 0.001349898031630094526651815},
    {-5.0, 2.866515718791939116737523e-7},
};
constexpr double kPhiAtZero = 0.3989422804014326779399461;

constexpr Thresholds kTau = {-1.5, -0.5, 0.5, 1.5, 2.5};
constexpr ClassVector kZeroIndexProbabilities = {
    0.066807201268858066, 0.24173033745712883, 0.38292492254802621,
    0.24173033745712883,  0.060597535943081931, 0.0062096653257761352};

OrderedProbitParams RandomParams(std::mt19937_64& rng, std::size_t p) {
  std::normal_distribution<double> z(0.0, 1.0);
  std::uniform_real_distribution<double> gap(0.2, 1.5);
  OrderedProbitParams params;
  for (std::size_t j = 0; j < p; ++j) params.beta.push_back(z(rng));
  params.thresholds[0] = -2.0 + z(rng);
  for (int k = 1; k < kNumThresholds; ++k) {
    params.thresholds[k] = params.thresholds[k - 1] + gap(rng);
  }
  return params;
}

Dataset RandomData(std::mt19937_64& rng, std::size_t n, std::size_t p) {
  std::normal_distribution<double> z(0.0, 1.0);
  std::vector<double> values(n * p);
  for (double& v : values) v = z(rng);
  std::vector<int> labels(n);
  for (int& y : labels) y = static_cast<int>(rng() % kNumClasses);
  return testing::MakeDataset(p, std::move(values), std::move(labels));
}

double FdLogLikelihood(const OrderedProbitParams& params, const Dataset& data,
                       std::size_t k, double h) {
  Eigen::VectorXd plus = params.Pack();
  Eigen::VectorXd minus = plus;
  plus[k] += h;
  minus[k] -= h;
  const std::size_t p = params.beta.size();
  return (LogLikelihood(OrderedProbitParams::Unpack(plus, p), data) -
          LogLikelihood(OrderedProbitParams::Unpack(minus, p), data)) /
         (2 * h);
}

TEST(NormalTest, CdfAgainstReference) {
  for (const auto& [z, phi] : kCdf) {
    EXPECT_NEAR(NormalCdf(z), phi, 1e-12) << z;
    EXPECT_NEAR(NormalSurvival(-z), phi, 1e-12) << z;
  }
  EXPECT_NEAR(NormalPdf(0.0), kPhiAtZero, 1e-15);
}

TEST(NormalTest, QuantileInvertsCdf) {
  for (double p : {1e-12, 1e-6, 0.01, 0.3, 0.5, 0.77, 0.999}) {
    EXPECT_NEAR(NormalCdf(NormalQuantile(p)), p, 1e-12 * std::max(1.0, p / 1e-3));
  }
}

TEST(NormalTest, IntervalProbabilityTails) {
  EXPECT_NEAR(NormalIntervalProbability(8.0, 9.0), 6.21983198586583043e-16, 1e-27);
  EXPECT_EQ(NormalIntervalProbability(-INFINITY, INFINITY), 1.0);
  EXPECT_EQ(NormalIntervalProbability(0.0, INFINITY), 0.5);
}

TEST(ClassProbabilitiesTest, ZeroIndexOracle) {
  const OrderedProbitParams params{{0.7}, kTau};
  const double x[] = {0.0};
  const ClassVector probs = ClassProbabilities(params, x);
  for (int c = 0; c < kNumClasses; ++c) {
    EXPECT_NEAR(probs[c], kZeroIndexProbabilities[c], 1e-12) << c;
  }
}

TEST(ClassProbabilitiesTest, Limits) {
  const OrderedProbitParams params{{1.0}, kTau};
  const double high[] = {1e6};
  const double low[] = {-1e6};
  const ClassVector top = ClassProbabilities(params, high);
  const ClassVector bottom = ClassProbabilities(params, low);
  for (int c = 0; c < kNumClasses; ++c) {
    EXPECT_NEAR(top[c], c == 5 ? 1.0 : 0.0, 1e-12);
    EXPECT_NEAR(bottom[c], c == 0 ? 1.0 : 0.0, 1e-12);
  }
}

TEST(ClassProbabilitiesTest, NormalizationAndMonotoneCdf) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> z(0.0, 3.0);
  for (int trial = 0; trial < 10000; ++trial) {
    const OrderedProbitParams params = RandomParams(rng, 3);
    const double x[] = {z(rng), z(rng), z(rng)};
    const ClassVector probs = ClassProbabilities(params, x);
    double sum = 0.0;
    for (double pr : probs) {
      EXPECT_GE(pr, 0.0);
      EXPECT_LE(pr, 1.0);
      sum += pr;
    }
    ASSERT_NEAR(sum, 1.0, 1e-12);
    const double eta = params.LinearIndex(x);
    for (int k = 1; k < kNumThresholds; ++k) {
      ASSERT_LE(NormalCdf(params.thresholds[k - 1] - eta),
                NormalCdf(params.thresholds[k] - eta));
    }
  }
}

TEST(ClassProbabilitiesTest, DimensionMismatch) {
  const OrderedProbitParams params{{1.0, 2.0}, kTau};
  const double x[] = {1.0};
  EXPECT_THROW(ClassProbabilities(params, x), InvalidArgument);
}

TEST(ClassProbabilitiesTest, ShiftEquivariance) {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> z(0.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    OrderedProbitParams params = RandomParams(rng, 3);
    const double x[] = {1.0, z(rng), z(rng)};
    const double c = 2.0 * z(rng);
    const ClassVector before = ClassProbabilities(params, x);
    for (double& t : params.thresholds) t += c;
    params.beta[0] += c;
    const ClassVector after = ClassProbabilities(params, x);
    for (int k = 0; k < kNumClasses; ++k) EXPECT_NEAR(before[k], after[k], 1e-12);
  }
}

TEST(LogLikelihoodTest, SingleRowHalf) {
  const OrderedProbitParams params{{1.0}, {0.0, 1.0, 2.0, 3.0, 4.0}};
  const Dataset d = testing::MakeDataset(1, {0.0}, {0});
  EXPECT_NEAR(LogLikelihood(params, d), -0.693147180559945, 1e-14);
}

TEST(LogLikelihoodTest, DuplicatedDataDoubles) {
  std::mt19937_64 rng(3);
  const Dataset d = RandomData(rng, 50, 2);
  std::vector<double> values = d.values();
  values.insert(values.end(), d.values().begin(), d.values().end());
  std::vector<int> labels = d.labels();
  labels.insert(labels.end(), d.labels().begin(), d.labels().end());
  const Dataset twice = testing::MakeDataset(2, values, labels);
  const OrderedProbitParams params = RandomParams(rng, 2);
  EXPECT_NEAR(LogLikelihood(params, twice), 2.0 * LogLikelihood(params, d),
              1e-12 * std::abs(LogLikelihood(params, d)));
}

TEST(LogLikelihoodTest, NullModelClosedForm) {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 20; ++trial) {
    const Dataset d = RandomData(rng, 40 + rng() % 300, 2);
    std::array<double, kNumClasses> counts{};
    for (int y : d.labels()) counts[y] += 1;
    double oracle = 0.0;
    for (double nc : counts) {
      if (nc > 0) oracle += nc * std::log(nc / d.n_rows());
    }
    if (std::any_of(counts.begin(), counts.end(), [](double c) { return c == 0; })) continue;
    const OrderedProbitParams null{{0.0, 0.0}, NullThresholds(d.labels())};
    EXPECT_NEAR(LogLikelihood(null, d), oracle, 1e-9);
    EXPECT_NEAR(NullLogLikelihood(d.labels()), oracle, 1e-9);
  }
}

TEST(LogLikelihoodTest, FiniteUnderExtremeSeparation) {
  const OrderedProbitParams params{{1.0}, kTau};
  const Dataset d = testing::MakeDataset(1, {50.0}, {0});
  const double ll = LogLikelihood(params, d);
  EXPECT_TRUE(std::isfinite(ll));
  EXPECT_NEAR(ll, std::log(kProbabilityFloor), 1e-9);
}

TEST(ScoreTest, MatchesCentralDifferences) {
  std::mt19937_64 rng(5);
  for (int instance = 0; instance < 100; ++instance) {
    const Dataset d = RandomData(rng, 20, 3);
    const OrderedProbitParams params = RandomParams(rng, 3);
    const Eigen::VectorXd g = Score(params, d);
    for (Eigen::Index k = 0; k < g.size(); ++k) {
      const double fd = FdLogLikelihood(params, d, k, 1e-5);
      EXPECT_NEAR(g[k], fd, 1e-4 * std::max(1.0, std::abs(fd)))
          << "instance " << instance << " component " << k;
    }
  }
}

TEST(ScoreTest, HessianMatchesDifferencesOfScore) {
  std::mt19937_64 rng(6);
  for (int instance = 0; instance < 20; ++instance) {
    const Dataset d = RandomData(rng, 30, 2);
    const OrderedProbitParams params = RandomParams(rng, 2);
    const Eigen::MatrixXd h = LogLikelihoodHessian(params, d);
    const Eigen::VectorXd base = params.Pack();
    for (Eigen::Index k = 0; k < base.size(); ++k) {
      Eigen::VectorXd plus = base;
      Eigen::VectorXd minus = base;
      plus[k] += 1e-6;
      minus[k] -= 1e-6;
      const Eigen::VectorXd fd = (Score(OrderedProbitParams::Unpack(plus, 2), d) -
                                  Score(OrderedProbitParams::Unpack(minus, 2), d)) /
                                 2e-6;
      for (Eigen::Index r = 0; r < base.size(); ++r) {
        EXPECT_NEAR(h(r, k), fd[r], 1e-4 * std::max(1.0, std::abs(fd[r])));
      }
    }
    EXPECT_LT((h - h.transpose()).cwiseAbs().maxCoeff(), 1e-9);
  }
}

TEST(ScoreTest, LabelReversalAntisymmetry) {
  std::mt19937_64 rng(7);
  const Dataset d = RandomData(rng, 60, 1);
  std::vector<int> reversed = d.labels();
  for (int& y : reversed) y = kNumClasses - 1 - y;
  const Dataset r = testing::MakeDataset(1, d.values(), reversed);
  const OrderedProbitParams params{{0.0}, {-2.0, -0.7, 0.0, 0.7, 2.0}};
  const Eigen::VectorXd g = Score(params, d);
  const Eigen::VectorXd gr = Score(params, r);
  for (int k = 0; k < kNumThresholds; ++k) {
    EXPECT_NEAR(gr[1 + k], -g[1 + (kNumThresholds - 1 - k)], 1e-10);
    EXPECT_NEAR(gr[1 + k], -FdLogLikelihood(params, d, 1 + kNumThresholds - 1 - k, 1e-5),
                1e-4 * std::max(1.0, std::abs(gr[1 + k])));
  }
}

TEST(FitStatisticsTest, PublishedTableValues) {
  EXPECT_NEAR(McFaddenR2(-849.0, -954.4), 0.11, 0.005);
  EXPECT_NEAR(McFaddenR2(-849.0, -954.4), 1.0 - 849.0 / 954.4, 1e-15);
  EXPECT_NEAR(Aic(-849.0, 21), 1740.0, 0.05);
  EXPECT_NEAR(Aic(-954.4, 5), 1918.8, 0.05);
}

class ProbitFitTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    spec_ = new SyntheticSpec(testing::ProbitSpec(4, 1.0, {0.3, 0.5, 0.7, 0.85, 0.95}));
    data_ = new Dataset(GenerateSynthetic(*spec_, 5000, 99));
    fit_ = new OrderedProbitFit(FitOrderedProbit(*data_, data_->schema().names()));
  }
  static void TearDownTestSuite() {
    delete fit_;
    delete data_;
    delete spec_;
  }
  static SyntheticSpec* spec_;
  static Dataset* data_;
  static OrderedProbitFit* fit_;
};
SyntheticSpec* ProbitFitTest::spec_ = nullptr;
Dataset* ProbitFitTest::data_ = nullptr;
OrderedProbitFit* ProbitFitTest::fit_ = nullptr;

TEST_F(ProbitFitTest, RecoversGeneratingParameters) {
  ASSERT_TRUE(fit_->converged) << fit_->message;
  const Eigen::VectorXd truth = OrderedProbitParams{spec_->beta(), spec_->thresholds}.Pack();
  const Eigen::VectorXd estimate = fit_->params.Pack();
  for (Eigen::Index k = 0; k < truth.size(); ++k) {
    EXPECT_LE(std::abs(estimate[k] - truth[k]), 3.0 * fit_->standard_errors[k]) << k;
    EXPECT_LE(std::abs(estimate[k] - truth[k]) / std::max(std::abs(truth[k]), 0.1), 0.15)
        << k;
  }
}

TEST_F(ProbitFitTest, FirstOrderConditionAndStatistics) {
  EXPECT_LT(fit_->gradient_max_norm, 1e-6);
  EXPECT_LT(Score(fit_->params, *data_).cwiseAbs().maxCoeff(), 1e-6);
  EXPECT_NEAR(fit_->log_likelihood_full, LogLikelihood(fit_->params, *data_), 1e-9);
  EXPECT_NEAR(fit_->log_likelihood_null, NullLogLikelihood(data_->labels()), 1e-9);
  EXPECT_DOUBLE_EQ(fit_->mcfadden_r2,
                   1.0 - fit_->log_likelihood_full / fit_->log_likelihood_null);
  EXPECT_DOUBLE_EQ(fit_->aic_full, -2.0 * (fit_->log_likelihood_full - 9));
  EXPECT_DOUBLE_EQ(fit_->aic_null, -2.0 * (fit_->log_likelihood_null - 5));
  EXPECT_GE(fit_->mcfadden_r2, 0.0);
  EXPECT_LT(fit_->mcfadden_r2, 1.0);
}

TEST_F(ProbitFitTest, CovarianceAndTValues) {
  ASSERT_TRUE(fit_->covariance.has_value());
  const Eigen::MatrixXd& cov = *fit_->covariance;
  EXPECT_LT((cov - cov.transpose()).cwiseAbs().maxCoeff(), 1e-12);
  for (Eigen::Index k = 0; k < cov.rows(); ++k) {
    EXPECT_GE(cov(k, k), 0.0);
    EXPECT_NEAR(fit_->standard_errors[k], std::sqrt(cov(k, k)), 1e-15);
    EXPECT_NEAR(fit_->t_values[k], fit_->params.Pack()[k] / fit_->standard_errors[k], 1e-9);
  }
  const Eigen::MatrixXd inverse = -LogLikelihoodHessian(fit_->params, *data_);
  EXPECT_LT((cov * inverse - Eigen::MatrixXd::Identity(cov.rows(), cov.cols()))
                .cwiseAbs()
                .maxCoeff(),
            1e-8);
}

TEST_F(ProbitFitTest, LikelihoodAscentAndMonotoneThresholds) {
  const auto& trace = fit_->log_likelihood_trace;
  ASSERT_GE(trace.size(), 2u);
  for (std::size_t i = 1; i < trace.size(); ++i) EXPECT_GE(trace[i], trace[i - 1]);
  for (int k = 1; k < kNumThresholds; ++k) {
    EXPECT_LT(fit_->params.thresholds[k - 1], fit_->params.thresholds[k]);
  }
}

TEST_F(ProbitFitTest, SerializationRoundTrip) {
  const OrderedProbitFit back = ParseFit(KvConfig::Parse(SerializeFit(*fit_)));
  EXPECT_EQ(back.params.beta, fit_->params.beta);
  EXPECT_EQ(back.params.thresholds, fit_->params.thresholds);
  EXPECT_EQ(back.feature_names, fit_->feature_names);
  EXPECT_EQ(SerializeFit(back), SerializeFit(*fit_));
}

TEST_F(ProbitFitTest, ReportStatisticsAreInternallyConsistent) {
  const std::string report = FormatFitReport(*fit_);
  const auto block = report.find("[full_precision]");
  ASSERT_NE(block, std::string::npos);
  const auto value = [&](const std::string& key) {
    const auto at = report.find(key + " = ", block);
    EXPECT_NE(at, std::string::npos) << key;
    return std::stod(report.substr(at + key.size() + 3));
  };
  EXPECT_NEAR(value("mcfadden_r2"),
              1.0 - value("log_likelihood_full") / value("log_likelihood_null"), 1e-9);
  EXPECT_NE(report.find("converged = true"), std::string::npos);
}

TEST_F(ProbitFitTest, Deterministic) {
  const OrderedProbitFit again = FitOrderedProbit(*data_, data_->schema().names());
  EXPECT_EQ(again.params.Pack(), fit_->params.Pack());
}

TEST(ProbitFitErrorsTest, Preconditions) {
  const Dataset constant = testing::MakeDataset(1, std::vector<double>(20, 1.0),
                                                std::vector<int>(20, 2));
  const std::vector<std::string> names{"x1"};
  EXPECT_THROW(FitOrderedProbit(constant, names), InvalidArgument);
  const Dataset tiny = testing::MakeDataset(1, {1, 2, 3, 4, 5, 6}, {0, 1, 0, 1, 0, 1});
  EXPECT_THROW(FitOrderedProbit(tiny, names), InvalidArgument);
}

TEST(ProbitFitErrorsTest, IterationCapReportsNonConvergence) {
  const SyntheticSpec spec = testing::ProbitSpec(3, 1.0, {0.3, 0.5, 0.7, 0.85, 0.95});
  const Dataset d = GenerateSynthetic(spec, 500, 1);
  OrderedProbitOptions options;
  options.max_iterations = 1;
  const OrderedProbitFit fit = FitOrderedProbit(d, d.schema().names(), options);
  EXPECT_FALSE(fit.converged);
  EXPECT_NE(FormatFitReport(fit).find("converged = false"), std::string::npos);
}

TEST(PredictTest, ArgmaxAndTies) {
  EXPECT_EQ(ArgMax({0.5, 0.1, 0.1, 0.1, 0.1, 0.1}), 0);
  EXPECT_EQ(ArgMax({0.1, 0.3, 0.3, 0.1, 0.1, 0.1}), 1);
  OrderedProbitFit fit;
  fit.feature_names = {"x1"};
  fit.params = {{1.0}, kTau};
  const double high[] = {1e6};
  EXPECT_EQ(PredictClass(fit, high), 5);
}

TEST(ExpectedSharesTest, MeanOfRows) {
  OrderedProbitFit fit;
  fit.feature_names = {"x1"};
  fit.params = {{0.8}, kTau};
  const double x[] = {0.3};
  const ClassVector one = ClassProbabilities(fit.params, x);
  const ClassVector single = ExpectedClassShares(fit, testing::MakeDataset(1, {0.3}, {0}));
  const ClassVector two =
      ExpectedClassShares(fit, testing::MakeDataset(1, {0.3, 0.3}, {0, 1}));
  for (int c = 0; c < kNumClasses; ++c) {
    EXPECT_NEAR(single[c], one[c], 1e-15);
    EXPECT_NEAR(two[c], one[c], 1e-15);
  }
  fit.params.beta = {0.0};
  const ClassVector null =
      ExpectedClassShares(fit, testing::MakeDataset(1, {-4, 0.5, 9}, {0, 1, 2}));
  double sum = 0.0;
  for (int c = 0; c < kNumClasses; ++c) {
    EXPECT_NEAR(null[c], kZeroIndexProbabilities[c], 1e-12);
    sum += null[c];
  }
  EXPECT_NEAR(sum, 1.0, 1e-10);
}

TEST(MarginalEffectsTest, SingleFeatureExample) {
  const OrderedProbitParams params{{0.5}, {0.0, 1.0, 2.0, 3.0, 4.0}};
  const double x[] = {0.0};
  const Eigen::MatrixXd me = MarginalEffects(params, x);
  EXPECT_NEAR(me(0, 0), -kPhiAtZero * 0.5, 1e-15);
  EXPECT_NEAR(me(0, 0), -0.199471, 1e-6);
}

TEST(MarginalEffectsTest, ColumnsSumToZeroAndMatchDifferences) {
  std::mt19937_64 rng(8);
  std::normal_distribution<double> z(0.0, 1.0);
  for (int trial = 0; trial < 500; ++trial) {
    const OrderedProbitParams params = RandomParams(rng, 3);
    std::vector<double> x = {z(rng), z(rng), z(rng)};
    const Eigen::MatrixXd me = MarginalEffects(params, x);
    ASSERT_EQ(me.rows(), kNumClasses);
    for (Eigen::Index j = 0; j < me.cols(); ++j) {
      EXPECT_NEAR(me.col(j).sum(), 0.0, 1e-10);
      std::vector<double> plus = x;
      std::vector<double> minus = x;
      plus[j] += 1e-6;
      minus[j] -= 1e-6;
      const ClassVector pp = ClassProbabilities(params, plus);
      const ClassVector pm = ClassProbabilities(params, minus);
      for (int c = 0; c < kNumClasses; ++c) {
        EXPECT_NEAR(me(c, j), (pp[c] - pm[c]) / 2e-6, 1e-6);
      }
    }
  }
}

TEST(MarginalEffectsTest, ZeroBetaGivesZero) {
  const OrderedProbitParams params{{0.0, 0.0}, kTau};
  const double x[] = {1.3, -0.2};
  EXPECT_EQ(MarginalEffects(params, x).cwiseAbs().maxCoeff(), 0.0);
}

}  // namespace
}  // namespace hdm
