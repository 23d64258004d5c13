#include "hte/cate_tests.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <set>
#include <vector>

#include <gtest/gtest.h>

namespace {

using namespace hte;

// Proxy that ignores its training data.
struct ConstantProxy {
	Eigen::VectorXd predict(const Eigen::MatrixXd& Z) const { return Eigen::VectorXd::Constant(Z.rows(), 2.0); }
};
struct ConstantFitter {
	ConstantProxy operator()(const Dataset&) const { return {}; }
};

// Independent N(0,1) proxy values, seeded by the training set so each fit
// draws a fresh stream.
struct NoiseProxy {
	std::uint64_t seed;
	Eigen::VectorXd predict(const Eigen::MatrixXd& Z) const
	{
		Rng rng(seed);
		Eigen::VectorXd out(Z.rows());
		for (Eigen::Index i = 0; i < Z.rows(); ++i)
			out(i) = rng.normal();
		return out;
	}
};
struct NoiseFitter {
	std::uint64_t salt;
	NoiseProxy operator()(const Dataset& train) const
	{
		return {mix64(salt, static_cast<std::uint64_t>(train.size()),
		              std::bit_cast<std::uint64_t>(train.Y(0)), 0)};
	}
};

Dataset data_for(CateSpec cate, int n, std::uint64_t seed)
{
	DgpConfig cfg;
	cfg.n = n;
	cfg.cate = cate;
	return generate_dataset(cfg, seed);
}

TEST(MakeSplit, EqualFoldSizes)
{
	EXPECT_EQ(make_split(9, KEqualFolds{3}, 1).fold_sizes(), (std::vector<std::size_t>{3, 3, 3}));
	auto sizes = make_split(10, KEqualFolds{3}, 1).fold_sizes();
	std::sort(sizes.begin(), sizes.end());
	EXPECT_EQ(sizes, (std::vector<std::size_t>{3, 3, 4}));
}

TEST(MakeSplit, TrainTestRatioRounding)
{
	const SplitPlan plan = make_split(999, TrainTestRatio{2.0 / 3.0}, 4);
	EXPECT_EQ(plan.rows_in(0).size(), 666u);
	EXPECT_EQ(plan.rows_in(1).size(), 333u);
}

TEST(MakeSplit, PartitionAndDeterminism)
{
	const SplitPlan a = make_split(100, KEqualFolds{4}, 8);
	const SplitPlan b = make_split(100, KEqualFolds{4}, 8);
	EXPECT_TRUE(std::equal(a.folds().begin(), a.folds().end(), b.folds().begin()));
	std::set<int> all;
	for (int k = 0; k < 4; ++k)
		for (int r : a.rows_in(k))
			EXPECT_TRUE(all.insert(r).second);
	EXPECT_EQ(all.size(), 100u);
	const SplitPlan c = make_split(100, KEqualFolds{4}, 9);
	EXPECT_FALSE(std::equal(a.folds().begin(), a.folds().end(), c.folds().begin()));
}

TEST(MakeSplit, TooSmall)
{
	EXPECT_THROW(make_split(5, KEqualFolds{3}, 1), InsufficientDataError);
	EXPECT_THROW(make_split(5, TrainTestRatio{0.9}, 1), InsufficientDataError);
	EXPECT_THROW(make_split(50, TrainTestRatio{1.0}, 1), ConfigError);
}

TEST(CateTests, DegenerateProxyGivesHalf)
{
	const Dataset data = data_for(CateSpec::RectifiedFirstCoordinate, 300, 1);
	const TestResult naive = naive_dml_test(data, ConstantFitter{}, 3, 5);
	EXPECT_EQ(naive.p_value, 0.5);
	EXPECT_EQ(naive.method, "naive");
	const TestResult seq = sequential_test(data, ConstantFitter{}, 3, 5);
	EXPECT_EQ(seq.statistic, 0.0);
	EXPECT_EQ(seq.p_value, 0.5);
	EXPECT_EQ(twofold_test(data, ConstantFitter{}, 2.0 / 3.0, 5).p_value, 0.5);
}

TEST(CateTests, HeldOutFoldTooSmall)
{
	const Dataset data = data_for(CateSpec::Zero, 6, 2);
	EXPECT_THROW(twofold_test(data, LearnerSpec{}, 0.7, 1), InsufficientDataError);
}

TEST(CateTests, PValuesInRangeAndDeterministic)
{
	const LearnerSpec spec;
	for (std::uint64_t s = 0; s < 10; ++s) {
		const Dataset data = data_for(s % 2 ? CateSpec::Zero : CateSpec::RectifiedFirstCoordinate, 300, s);
		for (const TestResult& r : {naive_dml_test(data, spec, 3, s), twofold_test(data, spec, 2.0 / 3.0, s),
		                            sequential_test(data, spec, 3, s)}) {
			EXPECT_GE(r.p_value, 0.0);
			EXPECT_LE(r.p_value, 1.0);
			EXPECT_NEAR(r.p_value, normal_upper_tail(r.statistic), 1e-15);
		}
		EXPECT_EQ(sequential_test(data, spec, 3, s).p_value, sequential_test(data, spec, 3, s).p_value);
		EXPECT_EQ(naive_dml_test(data, spec, 3, s).p_value, naive_dml_test(data, spec, 3, s).p_value);
	}
}

TEST(CateTests, NUsed)
{
	const Dataset data = data_for(CateSpec::Zero, 300, 3);
	EXPECT_EQ(naive_dml_test(data, LearnerSpec{}, 3, 1).n_used, 300);
	EXPECT_EQ(twofold_test(data, LearnerSpec{}, 2.0 / 3.0, 1).n_used, 100);
	EXPECT_EQ(sequential_test(data, LearnerSpec{}, 3, 1).n_used, 200);
}

TEST(CateTests, MonotoneEvidence)
{
	// Adding c * (proxy - mean proxy) to the held-out scores raises zeta.
	Rng rng(12);
	for (int rep = 0; rep < 20; ++rep) {
		Eigen::VectorXd g(40), p(40);
		for (int i = 0; i < 40; ++i) {
			g(i) = 2 * rng.normal();
			p(i) = rng.normal();
		}
		const Eigen::VectorXd centered = p.array() - p.mean();
		double prev = slope_stat(g, p).zeta;
		for (double c : {0.1, 0.5, 1.0, 3.0}) {
			const double z = slope_stat(g + c * centered, p).zeta;
			EXPECT_GE(z, prev - 1e-12);
			EXPECT_LE(normal_upper_tail(z), normal_upper_tail(prev) + 1e-15);
			prev = z;
		}
	}
}

TEST(CateTests, SequentialWithTwoFoldsEqualsHalfSplitTwofold)
{
	for (std::uint64_t s = 0; s < 5; ++s) {
		const Dataset data = data_for(CateSpec::RectifiedFirstCoordinate, 400, 30 + s);
		const TestResult seq = sequential_test(data, LearnerSpec{}, 2, s);
		const TestResult two = twofold_test(data, LearnerSpec{}, 0.5, s);
		EXPECT_EQ(seq.p_value, two.p_value);
	}
}

TEST(CateTests, AlternativeIsDetected)
{
	DgpConfig cfg;
	cfg.cate = CateSpec::RectifiedFirstCoordinate;
	int rejections = 0;
	for (std::uint64_t s = 0; s < 20; ++s)
		rejections += naive_dml_test(generate_dataset(cfg, s), LearnerSpec{}, 3, s).rejects(0.05);
	EXPECT_GE(rejections, 10);
}

TEST(CateTests, SequentialNullCalibrationWithInjectedNoiseProxy)
{
	int rejections = 0;
	const int reps = 2000;
	for (int r = 0; r < reps; ++r) {
		const Dataset data = data_for(CateSpec::Zero, 300, 9000 + r);
		rejections += sequential_test(data, NoiseFitter{static_cast<std::uint64_t>(r)}, 3, r).rejects(0.05);
	}
	const double size = double(rejections) / reps;
	EXPECT_GE(size, 0.035);
	EXPECT_LE(size, 0.065);
}

}  // namespace
