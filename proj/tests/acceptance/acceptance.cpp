// Acceptance run: desk-scale studies plus the property suite, one PASS/FAIL
// line per criterion. Exit status is the number of failed criteria (capped).

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "../ks_oracle.hpp"
#include "hte/report.hpp"
#include "hte/simulator.hpp"

namespace {

using namespace hte;

struct Options {
	int replications = 1000;
	int splits = 100;
	int workers = 0;
	double power_noise_sd = 2.0;
};

struct Outcome {
	bool pass;
	std::string detail;
};

int failures = 0;

void report(int id, const std::string& title, const Outcome& o)
{
	std::printf("[%s] criterion %d: %s | %s\n", o.pass ? "PASS" : "FAIL", id, title.c_str(), o.detail.c_str());
	std::fflush(stdout);
	failures += !o.pass;
}

std::string pct(double rate)
{
	char buf[32];
	std::snprintf(buf, sizeof buf, "%.2f%%", 100.0 * rate);
	return buf;
}

std::string num(double v, int digits = 4)
{
	char buf[32];
	std::snprintf(buf, sizeof buf, "%.*f", digits, v);
	return buf;
}

StudyConfig base_config(const Options& opt)
{
	StudyConfig cfg;
	cfg.replications = opt.replications;
	cfg.multisplit.splits = opt.splits;
	cfg.workers = opt.workers;
	return cfg;
}

StudyOutcome timed(const std::string& label, const std::function<StudyOutcome()>& run, const ReportContext& ctx)
{
	const auto t0 = std::chrono::steady_clock::now();
	StudyOutcome out = run();
	const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
	std::printf("\n%s (%.0f s)\n%s\n", label.c_str(), s, emit_report(out.summary, ctx, ReportFormat::Markdown).c_str());
	std::fflush(stdout);
	return out;
}

// 9a: zeta under the null against an independent proxy is N(0,1).
Outcome property_null_calibration()
{
	DgpConfig cfg;
	cfg.n = 333;
	Rng proxy_rng(77);
	std::vector<double> zeta;
	for (std::uint64_t r = 0; r < 2000; ++r) {
		const Eigen::VectorXd g = ht_scores(generate_dataset(cfg, 5000 + r));
		Eigen::VectorXd p(cfg.n);
		for (int i = 0; i < cfg.n; ++i)
			p(i) = proxy_rng.normal();
		zeta.push_back(slope_stat(g, p).zeta);
	}
	const auto ks = test_oracle::ks_test_standard_normal(zeta);
	return {ks.p_value > 0.01, "KS D=" + num(ks.statistic) + " p=" + num(ks.p_value)};
}

// 9b: two disjoint replication ranges merged equal one run over both.
Outcome property_merge(const Options& opt)
{
	StudyConfig cfg = base_config(opt);
	cfg.methods = {Method::Naive, Method::Twofold, Method::Sequential};
	const auto full = run_zero_cate_study(cfg);
	const int half = opt.replications / 2;
	cfg.replications = half;
	const auto a = run_zero_cate_study(cfg);
	cfg.first_replication = static_cast<std::uint64_t>(half);
	cfg.replications = opt.replications - half;
	const auto b = run_zero_cate_study(cfg);
	const auto merged = merge_summaries({a.records, b.records}, cfg.alpha, 0.0, {"naive", "twofold", "sequential"});

	std::vector<RawRecord> records = full.records;
	std::mt19937_64 gen(7);
	std::shuffle(records.begin(), records.end(), gen);
	std::vector<std::vector<RawRecord>> parts(7);
	for (std::size_t i = 0; i < records.size(); ++i)
		parts[i % 7].push_back(records[i]);
	const auto seven = merge_summaries(parts, cfg.alpha, 0.0, {"naive", "twofold", "sequential"});

	const bool ok = merged.same_metrics(full.summary) && seven.same_metrics(full.summary);
	return {ok, std::to_string(half) + "+" + std::to_string(opt.replications - half) +
	                " ranges and a 7-part partition reproduce the full summary exactly"};
}

// 9c: identical results for 1 and 8 workers.
Outcome property_workers(const Options& opt)
{
	bool ok = true;
	for (StudyKind kind : {StudyKind::ZeroCate, StudyKind::Gates}) {
		StudyConfig cfg = base_config(opt);
		cfg.replications = 40;
		cfg.multisplit.splits = 10;
		cfg.workers = 1;
		const auto a = detail::run_study(cfg, kind);
		cfg.workers = 8;
		const auto b = detail::run_study(cfg, kind);
		ok = ok && a.summary.same_metrics(b.summary);
		for (std::size_t i = 0; i < a.records.size(); ++i)
			ok = ok && a.records[i].estimate == b.records[i].estimate && a.records[i].p_value == b.records[i].p_value;
	}
	return {ok, "zero-CATE and GATES studies, 40 replications, workers 1 vs 8"};
}

// 9d: median conventions, doubling, clamping, order invariance, monotonicity.
Outcome property_multisplit()
{
	const auto near = [](double a, double b) { return std::abs(a - b) <= 1e-15; };
	bool ok = near(median_even(std::vector<double>{0.2, 0.4}), 0.3) && median_even(std::vector<double>{3, 1, 2}) == 2.0 &&
	          median_even(std::vector<double>(100, 0.7)) == 0.7;
	ok = ok && near(aggregate_p_values(std::vector<double>(100, 0.01)), 0.02);
	ok = ok && aggregate_p_values(std::vector<double>(100, 0.6)) == 1.0;
	std::mt19937_64 gen(11);
	std::uniform_real_distribution<double> u(0.0, 1.0);
	for (int rep = 0; rep < 1000; ++rep) {
		std::vector<double> p(1 + rep % 100), q;
		for (double& x : p)
			x = u(gen);
		for (double x : p)
			q.push_back(x * u(gen));
		const double a = aggregate_p_values(p);
		std::shuffle(p.begin(), p.end(), gen);
		ok = ok && a == aggregate_p_values(p) && a >= 0.0 && a <= 1.0 && aggregate_p_values(q) <= a;
	}
	return {ok, "median examples, 0.01->0.02, 0.6->1, 1000 random order/monotonicity checks"};
}

// 9e: hand-computed OLS slope and GATES examples.
Outcome property_hand_examples()
{
	Eigen::VectorXd s(3), p(3);
	s << 1, 3, 2;
	p << 0, 1, 2;
	const ZStat z = slope_stat(s, p);
	double err = std::abs(z.slope - 0.5);
	err = std::max(err, std::abs(z.se - std::sqrt(1.5) / 2.0));

	Dataset v;
	v.Z = Eigen::MatrixXd::Zero(4, 1);
	v.D = Eigen::VectorXi::Ones(4);
	v.Y = Eigen::Vector4d(0.5, 1.0, 1.5, 2.0);
	v.propensity = 0.5;
	const auto g = gates_on_validation(v, Eigen::Vector4d(1, 2, 3, 4), 2, 0.05);
	err = std::max(err, std::abs(g.delta_hat - 2.0));
	err = std::max(err, std::abs(g.se - std::sqrt(0.5)));
	return {err <= 1e-12, "max abs error " + num(err, 17)};
}

// 10: oracle constants by Monte Carlo over simulated datasets.
Outcome oracle_constants(const Options& opt)
{
	DgpConfig cfg;
	cfg.cate = CateSpec::RectifiedFirstCoordinate;
	std::vector<double> tau_mean, gamma_mean, delta;
	for (int r = 0; r < opt.replications; ++r) {
		const Dataset d = generate_dataset(cfg, SeedKey::data(424242, static_cast<std::uint64_t>(r)).value());
		const Eigen::VectorXd g = ht_scores(d);
		double t = 0, hi = 0, lo = 0;
		int n_hi = 0;
		for (Eigen::Index i = 0; i < d.size(); ++i) {
			t += std::max(d.Z(i, 0), 0.0);
			if (d.Z(i, 0) > 0.0) {
				hi += g(i);
				++n_hi;
			} else {
				lo += g(i);
			}
		}
		tau_mean.push_back(t / static_cast<double>(d.size()));
		gamma_mean.push_back(g.mean());
		delta.push_back(hi / n_hi - lo / static_cast<double>(d.size() - n_hi));
	}
	const auto within = [](const std::vector<double>& x, double target, std::string& msg) {
		const double m = mean(x);
		const double se = std::sqrt(sample_variance(x) / static_cast<double>(x.size()));
		msg += num(m) + " vs " + num(target) + " (" + num(std::abs(m - target) / se, 2) + " SE); ";
		return std::abs(m - target) <= 3.0 * se;
	};
	std::string msg;
	const double mean_tau = oracle_mean_cate(CateSpec::RectifiedFirstCoordinate);
	bool ok = std::abs(mean_tau - 1.0 / std::sqrt(2.0 * std::numbers::pi)) < 1e-15;
	ok = within(tau_mean, mean_tau, msg) && ok;
	ok = within(gamma_mean, mean_tau, msg) && ok;
	ok = within(delta, oracle_gates_delta(CateSpec::RectifiedFirstCoordinate), msg) && ok;
	return {ok, "E[tau], HT mean, infeasible GATES: " + msg};
}

}  // namespace

int main(int argc, char** argv)
{
	Options opt;
	CLI::App app{"Acceptance run"};
	app.add_option("--replications", opt.replications, "Replications per study");
	app.add_option("--splits", opt.splits, "Splits for multi-split procedures");
	app.add_option("--workers", opt.workers, "Worker threads (0 = all cores)");
	app.add_option("--power-noise-sd", opt.power_noise_sd, "Noise SD of the power design");
	CLI11_PARSE(app, argc, argv);

	const StudyConfig defaults = base_config(opt);
	std::printf("replications=%d splits=%d n=%d d=%d noise_sd=%g learner=%s ridge_penalty=%g basis_degree=%d "
	            "power noise_sd=%g\n",
	            opt.replications, opt.splits, defaults.dgp.n, defaults.dgp.d, defaults.dgp.noise_sd,
	            std::string(to_string(defaults.learner.kind)).c_str(), defaults.learner.ridge_penalty,
	            defaults.learner.basis_degree, opt.power_noise_sd);

	StudyConfig null_cfg = base_config(opt);
	const auto size = timed("Zero-CATE study, tau = 0", [&] { return run_zero_cate_study(null_cfg); },
	                        {StudyKind::ZeroCate, CateSpec::Zero, opt.splits, 5});
	StudyConfig alt_cfg = base_config(opt);
	alt_cfg.dgp.cate = CateSpec::RectifiedFirstCoordinate;
	alt_cfg.dgp.noise_sd = opt.power_noise_sd;
	const auto power = timed("Zero-CATE study, tau = (z1)+", [&] { return run_zero_cate_study(alt_cfg); },
	                         {StudyKind::ZeroCate, CateSpec::RectifiedFirstCoordinate, opt.splits, 5});
	StudyConfig gates_cfg = base_config(opt);
	const auto gates = timed("GATES study, tau = 0", [&] { return run_gates_study(gates_cfg); },
	                         {StudyKind::Gates, CateSpec::Zero, opt.splits, 5});

	const auto S = [&](const char* m) { return size.summary.at(m).rejection_rate; };
	const auto P = [&](const char* m) { return power.summary.at(m).rejection_rate; };
	const auto G = [&](const char* m) -> const MethodSummary& { return gates.summary.at(m); };

	report(1, "naive size distortion",
	       {S("naive") >= 0.06 && S("naive_multisplit") <= 0.02,
	        "single " + pct(S("naive")) + " (>= 6%), multi " + pct(S("naive_multisplit")) + " (<= 2%)"});

	report(2, "sequential single-split calibration",
	       {S("sequential") >= 0.03 && S("sequential") <= 0.07, "size " + pct(S("sequential")) + " in [3%, 7%]"});

	{
		const double g1 = P("naive") - P("sequential"), g2 = P("sequential") - P("twofold");
		const double g3 = P("naive_multisplit") - P("sequential_multisplit");
		const double g4 = P("sequential_multisplit") - P("twofold_multisplit");
		report(3, "power ordering naive > sequential > twofold, gaps >= 5pp",
		       {g1 >= 0.05 && g2 >= 0.05 && g3 >= 0.05 && g4 >= 0.05,
		        "single " + pct(P("naive")) + " / " + pct(P("sequential")) + " / " + pct(P("twofold")) + ", multi " +
		            pct(P("naive_multisplit")) + " / " + pct(P("sequential_multisplit")) + " / " +
		            pct(P("twofold_multisplit"))});
	}

	{
		bool ok = S("sequential_multisplit") <= 0.01;
		std::string msg;
		for (const char* m : {"naive", "twofold", "sequential"}) {
			const std::string multi = std::string(m) + "_multisplit";
			ok = ok && S(multi.c_str()) <= S(m);
			msg += std::string(m) + " " + pct(S(m)) + " -> " + pct(S(multi.c_str())) + "; ";
		}
		report(4, "multi-split conservativeness", {ok, msg + "sequential multi <= 1%"});
	}

	{
		const double single = P("sequential") - P("twofold");
		const double multi = P("sequential_multisplit") - P("twofold_multisplit");
		report(5, "sequential power gain >= 10pp",
		       {single >= 0.10 && multi >= 0.10,
		        "single +" + num(100 * single, 1) + "pp, multi +" + num(100 * multi, 1) + "pp"});
	}

	{
		const double sd = G("cddf").sd / G("imli_style").sd, mad = G("cddf").mad / G("imli_style").mad;
		report(6, "GATES risk dominance",
		       {sd <= 0.75 && mad <= 0.75, "SD ratio " + num(sd, 3) + ", MAD ratio " + num(mad, 3) + " (<= 0.75)"});
	}

	{
		bool sizes = true;
		std::string msg;
		for (const char* m : {"imli_style", "cddf", "imli_style_mined", "cddf_mined"}) {
			sizes = sizes && G(m).rejection_rate < 0.05;
			msg += std::string(m) + " " + pct(G(m).rejection_rate) + "; ";
		}
		const double bi = G("imli_style_mined").bias, bc = G("cddf_mined").bias;
		report(7, "mining distortion",
		       {bi >= 0.08 && std::abs(bc) <= 0.05 && sizes,
		        "mined bias imli " + num(bi) + " (>= 0.08), cddf " + num(bc) + " (|.| <= 0.05); sizes " + msg});
	}

	{
		const double bi = G("imli_style").bias, bc = G("cddf").bias;
		report(8, "unmined unbiasedness",
		       {std::abs(bi) <= 0.01 && std::abs(bc) <= 0.01,
		        "bias imli " + num(bi) + ", cddf " + num(bc) + " (|.| <= 0.01)"});
	}

	{
		std::vector<std::pair<std::string, Outcome>> parts = {
		    {"a", property_null_calibration()},   {"b", property_merge(opt)},
		    {"c", property_workers(opt)},          {"d", property_multisplit()},
		    {"e", property_hand_examples()},
		};
		bool ok = true;
		std::string msg;
		for (const auto& [tag, o] : parts) {
			ok = ok && o.pass;
			msg += "(" + tag + ") " + (o.pass ? "ok" : "FAILED") + ": " + o.detail + "; ";
		}
		report(9, "property suite", {ok, msg});
	}

	report(10, "oracle constants", oracle_constants(opt));

	std::printf("\n%d of 10 criteria failed\n", failures);
	return std::min(failures, 100);
}
