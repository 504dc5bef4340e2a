#include <doctest.h>

#include "fixtures.hpp"
#include "kernelsens/analysis.hpp"
#include "kernelsens/error.hpp"
#include "kernelsens/experiments.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

using namespace kernelsens;

namespace {

SweepConfig small_config() {
    SweepConfig c;
    c.d = 8;
    c.n_list = {5, 10};
    c.k_list = {40, 80};
    c.trials = 3;
    c.test_points = 2;
    c.master_seed = 123;
    c.threads = 1;
    return c;
}

std::vector<std::vector<std::string>> parse_csv(const std::string& text) {
    std::vector<std::vector<std::string>> rows;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        std::vector<std::string> cells;
        std::istringstream ls(line);
        std::string cell;
        while (std::getline(ls, cell, ',')) cells.push_back(cell);
        rows.push_back(cells);
    }
    return rows;
}

std::string csv_of(const SweepResult& r) {
    std::ostringstream out;
    write_csv(r, out);
    return out.str();
}

}  // namespace

TEST_CASE("rows come out N-major, k-minor") {
    const SweepResult r = run_sweep(small_config());
    REQUIRE(r.rows.size() == 4);
    CHECK(r.rows[0].N == 5);
    CHECK(r.rows[0].k == 40);
    CHECK(r.rows[1].N == 5);
    CHECK(r.rows[1].k == 80);
    CHECK(r.rows[2].N == 10);
    CHECK(r.rows[3].k == 80);
    for (const auto& row : r.rows) {
        CHECK(row.completed_trials == 3);
        CHECK(row.p == row.k);
        CHECK(row.mean_sensitivity > 0.0);
        CHECK(row.std_sensitivity >= 0.0);
        CHECK(row.theory_rate == theory_rates(ModelKind::RF, row.N, row.d, row.k));
    }
}

TEST_CASE("ntk rows report p = 2 d k") {
    SweepConfig c = small_config();
    c.model = ModelKind::NTK;
    c.activation = "square";
    c.k_list = {4, 8};
    const SweepResult r = run_sweep(c);
    for (const auto& row : r.rows) {
        CHECK(row.p == 2 * row.d * row.k);
        CHECK(row.theory_rate == theory_rates(ModelKind::NTK, row.N, row.d, row.k));
    }
}

TEST_CASE("reruns are bit-identical") {
    const SweepConfig c = small_config();
    CHECK(csv_of(run_sweep(c)) == csv_of(run_sweep(c)));
}

TEST_CASE("thread count does not change the output") {
    SweepConfig c = small_config();
    const std::string one = csv_of(run_sweep(c));
    c.threads = 3;
    CHECK(csv_of(run_sweep(c)) == one);
    c.threads = 8;
    CHECK(csv_of(run_sweep(c)) == one);
}

TEST_CASE("a different seed changes the output") {
    SweepConfig c = small_config();
    const std::string a = csv_of(run_sweep(c));
    c.master_seed = 124;
    CHECK(csv_of(run_sweep(c)) != a);
}

TEST_CASE("noise-free zero labels give zero sensitivity") {
    SweepConfig c;
    c.d = 2;
    c.n_list = {2};
    c.k_list = {4};
    c.trials = 1;
    c.test_points = 1;
    c.activation = "identity";
    c.labels.noise_std = 0.0;
    c.threads = 1;
    const SweepResult r = run_sweep(c);
    REQUIRE(r.rows.size() == 1);
    CHECK(r.rows[0].mean_sensitivity == 0.0);
}

TEST_CASE("rank-deficient kernels are jittered and reported") {
    // identity features have rank d < N: the ladder accepts a small ridge
    SweepConfig c = small_config();
    c.activation = "identity";
    c.d = 3;
    c.n_list = {10};
    const SweepResult r = run_sweep(c);
    for (const auto& row : r.rows) {
        CHECK(row.singular_trials == 0);
        CHECK(row.completed_trials == 3);
        CHECK(row.jitter_rate == 1.0);
        CHECK(std::abs(row.mean_lambda_min) <= 1e-8 * row.k);
    }
    const SweepResult full = run_sweep(small_config());
    for (const auto& row : full.rows) CHECK(row.jitter_rate == 0.0);
}

TEST_CASE("std is the sample standard deviation over trials") {
    // recompute one row trial by trial
    SweepConfig c = small_config();
    c.n_list = {5};
    c.k_list = {40};
    const SweepResult r = run_sweep(c);
    std::vector<double> s;
    for (long t = 0; t < c.trials; ++t) {
        const TrialData data = draw_trial_data(c, nullptr, 5, 40, t);
        Rng wr = make_rng(c.master_seed, Stream::Weights, 5, 40, static_cast<std::uint64_t>(t));
        RfModel m = RfModel::sample(40, c.d, Activation::tanh(), wr);
        fit_min_norm(m, data.X, data.Y);
        double acc = 0.0;
        for (Eigen::Index i = 0; i < data.Z.rows(); ++i)
            acc += sensitivity(m, Eigen::VectorXd(data.Z.row(i).transpose())).sensitivity;
        s.push_back(acc / static_cast<double>(data.Z.rows()));
    }
    const double mean = (s[0] + s[1] + s[2]) / 3;
    double var = 0.0;
    for (double v : s) var += (v - mean) * (v - mean);
    CHECK(r.rows[0].mean_sensitivity == doctest::Approx(mean).epsilon(1e-14));
    CHECK(r.rows[0].std_sensitivity == doctest::Approx(std::sqrt(var / 2)).epsilon(1e-12));
}

TEST_CASE("trial data streams are independent of the model") {
    SweepConfig c = small_config();
    const TrialData a = draw_trial_data(c, nullptr, 5, 40, 1);
    c.model = ModelKind::NTK;
    c.activation = "square";
    const TrialData b = draw_trial_data(c, nullptr, 5, 40, 1);
    CHECK(a.X == b.X);
    CHECK(a.Y == b.Y);
    CHECK(a.Z == b.Z);
    CHECK(draw_trial_data(c, nullptr, 5, 40, 2).X != a.X);
}

TEST_CASE("image sweeps subsample the pool without replacement") {
    fixture::TempDir dir("sweep_mnist");
    fixture::write_mnist(dir.path(), 200, 6, 6);
    SweepConfig c;
    c.source.kind = DataSourceKind::Mnist;
    c.source.path = dir.path();
    c.source.class_a = 2;
    c.source.class_b = 4;
    c.n_list = {8};
    c.k_list = {30, 60, 90};
    c.trials = 2;
    c.test_points = 2;
    c.threads = 1;
    const std::optional<Dataset> pool = load_image_pool(c);
    REQUIRE(pool.has_value());
    CHECK(pool->d() == 36);
    const TrialData t = draw_trial_data(c, &*pool, 8, 30, 0);
    CHECK(t.X.rows() == 8);
    CHECK(t.Z.rows() == 2);
    // every drawn row comes from the pool, and no row is drawn twice
    std::vector<Eigen::Index> used;
    for (Eigen::Index i = 0; i < 10; ++i) {
        const Eigen::RowVectorXd row = i < 8 ? Eigen::RowVectorXd(t.X.row(i)) : Eigen::RowVectorXd(t.Z.row(i - 8));
        Eigen::Index hit = -1;
        for (Eigen::Index j = 0; j < pool->n(); ++j)
            if (pool->X.row(j) == row) hit = j;
        REQUIRE(hit >= 0);
        CHECK(std::find(used.begin(), used.end(), hit) == used.end());
        used.push_back(hit);
    }
    const SweepResult r = run_sweep(c);
    CHECK(r.rows.size() == 3);
    CHECK(r.rows[0].d == 36);
    c.source.pool_per_class = 2;
    CHECK_THROWS_AS(run_sweep(c), CountError);
}

TEST_CASE("log-log slope") {
    const std::vector<double> k{100, 200, 400, 800, 1600};
    std::vector<double> s;
    for (double v : k) s.push_back(1.0 / std::sqrt(v));
    const SlopeFit f = fit_loglog_slope(k, s);
    CHECK(std::abs(f.slope + 0.5) <= 1e-12);
    CHECK(f.r2 == doctest::Approx(1.0));

    const std::vector<double> flat(5, 3.0);
    const SlopeFit g = fit_loglog_slope(k, flat);
    CHECK(g.slope == 0.0);
    CHECK(g.r2 == 1.0);

    CHECK_THROWS_AS(fit_loglog_slope(std::vector<double>{1, 2}, std::vector<double>{1, 2}), InvalidArgument);
    CHECK_THROWS_AS(fit_loglog_slope(k, std::vector<double>{1, 2, 0, 4, 5}), InvalidArgument);

    std::vector<SweepRow> rows;
    for (std::size_t i = 0; i < k.size(); ++i) {
        SweepRow r;
        r.N = 7;
        r.k = static_cast<long>(k[i]);
        r.mean_sensitivity = s[i];
        rows.push_back(r);
        r.N = 9;
        r.mean_sensitivity = 1.0;
        rows.push_back(r);
    }
    CHECK(std::abs(fit_loglog_slope(rows, 7).slope + 0.5) <= 1e-12);
    CHECK(fit_loglog_slope(rows, 9).slope == 0.0);
}

TEST_CASE("empty result writes only the header") {
    SweepResult r;
    CHECK(csv_of(r) == std::string(kCsvHeader) + "\n");
}

TEST_CASE("CSV parses back bit-exactly") {
    SweepConfig c = small_config();
    c.activation = "smoothrelu:1.5";
    const SweepResult r = run_sweep(c);
    fixture::TempDir dir("csv");
    const auto path = dir.path() / "out.csv";
    emit_csv(r, path);
    std::ifstream in(path);
    std::stringstream ss;
    ss << in.rdbuf();
    const auto rows = parse_csv(ss.str());
    REQUIRE(rows.size() == 5);
    CHECK(rows[0].size() == 11);
    for (std::size_t i = 0; i < 4; ++i) {
        const auto& cells = rows[i + 1];
        const SweepRow& row = r.rows[i];
        CHECK(cells[0] == "rf");
        CHECK(cells[1] == "smoothrelu:1.5");
        CHECK(std::stol(cells[2]) == row.N);
        CHECK(std::stol(cells[4]) == row.k);
        CHECK(std::strtod(cells[6].c_str(), nullptr) == row.mean_sensitivity);
        CHECK(std::strtod(cells[7].c_str(), nullptr) == row.std_sensitivity);
        CHECK(std::strtod(cells[8].c_str(), nullptr) == row.mean_lambda_min);
        CHECK(std::strtod(cells[9].c_str(), nullptr) == row.jitter_rate);
        CHECK(std::strtod(cells[10].c_str(), nullptr) == row.theory_rate);
        CHECK(cells[6].find('e') != std::string::npos);
    }
}

TEST_CASE("emit_csv reports the path on failure") {
    try {
        emit_csv(SweepResult{}, "/nonexistent/dir/out.csv");
        FAIL("expected IoError");
    } catch (const IoError& e) {
        CHECK(std::string(e.what()).find("/nonexistent/dir/out.csv") != std::string::npos);
    }
}

TEST_CASE("thread resolution") {
    CHECK(resolve_threads(3) == 3);
    setenv("KERNELSENS_THREADS", "5", 1);
    CHECK(resolve_threads(0) == 5);
    unsetenv("KERNELSENS_THREADS");
    CHECK(resolve_threads(0) >= 1);
}
