#include "kernelsens/experiments.hpp"

#include "kernelsens/analysis.hpp"
#include "kernelsens/error.hpp"
#include "kernelsens/solver.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <limits>
#include <numeric>
#include <optional>
#include <ostream>
#include <thread>

namespace kernelsens {

int resolve_threads(int requested) {
    if (requested > 0) return requested;
    if (const char* env = std::getenv("KERNELSENS_THREADS")) {
        const int v = std::atoi(env);
        if (v > 0) return v;
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? static_cast<int>(hw) : 1;
}

namespace {

struct TrialOutcome {
    bool singular = false;
    double sensitivity = 0.0;
    double lambda_min = 0.0;
    bool jittered = false;
};

struct Task {
    std::size_t row;
    long N;
    long k;
    long trial;
};

LabelSpec label_spec(const SweepLabels& l, long d) {
    switch (l.kind) {
        case LabelKind::Zero: return LabelSpec::zero(l.noise_std);
        case LabelKind::Constant: return LabelSpec::constant_value(l.constant, l.noise_std);
        case LabelKind::Linear: {
            Eigen::VectorXd beta = Eigen::VectorXd::Zero(d);
            beta(0) = 1.0;
            return LabelSpec::linear_unit(std::move(beta), l.noise_std);
        }
    }
    return LabelSpec::zero(l.noise_std);
}

}  // namespace

TrialData draw_trial_data(const SweepConfig& cfg, const Dataset* pool, long n_rows, long width,
                          long trial) {
    const Task t{0, n_rows, width, trial};
    const std::uint64_t seed = cfg.master_seed;
    const auto N = static_cast<std::uint64_t>(t.N);
    const auto k = static_cast<std::uint64_t>(t.k);
    const auto tr = static_cast<std::uint64_t>(t.trial);
    TrialData out;
    if (pool != nullptr) {
        const Eigen::Index need = t.N + cfg.test_points;
        if (need > pool->n()) {
            throw CountError("image pool has " + std::to_string(pool->n()) + " rows, trial needs " +
                             std::to_string(need));
        }
        std::vector<Eigen::Index> idx(static_cast<std::size_t>(pool->n()));
        std::iota(idx.begin(), idx.end(), Eigen::Index{0});
        Rng rng = make_rng(seed, Stream::Subsample, N, k, tr);
        // Fisher-Yates with explicit index draws keeps the permutation portable.
        for (std::size_t i = idx.size() - 1; i > 0; --i) {
            std::uniform_int_distribution<std::size_t> pick(0, i);
            std::swap(idx[i], idx[pick(rng)]);
        }
        out.X.resize(t.N, pool->d());
        out.Y.resize(t.N);
        out.Z.resize(cfg.test_points, pool->d());
        for (Eigen::Index i = 0; i < t.N; ++i) {
            out.X.row(i) = pool->X.row(idx[static_cast<std::size_t>(i)]);
            out.Y(i) = pool->Y(idx[static_cast<std::size_t>(i)]);
        }
        for (Eigen::Index i = 0; i < cfg.test_points; ++i) {
            out.Z.row(i) = pool->X.row(idx[static_cast<std::size_t>(t.N + i)]);
        }
        return out;
    }
    Rng data_rng = make_rng(seed, Stream::Data, N, k, tr);
    Rng noise_rng = make_rng(seed, Stream::Noise, N, k, tr);
    Rng test_rng = make_rng(seed, Stream::TestPoint, N, k, tr);
    const bool sphere = cfg.source.kind == DataSourceKind::Sphere;
    out.X = sphere ? sample_sphere_gaussian(t.N, cfg.d, data_rng) : sample_hypercube(t.N, cfg.d, data_rng);
    out.Y = make_labels(out.X, label_spec(cfg.labels, cfg.d), noise_rng);
    out.Z = sphere ? sample_sphere_gaussian(cfg.test_points, cfg.d, test_rng)
                   : sample_hypercube(cfg.test_points, cfg.d, test_rng);
    return out;
}

namespace {

template <class Model>
TrialOutcome evaluate(Model& model, const TrialData& data) {
    TrialOutcome o;
    const FitReport fit = fit_min_norm(model, data.X, data.Y);
    o.lambda_min = fit.lambda_min;
    o.jittered = fit.jitter_used > 0.0;
    double acc = 0.0;
    for (Eigen::Index i = 0; i < data.Z.rows(); ++i) {
        acc += sensitivity(model, Eigen::VectorXd(data.Z.row(i).transpose())).sensitivity;
    }
    o.sensitivity = acc / static_cast<double>(data.Z.rows());
    return o;
}

TrialOutcome run_trial(const SweepConfig& cfg, const Activation& act, const Dataset* pool, const Task& t) {
    const TrialData data = draw_trial_data(cfg, pool, t.N, t.k, t.trial);
    Rng weight_rng = make_rng(cfg.master_seed, Stream::Weights, static_cast<std::uint64_t>(t.N),
                              static_cast<std::uint64_t>(t.k), static_cast<std::uint64_t>(t.trial));
    const Eigen::Index d = data.X.cols();
    try {
        if (cfg.model == ModelKind::RF) {
            RfModel model = RfModel::sample(t.k, d, act, weight_rng);
            return evaluate(model, data);
        }
        NtkModel model = NtkModel::sample(t.k, d, act, weight_rng, cfg.allow_uneven);
        return evaluate(model, data);
    } catch (const SingularKernelError& e) {
        TrialOutcome o;
        o.singular = true;
        o.lambda_min = e.lambda_min();
        return o;
    }
}

}  // namespace

std::optional<Dataset> load_image_pool(const SweepConfig& cfg) {
    if (cfg.source.kind == DataSourceKind::Sphere || cfg.source.kind == DataSourceKind::Hypercube) {
        return std::nullopt;
    }
    long per_class = cfg.source.pool_per_class;
    if (per_class <= 0) {
        const long max_n = *std::max_element(cfg.n_list.begin(), cfg.n_list.end());
        per_class = (max_n + cfg.test_points + 1) / 2 + 1;
    }
    if (cfg.source.kind == DataSourceKind::Mnist) {
        return ingest_mnist(cfg.source.path, cfg.source.class_a, cfg.source.class_b, per_class, cfg.mode);
    }
    return ingest_cifar10(cfg.source.path, cfg.source.class_a, cfg.source.class_b, per_class, cfg.mode);
}

SweepResult run_sweep(const SweepConfig& cfg) {
    cfg.validate();
    const auto start = std::chrono::steady_clock::now();
    const Activation act = Activation::parse(cfg.activation);
    const std::optional<Dataset> pool = load_image_pool(cfg);
    const long d = pool ? static_cast<long>(pool->d()) : cfg.d;

    SweepResult result;
    result.config = cfg;
    std::vector<Task> tasks;
    for (long N : cfg.n_list) {
        for (long k : cfg.k_list) {
            const std::size_t row = result.rows.size();
            SweepRow r;
            r.N = N;
            r.d = d;
            r.k = k;
            r.p = cfg.model == ModelKind::RF ? k : 2 * d * k;
            r.theory_rate = theory_rates(cfg.model, static_cast<double>(N), static_cast<double>(d),
                                         static_cast<double>(k));
            result.rows.push_back(r);
            for (long t = 0; t < cfg.trials; ++t) tasks.push_back({row, N, k, t});
        }
    }

    std::vector<TrialOutcome> outcomes(tasks.size());
    std::vector<std::exception_ptr> errors(tasks.size());
    std::atomic<std::size_t> next{0};
    const auto worker = [&] {
        for (std::size_t i = next++; i < tasks.size(); i = next++) {
            try {
                outcomes[i] = run_trial(cfg, act, pool ? &*pool : nullptr, tasks[i]);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    const int threads = std::min<int>(resolve_threads(cfg.threads), static_cast<int>(tasks.size()));
    if (threads <= 1) {
        worker();
    } else {
        std::vector<std::jthread> pool_threads;
        for (int i = 0; i < threads; ++i) pool_threads.emplace_back(worker);
    }
    for (const auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }

    // Aggregate in task order so the result is independent of scheduling.
    std::vector<std::vector<double>> sens(result.rows.size());
    std::vector<double> lam(result.rows.size(), 0.0);
    std::vector<long> jit(result.rows.size(), 0);
    for (std::size_t i = 0; i < tasks.size(); ++i) {
        const auto row = tasks[i].row;
        const TrialOutcome& o = outcomes[i];
        if (o.singular) {
            ++result.rows[row].singular_trials;
            continue;
        }
        sens[row].push_back(o.sensitivity);
        lam[row] += o.lambda_min;
        jit[row] += o.jittered ? 1 : 0;
    }
    for (std::size_t r = 0; r < result.rows.size(); ++r) {
        SweepRow& row = result.rows[r];
        const auto& s = sens[r];
        row.completed_trials = static_cast<long>(s.size());
        if (s.empty()) {
            row.mean_sensitivity = row.std_sensitivity = row.mean_lambda_min = row.jitter_rate =
                std::numeric_limits<double>::quiet_NaN();
            continue;
        }
        const double n = static_cast<double>(s.size());
        double mean = 0.0;
        for (double v : s) mean += v;
        mean /= n;
        double var = 0.0;
        for (double v : s) var += (v - mean) * (v - mean);
        row.mean_sensitivity = mean;
        row.std_sensitivity = s.size() > 1 ? std::sqrt(var / (n - 1.0)) : 0.0;
        row.mean_lambda_min = lam[r] / n;
        row.jitter_rate = static_cast<double>(jit[r]) / n;
    }
    result.wall_time_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return result;
}

SlopeFit fit_loglog_slope(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw InvalidArgument("fit_loglog_slope: x and y differ in length");
    if (x.size() < 3) throw InvalidArgument("fit_loglog_slope: need at least 3 points");
    const std::size_t n = x.size();
    std::vector<double> lx(n), ly(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (!(x[i] > 0.0) || !(y[i] > 0.0)) {
            throw InvalidArgument("fit_loglog_slope: values must be positive (slope undefined)");
        }
        lx[i] = std::log(x[i]);
        ly[i] = std::log(y[i]);
    }
    const double mx = std::accumulate(lx.begin(), lx.end(), 0.0) / static_cast<double>(n);
    const double my = std::accumulate(ly.begin(), ly.end(), 0.0) / static_cast<double>(n);
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += (lx[i] - mx) * (lx[i] - mx);
        sxy += (lx[i] - mx) * (ly[i] - my);
        syy += (ly[i] - my) * (ly[i] - my);
    }
    if (sxx == 0.0) throw InvalidArgument("fit_loglog_slope: x values are all equal");
    SlopeFit f;
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    f.r2 = syy > 0.0 ? (sxy * sxy) / (sxx * syy) : 1.0;
    return f;
}

SlopeFit fit_loglog_slope(const std::vector<SweepRow>& rows, long N) {
    std::vector<double> ks, ss;
    for (const auto& r : rows) {
        if (r.N != N) continue;
        ks.push_back(static_cast<double>(r.k));
        ss.push_back(r.mean_sensitivity);
    }
    return fit_loglog_slope(ks, ss);
}

namespace {

std::string sci(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17e", v);
    return buf;
}

}  // namespace

void write_csv(const SweepResult& result, std::ostream& out) {
    const std::string model = to_string(result.config.model);
    const std::string act = Activation::parse(result.config.activation).name();
    out << kCsvHeader << '\n';
    for (const auto& r : result.rows) {
        out << model << ',' << act << ',' << r.N << ',' << r.d << ',' << r.k << ',' << r.p << ','
            << sci(r.mean_sensitivity) << ',' << sci(r.std_sensitivity) << ',' << sci(r.mean_lambda_min)
            << ',' << sci(r.jitter_rate) << ',' << sci(r.theory_rate) << '\n';
    }
}

void emit_csv(const SweepResult& result, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) {
        throw IoError("cannot open '" + path.string() + "' for writing: " + std::strerror(errno));
    }
    write_csv(result, out);
    out.flush();
    if (!out) throw IoError("failed writing '" + path.string() + "': " + std::strerror(errno));
}

}  // namespace kernelsens
