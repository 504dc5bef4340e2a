#include "cli.hpp"

#include "kernelsens/analysis.hpp"
#include "kernelsens/config.hpp"
#include "kernelsens/data.hpp"
#include "kernelsens/error.hpp"
#include "kernelsens/experiments.hpp"
#include "kernelsens/model_io.hpp"
#include "kernelsens/solver.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <functional>
#include <ostream>
#include <sstream>

namespace kernelsens::cli {

namespace {

using nlohmann::json;

// Flags shared by the model-building subcommands.
struct ModelFlags {
    std::string model = "rf";
    std::string activation = "tanh";
    long n = 100;
    long d = 50;
    long k = 800;
    std::uint64_t seed = 0;
    std::string dataset = "sphere";
    std::string path;
    std::string classes = "3,5";
    long n_per_class = 0;
    std::string mode = "assumption1";
    std::string labels = "zero";
    double noise_std = 1.0;
    bool allow_uneven = false;
    long test_points = 1;
    std::string load;
};

struct Output {
    std::ostringstream buf;
    bool as_json = false;

    // One record: a JSON line, or `key=value` pairs for humans.
    void record(const json& j) {
        if (as_json) {
            buf << j.dump() << '\n';
            return;
        }
        bool first = true;
        for (const auto& [key, value] : j.items()) {
            if (!first) buf << ' ';
            first = false;
            buf << key << '=' << (value.is_string() ? value.get<std::string>() : value.dump());
        }
        buf << '\n';
    }
};

void add_model_flags(CLI::App* sub, ModelFlags& f, bool with_test_points) {
    sub->add_option("--model", f.model, "rf | ntk")->capture_default_str();
    sub->add_option("--activation", f.activation, "tanh | square | smoothrelu:<beta> | identity")
        ->capture_default_str();
    sub->add_option("--n", f.n, "training samples N")->capture_default_str()->check(CLI::PositiveNumber);
    sub->add_option("--d", f.d, "input dimension (synthetic data)")->capture_default_str();
    sub->add_option("--k", f.k, "hidden width k")->capture_default_str()->check(CLI::PositiveNumber);
    sub->add_option("--seed", f.seed, "master seed")->capture_default_str();
    sub->add_option("--dataset", f.dataset, "sphere | hypercube | mnist | cifar10")->capture_default_str();
    sub->add_option("--path", f.path, "MNIST directory or CIFAR-10 batch file/directory");
    sub->add_option("--classes", f.classes, "two class labels, e.g. 3,5")->capture_default_str();
    sub->add_option("--n-per-class", f.n_per_class, "image pool size per class (default: enough for N)");
    sub->add_option("--mode", f.mode, "assumption1 | paper-figures")->capture_default_str();
    sub->add_option("--labels", f.labels, "zero | linear | constant:<c>")->capture_default_str();
    sub->add_option("--noise-std", f.noise_std, "label noise standard deviation")->capture_default_str();
    sub->add_flag("--allow-uneven", f.allow_uneven, "allow non-even activations for NTK");
    if (with_test_points) {
        sub->add_option("--test-points", f.test_points, "number of fresh test points")
            ->capture_default_str()
            ->check(CLI::PositiveNumber);
        sub->add_option("--load", f.load, "use a saved model instead of fitting one");
    }
}

SweepConfig to_config(const ModelFlags& f) {
    SweepConfig cfg;
    cfg.model = parse_model_kind(f.model);
    cfg.activation = f.activation;
    cfg.d = f.d;
    cfg.n_list = {f.n};
    cfg.k_list = {f.k};
    cfg.trials = 1;
    cfg.test_points = f.test_points;
    cfg.labels = parse_sweep_labels(f.labels, f.noise_std);
    cfg.source.kind = parse_data_source(f.dataset);
    cfg.source.path = f.path;
    const auto cls = parse_long_list(f.classes);
    if (cls.size() != 2) throw InvalidArgument("--classes expects two labels, e.g. 3,5");
    cfg.source.class_a = static_cast<int>(cls[0]);
    cfg.source.class_b = static_cast<int>(cls[1]);
    cfg.source.pool_per_class = f.n_per_class;
    cfg.mode = parse_preprocess_mode(f.mode);
    cfg.master_seed = f.seed;
    cfg.allow_uneven = f.allow_uneven;
    if (cfg.model == ModelKind::NTK && !f.allow_uneven && !Activation::parse(f.activation).is_even()) {
        throw InvalidArgument("NTK needs an even activation; pass --allow-uneven to use '" + f.activation + "'");
    }
    cfg.validate();
    return cfg;
}

ProvenanceKind provenance_of(DataSourceKind kind) {
    switch (kind) {
        case DataSourceKind::Sphere: return ProvenanceKind::SyntheticSphereGaussian;
        case DataSourceKind::Hypercube: return ProvenanceKind::SyntheticHypercube;
        case DataSourceKind::Mnist: return ProvenanceKind::Mnist;
        case DataSourceKind::Cifar10: return ProvenanceKind::Cifar10;
    }
    return ProvenanceKind::SyntheticSphereGaussian;
}

// Everything a single-computation subcommand needs: a fitted model, its
// training data and the test points.
struct Session {
    SweepConfig cfg;
    std::optional<Dataset> pool;
    TrialData data;
    std::optional<AnyModel> model;
    std::optional<FitReport> fit;
};

Session build_session(const ModelFlags& f, bool fit) {
    Session s;
    s.cfg = to_config(f);
    s.pool = load_image_pool(s.cfg);
    s.data = draw_trial_data(s.cfg, s.pool ? &*s.pool : nullptr, f.n, f.k, 0);
    if (!f.load.empty()) {
        s.model = load_model(std::filesystem::path(f.load));
        const Eigen::Index d = std::visit([](const auto& m) { return m.d(); }, *s.model);
        if (d != s.data.Z.cols()) {
            throw DimensionError("loaded model has d = " + std::to_string(d) + ", data has d = " +
                                 std::to_string(s.data.Z.cols()));
        }
        return s;
    }
    if (!fit) return s;
    const Activation act = Activation::parse(f.activation);
    const Eigen::Index d = s.data.X.cols();
    Rng weight_rng = make_rng(f.seed, Stream::Weights, static_cast<std::uint64_t>(f.n),
                              static_cast<std::uint64_t>(f.k), 0);
    if (s.cfg.model == ModelKind::RF) {
        RfModel m = RfModel::sample(f.k, d, act, weight_rng);
        m.seed = f.seed;
        s.fit = fit_min_norm(m, s.data.X, s.data.Y);
        s.model = std::move(m);
    } else {
        NtkModel m = NtkModel::sample(f.k, d, act, weight_rng, f.allow_uneven);
        m.seed = f.seed;
        s.fit = fit_min_norm(m, s.data.X, s.data.Y);
        s.model = std::move(m);
    }
    return s;
}

json model_header(const AnyModel& model) {
    return std::visit(
        [](const auto& m) {
            json j;
            j["model"] = std::is_same_v<std::decay_t<decltype(m)>, RfModel> ? "rf" : "ntk";
            j["activation"] = m.activation().name();
            j["n"] = m.n_train();
            j["d"] = m.d();
            j["k"] = m.k();
            return j;
        },
        model);
}

json fit_json(const FitReport& r) {
    json j;
    j["jitter_used"] = r.jitter_used;
    j["lambda_min"] = r.lambda_min;
    j["lambda_max"] = r.lambda_max;
    j["condition"] = r.condition;
    j["train_residual"] = r.train_residual;
    j["ill_conditioned"] = r.ill_conditioned;
    return j;
}

Eigen::VectorXd test_point(const Session& s, Eigen::Index i) { return s.data.Z.row(i).transpose(); }

void write_matrix_csv(std::ostream& out, const Eigen::MatrixXd& X, const Eigen::VectorXd& Y) {
    char buf[40];
    for (Eigen::Index j = 0; j < X.cols(); ++j) out << 'x' << j << ',';
    out << "y\n";
    for (Eigen::Index i = 0; i < X.rows(); ++i) {
        for (Eigen::Index j = 0; j < X.cols(); ++j) {
            std::snprintf(buf, sizeof buf, "%.17e", X(i, j));
            out << buf << ',';
        }
        std::snprintf(buf, sizeof buf, "%.17e", Y(i));
        out << buf << '\n';
    }
}

void write_dataset(Output& o, const std::string& out_path, const Eigen::MatrixXd& X,
                   const Eigen::VectorXd& Y, json summary) {
    if (out_path.empty()) {
        write_matrix_csv(o.buf, X, Y);
        return;
    }
    std::ofstream f(out_path);
    if (!f) throw IoError("cannot open '" + out_path + "' for writing");
    write_matrix_csv(f, X, Y);
    if (!f) throw IoError("failed writing '" + out_path + "'");
    summary["out"] = out_path;
    o.record(summary);
}

// --- subcommands -----------------------------------------------------------

void run_gen_data(Output& o, const ModelFlags& f, const std::string& out_path) {
    const SweepConfig cfg = to_config(f);
    if (cfg.source.kind != DataSourceKind::Sphere && cfg.source.kind != DataSourceKind::Hypercube) {
        throw InvalidArgument("gen-data only produces synthetic data (use ingest for images)");
    }
    const TrialData data = draw_trial_data(cfg, nullptr, f.n, f.k, 0);
    json j;
    j["dataset"] = to_string(cfg.source.kind);
    j["n"] = data.X.rows();
    j["d"] = data.X.cols();
    j["labels"] = to_string(cfg.labels);
    j["noise_std"] = cfg.labels.noise_std;
    j["seed"] = f.seed;
    write_dataset(o, out_path, data.X, data.Y, j);
}

void run_ingest(Output& o, const ModelFlags& f, const std::string& out_path) {
    ModelFlags g = f;
    g.n = std::max<long>(1, g.n);
    SweepConfig cfg = to_config(g);
    if (cfg.source.kind != DataSourceKind::Mnist && cfg.source.kind != DataSourceKind::Cifar10) {
        throw InvalidArgument("ingest expects --dataset mnist or cifar10");
    }
    if (cfg.source.pool_per_class <= 0) throw InvalidArgument("ingest requires --n-per-class");
    const Dataset ds = *load_image_pool(cfg);
    json j;
    j["dataset"] = to_string(cfg.source.kind);
    j["classes"] = {ds.provenance.class_a, ds.provenance.class_b};
    j["n"] = ds.n();
    j["d"] = ds.d();
    j["mode"] = to_string(ds.mode);
    j["min"] = ds.X.minCoeff();
    j["max"] = ds.X.maxCoeff();
    write_dataset(o, out_path, ds.X, ds.Y, j);
}

void run_fit(Output& o, const ModelFlags& f, const std::string& out_path) {
    Session s = build_session(f, true);
    json j = model_header(*s.model);
    j.update(fit_json(*s.fit));
    j["seed"] = f.seed;
    if (!out_path.empty()) {
        save_model(std::filesystem::path(out_path), *s.model);
        j["out"] = out_path;
    }
    o.record(j);
}

void run_sensitivity(Output& o, const ModelFlags& f) {
    Session s = build_session(f, true);
    double total = 0.0;
    for (Eigen::Index i = 0; i < s.data.Z.rows(); ++i) {
        const SensitivityReport r =
            std::visit([&](const auto& m) { return sensitivity(m, test_point(s, i)); }, *s.model);
        json j = model_header(*s.model);
        j["test_point"] = i;
        j["z_norm"] = r.z_norm;
        j["grad_norm"] = r.grad_norm;
        j["sensitivity"] = r.sensitivity;
        if (r.theory_bound) j["theory_rate"] = *r.theory_bound;
        o.record(j);
        total += r.sensitivity;
    }
    json j = model_header(*s.model);
    j["test_points"] = s.data.Z.rows();
    j["mean_sensitivity"] = total / static_cast<double>(s.data.Z.rows());
    if (s.fit) j["jitter_used"] = s.fit->jitter_used;
    o.record(j);
}

void run_interaction(Output& o, const ModelFlags& f) {
    Session s = build_session(f, true);
    const auto* rf = std::get_if<RfModel>(&*s.model);
    if (rf == nullptr) throw InvalidArgument("interaction is defined for the RF model only");
    if (!f.load.empty()) throw InvalidArgument("interaction needs the training data; do not pass --load");
    const ProvenanceKind prov = provenance_of(s.cfg.source.kind);
    Rng centering_rng = make_rng(f.seed, Stream::Centering, static_cast<std::uint64_t>(f.n),
                                 static_cast<std::uint64_t>(f.k), 0);
    const Eigen::MatrixXd* held_out = s.pool ? &s.pool->X : nullptr;
    const NuEstimator estimator = default_nu_estimator(prov, f.n, rf->d(), centering_rng, held_out);
    const Eigen::MatrixXd Phi = rf_features(*rf, s.data.X);
    const CenteredFeatures centered = center_features(*rf, Phi, estimator, prov);

    Dataset train;
    train.X = s.data.X;
    train.Y = s.data.Y;
    if (s.cfg.labels.kind == LabelKind::Zero && !s.pool) train.labels = LabelSpec::zero(s.cfg.labels.noise_std);

    for (Eigen::Index i = 0; i < s.data.Z.rows(); ++i) {
        const Eigen::VectorXd z = test_point(s, i);
        const InteractionReport ir = interaction_matrix(*rf, z, centered);
        json j = model_header(*s.model);
        j["test_point"] = i;
        j["interaction_frob"] = ir.frob;
        j["theory"] = ir.theory;
        j["ratio"] = std::isfinite(ir.ratio) ? json(ir.ratio) : json("inf");
        j["centering"] = centered.closed_form ? "gaussian-closed-form" : "monte-carlo";
        try {
            const SplitBounds sb = split_bounds(*rf, z, s.data.X, centered);
            j["a_frob"] = sb.a_frob;
            j["split_lower"] = sb.lower;
            j["split_upper"] = sb.upper;
            j["slack_scale"] = sb.slack_scale;
        } catch (const SingularKernelError& e) {
            j["split_error"] = e.what();
        }
        if (train.labels) {
            const NoiseBoundCheck nb = noise_bound_check(*rf, train, z);
            j["noise_lhs"] = nb.lhs;
            j["noise_rhs"] = nb.rhs;
            j["noise_bound_holds"] = nb.holds;
        }
        o.record(j);
    }
}

void run_spectrum(Output& o, const ModelFlags& f, bool centered) {
    Session s = build_session(f, false);
    const Activation act = Activation::parse(f.activation);
    const Eigen::Index d = s.data.X.cols();
    Rng weight_rng = make_rng(f.seed, Stream::Weights, static_cast<std::uint64_t>(f.n),
                              static_cast<std::uint64_t>(f.k), 0);
    Eigen::MatrixXd K;
    if (s.cfg.model == ModelKind::RF) {
        const RfModel m = RfModel::sample(f.k, d, act, weight_rng);
        Eigen::MatrixXd Phi = rf_features(m, s.data.X);
        if (centered) {
            const ProvenanceKind prov = provenance_of(s.cfg.source.kind);
            Rng centering_rng = make_rng(f.seed, Stream::Centering, static_cast<std::uint64_t>(f.n),
                                         static_cast<std::uint64_t>(f.k), 0);
            const Eigen::MatrixXd* held_out = s.pool ? &s.pool->X : nullptr;
            Phi = center_features(m, Phi, default_nu_estimator(prov, f.n, d, centering_rng, held_out), prov)
                      .phi_tilde;
        }
        K = Phi * Phi.transpose();
    } else {
        if (centered) throw InvalidArgument("--centered applies to the RF kernel only");
        const NtkModel m = NtkModel::sample(f.k, d, act, weight_rng, f.allow_uneven);
        K = ntk_kernel(m, s.data.X);
    }
    K = 0.5 * (K + K.transpose()).eval();
    json j;
    j["n"] = f.n;
    j["d"] = d;
    j["k"] = f.k;
    j["model"] = f.model;
    j["centered"] = centered;
    try {
        const KernelSystem sys(K);
        j["lambda_min"] = sys.lambda_min_est();
        j["lambda_max"] = sys.lambda_max_est();
        j["jitter_used"] = sys.jitter_used();
    } catch (const SingularKernelError&) {
        const Spectrum sp = spectrum(K);
        j["lambda_min"] = sp.lambda_min;
        j["lambda_max"] = sp.lambda_max;
        j["jitter_used"] = nullptr;
    }
    o.record(j);
}

void run_attack(Output& o, const ModelFlags& f, double delta) {
    Session s = build_session(f, true);
    for (Eigen::Index i = 0; i < s.data.Z.rows(); ++i) {
        const AttackResult r = std::visit([&](const auto& m) { return attack(m, test_point(s, i), delta); }, *s.model);
        json j = model_header(*s.model);
        j["test_point"] = i;
        j["delta"] = r.delta;
        j["output_change"] = r.output_change;
        j["first_order_prediction"] = r.first_order_prediction;
        j["saturation"] = r.saturation;
        j["perturbation_norm"] = (r.z_adv - test_point(s, i)).norm();
        o.record(j);
    }
}

void run_sweep_cmd(Output& o, const std::string& config_path, const std::string& out_path, int threads,
                   std::ostream& err) {
    SweepConfig cfg = load_sweep_config(config_path);
    if (threads > 0) cfg.threads = threads;
    const SweepResult result = run_sweep(cfg);
    for (const auto& row : result.rows) {
        if (row.flagged()) {
            err << "warning: N=" << row.N << " k=" << row.k << ": " << row.singular_trials
                << " trial(s) had a singular kernel\n";
        }
    }
    if (out_path.empty() || out_path == "-") {
        write_csv(result, o.buf);
        return;
    }
    emit_csv(result, out_path);
    json j;
    j["out"] = out_path;
    j["rows"] = result.rows.size();
    j["wall_time_seconds"] = result.wall_time_seconds;
    o.record(j);
}

void run_theory(Output& o, const std::string& model, double n, double d, double k) {
    const double rate = theory_rates(parse_model_kind(model), n, d, k);
    if (o.as_json) {
        json j;
        j["model"] = model;
        j["n"] = n;
        j["d"] = d;
        j["k"] = k;
        j["theory_rate"] = rate;
        o.buf << j.dump() << '\n';
        return;
    }
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", rate);
    o.buf << buf << '\n';
}

}  // namespace

int dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Sensitivity of random-features and NTK regression", "kernelsens"};
    app.require_subcommand(1);
    app.set_help_all_flag("--help-all", "show help for every subcommand");

    Output o;
    app.add_flag("--json", o.as_json, "emit JSON lines instead of key=value summaries");

    ModelFlags f;
    std::string out_path;
    std::string config_path;
    int threads = 0;
    double delta = 1e-3;
    bool centered = false;
    std::string theory_model = "rf";
    double theory_n = 0, theory_d = 0, theory_k = 0;

    auto* gen = app.add_subcommand("gen-data", "sample a synthetic dataset (CSV: x0..x{d-1},y)");
    add_model_flags(gen, f, false);
    gen->add_option("--out", out_path, "output CSV (default: stdout)");

    auto* ingest = app.add_subcommand("ingest", "load a two-class MNIST/CIFAR-10 subset (CSV)");
    add_model_flags(ingest, f, false);
    ingest->add_option("--out", out_path, "output CSV (default: stdout)");

    auto* fit = app.add_subcommand("fit", "fit the min-norm interpolator and report the kernel system");
    add_model_flags(fit, f, false);
    fit->add_option("--out", out_path, "save the fitted model to this file");

    auto* sens = app.add_subcommand("sensitivity", "S(z) = ||z|| ||grad f(z)|| at fresh test points");
    add_model_flags(sens, f, true);

    auto* inter = app.add_subcommand("interaction", "interaction matrix, A(z) bracket and noise bound (RF)");
    add_model_flags(inter, f, true);

    auto* spec = app.add_subcommand("spectrum", "extremal eigenvalues of the kernel");
    add_model_flags(spec, f, false);
    spec->add_flag("--centered", centered, "use the centered RF kernel");

    auto* att = app.add_subcommand("attack", "gradient-aligned perturbation of relative size delta");
    add_model_flags(att, f, true);
    att->add_option("--delta", delta, "relative perturbation budget")->capture_default_str();

    auto* sweep = app.add_subcommand("sweep", "run a configured (N, k) grid and write CSV");
    sweep->add_option("--config", config_path, "sweep config file")->required();
    sweep->add_option("--out", out_path, "output CSV (default: stdout)");
    sweep->add_option("--threads", threads, "worker threads (default: KERNELSENS_THREADS or all cores)");

    auto* theory = app.add_subcommand("theory", "reference rate: RF N^(1/6), NTK log(k) sqrt(N d / p)");
    theory->add_option("--model", theory_model, "rf | ntk")->capture_default_str();
    theory->add_option("--n", theory_n, "N")->required();
    theory->add_option("--d", theory_d, "d")->required();
    theory->add_option("--k", theory_k, "k")->required();

    for (auto* sub : app.get_subcommands({})) sub->add_flag("--json", o.as_json, "emit JSON lines");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        app.exit(e, err, err);
        return kExitUsage;
    }

    try {
        if (gen->parsed()) run_gen_data(o, f, out_path);
        else if (ingest->parsed()) run_ingest(o, f, out_path);
        else if (fit->parsed()) run_fit(o, f, out_path);
        else if (sens->parsed()) run_sensitivity(o, f);
        else if (inter->parsed()) run_interaction(o, f);
        else if (spec->parsed()) run_spectrum(o, f, centered);
        else if (att->parsed()) run_attack(o, f, delta);
        else if (sweep->parsed()) run_sweep_cmd(o, config_path, out_path, threads, err);
        else if (theory->parsed()) run_theory(o, theory_model, theory_n, theory_d, theory_k);
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitRuntime;
    }
    out << o.buf.str();
    out.flush();
    return kExitOk;
}

}  // namespace kernelsens::cli
