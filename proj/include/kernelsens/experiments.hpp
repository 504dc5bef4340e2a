#pragma once

#include "kernelsens/config.hpp"

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

namespace kernelsens {

struct SweepRow {
    long N = 0;
    long d = 0;
    long k = 0;
    long p = 0;  // k for RF, 2 d k for NTK
    double mean_sensitivity = 0.0;
    double std_sensitivity = 0.0;  // sample standard deviation over trials
    double mean_lambda_min = 0.0;
    double jitter_rate = 0.0;  // fraction of trials that needed jitter
    double theory_rate = 0.0;
    long completed_trials = 0;
    long singular_trials = 0;  // excluded from the averages

    bool flagged() const noexcept { return singular_trials > 0; }
};

struct SweepResult {
    SweepConfig config;
    std::vector<SweepRow> rows;  // N-major, k-minor
    double wall_time_seconds = 0.0;
};

// Training rows, labels and fresh test points for one trial.
struct TrialData {
    Eigen::MatrixXd X;
    Eigen::VectorXd Y;
    Eigen::MatrixXd Z;
};

/// Image pool for real-data sweeps (nullopt for synthetic sources).
std::optional<Dataset> load_image_pool(const SweepConfig& cfg);

/// Draws the data of trial `trial` at grid point (N, k). Synthetic sources
/// sample fresh rows; image sources subsample the pool without replacement.
TrialData draw_trial_data(const SweepConfig& cfg, const Dataset* pool, long N, long k, long trial);

/// Thread count used when the config leaves it at 0: KERNELSENS_THREADS if
/// set, otherwise the hardware concurrency.
int resolve_threads(int requested);

/// Runs every (N, k) grid point for cfg.trials independent trials. Each trial
/// draws its data, weights, noise and test points from streams keyed by
/// (master_seed, N, k, trial), so results do not depend on scheduling.
SweepResult run_sweep(const SweepConfig& cfg);

struct SlopeFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r2 = 0.0;
};

/// Least-squares fit of log(y) against log(x). Needs >= 3 points and
/// positive values.
SlopeFit fit_loglog_slope(std::span<const double> x, std::span<const double> y);

/// Slope of mean_sensitivity against k over the rows with the given N.
SlopeFit fit_loglog_slope(const std::vector<SweepRow>& rows, long N);

inline constexpr const char* kCsvHeader =
    "model,activation,N,d,k,p,mean_sensitivity,std_sensitivity,mean_lambda_min,jitter_rate,theory_rate";

void write_csv(const SweepResult& result, std::ostream& out);
void emit_csv(const SweepResult& result, const std::filesystem::path& path);

}  // namespace kernelsens
