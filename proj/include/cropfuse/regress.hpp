#pragma once

#include "cropfuse/types.hpp"

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace cropfuse {

/// Per-feature z-scoring constants learned from a training matrix.
/// Constant columns get unit std so they center to zero instead of
/// dividing by zero.
struct Standardizer {
    Eigen::VectorXd mean;
    Eigen::VectorXd std;

    static Standardizer fit(const Eigen::MatrixXd& X);
    Eigen::MatrixXd apply(const Eigen::MatrixXd& X) const;
};

/// Ridge regression on standardized features; the bias is the training
/// label mean (unpenalized via centering).
struct RlrModel {
    Eigen::VectorXd weights;
    double bias = 0.0;
    double lambda = 0.0;
    Standardizer scaler;
};

/// Kernel ridge regression: dual coefficients against the stored
/// standardized training inputs.
struct KrrModel {
    Eigen::VectorXd alpha;
    double bias = 0.0;
    Eigen::MatrixXd train_inputs; // standardized, N x T
    double sigma = 0.0;
    double lambda = 0.0;
    Standardizer scaler;
};

enum class ModelKind { rlr, krr };

std::string model_kind_name(ModelKind k);
ModelKind model_kind_from_name(const std::string& name);

struct EvalStats {
    double me = 0.0;
    double rmse = 0.0;
    double r2 = 0.0;
};

/// Cross-repetition aggregate: per-repetition stats plus their mean and
/// sample standard deviation.
struct EvalSummary {
    std::vector<EvalStats> reps;
    EvalStats mean;
    EvalStats stdev;
};

struct HyperParams {
    double lambda = 0.0;
    double sigma = 0.0; // unused for RLR
};

struct CvConfig {
    double train_fraction = 0.7;
    int repetitions = 10;
    int inner_folds = 5;
    std::vector<double> lambda_grid = default_lambda_grid();
    // RBF lengthscale grid as multiples of the median pairwise distance
    // between standardized training points.
    std::vector<double> sigma_factor_grid = {0.25, 0.5, 1.0, 2.0, 4.0};
    std::uint64_t seed = 0;
    int threads = 1;

    static std::vector<double> default_lambda_grid(); // 1e-6 .. 1e2, 9 points
};

double rbf_kernel(const Eigen::VectorXd& x, const Eigen::VectorXd& y, double sigma);

/// Pairwise squared distances between rows of A and rows of B.
Eigen::MatrixXd squared_distances(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B);

Eigen::MatrixXd rbf_gram(const Eigen::MatrixXd& X, double sigma);
Eigen::MatrixXd rbf_cross(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B, double sigma);

/// Median pairwise Euclidean distance between rows; the standard RBF
/// lengthscale anchor. Falls back to 1 when all rows coincide.
double median_pairwise_distance(const Eigen::MatrixXd& X);

RlrModel fit_rlr(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double lambda);
KrrModel fit_krr(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double lambda, double sigma);

Eigen::VectorXd predict(const RlrModel& model, const Eigen::MatrixXd& X);
Eigen::VectorXd predict(const KrrModel& model, const Eigen::MatrixXd& X);

/// Grid search by inner k-fold CV on the training split; returns the grid
/// point with minimal mean fold RMSE, ties broken toward the larger lambda
/// and then the larger sigma.
HyperParams select_hyperparams(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                               ModelKind kind, const CvConfig& cfg, std::uint64_t seed);

EvalStats evaluate(const Eigen::VectorXd& y_true, const Eigen::VectorXd& y_pred);

/// Repeated random-split experiment: per repetition, a seeded train/test
/// split, inner hyperparameter selection on the training part, a refit on
/// the full training part, and test-set evaluation.
EvalSummary run_cv_experiment(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                              ModelKind kind, const CvConfig& cfg);

// -- model persistence -----------------------------------------------------

struct LoadedModel {
    ModelKind kind = ModelKind::rlr;
    RlrModel rlr;
    KrrModel krr;
};

/// Versioned flat binary; round-trips are bit-faithful.
void save_model(const std::string& path, const RlrModel& model);
void save_model(const std::string& path, const KrrModel& model);
LoadedModel load_model(const std::string& path);

namespace detail {

/// Kernel-pluggable KRR internals, used by the unit tests to cross-check
/// the RBF path against a linear-kernel fit (which must agree with RLR).
using KernelFn = std::function<double(const Eigen::VectorXd&, const Eigen::VectorXd&)>;

KrrModel fit_krr_kernel(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double lambda,
                        const KernelFn& kernel);
Eigen::VectorXd predict_krr_kernel(const KrrModel& model, const Eigen::MatrixXd& X,
                                   const KernelFn& kernel);

/// Deterministic Fisher-Yates shuffle (stdlib shuffle is not pinned across
/// library versions).
void shuffle_indices(std::vector<std::size_t>& idx, std::uint64_t seed);

} // namespace detail

} // namespace cropfuse
