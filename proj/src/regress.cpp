#include "cropfuse/regress.hpp"

#include "cropfuse/errors.hpp"
#include "cropfuse/util.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <random>

namespace cropfuse {

namespace {

void check_finite(const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
    if (!X.allFinite() || !y.allFinite())
        throw DataError("regression inputs must be finite");
}

void validate_cv(const CvConfig& cfg) {
    if (cfg.train_fraction <= 0.0 || cfg.train_fraction >= 1.0)
        throw ParameterError("train_fraction must lie in (0, 1)");
    if (cfg.repetitions < 1) throw ParameterError("repetitions must be positive");
    if (cfg.inner_folds < 2) throw ParameterError("inner_folds must be at least 2");
    if (cfg.lambda_grid.empty() || cfg.sigma_factor_grid.empty())
        throw ParameterError("hyperparameter grids must be non-empty");
    for (double l : cfg.lambda_grid)
        if (!(l > 0.0)) throw ParameterError("lambda grid values must be positive");
    for (double s : cfg.sigma_factor_grid)
        if (!(s > 0.0)) throw ParameterError("sigma grid factors must be positive");
}

Eigen::VectorXd solve_spd(const Eigen::MatrixXd& A, const Eigen::VectorXd& b,
                          const char* what) {
    Eigen::LDLT<Eigen::MatrixXd> ldlt(A);
    if (ldlt.info() != Eigen::Success)
        throw DataError(std::string(what) + ": factorization failed (ill-conditioned system)");
    return ldlt.solve(b);
}

} // namespace

std::string model_kind_name(ModelKind k) { return k == ModelKind::rlr ? "rlr" : "krr"; }

ModelKind model_kind_from_name(const std::string& name) {
    if (name == "rlr") return ModelKind::rlr;
    if (name == "krr") return ModelKind::krr;
    throw ParameterError("unknown model '" + name + "' (expected rlr or krr)");
}

std::vector<double> CvConfig::default_lambda_grid() {
    std::vector<double> grid;
    for (int e = -6; e <= 2; ++e) grid.push_back(std::pow(10.0, e));
    return grid;
}

Standardizer Standardizer::fit(const Eigen::MatrixXd& X) {
    Standardizer s;
    s.mean = X.colwise().mean();
    Eigen::MatrixXd centered = X.rowwise() - s.mean.transpose();
    s.std = (centered.array().square().colwise().sum() / double(X.rows())).sqrt();
    for (Eigen::Index j = 0; j < s.std.size(); ++j)
        if (s.std(j) <= 0.0) s.std(j) = 1.0;
    return s;
}

Eigen::MatrixXd Standardizer::apply(const Eigen::MatrixXd& X) const {
    if (X.cols() != mean.size())
        throw DimensionError("feature count " + std::to_string(X.cols()) +
                             " does not match standardizer width " + std::to_string(mean.size()));
    return (X.rowwise() - mean.transpose()).array().rowwise() / std.transpose().array();
}

double rbf_kernel(const Eigen::VectorXd& x, const Eigen::VectorXd& y, double sigma) {
    if (sigma <= 0.0) throw ParameterError("RBF lengthscale must be positive");
    if (x.size() != y.size()) throw DimensionError("RBF inputs must have equal dimensions");
    return std::exp(-(x - y).squaredNorm() / (2.0 * sigma * sigma));
}

Eigen::MatrixXd squared_distances(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B) {
    if (A.cols() != B.cols()) throw DimensionError("distance operands must share feature count");
    Eigen::VectorXd a2 = A.rowwise().squaredNorm();
    Eigen::VectorXd b2 = B.rowwise().squaredNorm();
    Eigen::MatrixXd d2 = a2.replicate(1, B.rows()) + b2.transpose().replicate(A.rows(), 1) -
                         2.0 * A * B.transpose();
    return d2.cwiseMax(0.0);
}

Eigen::MatrixXd rbf_gram(const Eigen::MatrixXd& X, double sigma) {
    if (sigma <= 0.0) throw ParameterError("RBF lengthscale must be positive");
    return (-squared_distances(X, X) / (2.0 * sigma * sigma)).array().exp();
}

Eigen::MatrixXd rbf_cross(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B, double sigma) {
    if (sigma <= 0.0) throw ParameterError("RBF lengthscale must be positive");
    return (-squared_distances(A, B) / (2.0 * sigma * sigma)).array().exp();
}

double median_pairwise_distance(const Eigen::MatrixXd& X) {
    Eigen::Index n = X.rows();
    if (n < 2) return 1.0;
    std::vector<double> d;
    d.reserve(std::size_t(n) * (n - 1) / 2);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = i + 1; j < n; ++j)
            d.push_back((X.row(i) - X.row(j)).norm());
    std::sort(d.begin(), d.end());
    std::size_t m = d.size();
    double median = m % 2 ? d[m / 2] : 0.5 * (d[m / 2 - 1] + d[m / 2]);
    return median > 0.0 ? median : 1.0;
}

RlrModel fit_rlr(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double lambda) {
    if (X.rows() != y.size()) throw DimensionError("X and y row counts differ");
    if (X.rows() < 2) throw InsufficientDataError("ridge fit needs at least 2 rows");
    if (lambda <= 0.0) throw ParameterError("lambda must be positive");
    check_finite(X, y);

    RlrModel model;
    model.lambda = lambda;
    model.scaler = Standardizer::fit(X);
    model.bias = y.mean();
    Eigen::MatrixXd Xs = model.scaler.apply(X);
    Eigen::VectorXd yc = y.array() - model.bias;
    Eigen::MatrixXd A = Xs.transpose() * Xs;
    A.diagonal().array() += lambda;
    model.weights = solve_spd(A, Xs.transpose() * yc, "ridge solve");
    return model;
}

KrrModel fit_krr(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double lambda,
                 double sigma) {
    if (X.rows() != y.size()) throw DimensionError("X and y row counts differ");
    if (X.rows() < 2) throw InsufficientDataError("kernel ridge fit needs at least 2 rows");
    if (lambda <= 0.0) throw ParameterError("lambda must be positive");
    if (sigma <= 0.0) throw ParameterError("sigma must be positive");
    check_finite(X, y);

    KrrModel model;
    model.lambda = lambda;
    model.sigma = sigma;
    model.scaler = Standardizer::fit(X);
    model.bias = y.mean();
    model.train_inputs = model.scaler.apply(X);
    Eigen::MatrixXd K = rbf_gram(model.train_inputs, sigma);
    K.diagonal().array() += lambda;
    Eigen::VectorXd yc = y.array() - model.bias;
    model.alpha = solve_spd(K, yc, "kernel ridge solve");
    return model;
}

Eigen::VectorXd predict(const RlrModel& model, const Eigen::MatrixXd& X) {
    return (model.scaler.apply(X) * model.weights).array() + model.bias;
}

Eigen::VectorXd predict(const KrrModel& model, const Eigen::MatrixXd& X) {
    Eigen::MatrixXd K = rbf_cross(model.scaler.apply(X), model.train_inputs, model.sigma);
    return (K * model.alpha).array() + model.bias;
}

namespace detail {

KrrModel fit_krr_kernel(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double lambda,
                        const KernelFn& kernel) {
    if (X.rows() != y.size()) throw DimensionError("X and y row counts differ");
    if (lambda <= 0.0) throw ParameterError("lambda must be positive");
    check_finite(X, y);

    KrrModel model;
    model.lambda = lambda;
    model.scaler = Standardizer::fit(X);
    model.bias = y.mean();
    model.train_inputs = model.scaler.apply(X);
    Eigen::Index n = X.rows();
    Eigen::MatrixXd K(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j)
            K(i, j) = kernel(model.train_inputs.row(i), model.train_inputs.row(j));
    K.diagonal().array() += lambda;
    Eigen::VectorXd yc = y.array() - model.bias;
    model.alpha = solve_spd(K, yc, "kernel ridge solve");
    return model;
}

Eigen::VectorXd predict_krr_kernel(const KrrModel& model, const Eigen::MatrixXd& X,
                                   const KernelFn& kernel) {
    Eigen::MatrixXd Xs = model.scaler.apply(X);
    Eigen::VectorXd out(X.rows());
    for (Eigen::Index i = 0; i < X.rows(); ++i) {
        double acc = 0.0;
        for (Eigen::Index j = 0; j < model.train_inputs.rows(); ++j)
            acc += model.alpha(j) * kernel(model.train_inputs.row(j), Xs.row(i));
        out(i) = acc + model.bias;
    }
    return out;
}

void shuffle_indices(std::vector<std::size_t>& idx, std::uint64_t seed) {
    std::mt19937_64 gen(seed);
    for (std::size_t i = idx.size(); i > 1; --i)
        std::swap(idx[i - 1], idx[gen() % i]);
}

} // namespace detail

namespace {

struct FoldPlan {
    std::vector<std::vector<std::size_t>> val; // row indices per fold
};

FoldPlan make_folds(std::size_t n, int folds, std::uint64_t seed) {
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    detail::shuffle_indices(idx, seed);
    FoldPlan plan;
    plan.val.resize(folds);
    for (int f = 0; f < folds; ++f) {
        std::size_t lo = n * f / folds, hi = n * (f + 1) / folds;
        plan.val[f].assign(idx.begin() + lo, idx.begin() + hi);
    }
    return plan;
}

Eigen::MatrixXd take_rows(const Eigen::MatrixXd& X, const std::vector<std::size_t>& rows) {
    Eigen::MatrixXd out(rows.size(), X.cols());
    for (std::size_t i = 0; i < rows.size(); ++i) out.row(i) = X.row(rows[i]);
    return out;
}

Eigen::VectorXd take_vec(const Eigen::VectorXd& y, const std::vector<std::size_t>& rows) {
    Eigen::VectorXd out(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) out(i) = y(rows[i]);
    return out;
}

Eigen::MatrixXd slice(const Eigen::MatrixXd& M, const std::vector<std::size_t>& rows,
                      const std::vector<std::size_t>& cols) {
    Eigen::MatrixXd out(rows.size(), cols.size());
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < cols.size(); ++j) out(i, j) = M(rows[i], cols[j]);
    return out;
}

} // namespace

HyperParams select_hyperparams(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                               ModelKind kind, const CvConfig& cfg, std::uint64_t seed) {
    validate_cv(cfg);
    std::size_t n = X.rows();
    if (n < 4) throw InsufficientDataError("hyperparameter selection needs at least 4 rows");
    check_finite(X, y);

    int folds = std::min<int>(cfg.inner_folds, static_cast<int>(n) / 2);
    folds = std::max(folds, 2);
    FoldPlan plan = make_folds(n, folds, seed);

    // The inner loop standardizes once on the whole selection split; fold
    // fits center labels (and, for the linear model, features) per fold.
    // This keeps the cached pairwise distances valid for every fold.
    Standardizer scaler = Standardizer::fit(X);
    Eigen::MatrixXd Z = scaler.apply(X);

    std::vector<double> sigmas;
    if (kind == ModelKind::krr) {
        double anchor = median_pairwise_distance(Z);
        for (double f : cfg.sigma_factor_grid) sigmas.push_back(f * anchor);
    } else {
        sigmas.push_back(0.0);
    }
    const std::vector<double>& lambdas = cfg.lambda_grid;

    Eigen::MatrixXd score = Eigen::MatrixXd::Zero(lambdas.size(), sigmas.size());

    Eigen::MatrixXd d2;
    if (kind == ModelKind::krr) d2 = squared_distances(Z, Z);

    std::vector<std::size_t> all(n);
    std::iota(all.begin(), all.end(), 0);
    for (int f = 0; f < folds; ++f) {
        const auto& va = plan.val[f];
        if (va.empty()) continue;
        std::vector<std::size_t> tr;
        tr.reserve(n - va.size());
        std::vector<bool> in_va(n, false);
        for (std::size_t i : va) in_va[i] = true;
        for (std::size_t i : all)
            if (!in_va[i]) tr.push_back(i);

        Eigen::VectorXd y_tr = take_vec(y, tr), y_va = take_vec(y, va);
        double y_mean = y_tr.mean();
        Eigen::VectorXd yc = y_tr.array() - y_mean;

        if (kind == ModelKind::rlr) {
            Eigen::MatrixXd Xtr = take_rows(Z, tr), Xva = take_rows(Z, va);
            Eigen::RowVectorXd col_mean = Xtr.colwise().mean();
            Xtr.rowwise() -= col_mean;
            Xva.rowwise() -= col_mean;
            Eigen::MatrixXd G = Xtr.transpose() * Xtr;
            Eigen::VectorXd b = Xtr.transpose() * yc;
            for (std::size_t li = 0; li < lambdas.size(); ++li) {
                Eigen::MatrixXd A = G;
                A.diagonal().array() += lambdas[li];
                Eigen::VectorXd w = solve_spd(A, b, "inner ridge solve");
                Eigen::VectorXd pred = (Xva * w).array() + y_mean;
                score(li, 0) += std::sqrt((pred - y_va).squaredNorm() / va.size());
            }
        } else {
            Eigen::MatrixXd d2_tr = slice(d2, tr, tr);
            Eigen::MatrixXd d2_va = slice(d2, va, tr);
            for (std::size_t si = 0; si < sigmas.size(); ++si) {
                double s2 = 2.0 * sigmas[si] * sigmas[si];
                Eigen::MatrixXd K = (-d2_tr / s2).array().exp();
                Eigen::MatrixXd Kva = (-d2_va / s2).array().exp();
                for (std::size_t li = 0; li < lambdas.size(); ++li) {
                    Eigen::MatrixXd A = K;
                    A.diagonal().array() += lambdas[li];
                    Eigen::VectorXd alpha = solve_spd(A, yc, "inner kernel ridge solve");
                    Eigen::VectorXd pred = (Kva * alpha).array() + y_mean;
                    score(li, si) += std::sqrt((pred - y_va).squaredNorm() / va.size());
                }
            }
        }
    }

    // Ties break to stronger regularization: scan from the largest lambda
    // and largest sigma, keep strictly better scores only.
    HyperParams best;
    double best_score = std::numeric_limits<double>::infinity();
    for (std::size_t li = lambdas.size(); li-- > 0;) {
        for (std::size_t si = sigmas.size(); si-- > 0;) {
            if (score(li, si) < best_score) {
                best_score = score(li, si);
                best = {lambdas[li], sigmas[si]};
            }
        }
    }
    return best;
}

EvalStats evaluate(const Eigen::VectorXd& y_true, const Eigen::VectorXd& y_pred) {
    if (y_true.size() != y_pred.size()) throw DimensionError("prediction/label length mismatch");
    if (y_true.size() < 2) throw InsufficientDataError("evaluation needs at least 2 points");
    Eigen::VectorXd err = y_pred - y_true;
    EvalStats s;
    s.me = err.mean();
    s.rmse = std::sqrt(err.squaredNorm() / err.size());
    double ss_tot = (y_true.array() - y_true.mean()).square().sum();
    if (ss_tot <= 0.0)
        throw DegenerateFeatureError("labels have zero variance; r2 is undefined");
    s.r2 = 1.0 - err.squaredNorm() / ss_tot;
    return s;
}

EvalSummary run_cv_experiment(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                              ModelKind kind, const CvConfig& cfg) {
    validate_cv(cfg);
    std::size_t n = X.rows();
    if (n < 10) throw InsufficientDataError("experiment needs at least 10 rows, got " +
                                            std::to_string(n));
    check_finite(X, y);

    std::size_t n_train = std::clamp<std::size_t>(
        std::llround(cfg.train_fraction * double(n)), 1, n - 1);

    EvalSummary summary;
    summary.reps.resize(cfg.repetitions);
    parallel_for(cfg.repetitions, cfg.threads, [&](std::size_t r) {
        std::vector<std::size_t> idx(n);
        std::iota(idx.begin(), idx.end(), 0);
        detail::shuffle_indices(idx, mix_seed(cfg.seed, 0x5917, r));
        std::vector<std::size_t> train(idx.begin(), idx.begin() + n_train);
        std::vector<std::size_t> test(idx.begin() + n_train, idx.end());

        Eigen::MatrixXd Xtr = take_rows(X, train), Xte = take_rows(X, test);
        Eigen::VectorXd ytr = take_vec(y, train), yte = take_vec(y, test);

        HyperParams hp =
            select_hyperparams(Xtr, ytr, kind, cfg, mix_seed(cfg.seed, 0xf01d, r));
        Eigen::VectorXd pred;
        if (kind == ModelKind::rlr) {
            pred = predict(fit_rlr(Xtr, ytr, hp.lambda), Xte);
        } else {
            pred = predict(fit_krr(Xtr, ytr, hp.lambda, hp.sigma), Xte);
        }
        summary.reps[r] = evaluate(yte, pred);
    });

    auto agg = [&](auto field) {
        double m = 0.0;
        for (const auto& s : summary.reps) m += field(s);
        m /= summary.reps.size();
        double ss = 0.0;
        for (const auto& s : summary.reps) ss += (field(s) - m) * (field(s) - m);
        double sd = summary.reps.size() > 1 ? std::sqrt(ss / (summary.reps.size() - 1)) : 0.0;
        return std::pair<double, double>{m, sd};
    };
    std::tie(summary.mean.me, summary.stdev.me) = agg([](const EvalStats& s) { return s.me; });
    std::tie(summary.mean.rmse, summary.stdev.rmse) =
        agg([](const EvalStats& s) { return s.rmse; });
    std::tie(summary.mean.r2, summary.stdev.r2) = agg([](const EvalStats& s) { return s.r2; });
    return summary;
}

// -- persistence -------------------------------------------------------------

namespace {

constexpr char kMagic[4] = {'C', 'F', 'M', '1'};

void put_u64(std::ofstream& out, std::uint64_t v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

void put_doubles(std::ofstream& out, const double* p, std::size_t n) {
    out.write(reinterpret_cast<const char*>(p), n * sizeof(double));
}

std::uint64_t get_u64(std::ifstream& in) {
    std::uint64_t v = 0;
    in.read(reinterpret_cast<char*>(&v), sizeof v);
    return v;
}

void get_doubles(std::ifstream& in, double* p, std::size_t n) {
    in.read(reinterpret_cast<char*>(p), n * sizeof(double));
}

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw FileError("cannot write " + path);
    out.write(kMagic, 4);
    return out;
}

} // namespace

void save_model(const std::string& path, const RlrModel& model) {
    std::ofstream out = open_out(path);
    out.put(0);
    put_u64(out, model.weights.size());
    put_doubles(out, model.weights.data(), model.weights.size());
    put_doubles(out, &model.bias, 1);
    put_doubles(out, &model.lambda, 1);
    put_doubles(out, model.scaler.mean.data(), model.scaler.mean.size());
    put_doubles(out, model.scaler.std.data(), model.scaler.std.size());
    if (!out) throw FileError("short write to " + path);
}

void save_model(const std::string& path, const KrrModel& model) {
    std::ofstream out = open_out(path);
    out.put(1);
    put_u64(out, model.train_inputs.rows());
    put_u64(out, model.train_inputs.cols());
    put_doubles(out, model.alpha.data(), model.alpha.size());
    put_doubles(out, &model.bias, 1);
    put_doubles(out, &model.sigma, 1);
    put_doubles(out, &model.lambda, 1);
    for (Eigen::Index i = 0; i < model.train_inputs.rows(); ++i) {
        Eigen::VectorXd row = model.train_inputs.row(i);
        put_doubles(out, row.data(), row.size());
    }
    put_doubles(out, model.scaler.mean.data(), model.scaler.mean.size());
    put_doubles(out, model.scaler.std.data(), model.scaler.std.size());
    if (!out) throw FileError("short write to " + path);
}

LoadedModel load_model(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FileError("cannot open " + path);
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, kMagic, 4) != 0)
        throw DataError(path + ": not a model file");
    int kind = in.get();

    LoadedModel loaded;
    if (kind == 0) {
        loaded.kind = ModelKind::rlr;
        std::uint64_t t = get_u64(in);
        loaded.rlr.weights.resize(t);
        get_doubles(in, loaded.rlr.weights.data(), t);
        get_doubles(in, &loaded.rlr.bias, 1);
        get_doubles(in, &loaded.rlr.lambda, 1);
        loaded.rlr.scaler.mean.resize(t);
        loaded.rlr.scaler.std.resize(t);
        get_doubles(in, loaded.rlr.scaler.mean.data(), t);
        get_doubles(in, loaded.rlr.scaler.std.data(), t);
    } else if (kind == 1) {
        loaded.kind = ModelKind::krr;
        std::uint64_t n = get_u64(in), t = get_u64(in);
        loaded.krr.alpha.resize(n);
        get_doubles(in, loaded.krr.alpha.data(), n);
        get_doubles(in, &loaded.krr.bias, 1);
        get_doubles(in, &loaded.krr.sigma, 1);
        get_doubles(in, &loaded.krr.lambda, 1);
        loaded.krr.train_inputs.resize(n, t);
        for (std::uint64_t i = 0; i < n; ++i) {
            Eigen::VectorXd row(t);
            get_doubles(in, row.data(), t);
            loaded.krr.train_inputs.row(i) = row;
        }
        loaded.krr.scaler.mean.resize(t);
        loaded.krr.scaler.std.resize(t);
        get_doubles(in, loaded.krr.scaler.mean.data(), t);
        get_doubles(in, loaded.krr.scaler.std.data(), t);
    } else {
        throw DataError(path + ": unknown model kind");
    }
    if (!in) throw DataError(path + ": truncated model file");
    return loaded;
}

} // namespace cropfuse
