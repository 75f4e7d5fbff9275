#include "dfv/gmm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

#include "json.hpp"

#include "dfv/errors.hpp"
#include "dfv/util.hpp"

namespace dfv {

namespace {

constexpr double kLog2Pi = 1.8378770664093453;  // ln(2*pi)
constexpr double kWeightRemovalThreshold = 1e-8;

// Lexicographic row order; makes the fit independent of input row order
// (identical sums, identical init sampling) at O(n log n) cost.
Eigen::MatrixXd canonical_rows(const Eigen::MatrixXd& X) {
    Eigen::Index n = X.rows();
    std::vector<Eigen::Index> idx(static_cast<size_t>(n));
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](Eigen::Index a, Eigen::Index b) {
        for (Eigen::Index j = 0; j < X.cols(); ++j) {
            if (X(a, j) != X(b, j)) return X(a, j) < X(b, j);
        }
        return false;
    });
    Eigen::MatrixXd out(n, X.cols());
    for (Eigen::Index i = 0; i < n; ++i) out.row(i) = X.row(idx[static_cast<size_t>(i)]);
    return out;
}

struct WorkingModel {
    std::vector<double> weights;
    std::vector<Eigen::VectorXd> means;
    std::vector<Eigen::VectorXd> diag_vars;
    std::vector<Eigen::MatrixXd> full_covs;
    CovarianceKind kind;
};

Eigen::MatrixXd floored_full_cov(Eigen::MatrixXd cov, const Eigen::VectorXd& floor_vec) {
    Eigen::Index d = cov.rows();
    for (Eigen::Index j = 0; j < d; ++j)
        cov(j, j) = std::max(cov(j, j), floor_vec(j));
    // symmetric PD required downstream; escalate a ridge until Cholesky holds
    double ridge = 1e-12 * (cov.trace() / static_cast<double>(d) + 1.0);
    for (int attempt = 0; attempt < 40; ++attempt) {
        Eigen::LLT<Eigen::MatrixXd> llt(cov);
        if (llt.info() == Eigen::Success) return cov;
        cov += ridge * Eigen::MatrixXd::Identity(d, d);
        ridge *= 10.0;
    }
    throw NumericError("fit_gmm: covariance not repairable to positive definite");
}

// log N(x; mu, Sigma) for every row of X, one component.
Eigen::VectorXd component_log_pdf(const Eigen::MatrixXd& X, const Eigen::VectorXd& mean,
                                  const Eigen::VectorXd* diag_var,
                                  const Eigen::MatrixXd* full_cov) {
    Eigen::Index n = X.rows(), d = X.cols();
    Eigen::MatrixXd centered = X.rowwise() - mean.transpose();
    if (diag_var) {
        Eigen::VectorXd inv = diag_var->cwiseInverse();
        double log_det = diag_var->array().log().sum();
        Eigen::VectorXd quad = centered.cwiseProduct(centered) * inv;
        double c = -0.5 * (static_cast<double>(d) * kLog2Pi + log_det);
        return (c - 0.5 * quad.array()).matrix();
    }
    Eigen::LLT<Eigen::MatrixXd> llt(*full_cov);
    if (llt.info() != Eigen::Success)
        throw NumericError("log_pdf: covariance lost positive definiteness");
    double log_det = 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
    Eigen::MatrixXd solved = llt.matrixL().solve(centered.transpose());  // d x n
    Eigen::VectorXd quad = solved.colwise().squaredNorm().transpose();
    Eigen::VectorXd out(n);
    double c = -0.5 * (static_cast<double>(d) * kLog2Pi + log_det);
    for (Eigen::Index i = 0; i < n; ++i) out(i) = c - 0.5 * quad(i);
    return out;
}

// Returns total log-likelihood; fills resp (n x k) when non-null.
double e_step(const Eigen::MatrixXd& X, const WorkingModel& m, Eigen::MatrixXd* resp) {
    Eigen::Index n = X.rows();
    size_t k = m.weights.size();
    Eigen::MatrixXd logp(n, static_cast<Eigen::Index>(k));
    for (size_t c = 0; c < k; ++c) {
        const Eigen::VectorXd* dv = m.kind == CovarianceKind::diagonal ? &m.diag_vars[c] : nullptr;
        const Eigen::MatrixXd* fc = m.kind == CovarianceKind::full ? &m.full_covs[c] : nullptr;
        logp.col(static_cast<Eigen::Index>(c)) =
            component_log_pdf(X, m.means[c], dv, fc).array() + std::log(m.weights[c]);
    }
    double ll = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        double mx = logp.row(i).maxCoeff();
        double lse = mx + std::log((logp.row(i).array() - mx).exp().sum());
        ll += lse;
        if (resp) resp->row(i) = (logp.row(i).array() - lse).exp();
    }
    return ll;
}

void m_step(const Eigen::MatrixXd& X, const Eigen::MatrixXd& resp,
            const Eigen::VectorXd& floor_vec, WorkingModel& m) {
    Eigen::Index n = X.rows(), d = X.cols();
    size_t k = m.weights.size();
    Eigen::VectorXd nk = resp.colwise().sum().transpose();
    for (size_t c = 0; c < k; ++c) {
        double nc = nk(static_cast<Eigen::Index>(c));
        m.weights[c] = nc / static_cast<double>(n);
        if (nc <= 0.0) continue;  // weight ~0, removal handles it
        Eigen::VectorXd mu =
            (resp.col(static_cast<Eigen::Index>(c)).transpose() * X).transpose() / nc;
        m.means[c] = mu;
        Eigen::MatrixXd centered = X.rowwise() - mu.transpose();
        if (m.kind == CovarianceKind::diagonal) {
            Eigen::VectorXd var = (centered.cwiseProduct(centered).transpose() *
                                   resp.col(static_cast<Eigen::Index>(c))) /
                                  nc;
            m.diag_vars[c] = var.cwiseMax(floor_vec);
        } else {
            Eigen::MatrixXd cov = centered.transpose() *
                                  (resp.col(static_cast<Eigen::Index>(c)).asDiagonal() * centered);
            cov /= nc;
            (void)d;
            m.full_covs[c] = floored_full_cov(std::move(cov), floor_vec);
        }
    }
    double wsum = std::accumulate(m.weights.begin(), m.weights.end(), 0.0);
    for (double& w : m.weights) w /= wsum;
}

// Drops components whose weight collapsed; returns true when any was removed.
bool remove_dead_components(WorkingModel& m, std::vector<std::string>& warnings) {
    size_t before = m.weights.size();
    for (size_t c = m.weights.size(); c-- > 0;) {
        if (m.weights[c] < kWeightRemovalThreshold && m.weights.size() > 1) {
            m.weights.erase(m.weights.begin() + static_cast<long>(c));
            m.means.erase(m.means.begin() + static_cast<long>(c));
            if (m.kind == CovarianceKind::diagonal)
                m.diag_vars.erase(m.diag_vars.begin() + static_cast<long>(c));
            else
                m.full_covs.erase(m.full_covs.begin() + static_cast<long>(c));
        }
    }
    if (m.weights.size() == before) return false;
    warnings.push_back("removed " + std::to_string(before - m.weights.size()) +
                       " collapsed component(s)");
    double wsum = std::accumulate(m.weights.begin(), m.weights.end(), 0.0);
    for (double& w : m.weights) w /= wsum;
    return true;
}

WorkingModel kmeanspp_init(const Eigen::MatrixXd& X, int k, CovarianceKind kind,
                           const Eigen::VectorXd& floor_vec, Rng& rng) {
    Eigen::Index n = X.rows(), d = X.cols();
    std::vector<Eigen::Index> centers;
    centers.push_back(static_cast<Eigen::Index>(rng.bounded(static_cast<uint64_t>(n))));
    Eigen::VectorXd dist2 =
        (X.rowwise() - X.row(centers[0])).rowwise().squaredNorm();
    while (static_cast<int>(centers.size()) < k) {
        double total = dist2.sum();
        Eigen::Index pick;
        if (total <= 0.0) {
            pick = static_cast<Eigen::Index>(rng.bounded(static_cast<uint64_t>(n)));
        } else {
            double target = rng.uniform() * total;
            double acc = 0.0;
            pick = n - 1;
            for (Eigen::Index i = 0; i < n; ++i) {
                acc += dist2(i);
                if (acc >= target) {
                    pick = i;
                    break;
                }
            }
        }
        centers.push_back(pick);
        Eigen::VectorXd nd = (X.rowwise() - X.row(pick)).rowwise().squaredNorm();
        dist2 = dist2.cwiseMin(nd);
    }

    WorkingModel m;
    m.kind = kind;
    m.weights.assign(static_cast<size_t>(k), 1.0 / k);
    for (int c = 0; c < k; ++c) m.means.push_back(X.row(centers[static_cast<size_t>(c)]));

    // start every component from the global scatter
    Eigen::VectorXd mean = X.colwise().mean().transpose();
    Eigen::MatrixXd centered = X.rowwise() - mean.transpose();
    if (kind == CovarianceKind::diagonal) {
        Eigen::VectorXd var =
            centered.array().square().colwise().sum().transpose() / static_cast<double>(n);
        var = var.cwiseMax(floor_vec);
        for (int c = 0; c < k; ++c) m.diag_vars.push_back(var);
    } else {
        Eigen::MatrixXd cov = centered.transpose() * centered / static_cast<double>(n);
        cov = floored_full_cov(std::move(cov), floor_vec);
        for (int c = 0; c < k; ++c) m.full_covs.push_back(cov);
    }
    (void)d;
    return m;
}

struct EmRun {
    WorkingModel model;
    double final_ll = -std::numeric_limits<double>::infinity();
    std::vector<double> ll_history;
    std::vector<std::string> warnings;
};

EmRun run_em(const Eigen::MatrixXd& X, int k, CovarianceKind kind,
             const Eigen::VectorXd& floor_vec, uint64_t seed, int max_iter, double tol) {
    Rng rng(seed);
    EmRun run;
    run.model = kmeanspp_init(X, k, kind, floor_vec, rng);

    double prev_ll = -std::numeric_limits<double>::infinity();
    bool comparable = false;  // false right after init or component removal
    for (int iter = 0; iter < max_iter; ++iter) {
        Eigen::MatrixXd resp(X.rows(), static_cast<Eigen::Index>(run.model.weights.size()));
        double ll = e_step(X, run.model, &resp);
        if (!std::isfinite(ll)) throw NumericError("fit_gmm: log-likelihood diverged");
        if (comparable && ll < prev_ll - 1e-6 * (std::abs(prev_ll) + 1.0))
            throw NumericError("fit_gmm: EM log-likelihood decreased");
        run.ll_history.push_back(ll);
        if (comparable) {
            double improvement = ll - prev_ll;
            if (improvement <= tol * (std::abs(prev_ll) + 1e-300)) {
                run.final_ll = ll;
                return run;
            }
        }
        prev_ll = ll;
        comparable = true;
        m_step(X, resp, floor_vec, run.model);
        if (remove_dead_components(run.model, run.warnings)) comparable = false;
    }
    run.final_ll = e_step(X, run.model, nullptr);
    return run;
}

}  // namespace

std::string to_string(CovarianceKind k) {
    return k == CovarianceKind::diagonal ? "diagonal" : "full";
}

void GmmModel::prepare() {
    auto c = std::make_shared<EvalCache>();
    c->log_weights.resize(weights.size());
    c->log_norm.resize(weights.size());
    for (size_t i = 0; i < weights.size(); ++i) {
        c->log_weights[i] = std::log(std::max(weights[i], 1e-300));
        if (covariance_kind == CovarianceKind::diagonal) {
            c->inv_diag.push_back(diag_vars[i].cwiseInverse());
            c->log_norm[i] =
                -0.5 * (dim * kLog2Pi + diag_vars[i].array().log().sum());
        } else {
            Eigen::LLT<Eigen::MatrixXd> llt(full_covs[i]);
            if (llt.info() != Eigen::Success)
                throw NumericError("GmmModel::prepare: covariance not positive definite");
            double log_det =
                2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
            c->log_norm[i] = -0.5 * (dim * kLog2Pi + log_det);
            c->llt.push_back(std::move(llt));
        }
    }
    cache = std::move(c);
}

GmmModel fit_gmm(const Eigen::MatrixXd& X, int k, const GmmConfig& config) {
    Eigen::Index n = X.rows(), d = X.cols();
    if (d < 1) throw ContractError("fit_gmm: dimension must be >= 1");
    if (n < 1) throw InsufficientDataError("fit_gmm: no tokens");
    if (!X.allFinite()) throw ContractError("fit_gmm: non-finite token values");
    if (k < 1) throw ContractError("fit_gmm: k must be >= 1");
    if (config.restarts < 1 || config.max_iter < 1)
        throw ContractError("fit_gmm: restarts and max_iter must be >= 1");

    CovarianceKind kind = config.covariance == CovarianceChoice::diagonal
                              ? CovarianceKind::diagonal
                          : config.covariance == CovarianceChoice::full
                              ? CovarianceKind::full
                              : (d <= 3 ? CovarianceKind::full : CovarianceKind::diagonal);

    std::vector<std::string> warnings;
    int k_eff = std::min<int>(k, std::max<Eigen::Index>(1, n / 5));
    if (k_eff < k)
        warnings.push_back("reduced components " + std::to_string(k) + " -> " +
                           std::to_string(k_eff) + " (only " + std::to_string(n) + " tokens)");
    if (n < k_eff) throw InsufficientDataError("fit_gmm: fewer tokens than components");

    Eigen::MatrixXd Xs = canonical_rows(X);

    // variance floor: 1e-6 x global per-dimension variance, small absolute
    // floor guards constant dimensions
    Eigen::VectorXd gmean = Xs.colwise().mean().transpose();
    Eigen::VectorXd gvar = (Xs.rowwise() - gmean.transpose())
                               .array()
                               .square()
                               .colwise()
                               .sum()
                               .transpose() /
                           static_cast<double>(n);
    Eigen::VectorXd floor_vec = (1e-6 * gvar.array()).max(1e-12).matrix();

    // a restart whose trajectory breaks (likelihood singularity, covariance
    // repair) is discarded; the survivors' histories stay strictly monotone
    EmRun best;
    bool have_best = false;
    int discarded = 0;
    std::string first_error;
    for (int r = 0; r < config.restarts; ++r) {
        EmRun run;
        try {
            run = run_em(Xs, k_eff, kind, floor_vec, derive_seed(config.seed, r),
                         config.max_iter, config.tol);
        } catch (const NumericError& e) {
            ++discarded;
            if (first_error.empty()) first_error = e.what();
            continue;
        }
        if (!have_best || run.final_ll > best.final_ll) {
            best = std::move(run);
            have_best = true;
        }
    }
    if (!have_best) throw NumericError("fit_gmm: every restart failed (" + first_error + ")");
    if (discarded > 0)
        warnings.push_back("discarded " + std::to_string(discarded) + " restart(s): " +
                           first_error);

    GmmModel model;
    model.n_components = static_cast<int>(best.model.weights.size());
    model.dim = static_cast<int>(d);
    model.covariance_kind = kind;
    model.weights = best.model.weights;
    model.means = best.model.means;
    model.diag_vars = best.model.diag_vars;
    model.full_covs = best.model.full_covs;
    model.trained_on_count = static_cast<size_t>(n);
    model.ll_history = best.ll_history;
    model.warnings = warnings;
    model.warnings.insert(model.warnings.end(), best.warnings.begin(), best.warnings.end());
    model.prepare();
    return model;
}

double log_density(const GmmModel& model, const Eigen::VectorXd& x) {
    if (x.size() != model.dim)
        throw ContractError("log_density: dimension mismatch (" + std::to_string(x.size()) +
                            " vs model " + std::to_string(model.dim) + ")");
    if (!model.cache) throw ContractError("log_density: model not prepared");
    const auto& c = *model.cache;
    double best = -std::numeric_limits<double>::infinity();
    std::vector<double> terms(model.weights.size());
    for (size_t i = 0; i < model.weights.size(); ++i) {
        double quad;
        Eigen::VectorXd centered = x - model.means[i];
        if (model.covariance_kind == CovarianceKind::diagonal) {
            quad = (centered.array().square() * c.inv_diag[i].array()).sum();
        } else {
            Eigen::VectorXd solved = c.llt[i].matrixL().solve(centered);
            quad = solved.squaredNorm();
        }
        terms[i] = c.log_weights[i] + c.log_norm[i] - 0.5 * quad;
        best = std::max(best, terms[i]);
    }
    if (!std::isfinite(best)) return kLogDensityFloor;
    double acc = 0.0;
    for (double t : terms) acc += std::exp(t - best);
    double ll = best + std::log(acc);
    return std::max(ll, kLogDensityFloor);
}

Eigen::VectorXd log_density_rows(const GmmModel& model, const Eigen::MatrixXd& X) {
    if (X.cols() != model.dim) throw ContractError("log_density_rows: dimension mismatch");
    Eigen::VectorXd out(X.rows());
    for (Eigen::Index i = 0; i < X.rows(); ++i) out(i) = log_density(model, X.row(i).transpose());
    return out;
}

PretestReport pretest_components(const Eigen::MatrixXd& X, const std::vector<int>& grid,
                                 int folds, const GmmConfig& config) {
    if (grid.empty()) throw ContractError("pretest_components: empty grid");
    if (folds < 2) throw ContractError("pretest_components: need >= 2 folds");
    Eigen::Index n = X.rows();
    if (n < folds) throw InsufficientDataError("pretest_components: fewer tokens than folds");

    // deterministic fold assignment: shuffled row index modulo folds
    std::vector<Eigen::Index> order(static_cast<size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    Rng rng(derive_seed(config.seed, 0xF01D5EEDULL));
    rng.shuffle(order);
    std::vector<int> fold_of(static_cast<size_t>(n));
    for (size_t p = 0; p < order.size(); ++p)
        fold_of[static_cast<size_t>(order[p])] = static_cast<int>(p % static_cast<size_t>(folds));

    PretestReport report;
    report.grid = grid;
    report.heldout_ll.assign(grid.size(), std::numeric_limits<double>::quiet_NaN());

    for (size_t gi = 0; gi < grid.size(); ++gi) {
        int k = grid[gi];
        double total_ll = 0.0;
        Eigen::Index total_cnt = 0;
        bool failed = false;
        for (int f = 0; f < folds && !failed; ++f) {
            Eigen::Index n_test = 0;
            for (int fo : fold_of) n_test += (fo == f);
            Eigen::Index n_train = n - n_test;
            if (n_train < 1 || n_test < 1) {
                failed = true;
                break;
            }
            Eigen::MatrixXd train(n_train, X.cols()), test(n_test, X.cols());
            Eigen::Index ti = 0, si = 0;
            for (Eigen::Index i = 0; i < n; ++i) {
                if (fold_of[static_cast<size_t>(i)] == f)
                    test.row(si++) = X.row(i);
                else
                    train.row(ti++) = X.row(i);
            }
            try {
                GmmConfig fold_config = config;
                fold_config.seed = derive_seed(derive_seed(config.seed, static_cast<uint64_t>(k)),
                                               static_cast<uint64_t>(f));
                GmmModel m = fit_gmm(train, k, fold_config);
                total_ll += log_density_rows(m, test).sum();
                total_cnt += n_test;
            } catch (const Error&) {
                failed = true;
            }
        }
        if (!failed && total_cnt > 0)
            report.heldout_ll[gi] = total_ll / static_cast<double>(total_cnt);
    }

    // argmax over mean held-out LL; ascending K iteration keeps smaller K on ties
    std::vector<size_t> by_k(grid.size());
    std::iota(by_k.begin(), by_k.end(), 0);
    std::sort(by_k.begin(), by_k.end(),
              [&](size_t a, size_t b) { return grid[a] < grid[b]; });
    bool any = false;
    double best_ll = 0.0;
    for (size_t gi : by_k) {
        double ll = report.heldout_ll[gi];
        if (std::isnan(ll)) continue;
        if (!any || ll > best_ll) {
            any = true;
            best_ll = ll;
            report.chosen_k = grid[gi];
        }
    }
    if (!any) throw InsufficientDataError("pretest_components: every K failed cross-validation");
    return report;
}

std::string gmm_to_json(const GmmModel& model) {
    nlohmann::json j;
    j["format"] = "dfvoice-gmm";
    j["version"] = 1;
    j["covariance_kind"] = to_string(model.covariance_kind);
    j["n_components"] = model.n_components;
    j["dim"] = model.dim;
    j["weights"] = model.weights;
    nlohmann::json means = nlohmann::json::array();
    for (const auto& m : model.means)
        means.push_back(std::vector<double>(m.data(), m.data() + m.size()));
    j["means"] = means;
    nlohmann::json covs = nlohmann::json::array();
    if (model.covariance_kind == CovarianceKind::diagonal) {
        for (const auto& v : model.diag_vars)
            covs.push_back(std::vector<double>(v.data(), v.data() + v.size()));
    } else {
        for (const auto& c : model.full_covs) {
            std::vector<double> flat;
            flat.reserve(static_cast<size_t>(c.size()));
            for (Eigen::Index r = 0; r < c.rows(); ++r)
                for (Eigen::Index cc = 0; cc < c.cols(); ++cc) flat.push_back(c(r, cc));
            covs.push_back(flat);
        }
    }
    j["covariances"] = covs;
    j["trained_on"] = {{"count", model.trained_on_count}, {"family", model.trained_on_family}};
    return j.dump(2) + "\n";
}

GmmModel gmm_from_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw FormatError(std::string("model JSON: ") + e.what());
    }
    try {
        if (j.at("format").get<std::string>() != "dfvoice-gmm")
            throw FormatError("not a dfvoice-gmm document");
        if (j.at("version").get<int>() != 1)
            throw FormatError("unsupported model version " + j["version"].dump());
        GmmModel m;
        std::string kind = j.at("covariance_kind").get<std::string>();
        if (kind == "diagonal")
            m.covariance_kind = CovarianceKind::diagonal;
        else if (kind == "full")
            m.covariance_kind = CovarianceKind::full;
        else
            throw FormatError("unknown covariance_kind \"" + kind + "\"");
        m.n_components = j.at("n_components").get<int>();
        m.dim = j.at("dim").get<int>();
        m.weights = j.at("weights").get<std::vector<double>>();
        for (const auto& row : j.at("means")) {
            auto v = row.get<std::vector<double>>();
            if (static_cast<int>(v.size()) != m.dim) throw FormatError("mean dimension mismatch");
            m.means.push_back(Eigen::Map<Eigen::VectorXd>(v.data(), m.dim));
        }
        for (const auto& row : j.at("covariances")) {
            auto v = row.get<std::vector<double>>();
            if (m.covariance_kind == CovarianceKind::diagonal) {
                if (static_cast<int>(v.size()) != m.dim)
                    throw FormatError("variance dimension mismatch");
                m.diag_vars.push_back(Eigen::Map<Eigen::VectorXd>(v.data(), m.dim));
            } else {
                if (static_cast<int>(v.size()) != m.dim * m.dim)
                    throw FormatError("covariance size mismatch");
                Eigen::MatrixXd c(m.dim, m.dim);
                for (int r = 0; r < m.dim; ++r)
                    for (int cc = 0; cc < m.dim; ++cc)
                        c(r, cc) = v[static_cast<size_t>(r * m.dim + cc)];
                m.full_covs.push_back(std::move(c));
            }
        }
        if (static_cast<int>(m.weights.size()) != m.n_components ||
            static_cast<int>(m.means.size()) != m.n_components)
            throw FormatError("component count mismatch");
        const auto& trained = j.at("trained_on");
        m.trained_on_count = trained.at("count").get<size_t>();
        m.trained_on_family = trained.at("family").get<std::string>();
        m.prepare();
        return m;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("model JSON: ") + e.what());
    }
}

void save_gmm(const GmmModel& model, const std::string& path) {
    write_file_atomic(path, gmm_to_json(model));
}

GmmModel load_gmm(const std::string& path) { return gmm_from_json(read_file(path)); }

}  // namespace dfv
