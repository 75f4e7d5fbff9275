#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

namespace dfv {

enum class CovarianceKind { diagonal, full };
// Config-level: automatic resolves to full for d <= 3, diagonal otherwise.
enum class CovarianceChoice { automatic, diagonal, full };

std::string to_string(CovarianceKind k);

struct GmmConfig {
    CovarianceChoice covariance = CovarianceChoice::automatic;
    std::uint64_t seed = 0;
    int max_iter = 200;
    double tol = 1e-6;
    int restarts = 3;
};

struct GmmModel {
    int n_components = 0;
    int dim = 0;
    CovarianceKind covariance_kind = CovarianceKind::diagonal;
    std::vector<double> weights;
    std::vector<Eigen::VectorXd> means;
    std::vector<Eigen::VectorXd> diag_vars;   // diagonal kind
    std::vector<Eigen::MatrixXd> full_covs;   // full kind
    std::size_t trained_on_count = 0;
    std::string trained_on_family;
    std::vector<double> ll_history;  // per-iteration training LL of the winning restart
    std::vector<std::string> warnings;

    // Builds the evaluation cache (Cholesky factors, log normalizers).
    // Called by fit/load; must be called after manual construction.
    void prepare();

    struct EvalCache {
        std::vector<double> log_weights;
        std::vector<double> log_norm;               // -d/2 log 2pi - 1/2 log|Sigma|
        std::vector<Eigen::VectorXd> inv_diag;      // diagonal kind
        std::vector<Eigen::LLT<Eigen::MatrixXd>> llt;  // full kind
    };
    std::shared_ptr<const EvalCache> cache;
};

// Log density floor; exp(-745) is the smallest normal-range double.
inline constexpr double kLogDensityFloor = -745.0;

// Rows of X are observations. k is reduced (with a model warning) when
// n < 5k; n == 0 raises an insufficient-data error.
GmmModel fit_gmm(const Eigen::MatrixXd& X, int k, const GmmConfig& config);

double log_density(const GmmModel& model, const Eigen::VectorXd& x);
Eigen::VectorXd log_density_rows(const GmmModel& model, const Eigen::MatrixXd& X);

struct PretestReport {
    std::vector<int> grid;
    std::vector<double> heldout_ll;  // per grid entry; NaN for excluded K
    int chosen_k = 0;
};

PretestReport pretest_components(const Eigen::MatrixXd& X, const std::vector<int>& grid,
                                 int folds, const GmmConfig& config);

std::string gmm_to_json(const GmmModel& model);
GmmModel gmm_from_json(const std::string& text);
void save_gmm(const GmmModel& model, const std::string& path);
GmmModel load_gmm(const std::string& path);

}  // namespace dfv
