#include "aar/gmm.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "aar/mathutil.hpp"

namespace aar {

namespace {

struct MeanVar {
    double mean = 0.0;
    double var = 0.0; // population variance
};

MeanVar mean_var(std::span<const double> v) {
    MeanVar mv;
    if (v.empty()) return mv;
    mv.mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
    double acc = 0.0;
    for (double x : v) acc += (x - mv.mean) * (x - mv.mean);
    mv.var = acc / static_cast<double>(v.size());
    return mv;
}

} // namespace

GmmFit fit_gmm2(const ScoreBatch& batch, const GmmConfig& cfg, std::uint64_t /*seed*/) {
    batch.validate();
    const std::vector<double>& s = batch.scores;
    const std::size_t n = s.size();
    if (n < 4) throw InvalidInput("fit_gmm2 needs at least 4 samples");
    if (cfg.max_iterations < 1 || cfg.convergence_tol <= 0.0 || cfg.variance_floor_abs <= 0.0)
        throw InvalidInput("invalid GmmConfig");

    MeanVar batch_mv = mean_var(s);
    if (batch_mv.var == 0.0) throw DegenerateInput("all scores equal; mixture fit undefined");
    const double var_floor = std::max(cfg.variance_floor_abs, cfg.variance_floor_rel * batch_mv.var);

    // Initialization: split the sorted batch at the median; each half seeds one
    // component. Deterministic in the batch, robust for 1-D scores.
    std::vector<double> sorted = s;
    std::sort(sorted.begin(), sorted.end());
    const std::size_t half = n / 2;
    MeanVar lo = mean_var({sorted.data(), half});
    MeanVar hi = mean_var({sorted.data() + half, n - half});

    std::array<double, 2> pi = {0.5, 0.5};
    std::array<double, 2> mu = {lo.mean, hi.mean};
    std::array<double, 2> var = {std::max(lo.var, var_floor), std::max(hi.var, var_floor)};

    GmmFit fit;
    std::vector<double> resp(n); // responsibility of component 0

    // Log-likelihood and responsibilities under the current parameters.
    auto e_step = [&]() {
        double ll = 0.0;
        const std::array<double, 2> sd = {std::sqrt(var[0]), std::sqrt(var[1])};
        const std::array<double, 2> log_pi = {
            pi[0] > 0.0 ? std::log(pi[0]) : -std::numeric_limits<double>::infinity(),
            pi[1] > 0.0 ? std::log(pi[1]) : -std::numeric_limits<double>::infinity()};
        for (std::size_t i = 0; i < n; ++i) {
            double l0 = log_pi[0] + normal_log_pdf(s[i], mu[0], sd[0]);
            double l1 = log_pi[1] + normal_log_pdf(s[i], mu[1], sd[1]);
            double m = std::max(l0, l1);
            double lse = m + std::log(std::exp(l0 - m) + std::exp(l1 - m));
            resp[i] = std::exp(l0 - lse);
            ll += lse;
        }
        if (!std::isfinite(ll)) throw NumericalFailure("GMM log-likelihood became non-finite");
        return ll;
    };

    auto m_step = [&]() {
        // A vanished component keeps its parameters; its weight decays to the
        // responsibility mass it still owns.
        double n0 = std::accumulate(resp.begin(), resp.end(), 0.0);
        std::array<double, 2> nk = {n0, static_cast<double>(n) - n0};
        for (int k = 0; k < 2; ++k) {
            pi[k] = nk[k] / static_cast<double>(n);
            if (nk[k] < 1e-12) continue;
            double m_acc = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                double r = (k == 0) ? resp[i] : 1.0 - resp[i];
                m_acc += r * s[i];
            }
            double mean_k = m_acc / nk[k];
            double v_acc = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                double r = (k == 0) ? resp[i] : 1.0 - resp[i];
                v_acc += r * (s[i] - mean_k) * (s[i] - mean_k);
            }
            mu[k] = mean_k;
            var[k] = std::max(v_acc / nk[k], var_floor);
        }
    };

    double prev_ll = -std::numeric_limits<double>::infinity();
    double ll = 0.0;
    int steps = 0;
    bool converged = false;
    while (steps < cfg.max_iterations) {
        ll = e_step();
        fit.log_likelihood_trace.push_back(ll);
        if (std::fabs(ll - prev_ll) < cfg.convergence_tol) {
            converged = true;
            break;
        }
        prev_ll = ll;
        m_step();
        ++steps;
    }
    if (!converged) {
        // Max iterations hit: evaluate once more so the reported likelihood
        // matches the returned parameters.
        ll = e_step();
        fit.log_likelihood_trace.push_back(ll);
    }

    fit.log_likelihood = ll;
    fit.iterations = steps;
    fit.pi = pi;
    fit.mu = mu;
    fit.sigma = {std::sqrt(var[0]), std::sqrt(var[1])};
    if (fit.mu[0] > fit.mu[1]) {
        std::swap(fit.mu[0], fit.mu[1]);
        std::swap(fit.sigma[0], fit.sigma[1]);
        std::swap(fit.pi[0], fit.pi[1]);
    }
    return fit;
}

std::optional<double> intersection_threshold(const GmmFit& fit) {
    const double mu1 = fit.mu[0], mu2 = fit.mu[1];
    const double s1 = fit.sigma[0], s2 = fit.sigma[1];
    if (mu1 == mu2 && s1 == s2) return std::nullopt;

    const double inv1 = 1.0 / (s1 * s1), inv2 = 1.0 / (s2 * s2);
    const double a = inv1 - inv2;
    const double b = mu2 * inv2 - mu1 * inv1;
    const double c = mu1 * mu1 * inv1 - mu2 * mu2 * inv2 - 2.0 * std::log(s2 / s1);

    auto in_interval = [&](double x) { return x > mu1 && x < mu2; };

    if (std::fabs(a) < 1e-12 * std::max(inv1, inv2)) {
        // Equal variances: the quadratic degenerates to a line.
        if (b == 0.0) return std::nullopt;
        double x = -c / (2.0 * b);
        if (in_interval(x)) return x;
        return std::nullopt;
    }

    double disc = b * b - a * c;
    if (disc < 0.0) return std::nullopt;
    double root = std::sqrt(disc);
    double x1 = (-b - root) / a;
    double x2 = (-b + root) / a;
    bool ok1 = in_interval(x1);
    bool ok2 = in_interval(x2);
    if (ok1 && ok2) return std::min(x1, x2);
    if (ok1) return x1;
    if (ok2) return x2;
    return std::nullopt;
}

double z_sigma_threshold(const GmmFit& fit, double z) {
    return z * fit.sigma[0] + fit.mu[0];
}

double soft_threshold(const GmmFit& fit, double z) {
    double tau = z_sigma_threshold(fit, z);
    if (auto ti = intersection_threshold(fit)) tau = std::max(tau, *ti);
    return tau;
}

} // namespace aar
