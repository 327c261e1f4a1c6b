#include "aar/theory.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

#include "aar/mathutil.hpp"

namespace aar {

void MixtureSpec::validate() const {
    if (!(alpha > 0.0 && alpha < 1.0)) throw InvalidInput("mixture alpha must lie in (0, 1)");
    if (!(normal.stddev > 0.0 && abnormal.stddev > 0.0))
        throw InvalidInput("mixture stddevs must be positive");
    if (!(normal.mean < abnormal.mean))
        throw InvalidInput("abnormal mean must exceed normal mean");
}

namespace {

// Mass of an untruncated Gaussian that survives truncation at zero.
double kept_mass(const GaussianParams& g) { return normal_cdf(g.mean / g.stddev); }

double trunc_pdf(double x, const GaussianParams& g) {
    if (x < 0.0) return 0.0;
    return normal_pdf(x, g.mean, g.stddev) / kept_mass(g);
}

double trunc_cdf(double x, const GaussianParams& g) {
    if (x < 0.0) return 0.0;
    double z = kept_mass(g);
    return (normal_cdf(x, g.mean, g.stddev) - (1.0 - z)) / z;
}

double trunc_mean(const GaussianParams& g) {
    double r = g.mean / g.stddev;
    return g.mean + g.stddev * normal_pdf(r, 0.0, 1.0) / normal_cdf(r);
}

// Adaptive Simpson with absolute tolerance; throws on depth exhaustion.
double simpson_rec(const std::function<double(double)>& f, double a, double b, double fa, double fb,
                   double fm, double whole, double tol, int depth) {
    if (depth > 60) throw NumericalFailure("adaptive quadrature failed to converge");
    double m = 0.5 * (a + b);
    double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    double flm = f(lm), frm = f(rm);
    double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    if (std::fabs(left + right - whole) <= 15.0 * tol)
        return left + right + (left + right - whole) / 15.0;
    return simpson_rec(f, a, m, fa, fm, flm, left, 0.5 * tol, depth + 1) +
           simpson_rec(f, m, b, fm, fb, frm, right, 0.5 * tol, depth + 1);
}

double adaptive_simpson(const std::function<double(double)>& f, double a, double b, double tol) {
    if (b <= a) return 0.0;
    double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
    double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    return simpson_rec(f, a, b, fa, fb, fm, whole, tol, 0);
}

constexpr double kQuadTol = 1e-8;
constexpr double kTailSigmas = 12.0;

double support_lo(const MixtureSpec& mix) {
    if (mix.truncate_at_zero) return 0.0;
    return std::min(mix.normal.mean - kTailSigmas * mix.normal.stddev,
                    mix.abnormal.mean - kTailSigmas * mix.abnormal.stddev);
}

double support_hi(const MixtureSpec& mix) {
    return std::max(mix.normal.mean + kTailSigmas * mix.normal.stddev,
                    mix.abnormal.mean + kTailSigmas * mix.abnormal.stddev);
}

// Invert q = CDF(tau) by bisection to 1e-10 on tau.
double invert_cdf(const MixtureSpec& mix, double q) {
    double lo = support_lo(mix), hi = support_hi(mix);
    if (q <= 0.0) return lo;
    if (q >= 1.0) return hi;
    while (hi - lo > 1e-10) {
        double mid = 0.5 * (lo + hi);
        (mix.cdf(mid) < q ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

} // namespace

double MixtureSpec::pdf_normal(double x) const {
    return truncate_at_zero ? trunc_pdf(x, normal) : normal_pdf(x, normal.mean, normal.stddev);
}

double MixtureSpec::pdf_abnormal(double x) const {
    return truncate_at_zero ? trunc_pdf(x, abnormal) : normal_pdf(x, abnormal.mean, abnormal.stddev);
}

double MixtureSpec::pdf(double x) const {
    return alpha * pdf_normal(x) + (1.0 - alpha) * pdf_abnormal(x);
}

double MixtureSpec::cdf(double x) const {
    if (truncate_at_zero) return alpha * trunc_cdf(x, normal) + (1.0 - alpha) * trunc_cdf(x, abnormal);
    return alpha * normal_cdf(x, normal.mean, normal.stddev) +
           (1.0 - alpha) * normal_cdf(x, abnormal.mean, abnormal.stddev);
}

double MixtureSpec::mean_normal() const {
    return truncate_at_zero ? trunc_mean(normal) : normal.mean;
}

double MixtureSpec::mean_abnormal() const {
    return truncate_at_zero ? trunc_mean(abnormal) : abnormal.mean;
}

RobustnessPoint empirical_robustness(const ScoreBatch& batch, double q) {
    batch.validate();
    if (!batch.labels) throw InvalidInput("empirical robustness needs labels");
    if (!(q >= 0.0 && q <= 1.0)) throw InvalidInput("q must lie in [0, 1]");

    const auto& labels = *batch.labels;
    double tau_q = quantile_threshold(batch, q);

    double normal_below = 0.0, normal_total = 0.0;
    double abnormal_below = 0.0, abnormal_total = 0.0;
    for (std::size_t i = 0; i < batch.scores.size(); ++i) {
        double s = batch.scores[i];
        bool below = s <= tau_q; // boundary ties are included
        if (labels[i] == 0) {
            normal_total += s;
            if (below) normal_below += s;
        } else {
            abnormal_total += s;
            if (below) abnormal_below += s;
        }
    }
    if (normal_total == 0.0 || abnormal_total == 0.0)
        throw InvalidInput("both classes must be present with positive score mass");

    return {q, tau_q, normal_below / normal_total - abnormal_below / abnormal_total};
}

std::vector<RobustnessPoint> mixture_robustness_curve(const MixtureSpec& mix, int grid) {
    mix.validate();
    if (grid < 16) throw InvalidInput("grid must be >= 16");

    const double lo = support_lo(mix);
    const double e_n = mix.mean_normal();
    const double e_a = mix.mean_abnormal();

    std::vector<RobustnessPoint> out;
    out.reserve(static_cast<std::size_t>(grid));
    for (int j = 0; j < grid; ++j) {
        double q = static_cast<double>(j) / static_cast<double>(grid - 1);
        double tau = invert_cdf(mix, q);
        double mom_n = adaptive_simpson([&](double x) { return x * mix.pdf_normal(x); }, lo, tau, kQuadTol);
        double mom_a = adaptive_simpson([&](double x) { return x * mix.pdf_abnormal(x); }, lo, tau, kQuadTol);
        out.push_back({q, tau, mom_n / e_n - mom_a / e_a});
    }
    return out;
}

OptimalQuantile optimal_quantile(const MixtureSpec& mix) {
    mix.validate();
    const double e_n = mix.mean_normal();
    const double e_a = mix.mean_abnormal();
    if (!(e_n > 0.0 && e_a > 0.0))
        throw InvalidInput("mixture means must be positive for the optimality condition");

    // Work with log s_n - log s_a - log(E_n/E_a); monotone decreasing in tau
    // between the means for the Gaussian case.
    const double target = std::log(e_n / e_a);
    auto f = [&](double tau) {
        return std::log(mix.pdf_normal(tau)) - std::log(mix.pdf_abnormal(tau)) - target;
    };

    double lo = mix.normal.mean, hi = mix.abnormal.mean;
    double flo = f(lo), fhi = f(hi);
    if (flo == 0.0) return {lo, mix.cdf(lo)};
    if (fhi == 0.0) return {hi, mix.cdf(hi)};
    if (flo * fhi > 0.0) throw NoRoot("density-ratio condition has no root in [mu_n, mu_a]");

    for (int i = 0; i < 200 && hi - lo > 1e-12 * std::max(1.0, std::fabs(hi)); ++i) {
        double mid = 0.5 * (lo + hi);
        double fm = f(mid);
        if (fm == 0.0) {
            lo = hi = mid;
            break;
        }
        (flo * fm < 0.0 ? hi : lo) = mid;
        (flo * fm < 0.0 ? fhi : flo) = fm;
    }
    double tau = 0.5 * (lo + hi);
    return {tau, mix.cdf(tau)};
}

} // namespace aar
