#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "she/errors.hpp"

namespace she {

enum class SigmaFamily { power_law, log_corrected, linear, tabulated };

/// Rescaled nonlinearity parameters: sigma_k(u) = eta^-k * sigma(eta^k * u).
struct RescaleParams {
    double eta = 0.5;
    int k = 0;
};

/// The noise coefficient sigma and everything derived from it.
///
/// All families vanish on u <= 0, are nondecreasing, and satisfy the
/// two-regime structure: sigma(u)/u nonincreasing on (0, d], Lipschitz with
/// constant lipschitz_above_d() on [d, inf). Closed-form families are only
/// meaningful near zero; above their natural domain they continue linearly
/// with matched slope.
///
/// Optional modifiers: truncation (linearize below 1/m) and rescale
/// (eta^-k sigma(eta^k u)). Truncation applies to the already-rescaled
/// coefficient, so a truncated-rescaled spec is (sigma_k)^(m).
class NonlinearitySpec {
public:
    static NonlinearitySpec power_law(double gamma) {
        if (!(gamma > 0.0))
            throw ConfigError("power_law: gamma must be positive");
        if (gamma > 1.0)
            throw ConfigError("power_law: gamma > 1 violates the ratio monotonicity "
                              "requirement (sigma(u)/u must be nonincreasing near 0)");
        NonlinearitySpec s;
        s.family_ = SigmaFamily::power_law;
        s.gamma_ = gamma;
        s.d_ = 1.0;
        s.lip_ = 1.0; // sigma(d)/d = 1 and the slope above 1 is gamma <= 1
        return s;
    }

    static NonlinearitySpec log_corrected(double beta, double gamma2) {
        if (beta < 0.0 || gamma2 < 0.0)
            throw ConfigError("log_corrected: beta and gamma2 must be >= 0");
        NonlinearitySpec s;
        s.family_ = SigmaFamily::log_corrected;
        s.beta_ = beta;
        s.gamma2_ = gamma2;
        s.init_log_corrected_cutoff();
        return s;
    }

    static NonlinearitySpec linear(double c) {
        if (!(c > 0.0)) throw ConfigError("linear: c must be positive");
        NonlinearitySpec s;
        s.family_ = SigmaFamily::linear;
        s.c_ = c;
        s.d_ = 1.0;
        s.lip_ = c;
        return s;
    }

    /// Sorted (u, sigma(u)) samples, linearly interpolated. Below the first
    /// point the ratio is held constant (line through the origin); above the
    /// last point the last segment's slope continues.
    static NonlinearitySpec tabulated(std::vector<std::pair<double, double>> pts) {
        if (pts.size() < 2) throw ConfigError("tabulated: need at least 2 points");
        double prev_ratio = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < pts.size(); ++i) {
            if (!(pts[i].first > 0.0))
                throw ConfigError("tabulated: u-grid must be strictly positive");
            if (i > 0 && !(pts[i].first > pts[i - 1].first))
                throw ConfigError("tabulated: u-grid must be strictly increasing");
            if (pts[i].second < 0.0)
                throw ConfigError("tabulated: sigma values must be nonnegative");
            if (i > 0 && pts[i].second < pts[i - 1].second)
                throw ConfigError("tabulated: sigma values must be nondecreasing");
            const double ratio = pts[i].second / pts[i].first;
            if (ratio > prev_ratio * (1.0 + 1e-13))
                throw ConfigError("tabulated: sigma(u)/u must be nonincreasing");
            prev_ratio = ratio;
        }
        NonlinearitySpec s;
        s.family_ = SigmaFamily::tabulated;
        s.table_ = std::move(pts);
        const auto& t = s.table_;
        s.d_ = t.back().first;
        const double last_slope =
            (t.back().second - t[t.size() - 2].second) /
            (t.back().first - t[t.size() - 2].first);
        s.lip_ = std::max(last_slope, t.back().second / t.back().first);
        return s;
    }

    NonlinearitySpec with_truncation(int m) const {
        if (m < 1) throw ConfigError("truncation level m must be >= 1");
        NonlinearitySpec s = *this;
        s.trunc_m_ = m;
        s.trunc_slope_ = static_cast<double>(m) * s.eval_rescaled(1.0 / m);
        return s;
    }

    NonlinearitySpec without_truncation() const {
        NonlinearitySpec s = *this;
        s.trunc_m_.reset();
        s.trunc_slope_ = 0.0;
        return s;
    }

    NonlinearitySpec with_rescale(double eta, int k) const {
        if (!(eta > 0.0 && eta < 1.0)) throw ConfigError("rescale: eta must be in (0,1)");
        if (k < 0) throw ConfigError("rescale: k must be >= 0");
        if (rescale_) throw ConfigError("rescale: already set");
        NonlinearitySpec s = *this;
        s.rescale_ = RescaleParams{eta, k};
        // sigma_k keeps L_d and scales the threshold: d_k = eta^-k d
        s.d_ = d_ / ipow(eta, k);
        if (s.trunc_m_) s = s.without_truncation().with_truncation(*trunc_m_);
        return s;
    }

    /// Override the threshold pair (d, L_d). Validated by sampling.
    NonlinearitySpec with_threshold(double d, double lip) const {
        if (!(d > 0.0) || !(lip >= 0.0))
            throw ConfigError("threshold: d must be > 0 and L_d >= 0");
        NonlinearitySpec s = *this;
        s.d_ = d;
        s.lip_ = lip;
        s.validate_threshold();
        return s;
    }

    SigmaFamily family() const { return family_; }
    double gamma() const { return gamma_; }
    double beta() const { return beta_; }
    double gamma2() const { return gamma2_; }
    double linear_c() const { return c_; }
    const std::vector<std::pair<double, double>>& table() const { return table_; }
    double d() const { return d_; }
    double lipschitz_above_d() const { return lip_; }
    std::optional<int> truncation() const { return trunc_m_; }
    std::optional<RescaleParams> rescale() const { return rescale_; }
    /// Slope m*sigma(1/m) of the linear segment when truncated.
    double truncation_slope() const { return trunc_slope_; }
    /// Domain cutoff of the log-corrected closed form (u* in the docs).
    double log_corrected_cutoff() const { return cutoff_u_; }

    /// sigma(u) with rescale and truncation applied; exactly 0 for u <= 0.
    double eval(double u) const {
        if (u <= 0.0) return 0.0;
        if (trunc_m_) {
            const double inv_m = 1.0 / static_cast<double>(*trunc_m_);
            if (u < inv_m) return trunc_slope_ * u;
        }
        return eval_rescaled(u);
    }

    double operator()(double u) const { return eval(u); }

    /// log( e^-x / sigma(e^-x) ) for real x >= 1, using the family closed
    /// form where one exists so huge x never underflows. +inf where the
    /// closed form degenerates to sigma = 0.
    double log_ratio(double x) const {
        if (trunc_m_) {
            // below 1/m the coefficient is linear: constant ratio
            if (x > std::log(static_cast<double>(*trunc_m_)))
                return trunc_slope_ > 0.0 ? -std::log(trunc_slope_)
                                          : std::numeric_limits<double>::infinity();
        }
        double xb = x;
        if (rescale_) xb += rescale_->k * std::log(1.0 / rescale_->eta);
        return base_log_ratio(xb);
    }

private:
    NonlinearitySpec() = default;

    static double ipow(double b, int e) {
        double r = 1.0;
        for (int i = 0; i < e; ++i) r *= b;
        return r;
    }

    // --- base family, no rescale/truncation ---

    double eval_base(double u) const {
        switch (family_) {
        case SigmaFamily::power_law:
            return u <= 1.0 ? std::pow(u, gamma_) : 1.0 + gamma_ * (u - 1.0);
        case SigmaFamily::linear:
            return c_ * u;
        case SigmaFamily::log_corrected: {
            if (u <= cutoff_u_) {
                const double l = -std::log(u);
                const double v = u * std::pow(l, beta_);
                return gamma2_ == 0.0 ? v : v * std::pow(std::log(l), gamma2_);
            }
            return cutoff_sigma_ + cutoff_slope_ * (u - cutoff_u_);
        }
        case SigmaFamily::tabulated: {
            const auto& t = table_;
            if (u <= t.front().first)
                return t.front().second / t.front().first * u;
            if (u >= t.back().first) {
                const double s = (t.back().second - t[t.size() - 2].second) /
                                 (t.back().first - t[t.size() - 2].first);
                return t.back().second + s * (u - t.back().first);
            }
            auto it = std::lower_bound(t.begin(), t.end(), u,
                [](const auto& p, double v) { return p.first < v; });
            const auto& hi = *it;
            const auto& lo = *(it - 1);
            const double w = (u - lo.first) / (hi.first - lo.first);
            return lo.second + w * (hi.second - lo.second);
        }
        }
        return 0.0;
    }

    double eval_rescaled(double u) const {
        if (!rescale_) return eval_base(u);
        const double ek = ipow(rescale_->eta, rescale_->k);
        return eval_base(ek * u) / ek;
    }

    double base_log_ratio(double x) const {
        switch (family_) {
        case SigmaFamily::power_law:
            return -x * (1.0 - gamma_);
        case SigmaFamily::linear:
            return -std::log(c_);
        case SigmaFamily::log_corrected: {
            // sigma(e^-x) = e^-x * x^beta * (log x)^gamma2 (family closed form)
            const double lx = std::log(x);
            if (gamma2_ == 0.0) return -beta_ * lx;
            if (lx <= 0.0) return std::numeric_limits<double>::infinity();
            return -beta_ * lx - gamma2_ * std::log(lx);
        }
        case SigmaFamily::tabulated: {
            const auto& t = table_;
            // beyond the table the ratio is the first point's ratio
            const double log_u1 = std::log(t.front().first);
            if (-x <= log_u1) {
                if (t.front().second <= 0.0)
                    return std::numeric_limits<double>::infinity();
                return std::log(t.front().first / t.front().second);
            }
            const double u = std::exp(-x);
            const double s = eval_base(u);
            if (s <= 0.0) return std::numeric_limits<double>::infinity();
            return -x - std::log(s);
        }
        }
        return 0.0;
    }

    // Largest u <= e^-e on which the closed form is nondecreasing (the ratio
    // is automatically nonincreasing there). sigma' >= 0 at u = e^-l iff
    // g(l) = l*log(l) - beta*log(l) - gamma2 >= 0; take l* = largest root.
    void init_log_corrected_cutoff() {
        const double e = std::exp(1.0);
        auto g = [&](double l) { return (l - beta_) * std::log(l) - gamma2_; };
        double lstar = e;
        const double hi = beta_ + gamma2_ + 50.0 + e;
        if (g(e) < 0.0 || beta_ > e) {
            // scan for the last sign change, then bisect
            double lo = e;
            const int n = 4096;
            double a = e, b = hi;
            for (int i = n; i >= 1; --i) {
                const double l0 = e + (hi - e) * (i - 1) / n;
                const double l1 = e + (hi - e) * i / n;
                if (g(l0) < 0.0 && g(l1) >= 0.0) { a = l0; b = l1; break; }
            }
            for (int it = 0; it < 200; ++it) {
                const double mid = 0.5 * (a + b);
                (g(mid) < 0.0 ? a : b) = mid;
            }
            lstar = std::max(b, lo);
        }
        cutoff_u_ = std::exp(-lstar);
        const double l = lstar, m = std::log(lstar);
        cutoff_sigma_ = cutoff_u_ * std::pow(l, beta_) *
                        (gamma2_ == 0.0 ? 1.0 : std::pow(m, gamma2_));
        // sigma'(u*) = l^(beta-1) m^(gamma2-1) (l m - beta m - gamma2)
        cutoff_slope_ = std::pow(l, beta_ - 1.0) *
                        (gamma2_ == 0.0 ? (l - beta_)
                                        : std::pow(m, gamma2_ - 1.0) * (l * m - beta_ * m - gamma2_));
        cutoff_slope_ = std::max(cutoff_slope_, 0.0);
        d_ = cutoff_u_;
        lip_ = cutoff_sigma_ / cutoff_u_;
    }

    void validate_threshold() const {
        // ratio monotone on (0, d]
        const int n = 512;
        double prev = std::numeric_limits<double>::infinity();
        for (int i = 0; i <= n; ++i) {
            const double u = d_ * std::exp(-12.0 * (1.0 - static_cast<double>(i) / n));
            const double r = eval_rescaled(u) / u;
            if (r > prev * (1.0 + 1e-12))
                throw ConfigError("threshold: sigma(u)/u not nonincreasing below d");
            prev = r;
        }
        // Lipschitz and linear growth above d
        for (int i = 0; i < n; ++i) {
            const double u = d_ * (1.0 + 8.0 * i / n);
            const double v = d_ * (1.0 + 8.0 * (i + 1) / n);
            const double su = eval_rescaled(u), sv = eval_rescaled(v);
            if (std::abs(su - sv) > lip_ * std::abs(u - v) * (1.0 + 1e-12) + 1e-300)
                throw ConfigError("threshold: sigma not L_d-Lipschitz above d");
            if (su > lip_ * u * (1.0 + 1e-12))
                throw ConfigError("threshold: sigma(u) > L_d * u above d");
        }
    }

    SigmaFamily family_ = SigmaFamily::linear;
    double gamma_ = 0.5;   // power_law
    double beta_ = 0.0;    // log_corrected
    double gamma2_ = 0.0;  // log_corrected
    double c_ = 1.0;       // linear
    std::vector<std::pair<double, double>> table_;
    double cutoff_u_ = 0.0, cutoff_sigma_ = 0.0, cutoff_slope_ = 0.0;
    double d_ = 1.0;
    double lip_ = 1.0;
    std::optional<int> trunc_m_;
    double trunc_slope_ = 0.0;
    std::optional<RescaleParams> rescale_;
};

// ---------------------------------------------------------------------------
// pseudo-Lipschitz envelopes
// ---------------------------------------------------------------------------

struct EnvelopeReport {
    double max_violation = 0.0;   // worst excess over either bound, 0 if conforming
    double max_excess_delta = 0.0;  // vs (L_d v sigma(delta)/delta)|u-v| + sigma(delta)
    double max_excess_rho = 0.0;    // vs L_d|u-v| + sigma(|u-v|)
    std::int64_t samples = 0;
};

/// Randomized check of the two pseudo-Lipschitz envelopes
///   |sigma(u)-sigma(v)| <= (L_d v sigma(delta)/delta)|u-v| + sigma(delta)
///   |sigma(u)-sigma(v)| <= L_d|u-v| + sigma(|u-v|)
/// over `samples` pairs. Returns the maximal excess (0 for a conforming sigma).
inline EnvelopeReport lipschitz_envelope_check(const NonlinearitySpec& spec, double delta,
                                               std::int64_t samples, std::uint64_t rng_seed) {
    if (!(delta > 0.0 && delta < std::min(spec.d(), 1.0)))
        throw ConfigError("lipschitz_envelope_check: delta must lie in (0, min(d,1))");
    const double lip = spec.lipschitz_above_d();
    const double sd = spec.eval(delta);
    const double c1 = std::max(lip, sd / delta);

    std::mt19937_64 rng(rng_seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const double span = 4.0 * std::max(spec.d(), 1.0);

    auto draw = [&]() {
        const double pick = unit(rng);
        if (pick < 0.1) return -span * unit(rng);                 // negative branch
        if (pick < 0.55) return span * unit(rng);                 // bulk scale
        return span * std::exp(-30.0 * unit(rng));                // tiny scales
    };

    EnvelopeReport rep;
    rep.samples = samples;
    for (std::int64_t i = 0; i < samples; ++i) {
        const double u = draw(), v = draw();
        const double diff = std::abs(spec.eval(u) - spec.eval(v));
        const double b1 = c1 * std::abs(u - v) + sd;
        const double b2 = lip * std::abs(u - v) + spec.eval(std::abs(u - v));
        const double slack1 = 16.0 * std::numeric_limits<double>::epsilon() * (diff + b1);
        const double slack2 = 16.0 * std::numeric_limits<double>::epsilon() * (diff + b2);
        rep.max_excess_delta = std::max(rep.max_excess_delta, diff - b1 - slack1);
        rep.max_excess_rho = std::max(rep.max_excess_rho, diff - b2 - slack2);
    }
    rep.max_excess_delta = std::max(rep.max_excess_delta, 0.0);
    rep.max_excess_rho = std::max(rep.max_excess_rho, 0.0);
    rep.max_violation = std::max(rep.max_excess_delta, rep.max_excess_rho);
    return rep;
}

/// Randomized check of the truncated coefficient's global Lipschitz bound
/// |sigma^(m)(u) - sigma^(m)(v)| <= (m sigma(1/m) v L_d) |u - v|.
inline EnvelopeReport truncated_lipschitz_check(const NonlinearitySpec& spec,
                                                std::int64_t samples, std::uint64_t rng_seed) {
    if (!spec.truncation())
        throw ConfigError("truncated_lipschitz_check: spec has no truncation level");
    const double c = std::max(spec.truncation_slope(), spec.lipschitz_above_d());
    std::mt19937_64 rng(rng_seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const double span = 4.0 * std::max(spec.d(), 1.0);
    EnvelopeReport rep;
    rep.samples = samples;
    for (std::int64_t i = 0; i < samples; ++i) {
        const double u = (unit(rng) < 0.1 ? -1.0 : 1.0) * span * std::exp(-20.0 * unit(rng));
        const double v = (unit(rng) < 0.1 ? -1.0 : 1.0) * span * unit(rng);
        const double diff = std::abs(spec.eval(u) - spec.eval(v));
        const double bound = c * std::abs(u - v);
        const double slack = 16.0 * std::numeric_limits<double>::epsilon() * (diff + bound);
        rep.max_violation = std::max(rep.max_violation, diff - bound - slack);
    }
    rep.max_violation = std::max(rep.max_violation, 0.0);
    return rep;
}

// ---------------------------------------------------------------------------
// small-scale conditions: e^-k / sigma(e^-k) against k^-alpha
// ---------------------------------------------------------------------------

struct ConditionReport {
    std::vector<bool> holds;          // verdict for k = 1..k_max
    std::optional<std::int64_t> first_failure;
    std::optional<std::int64_t> last_failure;
    bool all_hold() const { return !first_failure.has_value(); }
    /// True when the condition holds on a nonempty tail ending at k_max.
    bool holds_eventually() const {
        return holds.empty() ? true : holds.back();
    }
};

namespace detail {
template <typename Pred>
ConditionReport evaluate_condition(const NonlinearitySpec& spec, std::int64_t k_max, Pred&& pred) {
    if (k_max < 1) throw ConfigError("condition: k_max must be >= 1");
    ConditionReport rep;
    rep.holds.resize(static_cast<std::size_t>(k_max));
    for (std::int64_t k = 1; k <= k_max; ++k) {
        const double lr = spec.log_ratio(static_cast<double>(k));
        const bool ok = pred(lr, static_cast<double>(k));
        rep.holds[static_cast<std::size_t>(k - 1)] = ok;
        if (!ok) {
            if (!rep.first_failure) rep.first_failure = k;
            rep.last_failure = k;
        }
    }
    return rep;
}
} // namespace detail

/// e^-k/sigma(e^-k) >= k^-alpha for k = 1..k_max, alpha in (0, 1/4).
inline ConditionReport positivity_condition(const NonlinearitySpec& spec, double alpha,
                                            std::int64_t k_max = 1000000) {
    if (!(alpha > 0.0 && alpha < 0.25))
        throw ConfigError("positivity_condition: alpha must lie in (0, 1/4)");
    return detail::evaluate_condition(spec, k_max, [alpha](double lr, double k) {
        return lr >= -alpha * std::log(k);
    });
}

/// e^-k/sigma(e^-k) <= k^-alpha for k = 1..k_max, alpha > 5/2.
inline ConditionReport csp_condition(const NonlinearitySpec& spec, double alpha,
                                     std::int64_t k_max = 1000000) {
    if (!(alpha > 2.5))
        throw ConfigError("csp_condition: alpha must be > 5/2");
    return detail::evaluate_condition(spec, k_max, [alpha](double lr, double k) {
        return lr <= -alpha * std::log(k);
    });
}

// ---------------------------------------------------------------------------
// partial sums of powers of the ratio
// ---------------------------------------------------------------------------

struct SumReport {
    std::vector<double> partial_sums;  // S_1..S_k_max over finite terms
    double last_term = 0.0;
    double tail_exponent = 0.0;  // fitted decay exponent of the terms
    double tail_estimate = 0.0;  // p-series tail bound when convergent
    bool convergent = false;
    std::int64_t skipped_nonfinite = 0;
    double total() const { return partial_sums.empty() ? 0.0 : partial_sums.back(); }
};

namespace detail {
inline SumReport ratio_power_sum(const NonlinearitySpec& spec, std::int64_t k_max, double power) {
    if (k_max < 1) throw ConfigError("sum: k_max must be >= 1");
    SumReport rep;
    rep.partial_sums.reserve(static_cast<std::size_t>(k_max));
    double sum = 0.0;
    double term_half = 0.0;
    const std::int64_t k_half = std::max<std::int64_t>(1, k_max / 2);
    for (std::int64_t k = 1; k <= k_max; ++k) {
        const double term = std::exp(power * spec.log_ratio(static_cast<double>(k)));
        if (std::isfinite(term)) {
            sum += term;
            rep.last_term = term;
        } else {
            ++rep.skipped_nonfinite;
        }
        if (k == k_half) term_half = rep.last_term;
        rep.partial_sums.push_back(sum);
    }
    if (rep.last_term == 0.0) {
        rep.convergent = true;
        rep.tail_exponent = std::numeric_limits<double>::infinity();
        return rep;
    }
    if (term_half > 0.0 && k_max >= 8) {
        rep.tail_exponent = -(std::log(rep.last_term) - std::log(term_half)) /
                            (std::log(static_cast<double>(k_max)) - std::log(static_cast<double>(k_half)));
        // geometric decay shows up as a huge fitted exponent
        if (rep.tail_exponent > 1.05) {
            rep.convergent = true;
            rep.tail_estimate = rep.last_term * static_cast<double>(k_max) / (rep.tail_exponent - 1.0);
        }
    }
    return rep;
}
} // namespace detail

/// Partial sums of sqrt(e^-k/sigma(e^-k)); finite iff the deterministic CSP
/// integral condition holds.
inline SumReport kalashnikov_sum(const NonlinearitySpec& spec, std::int64_t k_max = 10000) {
    return detail::ratio_power_sum(spec, k_max, 0.5);
}

/// Partial sums of [e^-k/sigma(e^-k)]^2, the proposed critical series for
/// the stochastic equation.
inline SumReport critical_sum(const NonlinearitySpec& spec, std::int64_t k_max = 10000) {
    return detail::ratio_power_sum(spec, k_max, 2.0);
}

} // namespace she
