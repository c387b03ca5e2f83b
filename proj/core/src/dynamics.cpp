#include "hsynth/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace hsynth {

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

std::string describe(const IndicatorSpec& spec, double value) {
    return "indicator '" + spec.key + "' value " + std::to_string(value);
}

} // namespace

double eval_kernel(double t_start, double t_end, double tau_rise, double tau_fade, double t,
                   KernelMode mode) {
    if (!(t_end > t_start) || !(tau_rise > 0.0) || !(tau_fade > 0.0)) {
        throw std::invalid_argument("kernel requires t_end > t_start and positive tau_rise, tau_fade");
    }
    if (t <= t_start || t > t_end + tau_fade) return 0.0;
    const double steepness = 6.0 / tau_rise;
    if (t <= t_end) return sigmoid(steepness * ((t - t_start) - tau_rise / 2.0));
    const double decay = 3.0 / tau_fade;
    const double scale =
        mode == KernelMode::continuous ? sigmoid(steepness * ((t_end - t_start) - tau_rise / 2.0)) : 1.0;
    return scale * std::exp(-decay * (t - t_end));
}

double eval_kernel(const Event& event, const EventImpact& impact, Day t, KernelMode mode) {
    return eval_kernel(event.start_day, event.end_day(), impact.tau_rise, impact.tau_fade, t, mode);
}

double soft_cap(double raw, double cap) { return cap * std::tanh(raw / cap); }

Superposition superpose(std::span<const Contribution> contributions, double cap) {
    if (!(cap > 0.0)) throw std::invalid_argument("soft cap must be positive");
    double u = 0.0;
    for (const auto& c : contributions) u += c.beta * c.activation;
    return {soft_cap(u, cap), u};
}

Superposition event_drive(const IndicatorSpec& spec, std::span<const Event* const> active, Day t,
                          KernelMode mode) {
    double u = 0.0;
    for (const Event* e : active) {
        for (const auto& imp : e->impacts) {
            if (imp.indicator_key == spec.key) u += imp.beta * eval_kernel(*e, imp, t, mode);
        }
    }
    return {soft_cap(u, spec.soft_cap), u};
}

NoiseModel::NoiseModel(int num_indicators, int rank, std::vector<double> loadings, std::vector<double> idio)
    : n_(num_indicators), r_(rank), loadings_(std::move(loadings)), idio_(std::move(idio)) {
    if (n_ < 0 || r_ < 0 || loadings_.size() != static_cast<std::size_t>(n_ * r_) ||
        idio_.size() != static_cast<std::size_t>(n_)) {
        throw std::invalid_argument("noise model dimensions are inconsistent");
    }
    if (r_ > 7) throw std::invalid_argument("noise model rank exceeds 7 factors");
    for (double d : idio_) {
        if (!(d > 0.0)) throw std::invalid_argument("idiosyncratic variances must be positive");
    }
}

NoiseModel NoiseModel::from_specs(std::span<const IndicatorSpec> specs) {
    std::vector<IndicatorGroup> groups;
    for (auto g : kAllGroups) {
        if (std::any_of(specs.begin(), specs.end(), [&](const auto& s) { return s.group == g; })) {
            groups.push_back(g);
        }
    }
    const int n = static_cast<int>(specs.size());
    const int r = 1 + static_cast<int>(groups.size());
    std::vector<double> loadings(static_cast<std::size_t>(n * r), 0.0);
    std::vector<double> idio;
    idio.reserve(specs.size());
    for (int i = 0; i < n; ++i) {
        const auto& s = specs[static_cast<std::size_t>(i)];
        loadings[static_cast<std::size_t>(i * r)] = s.noise_loadings.global;
        auto col = std::find(groups.begin(), groups.end(), s.group) - groups.begin();
        loadings[static_cast<std::size_t>(i * r + 1 + col)] = s.noise_loadings.group;
        idio.push_back(s.idio_variance);
    }
    return NoiseModel(n, r, std::move(loadings), std::move(idio));
}

std::vector<double> NoiseModel::covariance() const {
    std::vector<double> c(static_cast<std::size_t>(n_ * n_), 0.0);
    for (int i = 0; i < n_; ++i) {
        for (int j = 0; j < n_; ++j) {
            double s = 0.0;
            for (int f = 0; f < r_; ++f) s += loading(i, f) * loading(j, f);
            c[static_cast<std::size_t>(i * n_ + j)] = s + (i == j ? idio(i) : 0.0);
        }
    }
    return c;
}

std::vector<double> draw_noise(const NoiseModel& model, Stream& stream) {
    std::vector<double> z(static_cast<std::size_t>(model.rank()));
    for (auto& v : z) v = stream.normal();
    std::vector<double> eps(static_cast<std::size_t>(model.size()));
    for (int i = 0; i < model.size(); ++i) {
        double common = 0.0;
        for (int f = 0; f < model.rank(); ++f) common += model.loading(i, f) * z[static_cast<std::size_t>(f)];
        eps[static_cast<std::size_t>(i)] = common + std::sqrt(model.idio(i)) * stream.normal();
    }
    return eps;
}

double to_transform(double value, const IndicatorSpec& spec) {
    switch (spec.transform) {
    case Transform::identity:
        if (!std::isfinite(value)) throw std::domain_error(describe(spec, value) + " is not finite");
        return value;
    case Transform::log:
        if (!(value > 0.0) || !std::isfinite(value)) {
            throw std::domain_error(describe(spec, value) + " outside log domain");
        }
        return std::log(value);
    case Transform::logit: {
        if (!(value > spec.lower && value < spec.upper)) {
            throw std::domain_error(describe(spec, value) + " outside logit domain");
        }
        double p = (value - spec.lower) / (spec.upper - spec.lower);
        return std::log(p / (1.0 - p));
    }
    }
    return value;
}

double from_transform(double value, const IndicatorSpec& spec) {
    switch (spec.transform) {
    case Transform::identity: return value;
    case Transform::log: return std::exp(value);
    case Transform::logit: return spec.lower + (spec.upper - spec.lower) * sigmoid(value);
    }
    return value;
}

double to_transform_state(double value, const IndicatorSpec& spec) {
    switch (spec.transform) {
    case Transform::identity: return value;
    case Transform::log: {
        double floor = std::max(spec.lower, 1e-12 * std::max(1.0, spec.upper));
        return std::log(std::max(value, floor > 0.0 ? floor : 1e-12));
    }
    case Transform::logit: {
        double p = (value - spec.lower) / (spec.upper - spec.lower);
        p = std::clamp(p, 1e-12, 1.0 - 1e-12);
        return std::log(p / (1.0 - p));
    }
    }
    return value;
}

double seasonal_offset(const IndicatorSpec& spec, const CalendarDay& day) {
    double annual = spec.annual_amplitude == 0.0
                        ? 0.0
                        : spec.annual_amplitude *
                              std::sin(2.0 * std::numbers::pi * (day.year_fraction + spec.annual_phase));
    return spec.weekday_offsets[static_cast<std::size_t>(day.weekday)] + annual;
}

double baseline_level(const IndicatorSpec& spec, const CalendarDay& day) {
    return to_transform(spec.baseline + seasonal_offset(spec, day), spec);
}

Proposal propose_value(const IndicatorSpec& spec, double prev, const CalendarDay& today,
                       const CalendarDay& yesterday, double event_delta, double epsilon) {
    Proposal p;
    p.baseline = baseline_level(spec, today);
    p.ar_residual = spec.inertia * (prev - baseline_level(spec, yesterday));
    p.event_delta = event_delta;
    p.noise = epsilon;
    p.value = p.baseline + p.ar_residual + p.event_delta + p.noise;
    return p;
}

Projection project(double proposal, double prev, const IndicatorSpec& spec) {
    Projection out;
    out.proposal_natural = from_transform(proposal, spec);
    const double slope_lo = prev - spec.slope_limit;
    const double slope_hi = prev + spec.slope_limit;
    const double lo = std::max(spec.lower, slope_lo);
    const double hi = std::min(spec.upper, slope_hi);
    const double y = out.proposal_natural;
    // flags use the same bounds as the clamp so clipped == (range || slope) exactly
    out.range_violated = y < spec.lower || y > spec.upper;
    out.slope_violated = y < slope_lo || y > slope_hi;
    out.value = std::clamp(y, lo, hi);
    out.clipped = out.value != y;
    return out;
}

} // namespace hsynth
