#pragma once

#include <span>
#include <vector>

#include "hsynth/model.hpp"
#include "hsynth/random.hpp"

namespace hsynth {

/// Impulse-response activation of an event at (possibly fractional) day t.
///
/// Zero for t <= t_start. On (t_start, t_end] a sigmoid with steepness
/// 6 / tau_rise centred at t_start + tau_rise / 2. On (t_end, t_end + tau_fade]
/// an exponential decay with rate 3 / tau_fade; in continuous mode the decay
/// starts from the activation reached at t_end, in literal mode from 1.
/// Zero afterwards. Throws std::invalid_argument unless t_end > t_start and
/// both taus are positive.
double eval_kernel(double t_start, double t_end, double tau_rise, double tau_fade, double t,
                   KernelMode mode = KernelMode::continuous);

/// Kernel of one impact of @p event.
double eval_kernel(const Event& event, const EventImpact& impact, Day t, KernelMode mode);

struct Contribution {
    double beta = 0.0;
    double activation = 0.0;
};

struct Superposition {
    double delta = 0.0; ///< M tanh(u / M)
    double raw = 0.0;   ///< u = sum beta * g
};

/// Soft-capped sum of event contributions. Requires soft_cap > 0.
Superposition superpose(std::span<const Contribution> contributions, double soft_cap);
double soft_cap(double raw, double cap);

/// Event drive on indicator @p spec at day @p t from @p active events (in order).
Superposition event_drive(const IndicatorSpec& spec, std::span<const Event* const> active, Day t,
                          KernelMode mode);

/// Factor model epsilon = L z + eta, z ~ N(0, I_r), eta ~ N(0, D).
class NoiseModel {
public:
    NoiseModel() = default;
    /// @p loadings is row-major (num_indicators x rank).
    NoiseModel(int num_indicators, int rank, std::vector<double> loadings, std::vector<double> idio);

    /// Global factor plus one factor per group present in @p specs (in
    /// kAllGroups order). Rows follow the order of @p specs.
    static NoiseModel from_specs(std::span<const IndicatorSpec> specs);

    [[nodiscard]] int size() const { return n_; }
    [[nodiscard]] int rank() const { return r_; }
    [[nodiscard]] double loading(int i, int j) const { return loadings_[static_cast<std::size_t>(i * r_ + j)]; }
    [[nodiscard]] double idio(int i) const { return idio_[static_cast<std::size_t>(i)]; }
    /// L L^T + D, row-major.
    [[nodiscard]] std::vector<double> covariance() const;

private:
    int n_ = 0;
    int r_ = 0;
    std::vector<double> loadings_;
    std::vector<double> idio_;
};

std::vector<double> draw_noise(const NoiseModel& model, Stream& stream);

/// Transform-domain image of a natural value. Throws std::domain_error naming
/// the indicator when the value is outside the transform's domain.
double to_transform(double value, const IndicatorSpec& spec);
double from_transform(double value, const IndicatorSpec& spec);

/// Like to_transform, but values on or beyond a transform boundary are first
/// pulled inside by a relative 1e-12 so the recursion state stays finite.
double to_transform_state(double value, const IndicatorSpec& spec);

/// Natural-unit seasonal offset s_k: weekday table plus annual sinusoid.
double seasonal_offset(const IndicatorSpec& spec, const CalendarDay& day);
/// mu'_k + s'_k(day): transform-domain image of mu_k + s_k(day).
double baseline_level(const IndicatorSpec& spec, const CalendarDay& day);

struct Proposal {
    double baseline = 0.0;
    double ar_residual = 0.0;
    double event_delta = 0.0;
    double noise = 0.0;
    double value = 0.0; ///< sum of the four parts, transform domain
};

/// Unconstrained AR proposal in the transform domain. @p prev is the previous
/// day's value in the transform domain.
Proposal propose_value(const IndicatorSpec& spec, double prev, const CalendarDay& today,
                       const CalendarDay& yesterday, double event_delta, double epsilon);

struct Projection {
    double value = 0.0;            ///< projected, natural units
    double proposal_natural = 0.0; ///< inverse-transformed proposal
    bool range_violated = false;
    bool slope_violated = false;
    bool clipped = false;
};

/// Inverse-transforms @p proposal and clamps it into
/// [max(L, prev - Delta), min(U, prev + Delta)]. Requires prev in [L, U].
Projection project(double proposal, double prev, const IndicatorSpec& spec);

} // namespace hsynth
