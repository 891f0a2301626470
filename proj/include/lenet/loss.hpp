#ifndef LENET_LOSS_HPP
#define LENET_LOSS_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "lenet/layers.hpp"
#include "lenet/tensor.hpp"

namespace lenet {

enum class LossKind { CrossEntropy, Focal };

inline std::string_view to_string(LossKind kind) noexcept
{
    return kind == LossKind::Focal ? "focal" : "cross_entropy";
}

inline LossKind parse_loss_kind(std::string_view s)
{
    if (s == "cross_entropy") return LossKind::CrossEntropy;
    if (s == "focal") return LossKind::Focal;
    throw Error(ErrorKind::InvalidConfig, "unknown loss '" + std::string(s) + "' (expected cross_entropy|focal)");
}

struct FocalConfig {
    double gamma = 2.0;
    /// Per-class weight. Empty means 1.0 for every class.
    std::vector<double> alpha;

    void validate(std::size_t num_classes) const
    {
        if (!std::isfinite(gamma) || gamma < 0.0)
            throw Error(ErrorKind::InvalidConfig, "focal gamma must be finite and >= 0, got " + std::to_string(gamma));
        if (alpha.empty()) return;
        if (alpha.size() != num_classes)
            throw Error(ErrorKind::InvalidConfig, "focal alpha has " + std::to_string(alpha.size()) +
                                                      " entries for " + std::to_string(num_classes) + " classes");
        for (double a : alpha)
            if (!(a > 0.0) || !std::isfinite(a))
                throw Error(ErrorKind::InvalidConfig, "focal alpha entries must be positive");
    }

    [[nodiscard]] double alpha_for(std::size_t cls) const { return alpha.empty() ? 1.0 : alpha[cls]; }
};

/// alpha_c proportional to 1 / count_c, scaled so the weights average to 1.
inline std::vector<double> inverse_frequency_alpha(std::span<const std::size_t> class_counts)
{
    if (class_counts.empty()) throw Error(ErrorKind::InvalidConfig, "no classes to weight");
    std::vector<double> alpha(class_counts.size());
    double sum = 0.0;
    for (std::size_t c = 0; c < class_counts.size(); ++c) {
        if (class_counts[c] == 0)
            throw Error(ErrorKind::InvalidConfig, "class " + std::to_string(c) + " has no samples; cannot weight it");
        alpha[c] = 1.0 / static_cast<double>(class_counts[c]);
        sum += alpha[c];
    }
    const double norm = static_cast<double>(alpha.size()) / sum;
    for (double& a : alpha) a *= norm;
    return alpha;
}

struct LossOutput {
    double mean_loss = 0.0;
    /// Gradient of mean_loss w.r.t. the pre-softmax logits.
    Tensor dlogits;
    std::vector<double> per_sample;
};

namespace detail {

inline void check_targets(const Tensor& logits, std::span<const std::size_t> targets)
{
    require_rank(logits, 2, "loss logits");
    if (targets.size() != logits.dim(0))
        throw Error(ErrorKind::InvalidShape, "loss: " + std::to_string(targets.size()) + " targets for logits " +
                                                 shape_str(logits.shape()));
    for (std::size_t t : targets)
        if (t >= logits.dim(1))
            throw Error(ErrorKind::InvalidLabel,
                        "target " + std::to_string(t) + " out of range for " + std::to_string(logits.dim(1)) + " classes");
}

/// ln softmax(z)[row, k] via the max-shifted log-sum-exp.
inline double log_softmax_at(const Tensor& z, std::size_t row, std::size_t k)
{
    const std::size_t K = z.dim(1);
    double m = z.at(row, 0);
    for (std::size_t j = 1; j < K; ++j) m = std::max(m, z.at(row, j));
    double rest = 0.0;
    bool max_seen = false;
    for (std::size_t j = 0; j < K; ++j) {
        const double d = z.at(row, j) - m;
        if (d == 0.0 && !max_seen) {
            max_seen = true;
            continue;
        }
        rest += std::exp(d);
    }
    return (z.at(row, k) - m) - std::log1p(rest);
}

} // namespace detail

/// Mean over the batch of -ln p[n, target_n]; dlogits = (p - onehot) / N.
inline LossOutput cross_entropy(const Tensor& logits, std::span<const std::size_t> targets)
{
    detail::check_targets(logits, targets);
    const std::size_t N = logits.dim(0), K = logits.dim(1);
    const Tensor p = layers::softmax(logits);
    LossOutput out{0.0, zeros_like(logits), std::vector<double>(N)};
    const double inv_n = 1.0 / static_cast<double>(N);
    for (std::size_t n = 0; n < N; ++n) {
        const std::size_t t = targets[n];
        out.per_sample[n] = -detail::log_softmax_at(logits, n, t);
        out.mean_loss += out.per_sample[n];
        for (std::size_t k = 0; k < K; ++k) {
            const double delta = k == t ? 1.0 : 0.0;
            out.dlogits.at(n, k) = (p.at(n, k) - delta) * inv_n;
        }
    }
    out.mean_loss *= inv_n;
    return out;
}

inline constexpr double kFocalMinProb = 1e-12;

/**
 * Mean over the batch of -alpha[t] * (1 - p_t)^gamma * ln(p_t).
 *
 * With q = 1 - p_t, the logit gradient of one sample is
 *   dL/dz_k = alpha[t] * (gamma * q^(gamma-1) * p_t * ln(p_t) - q^gamma) * (delta_kt - p_k)
 * which reduces to the cross-entropy gradient at gamma = 0.
 */
inline LossOutput focal_loss(const Tensor& logits, std::span<const std::size_t> targets, const FocalConfig& cfg)
{
    detail::check_targets(logits, targets);
    const std::size_t N = logits.dim(0), K = logits.dim(1);
    cfg.validate(K);
    const Tensor p = layers::softmax(logits);
    LossOutput out{0.0, zeros_like(logits), std::vector<double>(N)};
    const double inv_n = 1.0 / static_cast<double>(N);
    const double log_floor = std::log(kFocalMinProb);
    for (std::size_t n = 0; n < N; ++n) {
        const std::size_t t = targets[n];
        const double alpha = cfg.alpha_for(t);
        const double log_pt = std::max(detail::log_softmax_at(logits, n, t), log_floor);
        const double pt = std::max(p.at(n, t), kFocalMinProb);
        // 1 - p_t as the sum of the other probabilities keeps precision when p_t is near 1.
        double q = 0.0;
        for (std::size_t k = 0; k < K; ++k)
            if (k != t) q += p.at(n, k);

        const double modulator = std::pow(q, cfg.gamma);
        out.per_sample[n] = -alpha * modulator * log_pt;
        out.mean_loss += out.per_sample[n];

        double focus = 0.0;
        if (cfg.gamma != 0.0 && q > 0.0) focus = cfg.gamma * std::pow(q, cfg.gamma - 1.0) * pt * log_pt;
        const double coeff = alpha * (focus - modulator) * inv_n;
        for (std::size_t k = 0; k < K; ++k) {
            const double delta = k == t ? 1.0 : 0.0;
            out.dlogits.at(n, k) = -coeff * (p.at(n, k) - delta);
        }
    }
    out.mean_loss *= inv_n;
    return out;
}

inline LossOutput compute_loss(LossKind kind, const Tensor& logits, std::span<const std::size_t> targets,
                               const FocalConfig& focal)
{
    return kind == LossKind::Focal ? focal_loss(logits, targets, focal) : cross_entropy(logits, targets);
}

} // namespace lenet

#endif
