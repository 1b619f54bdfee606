#ifndef ECUL_LOSS_HPP
#define ECUL_LOSS_HPP

#include "ecul/aggregation.hpp"
#include "ecul/memory.hpp"

#include <array>
#include <cmath>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace ecul {

template <typename Scalar>
struct InfoNce {
    Scalar loss;
    Eigen::Matrix<Scalar, Eigen::Dynamic, 1> grad;
};

/// InfoNCE of query `q` against every row of `entries`, averaged over the
/// positive rows: mean_p [ logsumexp(E q / tau) - (E q)_p / tau ].
/// The gradient w.r.t. q is (1/tau) * (sum_k p_k e_k - mean_p e_p).
template <typename DerivedQ, typename DerivedE>
InfoNce<typename DerivedQ::Scalar> infonce_kernel(const Eigen::MatrixBase<DerivedQ>& q,
                                                  const Eigen::MatrixBase<DerivedE>& entries,
                                                  std::span<const Index> positives, typename DerivedQ::Scalar tau)
{
    using Scalar = typename DerivedQ::Scalar;
    using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
    if (!(tau > Scalar(0))) {
        throw std::invalid_argument("temperature must be positive");
    }
    if (positives.empty()) {
        throw std::invalid_argument("InfoNCE needs at least one positive");
    }
    const Vec logits = (entries * q) / tau;
    const Scalar top = logits.maxCoeff();
    const Vec weights = (logits.array() - top).exp().matrix();
    const Scalar z = weights.sum();
    const Scalar lse = top + std::log(z);

    Scalar pos_logit = 0;
    Vec pos_mean = Vec::Zero(entries.cols());
    for (Index p : positives) {
        pos_logit += logits[p];
        pos_mean += entries.row(p).transpose();
    }
    const auto count = static_cast<Scalar>(positives.size());
    pos_logit /= count;
    pos_mean /= count;

    InfoNce<Scalar> out;
    out.loss = lse - pos_logit;
    out.grad = (entries.transpose() * (weights / z) - pos_mean) / tau;
    return out;
}

/// Single-query loss against a bank. For cluster banks the positive is the
/// label's entry; for instance banks every entry of the label is a positive.
InfoNce<double> infonce(const Vector& q, const MemoryBank& bank, std::int32_t positive_key, double tau);

enum class Phase { intra, inter };

const char* to_string(Phase p);

/// Loss terms, indexed scope-major: {visible, infrared, mixed} x {cluster, instance}.
enum class Term : int { vis_cluster = 0, vis_instance, ir_cluster, ir_instance, mix_cluster, mix_instance };
inline constexpr int kNumTerms = 6;

const char* to_string(Term t);

struct LossConfig {
    double tau = 0.05;
    std::array<double, kNumTerms> weights{1.0, 1.0, 1.0, 1.0, 1.0, 1.0};

    double& weight(Term t) { return weights[static_cast<std::size_t>(t)]; }
    double weight(Term t) const { return weights[static_cast<std::size_t>(t)]; }
    void validate() const;
};

struct BatchQuery {
    Vector q;
    Modality modality = Modality::visible;
    std::int32_t intra_label = kNoise; ///< label in the query's own-modality banks
    std::int32_t mixed_label = kNoise; ///< label in the mixed banks
    Index row = -1;                    ///< training row the query came from
};

/// Banks visible to the loss; null members are inactive terms.
struct BankSet {
    const MemoryBank* vis_cluster = nullptr;
    const MemoryBank* vis_instance = nullptr;
    const MemoryBank* ir_cluster = nullptr;
    const MemoryBank* ir_instance = nullptr;
    const MemoryBank* mix_cluster = nullptr;
    const MemoryBank* mix_instance = nullptr;

    const MemoryBank* get(Term t) const;
};

/// Cross-modal positives of the mixed instance term: the other modality's
/// instance entries whose intra-modality cluster is paired with the query's.
/// Same-modality positives still come from the query's mixed cluster.
struct InstanceSelection {
    const CrossModalPairing* pairing = nullptr;
    const std::vector<std::int32_t>* intra_labels = nullptr; ///< by training row
};

struct LossReport {
    double total = 0.0;
    std::array<double, kNumTerms> terms{};  ///< mean loss per term
    std::array<int, kNumTerms> counts{};    ///< queries contributing per term
    std::vector<Vector> grads;              ///< d total / d q, one per query
};

/// Weighted sum of per-term means. The intra phase uses each query's own
/// modality banks; the inter phase adds the mixed banks. Queries with a noise
/// label for a bank family skip those terms.
LossReport batch_loss(std::span<const BatchQuery> batch, const BankSet& banks, const LossConfig& cfg, Phase phase,
                      const InstanceSelection* selection = nullptr);

} // namespace ecul

#endif // ECUL_LOSS_HPP
