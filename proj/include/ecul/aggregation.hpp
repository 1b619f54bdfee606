#ifndef ECUL_AGGREGATION_HPP
#define ECUL_AGGREGATION_HPP

#include "ecul/memory.hpp"

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace ecul {

struct CrossModalPair {
    std::int32_t visible;
    std::int32_t infrared;
    int votes;

    bool operator==(const CrossModalPair&) const = default;
};

/// One-to-one pairing of visible and infrared cluster keys.
struct CrossModalPairing {
    std::vector<CrossModalPair> pairs;

    bool contains(std::int32_t visible, std::int32_t infrared) const;
};

/// votes(m, n): visible members of cluster m whose most similar infrared memory is
/// n, plus infrared members of n whose most similar visible memory is m.
/// `fs` carries each row's intra-modality label in pseudo_label.
Eigen::MatrixXi mutual_votes(const MemoryBank& vis_bank, const MemoryBank& inf_bank, const FeatureSet& fs);

/// Greedy one-to-one selection by descending vote count, ties by (m, n).
CrossModalPairing select_by_count(const Eigen::MatrixXi& votes);

/// Count-priority selection over two cluster-level banks.
CrossModalPairing count_priority_select(const MemoryBank& vis_bank, const MemoryBank& inf_bank, const FeatureSet& fs);

/// Cross update of every pair, both sides reading pre-update values:
///   inf_n <- normalize(alpha * inf_n + (1 - alpha) * vis_m)
///   vis_m <- normalize(alpha * vis_m + (1 - alpha) * inf_n)
void cross_update(MemoryBank& vis_bank, MemoryBank& inf_bank, const CrossModalPairing& pairing, double alpha);

/// Ablation foil: each paired entry moves toward the normalised pair mean.
void paired_mean_update(MemoryBank& vis_bank, MemoryBank& inf_bank, const CrossModalPairing& pairing, double alpha);

enum class AggregationMode { none, paired_mean, cross };

const char* to_string(AggregationMode m);
AggregationMode parse_aggregation_mode(const std::string& s);

/// CSV with header "m,n,votes".
void save_pairs_csv(const CrossModalPairing& pairing, const std::filesystem::path& path);

} // namespace ecul

#endif // ECUL_AGGREGATION_HPP
