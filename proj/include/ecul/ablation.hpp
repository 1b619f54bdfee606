#ifndef ECUL_ABLATION_HPP
#define ECUL_ABLATION_HPP

#include "ecul/config.hpp"

#include <functional>
#include <ostream>
#include <string>
#include <vector>

namespace ecul {

struct AblationVariant {
    std::string name;
    TrainConfig train;
};

/// The six cumulative variants, derived from `full` by switching components off:
/// baseline, +inter, +paired-mean aggregation, +cross update, +EMCC, +TSMem.
std::vector<AblationVariant> ablation_variants(const TrainConfig& full);

struct AblationRow {
    std::string name;
    std::vector<double> rank1; ///< final cross-modal rank-1 per seed
    std::vector<double> map;
    std::vector<double> ari; ///< final inter-modality clustering ARI per seed

    double mean_rank1() const;
};

struct AblationReport {
    std::vector<std::uint64_t> seeds;
    std::vector<AblationRow> rows;
};

using AblationProgress = std::function<void(const std::string& variant, std::uint64_t seed, double rank1)>;

/// Seed s regenerates the synthetic data and reseeds training with the same value.
AblationReport run_ablate(const RunConfig& cfg, const AblationProgress& progress = {});

void write_ablation_table(const AblationReport& report, std::ostream& out);
void write_ablation_csv(const AblationReport& report, const std::filesystem::path& path);

double mean_of(const std::vector<double>& v);
double stddev_of(const std::vector<double>& v);

} // namespace ecul

#endif // ECUL_ABLATION_HPP
