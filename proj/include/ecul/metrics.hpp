#ifndef ECUL_METRICS_HPP
#define ECUL_METRICS_HPP

#include "ecul/encoder.hpp"
#include "ecul/feature_store.hpp"

#include <filesystem>
#include <vector>

namespace ecul {

struct QueryResult {
    Index query = 0;
    int matches = 0;       ///< true matches in the (filtered) gallery
    int first_rank = 0;    ///< 1-based rank of the easiest true match
    int last_rank = 0;     ///< 1-based rank of the hardest true match
    double ap = 0.0;
    double inp = 0.0;
};

struct EvalResult {
    std::vector<double> cmc; ///< cmc[r-1] = fraction of queries with a match in the top r
    double map = 0.0;
    double minp = 0.0;
    std::vector<QueryResult> per_query;

    double rank(int r) const { return cmc.empty() ? 0.0 : cmc[static_cast<std::size_t>(std::min<int>(r, static_cast<int>(cmc.size())) - 1)]; }
};

struct EvalOptions {
    /// Drops gallery rows sharing both identity and camera with the query.
    bool filter_same_camera = false;
};

/// Ranks the gallery by descending similarity (ties by gallery index) for
/// every query. `similarity` is queries x gallery.
EvalResult evaluate_ranking(const Matrix& similarity, const FeatureSet& query, const FeatureSet& gallery,
                            const EvalOptions& options = {});

/// Cosine retrieval of `query` against `gallery`, optionally through `encoder`.
EvalResult evaluate(const FeatureSet& query, const FeatureSet& gallery, const ToyEncoder* encoder = nullptr,
                    const EvalOptions& options = {});

struct ClusterScores {
    double ari = 0.0;
    double nmi = 0.0;
};

/// ARI and NMI (arithmetic normalisation) against ground truth. Noise rows count
/// as singleton clusters, absent rows are ignored.
ClusterScores clustering_scores(const std::vector<std::int32_t>& labels, const std::vector<std::int32_t>& identities);

/// CSV: one row per query plus a summary block.
void save_eval_csv(const EvalResult& result, const std::filesystem::path& path);

} // namespace ecul

#endif // ECUL_METRICS_HPP
