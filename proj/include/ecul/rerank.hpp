#ifndef ECUL_RERANK_HPP
#define ECUL_RERANK_HPP

#include "ecul/feature_store.hpp"

#include <Eigen/SparseCore>

#include <vector>

namespace ecul {

/// Row i holds the encoding vector owned by sample i (length N, nonnegative).
using EncodingMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

/// How neighbours are grouped when extending an encoding.
///   intra_modality - one group per camera
///   inter_modality - one group per (modality, camera)
///   ungrouped      - a single group; reduces to plain top-k averaging
enum class ExtensionMode { intra_modality, inter_modality, ungrouped };

const char* to_string(ExtensionMode m);

struct EmccParams {
    int k1 = 30; ///< k-reciprocal proximity range
    int k2 = 2;  ///< per-group cap inside the aggregation window
    int k3 = 20; ///< aggregation window (ranked neighbours, self included)
    ExtensionMode mode = ExtensionMode::intra_modality;

    void validate() const;
};

/// Squared Euclidean distances between rows; exactly symmetric with zero diagonal.
Matrix pairwise_sq_distances(const Matrix& features);

/// Indices of the `count` nearest rows to `row`, ascending by (distance, index),
/// excluding `row` itself.
std::vector<Index> nearest_others(const Matrix& dist, Index row, Index count);

/// k-reciprocal encoding. Support of row i is {i} plus every j with j in
/// top-k1(i) and i in top-k1(j); weights are exp(-d_ij) with d the squared
/// Euclidean distance (self weight 1). Requires k1 < N.
EncodingMatrix k_reciprocal_encoding(const FeatureSet& fs, int k1);

/// Contributor sets of the extension: for each row, one entry per non-empty group
/// holding the neighbour indices that pass the window and per-group cap.
struct ExtensionPlan {
    struct Group {
        long key;
        std::vector<Index> members;
    };
    std::vector<std::vector<Group>> rows;
};

ExtensionPlan plan_extension(const FeatureSet& fs, const EmccParams& params);
ExtensionPlan plan_extension(const FeatureSet& fs, const Matrix& dist, const EmccParams& params);

/// Replaces each encoding by the mean over non-empty groups of the mean
/// encoding of that group's contributors.
EncodingMatrix extend_encoding(const EncodingMatrix& encodings, const FeatureSet& fs, const EmccParams& params);
EncodingMatrix extend_encoding(const EncodingMatrix& encodings, const ExtensionPlan& plan);

/// Weighted Jaccard distance 1 - sum(min)/sum(max) between every pair of rows.
/// Symmetric, zero diagonal, pairs of empty rows get distance 1.
Matrix jaccard_distance(const EncodingMatrix& encodings);

} // namespace ecul

#endif // ECUL_RERANK_HPP
