#ifndef ECUL_CLUSTERING_HPP
#define ECUL_CLUSTERING_HPP

#include "ecul/feature_store.hpp"
#include "ecul/rerank.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace ecul {

/// Per-row pseudo-labels. Rows outside the clustered subset carry kAbsentLabel,
/// unassigned rows carry kNoise, everything else is in 0..num_clusters-1.
struct ClusterAssignment {
    std::vector<std::int32_t> labels;
    int num_clusters = 0;
    std::vector<std::vector<Index>> members;

    /// Relabels to a contiguous range (first-appearance order) and rebuilds members.
    static ClusterAssignment from_labels(const std::vector<std::int32_t>& labels);

    /// Fraction of noise among the rows that were clustered (absent rows excluded).
    double noise_fraction() const;
};

/// DBSCAN over a precomputed distance matrix. A row is core when at least
/// `min_samples` rows (itself included) lie within distance <= eps. Clusters are
/// grown from cores in ascending index order, so a border row reachable from
/// several clusters joins the one created first.
ClusterAssignment dbscan(const Matrix& dist, double eps, int min_samples);

enum class ClusterMode { intra_visible, intra_infrared, inter };

const char* to_string(ClusterMode m);
ClusterMode parse_cluster_mode(const std::string& s);

/// Clustering parameters as a function of the epoch.
///
/// The defaults are placeholders, not published values: eps moves linearly from
/// eps_start to eps_end over [0, epochs], the k's stay constant.
struct ClusterSchedule {
    double eps_start = 0.6;
    double eps_end = 0.5;
    int k1 = 30;
    int k2_intra = 2;
    int k2_inter = 3;
    int k3 = 20;
    int min_samples = 4;
    int epochs = 100;
    /// When false the extension ignores camera/modality groups (plain top-k averaging).
    bool group_aware = true;

    void validate() const;
    double eps_at(int epoch) const;
    EmccParams params_at(int epoch, ClusterMode mode) const;
};

/// Row indices that `mode` clusters.
std::vector<Index> cluster_rows(const FeatureSet& fs, ClusterMode mode);

/// k-reciprocal encoding -> extension -> Jaccard -> DBSCAN on the rows selected by
/// `mode`. The returned assignment spans all rows of `fs`.
ClusterAssignment cluster_epoch(const FeatureSet& fs, const ClusterSchedule& schedule, int epoch, ClusterMode mode,
                                Matrix* jaccard_out = nullptr);

/// Copy of `fs` with pseudo_label taken from `assignment`.
FeatureSet assign_pseudo_labels(FeatureSet fs, const ClusterAssignment& assignment);

} // namespace ecul

#endif // ECUL_CLUSTERING_HPP
