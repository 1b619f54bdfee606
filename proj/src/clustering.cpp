#include "ecul/clustering.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <stdexcept>

namespace ecul {

ClusterAssignment ClusterAssignment::from_labels(const std::vector<std::int32_t>& labels)
{
    ClusterAssignment a;
    a.labels = relabel_contiguous(labels);
    for (std::size_t i = 0; i < a.labels.size(); ++i) {
        const auto l = a.labels[i];
        if (l < 0) {
            continue;
        }
        if (static_cast<std::size_t>(l) >= a.members.size()) {
            a.members.resize(static_cast<std::size_t>(l) + 1);
        }
        a.members[static_cast<std::size_t>(l)].push_back(static_cast<Index>(i));
    }
    a.num_clusters = static_cast<int>(a.members.size());
    return a;
}

double ClusterAssignment::noise_fraction() const
{
    std::size_t clustered = 0;
    std::size_t noise = 0;
    for (auto l : labels) {
        if (l == kAbsentLabel) {
            continue;
        }
        ++clustered;
        noise += (l == kNoise);
    }
    return clustered == 0 ? 0.0 : static_cast<double>(noise) / static_cast<double>(clustered);
}

ClusterAssignment dbscan(const Matrix& dist, double eps, int min_samples)
{
    const Index n = dist.rows();
    if (dist.cols() != n) {
        throw std::invalid_argument("distance matrix must be square");
    }
    if (!(eps > 0.0) || min_samples < 1) {
        throw std::invalid_argument("dbscan needs eps > 0 and min_samples >= 1");
    }
    for (Index i = 0; i < n; ++i) {
        for (Index j = 0; j < n; ++j) {
            if (!(dist(i, j) >= 0.0)) {
                throw std::invalid_argument("distance matrix has a negative or NaN entry");
            }
            if (std::abs(dist(i, j) - dist(j, i)) > 1e-9) {
                throw std::invalid_argument("distance matrix is not symmetric");
            }
        }
    }

    std::vector<std::vector<Index>> neighbors(static_cast<std::size_t>(n));
    for (Index i = 0; i < n; ++i) {
        for (Index j = 0; j < n; ++j) {
            if (dist(i, j) <= eps) {
                neighbors[static_cast<std::size_t>(i)].push_back(j);
            }
        }
    }
    auto is_core = [&](Index i) {
        return static_cast<int>(neighbors[static_cast<std::size_t>(i)].size()) >= min_samples;
    };

    constexpr std::int32_t unvisited = -3;
    std::vector<std::int32_t> labels(static_cast<std::size_t>(n), unvisited);
    std::int32_t next = 0;
    for (Index i = 0; i < n; ++i) {
        if (labels[static_cast<std::size_t>(i)] != unvisited) {
            continue;
        }
        if (!is_core(i)) {
            labels[static_cast<std::size_t>(i)] = kNoise;
            continue;
        }
        const std::int32_t cluster = next++;
        labels[static_cast<std::size_t>(i)] = cluster;
        std::deque<Index> frontier(neighbors[static_cast<std::size_t>(i)].begin(),
                                   neighbors[static_cast<std::size_t>(i)].end());
        while (!frontier.empty()) {
            const Index p = frontier.front();
            frontier.pop_front();
            auto& lp = labels[static_cast<std::size_t>(p)];
            if (lp != unvisited && lp != kNoise) {
                continue;
            }
            lp = cluster;
            if (is_core(p)) {
                for (Index q : neighbors[static_cast<std::size_t>(p)]) {
                    const auto lq = labels[static_cast<std::size_t>(q)];
                    if (lq == unvisited || lq == kNoise) {
                        frontier.push_back(q);
                    }
                }
            }
        }
    }
    return ClusterAssignment::from_labels(labels);
}

const char* to_string(ClusterMode m)
{
    switch (m) {
    case ClusterMode::intra_visible: return "intra_visible";
    case ClusterMode::intra_infrared: return "intra_infrared";
    case ClusterMode::inter: return "inter";
    }
    return "?";
}

ClusterMode parse_cluster_mode(const std::string& s)
{
    if (s == "intra_visible") return ClusterMode::intra_visible;
    if (s == "intra_infrared") return ClusterMode::intra_infrared;
    if (s == "inter") return ClusterMode::inter;
    throw std::invalid_argument("unknown cluster mode '" + s + "' (intra_visible, intra_infrared, inter)");
}

void ClusterSchedule::validate() const
{
    if (!(eps_start > 0.0) || !(eps_end > 0.0)) {
        throw std::invalid_argument("eps must be positive for every epoch");
    }
    if (k1 < 1 || k2_intra < 1 || k2_inter < 1 || k3 < 1 || min_samples < 1) {
        throw std::invalid_argument("k1, k2, k3 and min_samples must be >= 1");
    }
    if (epochs < 0) {
        throw std::invalid_argument("schedule epochs must be >= 0");
    }
}

double ClusterSchedule::eps_at(int epoch) const
{
    if (epoch < 0 || epoch > epochs) {
        throw std::out_of_range("epoch " + std::to_string(epoch) + " outside schedule 0.." + std::to_string(epochs));
    }
    if (epochs == 0) {
        return eps_start;
    }
    const double t = static_cast<double>(epoch) / static_cast<double>(epochs);
    return eps_start + (eps_end - eps_start) * t;
}

EmccParams ClusterSchedule::params_at(int epoch, ClusterMode mode) const
{
    (void)eps_at(epoch);
    EmccParams p;
    p.k1 = k1;
    p.k3 = k3;
    if (mode == ClusterMode::inter) {
        p.k2 = k2_inter;
        p.mode = ExtensionMode::inter_modality;
    } else {
        p.k2 = k2_intra;
        p.mode = ExtensionMode::intra_modality;
    }
    if (!group_aware) {
        p.mode = ExtensionMode::ungrouped;
    }
    return p;
}

std::vector<Index> cluster_rows(const FeatureSet& fs, ClusterMode mode)
{
    switch (mode) {
    case ClusterMode::intra_visible: return fs.rows_of(Modality::visible);
    case ClusterMode::intra_infrared: return fs.rows_of(Modality::infrared);
    case ClusterMode::inter: break;
    }
    std::vector<Index> all(static_cast<std::size_t>(fs.size()));
    for (Index i = 0; i < fs.size(); ++i) {
        all[static_cast<std::size_t>(i)] = i;
    }
    return all;
}

ClusterAssignment cluster_epoch(const FeatureSet& fs, const ClusterSchedule& schedule, int epoch, ClusterMode mode,
                                Matrix* jaccard_out)
{
    schedule.validate();
    const std::vector<Index> rows = cluster_rows(fs, mode);
    if (rows.empty()) {
        throw std::invalid_argument(std::string("empty modality subset for mode ") + to_string(mode));
    }
    const double eps = schedule.eps_at(epoch);
    EmccParams params = schedule.params_at(epoch, mode);

    const FeatureSet sub = fs.subset(rows);
    const auto n = sub.size();
    std::vector<std::int32_t> sub_labels;
    if (n == 1) {
        sub_labels.assign(1, schedule.min_samples <= 1 ? 0 : kNoise);
        if (jaccard_out) {
            *jaccard_out = Matrix::Zero(1, 1);
        }
    } else {
        // small subsets cannot support the configured range
        params.k1 = std::min<int>(params.k1, static_cast<int>(n) - 1);
        const Matrix dist = pairwise_sq_distances(sub.features);
        const EncodingMatrix enc = k_reciprocal_encoding(sub, params.k1);
        const EncodingMatrix ext = extend_encoding(enc, plan_extension(sub, dist, params));
        Matrix jac = jaccard_distance(ext);
        sub_labels = dbscan(jac, eps, schedule.min_samples).labels;
        if (jaccard_out) {
            *jaccard_out = std::move(jac);
        }
    }

    std::vector<std::int32_t> labels(static_cast<std::size_t>(fs.size()), kAbsentLabel);
    for (std::size_t r = 0; r < rows.size(); ++r) {
        labels[static_cast<std::size_t>(rows[r])] = sub_labels[r];
    }
    return ClusterAssignment::from_labels(labels);
}

FeatureSet assign_pseudo_labels(FeatureSet fs, const ClusterAssignment& assignment)
{
    if (static_cast<Index>(assignment.labels.size()) != fs.size()) {
        throw std::invalid_argument("assignment length does not match the feature set");
    }
    fs.pseudo_label = relabel_contiguous(assignment.labels);
    return fs;
}

} // namespace ecul
