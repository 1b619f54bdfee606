#include "ecul/rerank.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace ecul {

const char* to_string(ExtensionMode m)
{
    switch (m) {
    case ExtensionMode::intra_modality: return "intra_modality";
    case ExtensionMode::inter_modality: return "inter_modality";
    case ExtensionMode::ungrouped: return "ungrouped";
    }
    return "?";
}

void EmccParams::validate() const
{
    if (k1 < 1 || k2 < 1 || k3 < 1) {
        throw std::invalid_argument("k1, k2 and k3 must all be >= 1");
    }
}

Matrix pairwise_sq_distances(const Matrix& features)
{
    const Index n = features.rows();
    Matrix gram = features * features.transpose();
    Matrix dist(n, n);
    for (Index i = 0; i < n; ++i) {
        dist(i, i) = 0.0;
        for (Index j = i + 1; j < n; ++j) {
            const double d = std::max(0.0, gram(i, i) + gram(j, j) - 2.0 * gram(i, j));
            dist(i, j) = d;
            dist(j, i) = d;
        }
    }
    return dist;
}

std::vector<Index> nearest_others(const Matrix& dist, Index row, Index count)
{
    std::vector<Index> order;
    order.reserve(static_cast<std::size_t>(dist.cols()));
    for (Index j = 0; j < dist.cols(); ++j) {
        if (j != row) {
            order.push_back(j);
        }
    }
    count = std::min<Index>(count, static_cast<Index>(order.size()));
    auto closer = [&](Index a, Index b) {
        const double da = dist(row, a);
        const double db = dist(row, b);
        return da < db || (da == db && a < b);
    };
    std::partial_sort(order.begin(), order.begin() + count, order.end(), closer);
    order.resize(static_cast<std::size_t>(count));
    return order;
}

EncodingMatrix k_reciprocal_encoding(const FeatureSet& fs, int k1)
{
    const Index n = fs.size();
    if (k1 < 1) {
        throw std::invalid_argument("k1 must be >= 1");
    }
    if (k1 >= n) {
        throw std::invalid_argument("k1 (" + std::to_string(k1) + ") must be smaller than N (" + std::to_string(n) + ")");
    }
    const Matrix dist = pairwise_sq_distances(fs.features);

    // top-k membership as a dense boolean table; N is desk scale
    Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> in_topk =
        Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>::Constant(n, n, false);
    for (Index i = 0; i < n; ++i) {
        for (Index j : nearest_others(dist, i, k1)) {
            in_topk(i, j) = true;
        }
    }

    std::vector<Eigen::Triplet<double>> triplets;
    for (Index i = 0; i < n; ++i) {
        triplets.emplace_back(i, i, 1.0);
        for (Index j = 0; j < n; ++j) {
            if (j != i && in_topk(i, j) && in_topk(j, i)) {
                triplets.emplace_back(i, j, std::exp(-dist(i, j)));
            }
        }
    }
    EncodingMatrix enc(n, n);
    enc.setFromTriplets(triplets.begin(), triplets.end());
    return enc;
}

namespace {

long group_key(const FeatureSet& fs, Index row, ExtensionMode mode)
{
    const auto r = static_cast<std::size_t>(row);
    switch (mode) {
    case ExtensionMode::intra_modality: return fs.camera[r];
    case ExtensionMode::inter_modality: return static_cast<long>(fs.modality[r]) * 65536L + fs.camera[r];
    case ExtensionMode::ungrouped: return 0;
    }
    return 0;
}

} // namespace

ExtensionPlan plan_extension(const FeatureSet& fs, const EmccParams& params)
{
    return plan_extension(fs, pairwise_sq_distances(fs.features), params);
}

ExtensionPlan plan_extension(const FeatureSet& fs, const Matrix& dist, const EmccParams& params)
{
    params.validate();
    const Index n = fs.size();
    ExtensionPlan plan;
    plan.rows.resize(static_cast<std::size_t>(n));
    for (Index i = 0; i < n; ++i) {
        // rank 1 is the row itself at distance zero
        std::vector<Index> window{i};
        for (Index j : nearest_others(dist, i, params.k3 - 1)) {
            window.push_back(j);
        }
        auto& groups = plan.rows[static_cast<std::size_t>(i)];
        for (Index j : window) {
            const long key = group_key(fs, j, params.mode);
            auto it = std::find_if(groups.begin(), groups.end(), [&](const auto& g) { return g.key == key; });
            if (it == groups.end()) {
                groups.push_back({key, {}});
                it = std::prev(groups.end());
            }
            // members.size() is the running per-group rank counter
            if (static_cast<int>(it->members.size()) < params.k2) {
                it->members.push_back(j);
            }
        }
        std::sort(groups.begin(), groups.end(), [](const auto& a, const auto& b) { return a.key < b.key; });
    }
    return plan;
}

EncodingMatrix extend_encoding(const EncodingMatrix& encodings, const FeatureSet& fs, const EmccParams& params)
{
    if (encodings.rows() != fs.size() || encodings.cols() != fs.size()) {
        throw std::invalid_argument("encodings do not match the feature set size");
    }
    return extend_encoding(encodings, plan_extension(fs, params));
}

EncodingMatrix extend_encoding(const EncodingMatrix& encodings, const ExtensionPlan& plan)
{
    const Index n = encodings.rows();
    if (static_cast<Index>(plan.rows.size()) != n) {
        throw std::invalid_argument("extension plan does not match the encodings");
    }
    std::vector<Eigen::Triplet<double>> triplets;
    Vector acc(encodings.cols());
    Vector group_acc(encodings.cols());
    for (Index i = 0; i < n; ++i) {
        const auto& groups = plan.rows[static_cast<std::size_t>(i)];
        acc.setZero();
        for (const auto& g : groups) {
            group_acc.setZero();
            for (Index j : g.members) {
                for (EncodingMatrix::InnerIterator it(encodings, j); it; ++it) {
                    group_acc[it.col()] += it.value();
                }
            }
            acc += group_acc / static_cast<double>(g.members.size());
        }
        acc /= static_cast<double>(groups.size());
        for (Index k = 0; k < acc.size(); ++k) {
            if (acc[k] > 0.0) {
                triplets.emplace_back(i, k, acc[k]);
            }
        }
    }
    EncodingMatrix out(n, encodings.cols());
    out.setFromTriplets(triplets.begin(), triplets.end());
    return out;
}

Matrix jaccard_distance(const EncodingMatrix& encodings)
{
    const Index n = encodings.rows();
    Vector row_sum = Vector::Zero(n);
    for (Index i = 0; i < n; ++i) {
        for (EncodingMatrix::InnerIterator it(encodings, i); it; ++it) {
            if (it.value() < 0.0 || !std::isfinite(it.value())) {
                throw std::invalid_argument("encodings must be finite and nonnegative");
            }
            row_sum[i] += it.value();
        }
    }

    // column-major view doubles as an inverted index: column k lists rows with weight at k
    const Eigen::SparseMatrix<double, Eigen::ColMajor> by_column = encodings;

    Matrix dist = Matrix::Ones(n, n);
    Vector min_sum(n);
    for (Index i = 0; i < n; ++i) {
        min_sum.setZero();
        for (EncodingMatrix::InnerIterator it(encodings, i); it; ++it) {
            for (decltype(by_column)::InnerIterator jt(by_column, it.col()); jt; ++jt) {
                if (jt.row() > i) {
                    min_sum[jt.row()] += std::min(it.value(), jt.value());
                }
            }
        }
        dist(i, i) = 0.0;
        for (Index j = i + 1; j < n; ++j) {
            const double max_sum = row_sum[i] + row_sum[j] - min_sum[j];
            const double d = max_sum > 0.0 ? std::clamp(1.0 - min_sum[j] / max_sum, 0.0, 1.0) : 1.0;
            dist(i, j) = d;
            dist(j, i) = d;
        }
    }
    return dist;
}

} // namespace ecul
