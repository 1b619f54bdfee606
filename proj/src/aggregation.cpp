#include "ecul/aggregation.hpp"

#include <algorithm>
#include <fstream>
#include <stdexcept>
#include <tuple>

namespace ecul {

namespace {

Index most_similar(const MemoryBank& bank, const Eigen::Ref<const Eigen::RowVectorXd>& f)
{
    Index best = 0;
    double best_sim = bank.entries.row(0).dot(f);
    for (Index k = 1; k < bank.size(); ++k) {
        const double s = bank.entries.row(k).dot(f);
        if (s > best_sim) {
            best_sim = s;
            best = k;
        }
    }
    return best;
}

void require_cluster_banks(const MemoryBank& vis_bank, const MemoryBank& inf_bank)
{
    if (vis_bank.level != MemoryLevel::cluster || inf_bank.level != MemoryLevel::cluster) {
        throw std::invalid_argument("aggregation works on cluster-level banks");
    }
    if (vis_bank.size() == 0 || inf_bank.size() == 0) {
        throw std::invalid_argument("aggregation needs non-empty banks on both sides");
    }
    if (vis_bank.dims() != inf_bank.dims()) {
        throw std::invalid_argument("bank dimensions differ");
    }
}

Vector unit(const Vector& v)
{
    const double n = v.norm();
    if (!(n > 1e-12)) {
        throw std::domain_error("aggregated memory entry collapsed to zero");
    }
    return v / n;
}

/// normalize(alpha * self + (1 - alpha) * other); the endpoints copy exactly.
Vector blend(const Vector& self, const Vector& other, double alpha)
{
    if (alpha == 1.0) return self;
    if (alpha == 0.0) return other;
    return unit(alpha * self + (1.0 - alpha) * other);
}

} // namespace

bool CrossModalPairing::contains(std::int32_t visible, std::int32_t infrared) const
{
    return std::any_of(pairs.begin(), pairs.end(),
                       [&](const CrossModalPair& p) { return p.visible == visible && p.infrared == infrared; });
}

Eigen::MatrixXi mutual_votes(const MemoryBank& vis_bank, const MemoryBank& inf_bank, const FeatureSet& fs)
{
    require_cluster_banks(vis_bank, inf_bank);
    if (fs.dims() != vis_bank.dims()) {
        throw std::invalid_argument("feature dimension does not match the banks");
    }
    Eigen::MatrixXi votes = Eigen::MatrixXi::Zero(vis_bank.size(), inf_bank.size());
    for (Index i = 0; i < fs.size(); ++i) {
        const auto label = fs.pseudo_label[static_cast<std::size_t>(i)];
        if (label < 0) {
            continue;
        }
        if (fs.modality[static_cast<std::size_t>(i)] == Modality::visible) {
            if (label >= vis_bank.size()) {
                throw std::invalid_argument("visible pseudo-label outside the visible bank");
            }
            ++votes(label, most_similar(inf_bank, fs.features.row(i)));
        } else {
            if (label >= inf_bank.size()) {
                throw std::invalid_argument("infrared pseudo-label outside the infrared bank");
            }
            ++votes(most_similar(vis_bank, fs.features.row(i)), label);
        }
    }
    return votes;
}

CrossModalPairing select_by_count(const Eigen::MatrixXi& votes)
{
    std::vector<CrossModalPair> candidates;
    for (Index m = 0; m < votes.rows(); ++m) {
        for (Index n = 0; n < votes.cols(); ++n) {
            if (votes(m, n) >= 1) {
                candidates.push_back({static_cast<std::int32_t>(m), static_cast<std::int32_t>(n), votes(m, n)});
            }
        }
    }
    std::sort(candidates.begin(), candidates.end(), [](const auto& a, const auto& b) {
        return std::tie(b.votes, a.visible, a.infrared) < std::tie(a.votes, b.visible, b.infrared);
    });
    std::vector<bool> vis_used(static_cast<std::size_t>(votes.rows()), false);
    std::vector<bool> inf_used(static_cast<std::size_t>(votes.cols()), false);
    CrossModalPairing out;
    for (const auto& c : candidates) {
        auto vu = vis_used[static_cast<std::size_t>(c.visible)];
        auto iu = inf_used[static_cast<std::size_t>(c.infrared)];
        if (vu || iu) {
            continue;
        }
        vis_used[static_cast<std::size_t>(c.visible)] = true;
        inf_used[static_cast<std::size_t>(c.infrared)] = true;
        out.pairs.push_back(c);
    }
    return out;
}

CrossModalPairing count_priority_select(const MemoryBank& vis_bank, const MemoryBank& inf_bank, const FeatureSet& fs)
{
    return select_by_count(mutual_votes(vis_bank, inf_bank, fs));
}

void cross_update(MemoryBank& vis_bank, MemoryBank& inf_bank, const CrossModalPairing& pairing, double alpha)
{
    if (!(alpha >= 0.0 && alpha <= 1.0)) {
        throw std::invalid_argument("alpha must lie in [0, 1]");
    }
    require_cluster_banks(vis_bank, inf_bank);
    // resolve every key first so a bad pairing leaves both banks untouched
    std::vector<std::pair<Index, Index>> slots;
    for (const auto& p : pairing.pairs) {
        slots.emplace_back(vis_bank.entry_of(p.visible), inf_bank.entry_of(p.infrared));
    }
    for (const auto& [v, i] : slots) {
        const Vector vis_old = vis_bank.entries.row(v).transpose();
        const Vector inf_old = inf_bank.entries.row(i).transpose();
        inf_bank.entries.row(i) = blend(inf_old, vis_old, alpha).transpose();
        vis_bank.entries.row(v) = blend(vis_old, inf_old, alpha).transpose();
    }
}

void paired_mean_update(MemoryBank& vis_bank, MemoryBank& inf_bank, const CrossModalPairing& pairing, double alpha)
{
    if (!(alpha >= 0.0 && alpha <= 1.0)) {
        throw std::invalid_argument("alpha must lie in [0, 1]");
    }
    require_cluster_banks(vis_bank, inf_bank);
    std::vector<std::pair<Index, Index>> slots;
    for (const auto& p : pairing.pairs) {
        slots.emplace_back(vis_bank.entry_of(p.visible), inf_bank.entry_of(p.infrared));
    }
    for (const auto& [v, i] : slots) {
        const Vector vis_old = vis_bank.entries.row(v).transpose();
        const Vector inf_old = inf_bank.entries.row(i).transpose();
        const Vector center = unit(vis_old + inf_old);
        vis_bank.entries.row(v) = blend(vis_old, center, alpha).transpose();
        inf_bank.entries.row(i) = blend(inf_old, center, alpha).transpose();
    }
}

const char* to_string(AggregationMode m)
{
    switch (m) {
    case AggregationMode::none: return "none";
    case AggregationMode::paired_mean: return "paired_mean";
    case AggregationMode::cross: return "cross";
    }
    return "?";
}

AggregationMode parse_aggregation_mode(const std::string& s)
{
    if (s == "none") return AggregationMode::none;
    if (s == "paired_mean") return AggregationMode::paired_mean;
    if (s == "cross") return AggregationMode::cross;
    throw std::invalid_argument("unknown aggregation mode '" + s + "' (none, paired_mean, cross)");
}

void save_pairs_csv(const CrossModalPairing& pairing, const std::filesystem::path& path)
{
    std::ofstream out(path, std::ios::trunc);
    if (!out) {
        throw std::runtime_error("cannot open " + path.string() + " for writing");
    }
    out << "m,n,votes\n";
    for (const auto& p : pairing.pairs) {
        out << p.visible << ',' << p.infrared << ',' << p.votes << '\n';
    }
}

} // namespace ecul
