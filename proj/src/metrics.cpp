#include "ecul/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <stdexcept>

namespace ecul {

EvalResult evaluate_ranking(const Matrix& similarity, const FeatureSet& query, const FeatureSet& gallery,
                            const EvalOptions& options)
{
    if (similarity.rows() != query.size() || similarity.cols() != gallery.size()) {
        throw std::invalid_argument("similarity shape does not match query/gallery");
    }
    const Index ng = gallery.size();
    EvalResult result;
    std::vector<int> first_hits;
    std::vector<Index> order(static_cast<std::size_t>(ng));

    for (Index qi = 0; qi < query.size(); ++qi) {
        const auto qid = query.identity[static_cast<std::size_t>(qi)];
        const auto qcam = query.camera[static_cast<std::size_t>(qi)];
        std::iota(order.begin(), order.end(), Index{0});
        std::stable_sort(order.begin(), order.end(),
                         [&](Index a, Index b) { return similarity(qi, a) > similarity(qi, b); });

        QueryResult qr;
        qr.query = qi;
        int rank = 0;
        long double precision_sum = 0.0L;  // extended so small rational APs round correctly
        bool any_in_gallery = false;
        for (Index g : order) {
            const auto gu = static_cast<std::size_t>(g);
            const bool same_id = gallery.identity[gu] == qid;
            any_in_gallery = any_in_gallery || same_id;
            if (options.filter_same_camera && same_id && gallery.camera[gu] == qcam) {
                continue;
            }
            ++rank;
            if (same_id) {
                ++qr.matches;
                precision_sum += static_cast<long double>(qr.matches) / rank;
                if (qr.first_rank == 0) {
                    qr.first_rank = rank;
                }
                qr.last_rank = rank;
            }
        }
        if (!any_in_gallery) {
            throw std::invalid_argument("query " + std::to_string(qi) + " identity " + std::to_string(qid) +
                                        " is absent from the gallery");
        }
        if (qr.matches == 0) {
            // every true match was filtered out; the query does not count
            continue;
        }
        qr.ap = static_cast<double>(precision_sum / qr.matches);
        qr.inp = static_cast<double>(qr.matches) / qr.last_rank;
        result.per_query.push_back(qr);
        first_hits.push_back(qr.first_rank);
    }

    const auto counted = static_cast<double>(result.per_query.size());
    result.cmc.assign(static_cast<std::size_t>(ng), 0.0);
    if (counted == 0.0) {
        return result;
    }
    for (int r : first_hits) {
        for (auto k = static_cast<std::size_t>(r - 1); k < result.cmc.size(); ++k) {
            result.cmc[k] += 1.0;
        }
    }
    for (auto& c : result.cmc) {
        c /= counted;
    }
    for (const auto& qr : result.per_query) {
        result.map += qr.ap;
        result.minp += qr.inp;
    }
    result.map /= counted;
    result.minp /= counted;
    return result;
}

EvalResult evaluate(const FeatureSet& query, const FeatureSet& gallery, const ToyEncoder* encoder,
                    const EvalOptions& options)
{
    query.validate();
    gallery.validate();
    Matrix q = encoder ? encoder->encode_rows(query.features) : normalized_rows(query.features);
    Matrix g = encoder ? encoder->encode_rows(gallery.features) : normalized_rows(gallery.features);
    if (q.cols() != g.cols()) {
        throw std::invalid_argument("query and gallery dimensions differ");
    }
    return evaluate_ranking(q * g.transpose(), query, gallery, options);
}

ClusterScores clustering_scores(const std::vector<std::int32_t>& labels, const std::vector<std::int32_t>& identities)
{
    if (labels.size() != identities.size()) {
        throw std::invalid_argument("labels and identities differ in length");
    }
    // noise rows become fresh singleton ids
    std::vector<std::int64_t> pred;
    std::vector<std::int64_t> truth;
    std::int64_t next_singleton = 1LL << 40;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] == kAbsentLabel) {
            continue;
        }
        pred.push_back(labels[i] == kNoise ? next_singleton++ : labels[i]);
        truth.push_back(identities[i]);
    }
    const auto n = static_cast<double>(pred.size());
    ClusterScores s;
    if (pred.size() < 2) {
        s.ari = 1.0;
        s.nmi = 1.0;
        return s;
    }

    std::map<std::pair<std::int64_t, std::int64_t>, double> joint;
    std::map<std::int64_t, double> a;
    std::map<std::int64_t, double> b;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        joint[{truth[i], pred[i]}] += 1.0;
        a[truth[i]] += 1.0;
        b[pred[i]] += 1.0;
    }
    auto comb2 = [](double x) { return x * (x - 1.0) / 2.0; };
    double sum_joint = 0.0;
    for (const auto& [k, v] : joint) sum_joint += comb2(v);
    double sum_a = 0.0;
    for (const auto& [k, v] : a) sum_a += comb2(v);
    double sum_b = 0.0;
    for (const auto& [k, v] : b) sum_b += comb2(v);
    const double expected = sum_a * sum_b / comb2(n);
    const double max_index = 0.5 * (sum_a + sum_b);
    s.ari = max_index == expected ? 1.0 : (sum_joint - expected) / (max_index - expected);

    double mi = 0.0;
    for (const auto& [k, v] : joint) {
        mi += (v / n) * std::log(v * n / (a[k.first] * b[k.second]));
    }
    auto entropy = [n](const std::map<std::int64_t, double>& m) {
        double h = 0.0;
        for (const auto& [k, v] : m) h -= (v / n) * std::log(v / n);
        return h;
    };
    const double ha = entropy(a);
    const double hb = entropy(b);
    if (ha == 0.0 && hb == 0.0) {
        s.nmi = 1.0;
    } else {
        s.nmi = std::max(0.0, mi) / (0.5 * (ha + hb));
    }
    return s;
}

void save_eval_csv(const EvalResult& result, const std::filesystem::path& path)
{
    std::ofstream out(path, std::ios::trunc);
    if (!out) {
        throw std::runtime_error("cannot open " + path.string() + " for writing");
    }
    out << "query,matches,first_rank,last_rank,ap,inp\n";
    for (const auto& q : result.per_query) {
        out << q.query << ',' << q.matches << ',' << q.first_rank << ',' << q.last_rank << ',' << q.ap << ',' << q.inp
            << '\n';
    }
    out << "\nmetric,value\n";
    for (int r : {1, 5, 10, 20}) {
        if (static_cast<std::size_t>(r) <= result.cmc.size()) {
            out << "rank" << r << ',' << result.rank(r) << '\n';
        }
    }
    out << "mAP," << result.map << '\n' << "mINP," << result.minp << '\n';
}

} // namespace ecul
