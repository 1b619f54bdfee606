#include "ecul/loss.hpp"

#include <algorithm>

namespace ecul {

namespace {

std::vector<Index> positives_for(const MemoryBank& bank, std::int32_t key)
{
    if (key < 0 || key >= bank.num_labels()) {
        throw std::out_of_range("pseudo-label " + std::to_string(key) + " is not in the " +
                                std::string(to_string(bank.scope)) + "/" + to_string(bank.level) + " bank");
    }
    return bank.key_map[static_cast<std::size_t>(key)];
}

} // namespace

InfoNce<double> infonce(const Vector& q, const MemoryBank& bank, std::int32_t positive_key, double tau)
{
    if (q.size() != bank.dims()) {
        throw std::invalid_argument("query dimension does not match the bank");
    }
    const auto pos = positives_for(bank, positive_key);
    return infonce_kernel(q, bank.entries, std::span<const Index>(pos), tau);
}

const char* to_string(Phase p)
{
    return p == Phase::intra ? "intra" : "inter";
}

const char* to_string(Term t)
{
    switch (t) {
    case Term::vis_cluster: return "vis_cluster";
    case Term::vis_instance: return "vis_instance";
    case Term::ir_cluster: return "ir_cluster";
    case Term::ir_instance: return "ir_instance";
    case Term::mix_cluster: return "mix_cluster";
    case Term::mix_instance: return "mix_instance";
    }
    return "?";
}

void LossConfig::validate() const
{
    if (!(tau > 0.0)) {
        throw std::invalid_argument("temperature must be positive");
    }
    if (std::any_of(weights.begin(), weights.end(), [](double w) { return !(w >= 0.0); })) {
        throw std::invalid_argument("loss weights must be nonnegative");
    }
    if (std::none_of(weights.begin(), weights.end(), [](double w) { return w > 0.0; })) {
        throw std::invalid_argument("at least one loss weight must be positive");
    }
}

const MemoryBank* BankSet::get(Term t) const
{
    switch (t) {
    case Term::vis_cluster: return vis_cluster;
    case Term::vis_instance: return vis_instance;
    case Term::ir_cluster: return ir_cluster;
    case Term::ir_instance: return ir_instance;
    case Term::mix_cluster: return mix_cluster;
    case Term::mix_instance: return mix_instance;
    }
    return nullptr;
}

LossReport batch_loss(std::span<const BatchQuery> batch, const BankSet& banks, const LossConfig& cfg, Phase phase,
                      const InstanceSelection* selection)
{
    cfg.validate();
    LossReport report;
    report.grads.assign(batch.size(), Vector());

    // per-term gradients are accumulated unscaled, then scaled by weight / count
    std::array<std::vector<Vector>, kNumTerms> term_grads;
    for (auto& g : term_grads) {
        g.assign(batch.size(), Vector());
    }

    auto run_term = [&](Term t, std::size_t qi, std::span<const Index> positives) {
        const MemoryBank& bank = *banks.get(t);
        const auto r = infonce_kernel(batch[qi].q, bank.entries, positives, cfg.tau);
        const auto ti = static_cast<std::size_t>(t);
        report.terms[ti] += r.loss;
        report.counts[ti] += 1;
        term_grads[ti][qi] = r.grad;
    };

    for (std::size_t qi = 0; qi < batch.size(); ++qi) {
        const BatchQuery& query = batch[qi];
        const bool visible = query.modality == Modality::visible;
        const Term own_cluster = visible ? Term::vis_cluster : Term::ir_cluster;
        const Term own_instance = visible ? Term::vis_instance : Term::ir_instance;

        std::vector<std::pair<Term, std::int32_t>> active;
        if (query.intra_label >= 0) {
            active.emplace_back(own_cluster, query.intra_label);
            active.emplace_back(own_instance, query.intra_label);
        }
        if (phase == Phase::inter && query.mixed_label >= 0) {
            active.emplace_back(Term::mix_cluster, query.mixed_label);
            active.emplace_back(Term::mix_instance, query.mixed_label);
        }

        for (const auto& [term, label] : active) {
            const MemoryBank* bank = banks.get(term);
            if (cfg.weight(term) == 0.0 || bank == nullptr) {
                continue;
            }
            if (bank->dims() != query.q.size()) {
                throw std::invalid_argument("query dimension does not match the " + std::string(to_string(term)) + " bank");
            }
            std::vector<Index> pos = positives_for(*bank, label);
            if (term == Term::mix_instance && selection != nullptr && selection->pairing != nullptr) {
                // cross-modal positives come from the paired intra cluster, not the mixed cluster
                const auto& intra = *selection->intra_labels;
                std::erase_if(pos, [&](Index e) { return bank->entry_modality[static_cast<std::size_t>(e)] != query.modality; });
                if (query.intra_label >= 0) {
                    for (Index e = 0; e < bank->size(); ++e) {
                        const auto eu = static_cast<std::size_t>(e);
                        if (bank->entry_modality[eu] == query.modality) {
                            continue;
                        }
                        const auto other = intra[static_cast<std::size_t>(bank->entry_row[eu])];
                        if (other < 0) {
                            continue;
                        }
                        const bool paired = visible ? selection->pairing->contains(query.intra_label, other)
                                                    : selection->pairing->contains(other, query.intra_label);
                        if (paired) {
                            pos.push_back(e);
                        }
                    }
                    std::sort(pos.begin(), pos.end());
                }
                if (pos.empty()) {
                    continue;
                }
            }
            run_term(term, qi, pos);
        }
    }

    for (int t = 0; t < kNumTerms; ++t) {
        const auto ti = static_cast<std::size_t>(t);
        if (report.counts[ti] == 0) {
            continue;
        }
        const double scale = cfg.weights[ti] / static_cast<double>(report.counts[ti]);
        report.terms[ti] /= static_cast<double>(report.counts[ti]);
        report.total += cfg.weights[ti] * report.terms[ti];
        for (std::size_t qi = 0; qi < batch.size(); ++qi) {
            if (term_grads[ti][qi].size() == 0) {
                continue;
            }
            if (report.grads[qi].size() == 0) {
                report.grads[qi] = Vector::Zero(batch[qi].q.size());
            }
            report.grads[qi] += scale * term_grads[ti][qi];
        }
    }
    for (std::size_t qi = 0; qi < batch.size(); ++qi) {
        if (report.grads[qi].size() == 0) {
            report.grads[qi] = Vector::Zero(batch[qi].q.size());
        }
    }
    return report;
}

} // namespace ecul
