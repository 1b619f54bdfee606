#include "ecul/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <set>
#include <stdexcept>

namespace ecul {

void TrainConfig::validate() const
{
    if (ids_per_batch < 1 || instances_per_id < 1) {
        throw std::invalid_argument("batch composition must be positive");
    }
    if (!(lr >= 0.0) || lr_step < 1 || !(lr_decay > 0.0)) {
        throw std::invalid_argument("invalid learning-rate schedule");
    }
    if (epochs < 1 || iterations < 0 || output_dims < 2) {
        throw std::invalid_argument("epochs >= 1, iterations >= 0 and output_dims >= 2 are required");
    }
    if (!(alpha >= 0.0 && alpha <= 1.0)) {
        throw std::invalid_argument("alpha must lie in [0, 1]");
    }
    if (jitter_sigma < 0.0) {
        throw std::invalid_argument("jitter_sigma must be nonnegative");
    }
    memory.tsmem.validate();
    schedule.validate();
    loss.validate();
}

double TrainConfig::lr_at(int epoch) const
{
    return lr * std::pow(lr_decay, epoch / lr_step);
}

std::vector<Index> sample_batch(const std::vector<std::int32_t>& labels, int num_ids, int num_instances,
                                std::mt19937_64& rng)
{
    std::map<std::int32_t, std::vector<Index>> by_label;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] >= 0) {
            by_label[labels[i]].push_back(static_cast<Index>(i));
        }
    }
    if (static_cast<int>(by_label.size()) < num_ids) {
        throw std::invalid_argument("too few clusters for a batch: have " + std::to_string(by_label.size()) +
                                    ", need " + std::to_string(num_ids));
    }
    std::vector<std::int32_t> keys;
    for (const auto& [k, v] : by_label) {
        keys.push_back(k);
    }
    std::shuffle(keys.begin(), keys.end(), rng);
    keys.resize(static_cast<std::size_t>(num_ids));

    std::vector<Index> batch;
    batch.reserve(static_cast<std::size_t>(num_ids) * static_cast<std::size_t>(num_instances));
    for (auto k : keys) {
        auto rows = by_label[k];
        if (static_cast<int>(rows.size()) >= num_instances) {
            std::shuffle(rows.begin(), rows.end(), rng);
            batch.insert(batch.end(), rows.begin(), rows.begin() + num_instances);
        } else {
            std::uniform_int_distribution<std::size_t> pick(0, rows.size() - 1);
            for (int j = 0; j < num_instances; ++j) {
                batch.push_back(rows[pick(rng)]);
            }
        }
    }
    return batch;
}

std::vector<Index> sample_batch(const FeatureSet& fs, const TrainConfig& cfg, std::mt19937_64& rng)
{
    return sample_batch(fs.pseudo_label, cfg.ids_per_batch, cfg.instances_per_id, rng);
}

EvalSummary summarize(const EvalResult& r)
{
    return {r.rank(1), r.rank(5), r.map, r.minp};
}

Trainer::Trainer(TrainConfig cfg, FeatureSet train) : cfg_(std::move(cfg)), train_(std::move(train)), rng_(cfg_.seed)
{
    cfg_.validate();
    train_.validate();
    train_ = normalize(std::move(train_));
    const Index din = train_.dims();
    const Index dout = cfg_.output_dims;
    encoder_ = cfg_.identity_init ? ToyEncoder::identity(din, dout)
                                  : ToyEncoder::random(din, dout, cfg_.seed ^ 0x9E3779B97F4A7C15ULL);
}

Trainer::Trainer(TrainConfig cfg, FeatureSet train, FeatureSet query, FeatureSet gallery)
    : Trainer(std::move(cfg), std::move(train))
{
    query.validate();
    gallery.validate();
    if (query.dims() != train_.dims() || gallery.dims() != train_.dims()) {
        throw std::invalid_argument("query/gallery dimension differs from the training set");
    }
    query_ = std::move(query);
    gallery_ = std::move(gallery);
    run_.initial = evaluate_now();
}

std::optional<EvalSummary> Trainer::evaluate_now() const
{
    if (!query_ || !gallery_) {
        return std::nullopt;
    }
    return summarize(evaluate(*query_, *gallery_, &encoder_));
}

BankSet Trainer::bank_set() const
{
    BankSet set;
    auto ptr = [&](Term t) {
        const auto& b = banks_[static_cast<std::size_t>(t)];
        return b ? &*b : nullptr;
    };
    set.vis_cluster = ptr(Term::vis_cluster);
    set.vis_instance = ptr(Term::vis_instance);
    set.ir_cluster = ptr(Term::ir_cluster);
    set.ir_instance = ptr(Term::ir_instance);
    set.mix_cluster = ptr(Term::mix_cluster);
    set.mix_instance = ptr(Term::mix_instance);
    return set;
}

namespace {

std::vector<std::int32_t> restrict_to(const std::vector<std::int32_t>& labels, const FeatureSet& fs, Modality m)
{
    std::vector<std::int32_t> out = labels;
    for (std::size_t i = 0; i < out.size(); ++i) {
        if (fs.modality[i] != m) {
            out[i] = kNoise;
        }
    }
    return out;
}

} // namespace

void Trainer::run_phase(ecul::Phase phase, int epoch, EpochRecord& record)
{
    const double lr = cfg_.lr_at(epoch);
    const BankSet banks = bank_set();

    // label vectors the sampler draws from, one per batch block
    std::vector<std::vector<std::int32_t>> pools;
    if (phase == ecul::Phase::intra) {
        if (banks.vis_cluster) pools.push_back(restrict_to(intra_labels_, train_, Modality::visible));
        if (banks.ir_cluster) pools.push_back(restrict_to(intra_labels_, train_, Modality::infrared));
    } else if (banks.mix_cluster) {
        pools.push_back(mixed_labels_);
    }
    if (pools.empty()) {
        return;
    }

    InstanceSelection selection{&pairing_, &intra_labels_};
    const InstanceSelection* sel = cfg_.instance_selection && !pairing_.pairs.empty() ? &selection : nullptr;
    std::normal_distribution<double> jitter(0.0, cfg_.jitter_sigma > 0.0 ? cfg_.jitter_sigma : 1.0);

    auto& terms = phase == ecul::Phase::intra ? record.intra_terms : record.inter_terms;
    auto& total = phase == ecul::Phase::intra ? record.intra_loss : record.inter_loss;
    std::array<int, kNumTerms> term_iters{};
    int loss_iters = 0;

    for (int it = 0; it < cfg_.iterations; ++it) {
        std::vector<Index> rows;
        for (const auto& pool : pools) {
            std::set<std::int32_t> distinct;
            for (auto l : pool) {
                if (l >= 0) distinct.insert(l);
            }
            if (distinct.empty()) {
                continue;
            }
            const int p = std::min<int>(cfg_.ids_per_batch, static_cast<int>(distinct.size()));
            auto block = sample_batch(pool, p, cfg_.instances_per_id, rng_);
            rows.insert(rows.end(), block.begin(), block.end());
        }
        if (rows.empty()) {
            break;
        }

        Matrix inputs(static_cast<Index>(rows.size()), train_.dims());
        std::vector<BatchQuery> batch(rows.size());
        for (std::size_t b = 0; b < rows.size(); ++b) {
            const auto r = static_cast<std::size_t>(rows[b]);
            Vector x = train_.features.row(rows[b]).transpose();
            if (cfg_.jitter_sigma > 0.0) {
                for (Index k = 0; k < x.size(); ++k) {
                    x[k] += jitter(rng_);
                }
            }
            inputs.row(static_cast<Index>(b)) = x.transpose();
            batch[b].q = encoder_.encode(x);
            batch[b].modality = train_.modality[r];
            batch[b].intra_label = intra_labels_[r];
            batch[b].mixed_label = mixed_labels_[r];
            batch[b].row = rows[b];
        }

        const LossReport report = batch_loss(batch, banks, cfg_.loss, phase, sel);
        for (int t = 0; t < kNumTerms; ++t) {
            if (report.counts[static_cast<std::size_t>(t)] > 0) {
                terms[static_cast<std::size_t>(t)] += report.terms[static_cast<std::size_t>(t)];
                ++term_iters[static_cast<std::size_t>(t)];
            }
        }
        total += report.total;
        ++loss_iters;

        gradient_step(encoder_, encoder_gradient(encoder_, inputs, report.grads), lr);

        // memory writes use the features of this forward pass
        for (int t = 0; t < kNumTerms; ++t) {
            const auto term = static_cast<Term>(t);
            auto& slot = banks_[static_cast<std::size_t>(t)];
            if (!slot) {
                continue;
            }
            const bool mixed = term == Term::mix_cluster || term == Term::mix_instance;
            if (mixed && phase == ecul::Phase::intra) {
                continue;
            }
            const bool vis_family = term == Term::vis_cluster || term == Term::vis_instance;
            const bool ir_family = term == Term::ir_cluster || term == Term::ir_instance;
            const bool cluster_level = slot->level == MemoryLevel::cluster;

            std::map<std::int64_t, std::vector<std::size_t>> touched;
            for (std::size_t b = 0; b < batch.size(); ++b) {
                const auto& q = batch[b];
                if ((vis_family && q.modality != Modality::visible) || (ir_family && q.modality != Modality::infrared)) {
                    continue;
                }
                const auto label = mixed ? q.mixed_label : q.intra_label;
                if (label < 0) {
                    continue;
                }
                touched[cluster_level ? label : q.row].push_back(b);
            }
            for (const auto& [key, positions] : touched) {
                std::size_t chosen = positions.back();
                if (cluster_level) {
                    std::uniform_int_distribution<std::size_t> pick(0, positions.size() - 1);
                    chosen = positions[pick(rng_)];
                }
                cfg_.memory.apply(*slot, key, batch[chosen].q, epoch);
            }
        }
    }

    for (int t = 0; t < kNumTerms; ++t) {
        const auto n = term_iters[static_cast<std::size_t>(t)];
        if (n > 0) {
            terms[static_cast<std::size_t>(t)] /= n;
        }
    }
    if (loss_iters > 0) {
        total /= loss_iters;
    }
}

const EpochRecord& Trainer::train_epoch()
{
    if (epoch_ >= cfg_.epochs) {
        throw std::logic_error("training already finished");
    }
    const int epoch = epoch_;
    EpochRecord record;
    record.epoch = epoch;
    record.lr = cfg_.lr_at(epoch);

    const FeatureSet encoded = encoder_.encode(train_);
    const bool has_vis = !train_.rows_of(Modality::visible).empty();
    const bool has_ir = !train_.rows_of(Modality::infrared).empty();

    try {
        const std::size_t n = static_cast<std::size_t>(train_.size());
        assignments_[0] = has_vis ? cluster_epoch(encoded, cfg_.schedule, epoch, ClusterMode::intra_visible)
                                  : ClusterAssignment::from_labels(std::vector<std::int32_t>(n, kAbsentLabel));
        assignments_[1] = has_ir ? cluster_epoch(encoded, cfg_.schedule, epoch, ClusterMode::intra_infrared)
                                 : ClusterAssignment::from_labels(std::vector<std::int32_t>(n, kAbsentLabel));
        assignments_[2] = cluster_epoch(encoded, cfg_.schedule, epoch, ClusterMode::inter);

        for (std::size_t m = 0; m < 3; ++m) {
            record.clusters[m] = assignments_[m].num_clusters;
            record.noise[m] = assignments_[m].noise_fraction();
            record.ari[m] = clustering_scores(assignments_[m].labels, train_.identity).ari;
        }

        // intra labels live in two separate label spaces, selected by modality
        intra_labels_.assign(n, kNoise);
        for (std::size_t i = 0; i < n; ++i) {
            const auto& a = train_.modality[i] == Modality::visible ? assignments_[0] : assignments_[1];
            intra_labels_[i] = std::max(a.labels[i], kNoise);
        }
        mixed_labels_.assign(n, kNoise);
        if (cfg_.inter_phase) {
            for (std::size_t i = 0; i < n; ++i) {
                mixed_labels_[i] = std::max(assignments_[2].labels[i], kNoise);
            }
        }

        for (auto& b : banks_) {
            b.reset();
        }
        pairing_ = {};
        const bool any = record.clusters[0] > 0 || record.clusters[1] > 0 || (cfg_.inter_phase && record.clusters[2] > 0);
        if (!any) {
            record.skipped = true;
        } else {
            auto build = [&](Term cluster_term, Term instance_term, const ClusterAssignment& a, MemoryScope scope) {
                if (a.num_clusters == 0) {
                    return;
                }
                banks_[static_cast<std::size_t>(cluster_term)] = init_memory(encoded, a, MemoryLevel::cluster, scope);
                banks_[static_cast<std::size_t>(instance_term)] = init_memory(encoded, a, MemoryLevel::instance, scope);
            };
            build(Term::vis_cluster, Term::vis_instance, assignments_[0], MemoryScope::visible);
            build(Term::ir_cluster, Term::ir_instance, assignments_[1], MemoryScope::infrared);
            if (cfg_.inter_phase) {
                build(Term::mix_cluster, Term::mix_instance, assignments_[2], MemoryScope::mixed);
            }

            run_phase(ecul::Phase::intra, epoch, record);

            auto& vis = banks_[static_cast<std::size_t>(Term::vis_cluster)];
            auto& ir = banks_[static_cast<std::size_t>(Term::ir_cluster)];
            const bool want_pairs = cfg_.aggregation != AggregationMode::none ||
                                    (cfg_.inter_phase && cfg_.instance_selection);
            if (vis && ir && want_pairs) {
                FeatureSet current = encoder_.encode(train_);
                current.pseudo_label = intra_labels_;
                pairing_ = count_priority_select(*vis, *ir, current);
                record.pairs = static_cast<int>(pairing_.pairs.size());
                if (cfg_.aggregation == AggregationMode::cross) {
                    cross_update(*vis, *ir, pairing_, cfg_.alpha);
                } else if (cfg_.aggregation == AggregationMode::paired_mean) {
                    paired_mean_update(*vis, *ir, pairing_, cfg_.alpha);
                }
            }

            if (cfg_.inter_phase) {
                run_phase(ecul::Phase::inter, epoch, record);
            }
        }
    } catch (const std::exception& e) {
        throw std::runtime_error("epoch " + std::to_string(epoch) + ": " + e.what());
    }

    record.eval = evaluate_now();
    ++epoch_;
    run_.epochs.push_back(record);
    return run_.epochs.back();
}

const TrainRun& Trainer::run()
{
    while (epoch_ < cfg_.epochs) {
        train_epoch();
    }
    return run_;
}

void write_epoch_log(const TrainRun& run, const std::filesystem::path& path)
{
    std::ofstream out(path, std::ios::trunc);
    if (!out) {
        throw std::runtime_error("cannot open " + path.string() + " for writing");
    }
    out << std::setprecision(9);
    out << "epoch,status,lr,clusters_vis,clusters_ir,clusters_inter,noise_vis,noise_ir,noise_inter,"
           "ari_vis,ari_ir,ari_inter,pairs,intra_loss,inter_loss,rank1,rank5,map,minp\n";
    for (const auto& r : run.epochs) {
        out << r.epoch << ',' << (r.skipped ? "skipped" : "ok") << ',' << r.lr;
        for (int c : r.clusters) out << ',' << c;
        for (double v : r.noise) out << ',' << v;
        for (double v : r.ari) out << ',' << v;
        out << ',' << r.pairs << ',' << r.intra_loss << ',' << r.inter_loss;
        if (r.eval) {
            out << ',' << r.eval->rank1 << ',' << r.eval->rank5 << ',' << r.eval->map << ',' << r.eval->minp;
        } else {
            out << ",,,,";
        }
        out << '\n';
    }
}

void write_loss_log(const TrainRun& run, const std::filesystem::path& path)
{
    std::ofstream out(path, std::ios::trunc);
    if (!out) {
        throw std::runtime_error("cannot open " + path.string() + " for writing");
    }
    out << std::setprecision(9);
    out << "epoch,phase,term,value\n";
    for (const auto& r : run.epochs) {
        for (const auto& [phase, terms, total] :
             {std::tuple{"intra", r.intra_terms, r.intra_loss}, std::tuple{"inter", r.inter_terms, r.inter_loss}}) {
            for (int t = 0; t < kNumTerms; ++t) {
                if (terms[static_cast<std::size_t>(t)] != 0.0) {
                    out << r.epoch << ',' << phase << ',' << to_string(static_cast<Term>(t)) << ','
                        << terms[static_cast<std::size_t>(t)] << '\n';
                }
            }
            if (total != 0.0) {
                out << r.epoch << ',' << phase << ",total," << total << '\n';
            }
        }
    }
}

} // namespace ecul
