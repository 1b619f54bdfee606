#ifndef ECUL_TRAINER_HPP
#define ECUL_TRAINER_HPP

#include "ecul/aggregation.hpp"
#include "ecul/clustering.hpp"
#include "ecul/encoder.hpp"
#include "ecul/loss.hpp"
#include "ecul/memory.hpp"
#include "ecul/metrics.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace ecul {

struct TrainConfig {
    int ids_per_batch = 8;
    int instances_per_id = 16;
    double lr = 0.00035;
    int lr_step = 20;
    double lr_decay = 0.1;
    int epochs = 100;
    double alpha = 0.2;
    std::uint64_t seed = 0;
    int iterations = 20; ///< optimisation steps per phase per epoch
    int output_dims = 16;
    bool identity_init = false;
    double jitter_sigma = 0.0; ///< augmentation hook: Gaussian input jitter, off by default
    bool inter_phase = true;
    bool instance_selection = true;
    AggregationMode aggregation = AggregationMode::cross;
    MemoryUpdater memory;
    ClusterSchedule schedule;
    LossConfig loss;

    void validate() const;
    double lr_at(int epoch) const;
};

/// Identity-balanced batch: `num_ids` distinct labels drawn uniformly, then
/// `num_instances` rows per label (without replacement when the label has
/// enough rows, with replacement otherwise). `labels` is indexed by row;
/// negative entries are never sampled.
std::vector<Index> sample_batch(const std::vector<std::int32_t>& labels, int num_ids, int num_instances,
                                std::mt19937_64& rng);
std::vector<Index> sample_batch(const FeatureSet& fs, const TrainConfig& cfg, std::mt19937_64& rng);

struct EvalSummary {
    double rank1 = 0.0;
    double rank5 = 0.0;
    double map = 0.0;
    double minp = 0.0;
};

EvalSummary summarize(const EvalResult& r);

struct EpochRecord {
    int epoch = 0;
    bool skipped = false;
    double lr = 0.0;
    std::array<int, 3> clusters{};      ///< visible, infrared, inter
    std::array<double, 3> noise{};
    std::array<double, 3> ari{};
    int pairs = 0;
    std::array<double, kNumTerms> intra_terms{};
    std::array<double, kNumTerms> inter_terms{};
    double intra_loss = 0.0;
    double inter_loss = 0.0;
    std::optional<EvalSummary> eval;
};

struct TrainRun {
    std::optional<EvalSummary> initial;
    std::vector<EpochRecord> epochs;
};

/// Per-epoch state machine: cluster, build banks, intra phase, aggregation,
/// inter phase, evaluate. Deterministic for a fixed config and seed.
class Trainer {
public:
    Trainer(TrainConfig cfg, FeatureSet train);
    Trainer(TrainConfig cfg, FeatureSet train, FeatureSet query, FeatureSet gallery);

    /// Runs the next epoch and appends its record.
    const EpochRecord& train_epoch();
    /// Runs every remaining epoch.
    const TrainRun& run();

    int epoch() const noexcept { return epoch_; }
    const TrainConfig& config() const noexcept { return cfg_; }
    const ToyEncoder& encoder() const noexcept { return encoder_; }
    ToyEncoder& encoder() noexcept { return encoder_; }
    const TrainRun& log() const noexcept { return run_; }

    /// Banks of the last completed epoch, indexed by Term; unset when the
    /// corresponding clustering produced no clusters.
    const std::array<std::optional<MemoryBank>, kNumTerms>& banks() const noexcept { return banks_; }
    const CrossModalPairing& pairing() const noexcept { return pairing_; }

    /// Assignments of the last epoch: visible, infrared, inter.
    const std::array<ClusterAssignment, 3>& assignments() const noexcept { return assignments_; }

private:
    void run_phase(ecul::Phase phase, int epoch, EpochRecord& record);
    BankSet bank_set() const;
    std::optional<EvalSummary> evaluate_now() const;

    TrainConfig cfg_;
    FeatureSet train_;
    std::optional<FeatureSet> query_;
    std::optional<FeatureSet> gallery_;
    ToyEncoder encoder_;
    std::mt19937_64 rng_;
    int epoch_ = 0;
    TrainRun run_;
    std::array<std::optional<MemoryBank>, kNumTerms> banks_;
    std::vector<std::int32_t> intra_labels_;
    std::vector<std::int32_t> mixed_labels_;
    CrossModalPairing pairing_;
    std::array<ClusterAssignment, 3> assignments_;
};

/// CSV writers for the run directory.
void write_epoch_log(const TrainRun& run, const std::filesystem::path& path);
void write_loss_log(const TrainRun& run, const std::filesystem::path& path);

} // namespace ecul

#endif // ECUL_TRAINER_HPP
