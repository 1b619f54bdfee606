#ifndef ECUL_MEMORY_HPP
#define ECUL_MEMORY_HPP

#include "ecul/clustering.hpp"
#include "ecul/feature_store.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace ecul {

enum class MemoryLevel : std::uint8_t { instance = 0, cluster = 1 };
enum class MemoryScope : std::uint8_t { visible = 0, infrared = 1, mixed = 2 };

const char* to_string(MemoryLevel l);
const char* to_string(MemoryScope s);

/// Unit-norm proxy vectors keyed by pseudo-label.
///
/// Cluster level: entry c belongs to label c. Instance level: one entry per
/// non-noise source row, addressed by that row index.
struct MemoryBank {
    Matrix entries;
    MemoryLevel level = MemoryLevel::cluster;
    MemoryScope scope = MemoryScope::mixed;
    std::vector<std::int32_t> entry_label;
    std::vector<Index> entry_row;
    std::vector<Modality> entry_modality;
    std::vector<std::uint16_t> entry_camera;
    std::vector<std::int32_t> entry_identity;
    /// label -> entry indices
    std::vector<std::vector<Index>> key_map;

    Index size() const noexcept { return entries.rows(); }
    Index dims() const noexcept { return entries.cols(); }
    int num_labels() const noexcept { return static_cast<int>(key_map.size()); }

    /// Entry addressed by `key`: the label for cluster banks, the source row for
    /// instance banks. Throws std::out_of_range for unknown keys.
    Index entry_of(std::int64_t key) const;
    bool has_key(std::int64_t key) const;

    /// Throws std::logic_error when an entry drifts off the unit sphere or key_map is inconsistent.
    void check_invariants(double tol = 1e-6) const;

private:
    friend MemoryBank init_memory(const FeatureSet&, const ClusterAssignment&, MemoryLevel, MemoryScope);
    std::vector<Index> row_to_entry_;
};

/// Builds a bank from the rows of `fs` labelled by `assignment` (noise and absent
/// rows skipped). Cluster entries are normalised member means.
MemoryBank init_memory(const FeatureSet& fs, const ClusterAssignment& assignment, MemoryLevel level, MemoryScope scope);

/// Retention schedule of the late-phase linear update:
/// g(e) = clamp((e - switch_epoch) / total_epochs + b, 0, 1).
struct TsMemSchedule {
    int switch_epoch = 50;
    int total_epochs = 100;
    double b = 0.1;

    void validate() const;
    double retention(int epoch) const;
};

/// Two-step update: before switch_epoch the entry is replaced by q, afterwards it
/// becomes normalize(g(e) * entry + (1 - g(e)) * q).
void tsmem_update(MemoryBank& bank, std::int64_t key, const Vector& q, int epoch, const TsMemSchedule& sched);

/// entry <- normalize(alpha * entry + (1 - alpha) * q)
void momentum_update(MemoryBank& bank, std::int64_t key, const Vector& q, double alpha);

/// entry <- q
void replace_update(MemoryBank& bank, std::int64_t key, const Vector& q);

enum class UpdateRule { realtime, momentum, tsmem };

const char* to_string(UpdateRule r);
UpdateRule parse_update_rule(const std::string& s);

/// Update policy applied by the trainer to every touched key.
struct MemoryUpdater {
    UpdateRule rule = UpdateRule::tsmem;
    double momentum = 0.2;
    TsMemSchedule tsmem;

    void apply(MemoryBank& bank, std::int64_t key, const Vector& q, int epoch) const;
};

/// Snapshot: magic "ECULM\n", u8 level, u8 scope, then the feature-file body
/// (entries as rows, pseudo_label = entry label).
void save_memory(const MemoryBank& bank, const std::filesystem::path& path);
FeatureSet load_memory(const std::filesystem::path& path, MemoryLevel* level = nullptr, MemoryScope* scope = nullptr);

} // namespace ecul

#endif // ECUL_MEMORY_HPP
