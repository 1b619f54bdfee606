#include "ecul/memory.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

namespace ecul {

namespace {

constexpr char kMemoryMagic[] = "ECULM\n";
constexpr std::size_t kMemoryMagicLen = 6;

void check_unit(const Vector& q, Index dims)
{
    if (q.size() != dims) {
        throw std::invalid_argument("query dimension " + std::to_string(q.size()) + " does not match bank dimension " +
                                    std::to_string(dims));
    }
    if (!q.allFinite() || std::abs(q.norm() - 1.0) > 1e-6) {
        throw std::invalid_argument("memory updates require a unit-norm query");
    }
}

void write_fused(MemoryBank& bank, Index entry, double keep, const Vector& q)
{
    Vector fused = keep * bank.entries.row(entry).transpose() + (1.0 - keep) * q;
    const double n = fused.norm();
    if (!(n > 1e-12)) {
        throw std::domain_error("fused memory entry collapsed to zero");
    }
    bank.entries.row(entry) = (fused / n).transpose();
}

} // namespace

const char* to_string(MemoryLevel l)
{
    return l == MemoryLevel::instance ? "instance" : "cluster";
}

const char* to_string(MemoryScope s)
{
    switch (s) {
    case MemoryScope::visible: return "visible";
    case MemoryScope::infrared: return "infrared";
    case MemoryScope::mixed: return "mixed";
    }
    return "?";
}

Index MemoryBank::entry_of(std::int64_t key) const
{
    if (level == MemoryLevel::cluster) {
        if (key < 0 || key >= static_cast<std::int64_t>(key_map.size())) {
            throw std::out_of_range("unknown cluster key " + std::to_string(key));
        }
        return key_map[static_cast<std::size_t>(key)].front();
    }
    if (key < 0 || key >= static_cast<std::int64_t>(row_to_entry_.size()) ||
        row_to_entry_[static_cast<std::size_t>(key)] < 0) {
        throw std::out_of_range("unknown instance key (row) " + std::to_string(key));
    }
    return row_to_entry_[static_cast<std::size_t>(key)];
}

bool MemoryBank::has_key(std::int64_t key) const
{
    if (level == MemoryLevel::cluster) {
        return key >= 0 && key < static_cast<std::int64_t>(key_map.size());
    }
    return key >= 0 && key < static_cast<std::int64_t>(row_to_entry_.size()) &&
           row_to_entry_[static_cast<std::size_t>(key)] >= 0;
}

void MemoryBank::check_invariants(double tol) const
{
    for (Index k = 0; k < size(); ++k) {
        if (std::abs(entries.row(k).norm() - 1.0) > tol) {
            throw std::logic_error("memory entry " + std::to_string(k) + " is not unit norm");
        }
    }
    std::vector<int> owners(static_cast<std::size_t>(size()), 0);
    for (std::size_t c = 0; c < key_map.size(); ++c) {
        if (key_map[c].empty()) {
            throw std::logic_error("label " + std::to_string(c) + " has no memory entry");
        }
        for (Index e : key_map[c]) {
            ++owners[static_cast<std::size_t>(e)];
            if (entry_label[static_cast<std::size_t>(e)] != static_cast<std::int32_t>(c)) {
                throw std::logic_error("key_map disagrees with entry labels");
            }
        }
    }
    if (std::any_of(owners.begin(), owners.end(), [](int o) { return o != 1; })) {
        throw std::logic_error("orphaned or shared memory entry");
    }
}

MemoryBank init_memory(const FeatureSet& fs, const ClusterAssignment& assignment, MemoryLevel level, MemoryScope scope)
{
    if (static_cast<Index>(assignment.labels.size()) != fs.size()) {
        throw std::invalid_argument("assignment length does not match the feature set");
    }
    if (assignment.num_clusters < 1) {
        throw std::invalid_argument("cannot initialise a memory bank from zero clusters");
    }
    const auto num_labels = static_cast<std::size_t>(assignment.num_clusters);

    MemoryBank bank;
    bank.level = level;
    bank.scope = scope;
    bank.key_map.resize(num_labels);

    if (level == MemoryLevel::cluster) {
        bank.entries.resize(static_cast<Index>(num_labels), fs.dims());
        for (std::size_t c = 0; c < num_labels; ++c) {
            const auto& members = assignment.members[c];
            Vector mean = Vector::Zero(fs.dims());
            for (Index r : members) {
                mean += fs.features.row(r).transpose();
            }
            mean /= static_cast<double>(members.size());
            const double n = mean.norm();
            if (!(n > 1e-12)) {
                throw std::domain_error("degenerate centroid for cluster " + std::to_string(c));
            }
            bank.entries.row(static_cast<Index>(c)) = (mean / n).transpose();
            bank.entry_label.push_back(static_cast<std::int32_t>(c));
            bank.entry_row.push_back(-1);
            // scope decides the nominal modality; mixed clusters take their first member's
            const auto first = static_cast<std::size_t>(members.front());
            bank.entry_modality.push_back(scope == MemoryScope::infrared ? Modality::infrared
                                          : scope == MemoryScope::visible ? Modality::visible
                                                                          : fs.modality[first]);
            bank.entry_camera.push_back(0);
            bank.entry_identity.push_back(kNoIdentity);
            bank.key_map[c].push_back(static_cast<Index>(c));
        }
        return bank;
    }

    bank.row_to_entry_.assign(static_cast<std::size_t>(fs.size()), -1);
    std::vector<Index> rows;
    for (Index i = 0; i < fs.size(); ++i) {
        if (assignment.labels[static_cast<std::size_t>(i)] >= 0) {
            rows.push_back(i);
        }
    }
    bank.entries.resize(static_cast<Index>(rows.size()), fs.dims());
    for (std::size_t e = 0; e < rows.size(); ++e) {
        const Index r = rows[e];
        const auto ru = static_cast<std::size_t>(r);
        const double n = fs.features.row(r).norm();
        if (!(n > 0.0)) {
            throw std::domain_error("zero feature row " + std::to_string(r));
        }
        bank.entries.row(static_cast<Index>(e)) = fs.features.row(r) / n;
        const auto label = assignment.labels[ru];
        bank.entry_label.push_back(label);
        bank.entry_row.push_back(r);
        bank.entry_modality.push_back(fs.modality[ru]);
        bank.entry_camera.push_back(fs.camera[ru]);
        bank.entry_identity.push_back(fs.identity[ru]);
        bank.key_map[static_cast<std::size_t>(label)].push_back(static_cast<Index>(e));
        bank.row_to_entry_[ru] = static_cast<Index>(e);
    }
    return bank;
}

void TsMemSchedule::validate() const
{
    if (switch_epoch < 0 || total_epochs < 1 || switch_epoch > total_epochs) {
        throw std::invalid_argument("TSMem schedule needs 0 <= switch_epoch <= total_epochs and total_epochs >= 1");
    }
}

double TsMemSchedule::retention(int epoch) const
{
    const double g = static_cast<double>(epoch - switch_epoch) / static_cast<double>(total_epochs) + b;
    return std::clamp(g, 0.0, 1.0);
}

void tsmem_update(MemoryBank& bank, std::int64_t key, const Vector& q, int epoch, const TsMemSchedule& sched)
{
    check_unit(q, bank.dims());
    const Index e = bank.entry_of(key);
    if (epoch < sched.switch_epoch) {
        bank.entries.row(e) = q.transpose();
        return;
    }
    write_fused(bank, e, sched.retention(epoch), q);
}

void momentum_update(MemoryBank& bank, std::int64_t key, const Vector& q, double alpha)
{
    if (!(alpha >= 0.0 && alpha <= 1.0)) {
        throw std::invalid_argument("momentum must lie in [0, 1]");
    }
    check_unit(q, bank.dims());
    write_fused(bank, bank.entry_of(key), alpha, q);
}

void replace_update(MemoryBank& bank, std::int64_t key, const Vector& q)
{
    check_unit(q, bank.dims());
    bank.entries.row(bank.entry_of(key)) = q.transpose();
}

const char* to_string(UpdateRule r)
{
    switch (r) {
    case UpdateRule::realtime: return "realtime";
    case UpdateRule::momentum: return "momentum";
    case UpdateRule::tsmem: return "tsmem";
    }
    return "?";
}

UpdateRule parse_update_rule(const std::string& s)
{
    if (s == "realtime") return UpdateRule::realtime;
    if (s == "momentum") return UpdateRule::momentum;
    if (s == "tsmem") return UpdateRule::tsmem;
    throw std::invalid_argument("unknown memory update rule '" + s + "' (realtime, momentum, tsmem)");
}

void MemoryUpdater::apply(MemoryBank& bank, std::int64_t key, const Vector& q, int epoch) const
{
    switch (rule) {
    case UpdateRule::realtime: replace_update(bank, key, q); return;
    case UpdateRule::momentum: momentum_update(bank, key, q, momentum); return;
    case UpdateRule::tsmem: tsmem_update(bank, key, q, epoch, tsmem); return;
    }
}

void save_memory(const MemoryBank& bank, const std::filesystem::path& path)
{
    FeatureSet fs;
    fs.features = bank.entries;
    fs.modality = bank.entry_modality;
    fs.camera = bank.entry_camera;
    fs.identity = bank.entry_identity;
    fs.pseudo_label = bank.entry_label;

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw FormatError(FormatError::Kind::io, "cannot open " + path.string() + " for writing");
    }
    out.write(kMemoryMagic, kMemoryMagicLen);
    out.put(static_cast<char>(bank.level));
    out.put(static_cast<char>(bank.scope));
    write_featureset_body(out, fs);
}

FeatureSet load_memory(const std::filesystem::path& path, MemoryLevel* level, MemoryScope* scope)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw FormatError(FormatError::Kind::io, "cannot open " + path.string());
    }
    char magic[kMemoryMagicLen];
    if (!in.read(magic, kMemoryMagicLen) || std::string(magic, kMemoryMagicLen) != std::string(kMemoryMagic, kMemoryMagicLen)) {
        throw FormatError(FormatError::Kind::bad_header, "bad memory snapshot magic in " + path.string());
    }
    const int l = in.get();
    const int s = in.get();
    if (l < 0 || l > 1 || s < 0 || s > 2) {
        throw FormatError(FormatError::Kind::bad_header, "bad level/scope bytes in " + path.string());
    }
    if (level) *level = static_cast<MemoryLevel>(l);
    if (scope) *scope = static_cast<MemoryScope>(s);
    return read_featureset_body(in);
}

} // namespace ecul
