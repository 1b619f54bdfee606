#include "ecul/ablation.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <sstream>

namespace ecul {

std::vector<AblationVariant> ablation_variants(const TrainConfig& full)
{
    TrainConfig base = full;
    base.inter_phase = false;
    base.loss.weight(Term::vis_instance) = 0.0;
    base.loss.weight(Term::ir_instance) = 0.0;
    base.loss.weight(Term::mix_instance) = 0.0;
    base.aggregation = AggregationMode::none;
    base.schedule.group_aware = false;
    base.memory.rule = UpdateRule::realtime;

    TrainConfig inter = base;
    inter.inter_phase = full.inter_phase;
    inter.loss = full.loss;
    inter.instance_selection = full.instance_selection;

    TrainConfig paired = inter;
    paired.aggregation = AggregationMode::paired_mean;

    TrainConfig cross = inter;
    cross.aggregation = full.aggregation == AggregationMode::none ? AggregationMode::cross : full.aggregation;

    TrainConfig emcc = cross;
    emcc.schedule.group_aware = true;

    return {
        {"baseline", base},       {"+inter", inter}, {"+paired_mean", paired},
        {"+cross_update", cross}, {"+emcc", emcc},   {"+tsmem", full},
    };
}

double mean_of(const std::vector<double>& v)
{
    if (v.empty()) return 0.0;
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double stddev_of(const std::vector<double>& v)
{
    if (v.size() < 2) return 0.0;
    const double m = mean_of(v);
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return std::sqrt(s / static_cast<double>(v.size() - 1));
}

double AblationRow::mean_rank1() const { return mean_of(rank1); }

AblationReport run_ablate(const RunConfig& cfg, const AblationProgress& progress)
{
    cfg.validate();
    AblationReport report;
    for (int s = 0; s < cfg.ablate_seeds; ++s) {
        report.seeds.push_back(cfg.ablate_seed_base + static_cast<std::uint64_t>(s));
    }
    const auto variants = ablation_variants(cfg.train);
    for (const auto& v : variants) {
        report.rows.push_back({v.name, {}, {}, {}});
    }
    for (auto seed : report.seeds) {
        SynthSpec spec = cfg.synth;
        spec.seed = seed;
        const DatasetSplit data = generate(spec);
        for (std::size_t i = 0; i < variants.size(); ++i) {
            TrainConfig tc = variants[i].train;
            tc.seed = seed;
            Trainer trainer(tc, data.train, data.query, data.gallery);
            const TrainRun& run = trainer.run();
            const EpochRecord& last = run.epochs.back();
            auto& row = report.rows[i];
            row.rank1.push_back(last.eval ? last.eval->rank1 : 0.0);
            row.map.push_back(last.eval ? last.eval->map : 0.0);
            row.ari.push_back(last.ari[2]);
            if (progress) progress(row.name, seed, row.rank1.back());
        }
    }
    return report;
}

void write_ablation_table(const AblationReport& report, std::ostream& out)
{
    out << std::left << std::setw(16) << "variant" << std::right << std::setw(18) << "rank1" << std::setw(18)
        << "mAP" << std::setw(18) << "ARI(inter)" << '\n';
    out << std::fixed << std::setprecision(2);
    auto cell = [&](const std::vector<double>& v, double scale) {
        std::ostringstream c;
        c << std::fixed << std::setprecision(2) << scale * mean_of(v) << " +- " << scale * stddev_of(v);
        out << std::setw(18) << c.str();
    };
    for (const auto& r : report.rows) {
        out << std::left << std::setw(16) << r.name << std::right;
        cell(r.rank1, 100.0);
        cell(r.map, 100.0);
        cell(r.ari, 1.0);
        out << '\n';
    }
    out.unsetf(std::ios::floatfield);
}

void write_ablation_csv(const AblationReport& report, const std::filesystem::path& path)
{
    std::ofstream out(path, std::ios::trunc);
    if (!out) {
        throw std::runtime_error("cannot open " + path.string() + " for writing");
    }
    out << std::setprecision(9);
    out << "variant,seed,rank1,map,ari\n";
    for (const auto& r : report.rows) {
        for (std::size_t s = 0; s < r.rank1.size(); ++s) {
            out << r.name << ',' << report.seeds[s] << ',' << r.rank1[s] << ',' << r.map[s] << ',' << r.ari[s] << '\n';
        }
    }
    out << "\nvariant,rank1_mean,rank1_std,map_mean,map_std,ari_mean,ari_std\n";
    for (const auto& r : report.rows) {
        out << r.name << ',' << mean_of(r.rank1) << ',' << stddev_of(r.rank1) << ',' << mean_of(r.map) << ','
            << stddev_of(r.map) << ',' << mean_of(r.ari) << ',' << stddev_of(r.ari) << '\n';
    }
}

} // namespace ecul
