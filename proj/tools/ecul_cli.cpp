#include "ecul/ablation.hpp"
#include "ecul/config.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>

namespace fs = std::filesystem;
using namespace ecul;

namespace {

int verbosity = 0;

RunConfig load_or_default(const std::string& path)
{
    return path.empty() ? RunConfig{} : load_config(path);
}

void copy_config(const std::string& src, const fs::path& dst)
{
    if (src.empty()) {
        std::ofstream(dst, std::ios::trunc) << "# defaults\n";
        return;
    }
    fs::copy_file(src, dst, fs::copy_options::overwrite_existing);
}

void write_text(const fs::path& path, const std::string& text)
{
    std::ofstream out(path, std::ios::trunc);
    if (!out) {
        throw std::runtime_error("cannot open " + path.string() + " for writing");
    }
    out << text;
}

std::string config_help()
{
    std::ostringstream os;
    os << "\nConfig keys (flat 'key = value', '#' comments, unknown keys rejected):\n";
    for (const auto& [k, doc] : config_keys()) {
        os << "  " << std::left << std::setw(30) << k << doc << '\n';
    }
    return os.str();
}

int cmd_synth(const std::string& spec_path, const std::string& out, std::optional<std::uint64_t> seed)
{
    RunConfig cfg = load_or_default(spec_path);
    if (seed) cfg.synth.seed = *seed;
    const DatasetSplit split = generate(cfg.synth);
    const fs::path base(out);
    if (base.has_parent_path()) fs::create_directories(base.parent_path());
    save_featureset(split.train, base);
    if (split.query.size() > 0) {
        save_featureset(split.query, base.string() + ".query");
        save_featureset(split.gallery, base.string() + ".gallery");
    }
    std::cout << "train " << split.train.size() << " rows, query " << split.query.size() << ", gallery "
              << split.gallery.size() << ", dims " << split.train.dims() << '\n';
    return 0;
}

int cmd_cluster(const std::string& features, int epoch, const std::string& mode_name, const std::string& config,
                const std::string& dump)
{
    const RunConfig cfg = load_or_default(config);
    const ClusterMode mode = parse_cluster_mode(mode_name);
    FeatureSet data = load_featureset(features);
    Matrix jaccard;
    const ClusterAssignment a =
        cluster_epoch(normalize(data), cfg.train.schedule, epoch, mode, dump.empty() ? nullptr : &jaccard);
    std::cout << "mode " << to_string(mode) << " epoch " << epoch << " eps " << cfg.train.schedule.eps_at(epoch)
              << '\n';
    std::cout << "clusters " << a.num_clusters << '\n' << "noise_fraction " << a.noise_fraction() << '\n';
    const bool has_ids = std::none_of(data.identity.begin(), data.identity.end(), [](auto id) { return id < 0; });
    if (has_ids) {
        const auto s = clustering_scores(a.labels, data.identity);
        std::cout << "ari " << s.ari << '\n' << "nmi " << s.nmi << '\n';
    }
    data = assign_pseudo_labels(std::move(data), a);
    save_featureset(data, features);
    if (!dump.empty()) {
        save_square_matrix(jaccard, dump);
    }
    return 0;
}

int cmd_train(const std::string& config, const std::string& features, const std::string& out,
              const std::string& query, const std::string& gallery, std::optional<std::uint64_t> seed,
              const std::string& dump_memory, const std::string& dump_pairs)
{
    RunConfig cfg = load_or_default(config);
    if (seed) cfg.train.seed = *seed;
    if (query.empty() != gallery.empty()) {
        throw std::invalid_argument("--query and --gallery must be given together");
    }
    FeatureSet train = load_featureset(features);
    const fs::path dir(out);
    fs::create_directories(dir);
    copy_config(config, dir / "config.cfg");
    write_text(dir / "effective.cfg", format_config(cfg));

    std::optional<Trainer> trainer;
    if (query.empty()) {
        trainer.emplace(cfg.train, std::move(train));
    } else {
        trainer.emplace(cfg.train, std::move(train), load_featureset(query), load_featureset(gallery));
    }
    while (trainer->epoch() < cfg.train.epochs) {
        const EpochRecord& r = trainer->train_epoch();
        if (verbosity > 0) {
            std::cerr << "epoch " << r.epoch << (r.skipped ? " skipped" : "") << " clusters " << r.clusters[0] << '/'
                      << r.clusters[1] << '/' << r.clusters[2] << " pairs " << r.pairs << " loss " << r.intra_loss
                      << '/' << r.inter_loss;
            if (r.eval) std::cerr << " rank1 " << r.eval->rank1 << " mAP " << r.eval->map;
            std::cerr << '\n';
        }
    }
    write_epoch_log(trainer->log(), dir / "log.csv");
    write_loss_log(trainer->log(), dir / "loss.csv");
    save_encoder(trainer->encoder(), dir / "encoder.bin");
    std::vector<fs::path> memory_dirs{dir};
    if (!dump_memory.empty()) {
        fs::create_directories(dump_memory);
        memory_dirs.emplace_back(dump_memory);
    }
    for (int t = 0; t < kNumTerms; ++t) {
        const auto& bank = trainer->banks()[static_cast<std::size_t>(t)];
        if (!bank) continue;
        for (const auto& d : memory_dirs) {
            save_memory(*bank, d / (std::string("memory_") + to_string(static_cast<Term>(t)) + ".bin"));
        }
    }
    save_pairs_csv(trainer->pairing(), dir / "pairs.csv");
    if (!dump_pairs.empty()) {
        const fs::path p(dump_pairs);
        if (p.has_parent_path()) fs::create_directories(p.parent_path());
        save_pairs_csv(trainer->pairing(), p);
    }

    const auto& log = trainer->log();
    if (!log.epochs.empty() && log.epochs.back().eval) {
        const auto& e = *log.epochs.back().eval;
        std::cout << "final rank1 " << e.rank1 << " rank5 " << e.rank5 << " mAP " << e.map << " mINP " << e.minp
                  << '\n';
    }
    std::cout << "wrote " << dir.string() << '\n';
    return 0;
}

int cmd_eval(const std::string& query, const std::string& gallery, const std::string& encoder, bool filter,
             const std::string& out)
{
    const FeatureSet q = load_featureset(query);
    const FeatureSet g = load_featureset(gallery);
    std::optional<ToyEncoder> enc;
    if (!encoder.empty()) enc = load_encoder(encoder);
    const EvalResult r = evaluate(q, g, enc ? &*enc : nullptr, EvalOptions{filter});
    std::cout << std::fixed << std::setprecision(2);
    std::cout << "queries " << r.per_query.size() << '\n';
    for (int k : {1, 5, 10, 20}) {
        if (static_cast<std::size_t>(k) <= r.cmc.size()) {
            std::cout << std::left << std::setw(8) << ("rank" + std::to_string(k)) << 100.0 * r.rank(k) << '\n';
        }
    }
    std::cout << std::left << std::setw(8) << "mAP" << 100.0 * r.map << '\n';
    std::cout << std::left << std::setw(8) << "mINP" << 100.0 * r.minp << '\n';
    const fs::path path(out);
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    save_eval_csv(r, path);
    return 0;
}

int cmd_ablate(const std::string& config, const std::string& out, std::optional<std::uint64_t> seed)
{
    RunConfig cfg = load_or_default(config);
    if (seed) cfg.ablate_seed_base = *seed;
    const fs::path dir(out);
    fs::create_directories(dir);
    copy_config(config, dir / "config.cfg");
    write_text(dir / "effective.cfg", format_config(cfg));
    const auto report = run_ablate(cfg, [](const std::string& name, std::uint64_t s, double r1) {
        if (verbosity > 0) std::cerr << name << " seed " << s << " rank1 " << r1 << '\n';
    });
    write_ablation_table(report, std::cout);
    std::ofstream table(dir / "ablation.txt", std::ios::trunc);
    write_ablation_table(report, table);
    write_ablation_csv(report, dir / "ablation.csv");
    return 0;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Unsupervised cross-modal pseudo-labelling and contrastive memory training on embeddings"};
    app.require_subcommand(1);
    app.footer(config_help());
    app.add_flag("-v,--verbose", verbosity, "progress on stderr (repeatable)");

    std::optional<std::uint64_t> seed;
    std::string config, features, out, query, gallery, encoder, mode, dump, dump_memory, dump_pairs;
    int epoch = 0;
    bool filter = false;

    auto* synth = app.add_subcommand("synth", "generate a synthetic train/query/gallery split");
    synth->add_option("--spec", config, "config file with synth.* keys");
    synth->add_option("--out", out, "train feature file; query and gallery get .query/.gallery suffixes")->required();
    synth->add_option("--seed", seed, "override synth.seed");

    auto* cluster = app.add_subcommand("cluster", "cluster a feature file and write its pseudo labels back");
    cluster->add_option("--features", features, "feature file (updated in place)")->required()->check(CLI::ExistingFile);
    cluster->add_option("--epoch", epoch, "epoch for the eps schedule")->required();
    cluster->add_option("--mode", mode, "intra_visible | intra_infrared | inter")->required();
    cluster->add_option("--config", config, "config file with cluster.* keys");
    cluster->add_option("--dump-jaccard", dump, "write the Jaccard matrix of the clustered subset");

    auto* train = app.add_subcommand("train", "train the encoder and write a run directory");
    train->add_option("--config", config, "config file");
    train->add_option("--features", features, "training feature file")->required()->check(CLI::ExistingFile);
    train->add_option("--out", out, "run directory")->required();
    train->add_option("--query", query, "query feature file for per-epoch evaluation")->check(CLI::ExistingFile);
    train->add_option("--gallery", gallery, "gallery feature file")->check(CLI::ExistingFile);
    train->add_option("--seed", seed, "override train.seed");
    train->add_option("--dump-memory", dump_memory, "extra directory for the final memory bank snapshots");
    train->add_option("--dump-pairs", dump_pairs, "extra CSV path for the final cross-modal pairing");

    auto* eval = app.add_subcommand("eval", "rank gallery rows for every query and report CMC, mAP, mINP");
    eval->add_option("--query", query, "query feature file")->required()->check(CLI::ExistingFile);
    eval->add_option("--gallery", gallery, "gallery feature file")->required()->check(CLI::ExistingFile);
    eval->add_option("--encoder", encoder, "encoder weights; raw features when absent")->check(CLI::ExistingFile);
    eval->add_flag("--filter-same-camera", filter, "drop same-identity gallery rows from the query's camera");
    eval->add_option("--out", out, "per-query CSV")->default_val("eval.csv");

    auto* ablate = app.add_subcommand("ablate", "run the six component variants over several seeds");
    ablate->add_option("--config", config, "config file");
    ablate->add_option("--out", out, "output directory")->required();
    ablate->add_option("--seed", seed, "override ablate.seed_base");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*synth) return cmd_synth(config, out, seed);
        if (*cluster) return cmd_cluster(features, epoch, mode, config, dump);
        if (*train) return cmd_train(config, features, out, query, gallery, seed, dump_memory, dump_pairs);
        if (*eval) return cmd_eval(query, gallery, encoder, filter, out);
        if (*ablate) return cmd_ablate(config, out, seed);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 1;
}
