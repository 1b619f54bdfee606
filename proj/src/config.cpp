#include "ecul/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>

namespace ecul {

namespace {

struct Key {
    std::string name;
    std::string doc;
    std::function<void(RunConfig&, const std::string&)> set;
    std::function<std::string(const RunConfig&)> get;
};

template <class T>
T parse_number(const std::string& key, const std::string& text)
{
    T value{};
    const char* first = text.data();
    const char* last = text.data() + text.size();
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc{} || ptr != last) {
        throw ConfigError(key, "cannot parse '" + text + "'");
    }
    return value;
}

bool parse_bool(const std::string& key, const std::string& text)
{
    if (text == "true" || text == "1" || text == "on") return true;
    if (text == "false" || text == "0" || text == "off") return false;
    throw ConfigError(key, "expected true/false, got '" + text + "'");
}

std::string show(double v)
{
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

template <class T>
std::string show(T v)
    requires std::is_integral_v<T>
{
    return std::to_string(v);
}

std::string show(bool v) { return v ? "true" : "false"; }

#define ECUL_NUM(KEY, DOC, FIELD, TYPE)                                                                     \
    Key{KEY, DOC, [](RunConfig& c, const std::string& s) { c.FIELD = parse_number<TYPE>(KEY, s); },         \
        [](const RunConfig& c) { return show(c.FIELD); }}
#define ECUL_BOOL(KEY, DOC, FIELD)                                                                          \
    Key{KEY, DOC, [](RunConfig& c, const std::string& s) { c.FIELD = parse_bool(KEY, s); },                 \
        [](const RunConfig& c) { return show(c.FIELD); }}
#define ECUL_WEIGHT(KEY, TERM)                                                                              \
    Key{KEY, "weight of the " #TERM " contrastive term (0 disables it)",                                     \
        [](RunConfig& c, const std::string& s) { c.train.loss.weight(Term::TERM) = parse_number<double>(KEY, s); }, \
        [](const RunConfig& c) { return show(c.train.loss.weight(Term::TERM)); }}

const std::vector<Key>& keys()
{
    static const std::vector<Key> table = {
        ECUL_NUM("synth.num_ids", "training identities", synth.num_ids, int),
        ECUL_NUM("synth.num_test_ids", "held-out identities for query/gallery", synth.num_test_ids, int),
        ECUL_NUM("synth.dims", "input feature dimension", synth.dims, int),
        ECUL_NUM("synth.cameras_per_modality", "cameras per modality", synth.cameras_per_modality, int),
        ECUL_NUM("synth.instances_per_camera", "samples per (identity, camera)", synth.instances_per_camera, int),
        ECUL_NUM("synth.modality_offset_scale", "shared per-modality translation", synth.modality_offset_scale, double),
        ECUL_NUM("synth.camera_offset_scale", "shared per-camera translation", synth.camera_offset_scale, double),
        ECUL_NUM("synth.noise_sigma", "within-identity Gaussian spread", synth.noise_sigma, double),
        ECUL_NUM("synth.private_scale", "per-(identity, modality) component magnitude, 0 disables", synth.private_scale, double),
        ECUL_NUM("synth.private_dims", "coordinates spanned by the private component", synth.private_dims, int),
        ECUL_NUM("synth.seed", "generator seed", synth.seed, std::uint64_t),

        ECUL_NUM("train.epochs", "epochs; also the memory schedule's total and the eps schedule length", train.epochs, int),
        ECUL_NUM("train.iterations", "optimisation steps per phase per epoch", train.iterations, int),
        ECUL_NUM("train.ids_per_batch", "pseudo-identities per batch block", train.ids_per_batch, int),
        ECUL_NUM("train.instances_per_id", "instances per pseudo-identity", train.instances_per_id, int),
        ECUL_NUM("train.lr", "base learning rate", train.lr, double),
        ECUL_NUM("train.lr_step", "epochs between learning-rate decays", train.lr_step, int),
        ECUL_NUM("train.lr_decay", "multiplicative learning-rate decay", train.lr_decay, double),
        ECUL_NUM("train.alpha", "cross-modal aggregation retention", train.alpha, double),
        ECUL_NUM("train.seed", "training seed (encoder init, sampling)", train.seed, std::uint64_t),
        ECUL_NUM("train.output_dims", "encoder output dimension", train.output_dims, int),
        ECUL_BOOL("train.identity_init", "start from a truncated identity instead of a random projection", train.identity_init),
        ECUL_NUM("train.jitter_sigma", "Gaussian input jitter used as augmentation, 0 disables", train.jitter_sigma, double),
        ECUL_BOOL("train.inter_phase", "run the inter-modality phase with mixed memories", train.inter_phase),
        ECUL_BOOL("train.instance_selection", "keep only paired cross-modal instances as mixed positives", train.instance_selection),
        Key{"train.aggregation", "none | paired_mean | cross",
            [](RunConfig& c, const std::string& s) {
                try {
                    c.train.aggregation = parse_aggregation_mode(s);
                } catch (const std::exception& e) {
                    throw ConfigError("train.aggregation", e.what());
                }
            },
            [](const RunConfig& c) { return std::string(to_string(c.train.aggregation)); }},

        Key{"memory.rule", "realtime | momentum | tsmem",
            [](RunConfig& c, const std::string& s) {
                try {
                    c.train.memory.rule = parse_update_rule(s);
                } catch (const std::exception& e) {
                    throw ConfigError("memory.rule", e.what());
                }
            },
            [](const RunConfig& c) { return std::string(to_string(c.train.memory.rule)); }},
        ECUL_NUM("memory.momentum", "retention of the momentum rule", train.memory.momentum, double),
        ECUL_NUM("memory.switch_epoch", "first epoch of the blending step", train.memory.tsmem.switch_epoch, int),
        ECUL_NUM("memory.b", "retention offset of the blending step", train.memory.tsmem.b, double),

        ECUL_NUM("cluster.eps_start", "DBSCAN eps at epoch 0 (placeholder default)", train.schedule.eps_start, double),
        ECUL_NUM("cluster.eps_end", "DBSCAN eps at the last epoch (placeholder default)", train.schedule.eps_end, double),
        ECUL_NUM("cluster.k1", "reciprocal neighbourhood size (placeholder default)", train.schedule.k1, int),
        ECUL_NUM("cluster.k2_intra", "per-camera cap in intra clustering (placeholder default)", train.schedule.k2_intra, int),
        ECUL_NUM("cluster.k2_inter", "per-(modality, camera) cap in inter clustering (placeholder default)", train.schedule.k2_inter, int),
        ECUL_NUM("cluster.k3", "extension window (placeholder default)", train.schedule.k3, int),
        ECUL_NUM("cluster.min_samples", "DBSCAN core threshold, self included", train.schedule.min_samples, int),
        ECUL_BOOL("cluster.group_aware", "camera/modality-grouped extension; false averages the plain top neighbours", train.schedule.group_aware),

        ECUL_NUM("loss.tau", "softmax temperature", train.loss.tau, double),
        ECUL_WEIGHT("loss.w_vis_cluster", vis_cluster),
        ECUL_WEIGHT("loss.w_vis_instance", vis_instance),
        ECUL_WEIGHT("loss.w_ir_cluster", ir_cluster),
        ECUL_WEIGHT("loss.w_ir_instance", ir_instance),
        ECUL_WEIGHT("loss.w_mix_cluster", mix_cluster),
        ECUL_WEIGHT("loss.w_mix_instance", mix_instance),

        ECUL_NUM("ablate.seeds", "seeds per ablation variant", ablate_seeds, int),
        ECUL_NUM("ablate.seed_base", "first ablation seed", ablate_seed_base, std::uint64_t),
    };
    return table;
}

#undef ECUL_NUM
#undef ECUL_BOOL
#undef ECUL_WEIGHT

std::string trim(const std::string& s)
{
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

void sync(RunConfig& cfg)
{
    cfg.train.schedule.epochs = cfg.train.epochs;
    cfg.train.memory.tsmem.total_epochs = cfg.train.epochs;
}

} // namespace

void RunConfig::validate() const
{
    synth.validate();
    train.validate();
    if (ablate_seeds < 1) {
        throw ConfigError("ablate.seeds", "must be at least 1");
    }
}

void set_config_value(RunConfig& cfg, const std::string& key, const std::string& value)
{
    for (const auto& k : keys()) {
        if (k.name == key) {
            k.set(cfg, value);
            sync(cfg);
            return;
        }
    }
    throw ConfigError(key, "unknown key");
}

RunConfig parse_config(const std::string& text, const std::string& origin)
{
    RunConfig cfg;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.resize(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        const std::string where = origin + ":" + std::to_string(lineno);
        if (eq == std::string::npos) {
            throw ConfigError(where, "expected 'key = value'");
        }
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        try {
            set_config_value(cfg, key, value);
        } catch (const ConfigError& e) {
            throw ConfigError(where, e.what());
        }
    }
    sync(cfg);
    try {
        cfg.validate();
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception& e) {
        throw ConfigError(origin, e.what());
    }
    return cfg;
}

RunConfig load_config(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) {
        throw ConfigError(path.string(), "cannot open config file");
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str(), path.string());
}

std::string format_config(const RunConfig& cfg)
{
    std::ostringstream out;
    for (const auto& k : keys()) {
        out << k.name << " = " << k.get(cfg) << '\n';
    }
    return out.str();
}

const std::vector<std::pair<std::string, std::string>>& config_keys()
{
    static const auto docs = [] {
        std::vector<std::pair<std::string, std::string>> v;
        for (const auto& k : keys()) v.emplace_back(k.name, k.doc);
        return v;
    }();
    return docs;
}

} // namespace ecul
