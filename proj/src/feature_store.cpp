#include "ecul/feature_store.hpp"

#include <bit>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <set>

namespace ecul {

namespace {

constexpr char kMagic[] = "ECUL1\n";
constexpr std::size_t kMagicLen = 6;

template <typename T>
void put_le(std::ostream& out, T value)
{
    using U = std::make_unsigned_t<T>;
    auto u = static_cast<U>(value);
    char buf[sizeof(T)];
    for (std::size_t b = 0; b < sizeof(T); ++b) {
        buf[b] = static_cast<char>((u >> (8 * b)) & 0xFF);
    }
    out.write(buf, sizeof(T));
}

template <typename T>
T get_le(std::istream& in, const char* what)
{
    unsigned char buf[sizeof(T)];
    if (!in.read(reinterpret_cast<char*>(buf), sizeof(T))) {
        throw FormatError(FormatError::Kind::length_mismatch,
                          std::string("truncated file while reading ") + what);
    }
    std::make_unsigned_t<T> u = 0;
    for (std::size_t b = 0; b < sizeof(T); ++b) {
        u |= static_cast<std::make_unsigned_t<T>>(buf[b]) << (8 * b);
    }
    return static_cast<T>(u);
}

void put_f32(std::ostream& out, double v)
{
    put_le<std::uint32_t>(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
}

float get_f32(std::istream& in)
{
    return std::bit_cast<float>(get_le<std::uint32_t>(in, "feature matrix"));
}

} // namespace

const char* to_string(Modality m)
{
    return m == Modality::visible ? "visible" : "infrared";
}

void FeatureSet::validate() const
{
    const auto n = static_cast<std::size_t>(features.rows());
    if (n < 1) {
        throw std::invalid_argument("empty dataset");
    }
    if (features.cols() < 2) {
        throw std::invalid_argument("feature dimension must be at least 2");
    }
    if (modality.size() != n || camera.size() != n || identity.size() != n || pseudo_label.size() != n) {
        throw std::invalid_argument("label arrays must have one entry per feature row");
    }
}

std::vector<Index> FeatureSet::rows_of(Modality m) const
{
    std::vector<Index> rows;
    for (Index i = 0; i < size(); ++i) {
        if (modality[static_cast<std::size_t>(i)] == m) {
            rows.push_back(i);
        }
    }
    return rows;
}

FeatureSet FeatureSet::subset(const std::vector<Index>& rows) const
{
    FeatureSet out;
    out.features.resize(static_cast<Index>(rows.size()), dims());
    for (std::size_t r = 0; r < rows.size(); ++r) {
        const auto src = static_cast<std::size_t>(rows[r]);
        out.features.row(static_cast<Index>(r)) = features.row(rows[r]);
        out.modality.push_back(modality[src]);
        out.camera.push_back(camera[src]);
        out.identity.push_back(identity[src]);
        out.pseudo_label.push_back(pseudo_label[src]);
    }
    return out;
}

int FeatureSet::num_pseudo_labels() const
{
    std::set<std::int32_t> seen;
    for (auto l : pseudo_label) {
        if (l >= 0) {
            seen.insert(l);
        }
    }
    return static_cast<int>(seen.size());
}

FeatureSet make_featureset(Matrix features)
{
    FeatureSet fs;
    const auto n = static_cast<std::size_t>(features.rows());
    fs.features = std::move(features);
    fs.modality.assign(n, Modality::visible);
    fs.camera.assign(n, 0);
    fs.identity.assign(n, kNoIdentity);
    fs.pseudo_label.assign(n, kAbsentLabel);
    return fs;
}

FeatureSet normalize(FeatureSet fs)
{
    fs.features = normalized_rows(fs.features);
    return fs;
}

std::vector<std::int32_t> relabel_contiguous(const std::vector<std::int32_t>& labels)
{
    std::map<std::int32_t, std::int32_t> remap;
    std::vector<std::int32_t> out;
    out.reserve(labels.size());
    for (auto l : labels) {
        if (l < 0) {
            out.push_back(l);
            continue;
        }
        auto [it, inserted] = remap.try_emplace(l, static_cast<std::int32_t>(remap.size()));
        out.push_back(it->second);
    }
    return out;
}

void write_featureset_body(std::ostream& out, const FeatureSet& fs)
{
    fs.validate();
    const auto n = static_cast<std::uint64_t>(fs.size());
    const auto d = static_cast<std::uint64_t>(fs.dims());
    put_le(out, n);
    put_le(out, d);
    for (Index i = 0; i < fs.size(); ++i) {
        for (Index j = 0; j < fs.dims(); ++j) {
            put_f32(out, fs.features(i, j));
        }
    }
    for (auto m : fs.modality) {
        put_le(out, static_cast<std::uint8_t>(m));
    }
    for (auto c : fs.camera) {
        put_le(out, c);
    }
    for (auto id : fs.identity) {
        put_le(out, id);
    }
    for (auto l : fs.pseudo_label) {
        put_le(out, l);
    }
}

FeatureSet read_featureset_body(std::istream& in)
{
    const auto n = get_le<std::uint64_t>(in, "header");
    const auto d = get_le<std::uint64_t>(in, "header");
    if (n == 0) {
        throw FormatError(FormatError::Kind::empty, "empty dataset");
    }
    if (d < 2 || n > (1ULL << 32) || d > (1ULL << 20)) {
        throw FormatError(FormatError::Kind::bad_header,
                          "implausible header N=" + std::to_string(n) + " D=" + std::to_string(d));
    }

    FeatureSet fs;
    fs.features.resize(static_cast<Index>(n), static_cast<Index>(d));
    for (std::uint64_t i = 0; i < n; ++i) {
        for (std::uint64_t j = 0; j < d; ++j) {
            const float v = get_f32(in);
            if (!std::isfinite(v)) {
                throw FormatError(FormatError::Kind::non_finite,
                                  "non-finite value at row " + std::to_string(i) + " column " + std::to_string(j));
            }
            fs.features(static_cast<Index>(i), static_cast<Index>(j)) = v;
        }
    }
    fs.modality.reserve(n);
    for (std::uint64_t i = 0; i < n; ++i) {
        const auto m = get_le<std::uint8_t>(in, "modality block");
        if (m > 1) {
            throw FormatError(FormatError::Kind::bad_header, "modality byte out of range at row " + std::to_string(i));
        }
        fs.modality.push_back(static_cast<Modality>(m));
    }
    for (std::uint64_t i = 0; i < n; ++i) {
        fs.camera.push_back(get_le<std::uint16_t>(in, "camera block"));
    }
    for (std::uint64_t i = 0; i < n; ++i) {
        fs.identity.push_back(get_le<std::int32_t>(in, "identity block"));
    }
    for (std::uint64_t i = 0; i < n; ++i) {
        fs.pseudo_label.push_back(get_le<std::int32_t>(in, "pseudo-label block"));
    }
    return fs;
}

void save_featureset(const FeatureSet& fs, const std::filesystem::path& path)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw FormatError(FormatError::Kind::io, "cannot open " + path.string() + " for writing");
    }
    out.write(kMagic, kMagicLen);
    write_featureset_body(out, fs);
    if (!out) {
        throw FormatError(FormatError::Kind::io, "write failed for " + path.string());
    }
}

FeatureSet load_featureset(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw FormatError(FormatError::Kind::io, "cannot open " + path.string());
    }
    char magic[kMagicLen];
    if (!in.read(magic, kMagicLen) || std::string(magic, kMagicLen) != std::string(kMagic, kMagicLen)) {
        throw FormatError(FormatError::Kind::bad_header, "bad magic in " + path.string());
    }
    FeatureSet fs = read_featureset_body(in);
    if (in.peek() != std::char_traits<char>::eof()) {
        throw FormatError(FormatError::Kind::length_mismatch, "trailing bytes after label blocks in " + path.string());
    }
    return fs;
}

void save_square_matrix(const Matrix& m, const std::filesystem::path& path)
{
    if (m.rows() != m.cols()) {
        throw std::invalid_argument("matrix is not square");
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw FormatError(FormatError::Kind::io, "cannot open " + path.string() + " for writing");
    }
    put_le(out, static_cast<std::uint64_t>(m.rows()));
    for (Index i = 0; i < m.rows(); ++i) {
        for (Index j = 0; j < m.cols(); ++j) {
            put_f32(out, m(i, j));
        }
    }
}

Matrix load_square_matrix(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw FormatError(FormatError::Kind::io, "cannot open " + path.string());
    }
    const auto n = static_cast<Index>(get_le<std::uint64_t>(in, "header"));
    Matrix m(n, n);
    for (Index i = 0; i < n; ++i) {
        for (Index j = 0; j < n; ++j) {
            m(i, j) = get_f32(in);
        }
    }
    return m;
}

} // namespace ecul
