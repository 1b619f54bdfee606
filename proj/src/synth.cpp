#include "ecul/synth.hpp"

#include <random>
#include <stdexcept>

namespace ecul {

void SynthSpec::validate() const
{
    if (num_ids < 2) {
        throw std::invalid_argument("synthetic data needs at least two identities");
    }
    if (num_test_ids < 0 || dims < 2 || cameras_per_modality < 1 || instances_per_camera < 1) {
        throw std::invalid_argument("invalid synthetic layout");
    }
    if (modality_offset_scale < 0.0 || camera_offset_scale < 0.0 || noise_sigma < 0.0 || private_scale < 0.0) {
        throw std::invalid_argument("synthetic scales must be nonnegative");
    }
    if (private_dims < 1 || private_dims > dims) {
        throw std::invalid_argument("private_dims must lie in 1..dims");
    }
}

namespace {

Vector random_unit(std::mt19937_64& rng, Index dims)
{
    std::normal_distribution<double> normal(0.0, 1.0);
    Vector v(dims);
    for (Index i = 0; i < dims; ++i) {
        v[i] = normal(rng);
    }
    return v / v.norm();
}

struct World {
    std::vector<Vector> modality_offset; // [modality]
    std::vector<Vector> camera_offset;   // [camera]
};

void emit_identity(const SynthSpec& spec, const World& world, std::mt19937_64& rng, std::int32_t id,
                   std::vector<Vector>& rows, FeatureSet& meta)
{
    const auto d = static_cast<Index>(spec.dims);
    const Vector anchor = random_unit(rng, d);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (int m = 0; m < 2; ++m) {
        Vector priv = Vector::Zero(d);
        if (spec.private_scale > 0.0) {
            const Vector dir = random_unit(rng, spec.private_dims);
            priv.tail(spec.private_dims) = spec.private_scale * dir;
        }
        for (int c = 0; c < spec.cameras_per_modality; ++c) {
            const int camera = m * spec.cameras_per_modality + c;
            for (int k = 0; k < spec.instances_per_camera; ++k) {
                Vector x = anchor + spec.modality_offset_scale * world.modality_offset[static_cast<std::size_t>(m)] +
                           spec.camera_offset_scale * world.camera_offset[static_cast<std::size_t>(camera)] + priv;
                for (Index i = 0; i < d; ++i) {
                    x[i] += spec.noise_sigma * normal(rng);
                }
                rows.push_back(x);
                meta.modality.push_back(static_cast<Modality>(m));
                meta.camera.push_back(static_cast<std::uint16_t>(camera));
                meta.identity.push_back(id);
                meta.pseudo_label.push_back(kAbsentLabel);
            }
        }
    }
}

FeatureSet assemble(std::vector<Vector> rows, FeatureSet meta, Index dims)
{
    meta.features.resize(static_cast<Index>(rows.size()), dims);
    for (std::size_t r = 0; r < rows.size(); ++r) {
        meta.features.row(static_cast<Index>(r)) = rows[r].transpose();
    }
    return normalize(std::move(meta));
}

} // namespace

DatasetSplit generate(const SynthSpec& spec)
{
    spec.validate();
    std::mt19937_64 rng(spec.seed);
    const auto d = static_cast<Index>(spec.dims);

    World world;
    for (int m = 0; m < 2; ++m) {
        world.modality_offset.push_back(random_unit(rng, d));
    }
    for (int c = 0; c < 2 * spec.cameras_per_modality; ++c) {
        world.camera_offset.push_back(random_unit(rng, d));
    }

    std::vector<Vector> train_rows;
    FeatureSet train_meta;
    for (int id = 0; id < spec.num_ids; ++id) {
        emit_identity(spec, world, rng, id, train_rows, train_meta);
    }

    std::vector<Vector> test_rows;
    FeatureSet test_meta;
    for (int id = 0; id < spec.num_test_ids; ++id) {
        emit_identity(spec, world, rng, spec.num_ids + id, test_rows, test_meta);
    }

    DatasetSplit split;
    split.train = assemble(std::move(train_rows), std::move(train_meta), d);
    if (spec.num_test_ids > 0) {
        const FeatureSet test = assemble(std::move(test_rows), std::move(test_meta), d);
        split.query = test.subset(test.rows_of(Modality::infrared));
        split.gallery = test.subset(test.rows_of(Modality::visible));
    }
    return split;
}

} // namespace ecul
