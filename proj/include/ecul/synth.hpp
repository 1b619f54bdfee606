#ifndef ECUL_SYNTH_HPP
#define ECUL_SYNTH_HPP

#include "ecul/feature_store.hpp"

#include <cstdint>

namespace ecul {

/// Seeded generator of multi-camera, two-modality identity clusters.
///
/// Sample = normalize(anchor_id + modality_offset + camera_offset + private + noise)
/// where the offsets are fixed random directions shared by every identity and
/// `private` is an optional per-(identity, modality) component confined to a
/// fixed subspace of `private_dims` coordinates.
///
/// Visible rows use cameras 0..c-1, infrared rows cameras c..2c-1. Training
/// identities are 0..num_ids-1; held-out identities follow. Queries are the
/// held-out infrared rows, the gallery their visible rows.
struct SynthSpec {
    int num_ids = 20;
    int num_test_ids = 20;
    int dims = 32;
    int cameras_per_modality = 2;
    int instances_per_camera = 4;
    double modality_offset_scale = 1.0;
    double camera_offset_scale = 0.3;
    double noise_sigma = 0.05;
    double private_scale = 0.0;
    int private_dims = 8;
    std::uint64_t seed = 0;

    void validate() const;
};

DatasetSplit generate(const SynthSpec& spec);

} // namespace ecul

#endif // ECUL_SYNTH_HPP
