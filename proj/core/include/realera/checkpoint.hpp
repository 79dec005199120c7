#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "realera/diffusion.hpp"
#include "realera/embedding.hpp"

namespace realera {

// One named float64 tensor inside a checkpoint container.
struct NamedArray {
  std::string name;
  std::vector<std::uint64_t> dims;  // row-major
  std::vector<double> data;

  std::uint64_t element_count() const;
};

// Container layout (all integers little-endian):
//   magic "RLERA1\0" (7 bytes) | version u32 | array count u32 |
//   per array: name length u16, name bytes, rank u8, dims u64 each,
//              float64 data row-major |
//   CRC32 u32 of every preceding byte.
inline constexpr std::uint32_t kCheckpointVersion = 1;

void write_container(const std::filesystem::path& path,
                     const std::vector<NamedArray>& arrays);
std::vector<NamedArray> read_container(const std::filesystem::path& path);

const NamedArray& find_array(const std::vector<NamedArray>& arrays,
                             const std::string& name);
bool has_array(const std::vector<NamedArray>& arrays, const std::string& name);

// Conversions between domain objects and named arrays. Matrices serialize
// row-major; u64 seeds split into two u32 halves stored as doubles.
std::vector<NamedArray> vocabulary_to_arrays(const ConceptVocabulary& vocab);
ConceptVocabulary vocabulary_from_arrays(const std::vector<NamedArray>& arrays);

std::vector<NamedArray> denoiser_to_arrays(const ToyDenoiser& model);
ToyDenoiser denoiser_from_arrays(const std::vector<NamedArray>& arrays);

std::vector<NamedArray> schedule_to_arrays(const NoiseSchedule& schedule);
NoiseSchedule schedule_from_arrays(const std::vector<NamedArray>& arrays);

std::vector<NamedArray> dataset_to_arrays(const LatentDataset& dataset);
LatentDataset dataset_from_arrays(const std::vector<NamedArray>& arrays);

// CRC32 over the vocabulary's serialized bytes; used to refuse evaluating
// checkpoints that were built against different vocabularies.
std::uint32_t vocabulary_hash(const ConceptVocabulary& vocab);

// Bundled write/read of a full model state (vocab + schedule + dataset +
// denoiser) as produced by train-base and erase.
struct ModelState {
  ConceptVocabulary vocab;
  NoiseSchedule schedule;
  LatentDataset dataset;
  ToyDenoiser model;
};

void save_model_state(const std::filesystem::path& path, const ModelState& st);
ModelState load_model_state(const std::filesystem::path& path);

}  // namespace realera
