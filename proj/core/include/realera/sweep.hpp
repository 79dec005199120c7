#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "realera/config.hpp"
#include "realera/csv.hpp"
#include "realera/diffusion.hpp"
#include "realera/evaluation.hpp"

namespace realera {

struct SweepAxis {
  std::string name;  // d1, d2, d1_anchor, s1, s2, m, n, lambda1, ridge, ...
  std::vector<double> values;
};
using SweepGrid = std::vector<SweepAxis>;

// "m=1,5,10;n=0,80" -> two axes. Axis names are validated against the set of
// sweepable parameters; values must be numeric.
SweepGrid parse_grid(const std::string& text);

struct SweepPoint {
  std::size_t index = 0;  // row-major position in the cartesian product
  std::vector<std::pair<std::string, double>> params;  // axis order
};

// Cartesian product in row-major order (last axis fastest).
std::vector<SweepPoint> expand_grid(const SweepGrid& grid);

// Point parameters applied to a copy of the run's erasure spec. n = 0 maps
// to use_beyond = false (the sampler itself requires n >= 1).
ErasureSpec apply_point(const ErasureSpec& spec, const SweepPoint& point);

struct SweepRow {
  SweepPoint point;
  std::uint64_t erasure_seed = 0;
  std::uint64_t evaluation_seed = 0;
  bool failed = false;
  std::string error;
  EvalReport erased;  // valid when !failed
};

struct SweepOutcome {
  std::vector<SweepRow> rows;
  CsvTable csv;  // columns: axes..., acc_e, acc_s, acc_g, h_o, acc_s_minus_e, error
};

// Runs erase + eval per grid point against a fixed base model. Each point i
// derives its own erasure and evaluation seeds from the run's stage seeds
// with label "sweep/point/<i>", so any row replays in isolation by pinning
// those seeds in a plain erase/eval run. Per-point failures land in the
// error column and the sweep continues.
SweepOutcome run_sweep(const RunConfig& config, const SweepGrid& grid,
                       const ToyDenoiser& base_model,
                       const ConceptVocabulary& vocab,
                       const NoiseSchedule& schedule,
                       const LatentDataset& dataset);

}  // namespace realera
