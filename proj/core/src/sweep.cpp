#include "realera/sweep.hpp"

#include <cmath>
#include <set>

#include "realera/errors.hpp"
#include "realera/pipeline.hpp"
#include "realera/rng.hpp"

namespace realera {

namespace {

const std::set<std::string> kSweepable = {
    "d1", "d2", "d1_anchor", "s1", "s2", "m", "n",
    "max_attempts", "lambda1", "ridge", "lora_rank"};

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> parts;
  std::string cur;
  for (const char c : text) {
    if (c == sep) {
      parts.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  parts.push_back(cur);
  return parts;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

int int_param(const std::string& name, double value) {
  const double r = std::round(value);
  if (std::abs(value - r) > 1e-9)
    throw ConfigError("sweep parameter '" + name +
                      "' must be an integer, got " + std::to_string(value));
  return static_cast<int>(r);
}

}  // namespace

SweepGrid parse_grid(const std::string& text) {
  SweepGrid grid;
  for (const std::string& raw_axis : split(text, ';')) {
    const std::string axis_text = trim(raw_axis);
    if (axis_text.empty()) continue;
    const auto eq = axis_text.find('=');
    if (eq == std::string::npos)
      throw ConfigError("sweep axis '" + axis_text + "' is missing '='");
    SweepAxis axis;
    axis.name = trim(axis_text.substr(0, eq));
    if (!kSweepable.count(axis.name))
      throw ConfigError("unknown sweep parameter '" + axis.name + "'");
    for (const std::string& raw_value : split(axis_text.substr(eq + 1), ',')) {
      const std::string v = trim(raw_value);
      if (v.empty())
        throw ConfigError("sweep axis '" + axis.name + "' has an empty value");
      try {
        axis.values.push_back(parse_double(v));
      } catch (const IoError&) {
        throw ConfigError("sweep axis '" + axis.name +
                          "' has a non-numeric value '" + v + "'");
      }
    }
    for (const auto& existing : grid)
      if (existing.name == axis.name)
        throw ConfigError("sweep axis '" + axis.name + "' appears twice");
    grid.push_back(std::move(axis));
  }
  if (grid.empty()) throw ConfigError("sweep grid is empty");
  return grid;
}

std::vector<SweepPoint> expand_grid(const SweepGrid& grid) {
  std::size_t total = 1;
  for (const auto& axis : grid) {
    if (axis.values.empty())
      throw ConfigError("sweep axis '" + axis.name + "' has no values");
    total *= axis.values.size();
  }
  std::vector<SweepPoint> points;
  points.reserve(total);
  for (std::size_t i = 0; i < total; ++i) {
    SweepPoint p;
    p.index = i;
    std::size_t rem = i;
    // Row-major: last axis varies fastest.
    std::vector<std::size_t> idx(grid.size(), 0);
    for (std::size_t a = grid.size(); a-- > 0;) {
      idx[a] = rem % grid[a].values.size();
      rem /= grid[a].values.size();
    }
    for (std::size_t a = 0; a < grid.size(); ++a)
      p.params.emplace_back(grid[a].name, grid[a].values[idx[a]]);
    points.push_back(std::move(p));
  }
  return points;
}

ErasureSpec apply_point(const ErasureSpec& spec, const SweepPoint& point) {
  ErasureSpec out = spec;
  for (const auto& [name, value] : point.params) {
    if (name == "d1") {
      out.sampler.d1 = value;
    } else if (name == "d2") {
      out.sampler.d2 = value;
    } else if (name == "d1_anchor") {
      out.sampler.d1_anchor = value;
    } else if (name == "s1") {
      out.sampler.s1 = value;
    } else if (name == "s2") {
      out.sampler.s2 = value;
    } else if (name == "m") {
      out.sampler.m = int_param(name, value);
    } else if (name == "n") {
      const int n = int_param(name, value);
      if (n == 0) {
        // No beyond-samples at all; the sampler invariant keeps n >= 1.
        out.use_beyond = false;
        out.sampler.n = 1;
      } else {
        out.use_beyond = true;
        out.sampler.n = n;
      }
    } else if (name == "max_attempts") {
      out.sampler.max_attempts = int_param(name, value);
    } else if (name == "lambda1") {
      out.lambda1 = value;
    } else if (name == "ridge") {
      out.ridge = value;
    } else if (name == "lora_rank") {
      out.lora_rank = int_param(name, value);
    } else {
      throw ConfigError("unknown sweep parameter '" + name + "'");
    }
  }
  return out;
}

SweepOutcome run_sweep(const RunConfig& config, const SweepGrid& grid,
                       const ToyDenoiser& base_model,
                       const ConceptVocabulary& vocab,
                       const NoiseSchedule& schedule,
                       const LatentDataset& dataset) {
  const std::vector<SweepPoint> points = expand_grid(grid);
  const CentroidClassifier clf = make_classifier(vocab, dataset);
  const std::uint64_t erasure_root = config.effective_erasure_seed();
  const std::uint64_t eval_root = config.effective_evaluation_seed();

  SweepOutcome outcome;
  CsvTable& csv = outcome.csv;
  for (const auto& axis : grid) csv.header.push_back(axis.name);
  for (const char* col :
       {"acc_e", "acc_s", "acc_g", "h_o", "acc_s_minus_e", "error"})
    csv.header.push_back(col);

  for (const SweepPoint& point : points) {
    SweepRow row;
    row.point = point;
    const std::string label = "sweep/point/" + std::to_string(point.index);
    row.erasure_seed = derive_seed(erasure_root, label);
    row.evaluation_seed = derive_seed(eval_root, label);

    std::vector<std::string> cells;
    for (const auto& [name, value] : point.params)
      cells.push_back(format_double(value));

    try {
      ErasureSpec spec = apply_point(config.make_erasure_spec(), point);
      spec.seed = row.erasure_seed;
      spec.validate(vocab);
      const ErasureResult result = erase(base_model, vocab, schedule, spec);
      const EvalSetup setup = make_eval_setup(
          vocab, spec.erase_concept, spec.anchor_concept, spec.sampler,
          config.eval_n_probes, config.eval_samples_per_probe,
          row.evaluation_seed);
      const EvalPair pair =
          evaluate_erasure(base_model, result.model, vocab, clf, setup,
                           schedule, row.evaluation_seed);
      row.erased = pair.erased;
      cells.push_back(format_double(row.erased.acc_e));
      cells.push_back(format_double(row.erased.acc_s));
      cells.push_back(format_double(row.erased.acc_g));
      cells.push_back(row.erased.h_o ? format_double(*row.erased.h_o) : "");
      cells.push_back(format_double(row.erased.acc_s - row.erased.acc_e));
      cells.push_back("");
    } catch (const std::exception& e) {
      row.failed = true;
      row.error = e.what();
      while (cells.size() < csv.header.size() - 1) cells.push_back("");
      cells.push_back(row.error);
    }
    csv.rows.push_back(std::move(cells));
    outcome.rows.push_back(std::move(row));
  }
  return outcome;
}

}  // namespace realera
