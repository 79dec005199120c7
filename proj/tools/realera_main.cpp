#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "hmean_table.hpp"
#include "realera/checkpoint.hpp"
#include "realera/config.hpp"
#include "realera/csv.hpp"
#include "realera/errors.hpp"
#include "realera/evaluation.hpp"
#include "realera/pipeline.hpp"
#include "realera/rng.hpp"
#include "realera/sweep.hpp"

namespace fs = std::filesystem;
using realera::CsvTable;
using realera::RunConfig;

namespace {

RunConfig load_config(const std::string& path,
                      const std::optional<std::uint64_t>& seed_override) {
  RunConfig cfg =
      path.empty() ? RunConfig{} : realera::load_run_config(path);
  if (seed_override) cfg.seed = *seed_override;
  cfg.validate();
  return cfg;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw realera::IoError("cannot open '" + path.string() + "'");
  f.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!f) throw realera::IoError("short write to '" + path.string() + "'");
}

void write_effective_config(const RunConfig& cfg, const fs::path& out_dir) {
  write_text(out_dir / "effective-config.json", realera::effective_config(cfg));
}

realera::ModelState build_base_state(const RunConfig& cfg) {
  realera::ModelState st;
  st.vocab = realera::build_vocabulary(cfg.vocab_dim, cfg.concepts,
                                       cfg.effective_vocabulary_seed());
  st.schedule =
      realera::build_schedule(cfg.schedule_steps, cfg.beta_min, cfg.beta_max);
  st.dataset = realera::build_dataset(
      cfg.model.latent_dim, st.vocab.concepts.size(), cfg.dataset_std,
      cfg.dataset_mean_scale, cfg.effective_dataset_seed());
  const realera::ToyDenoiser init =
      realera::init_denoiser(cfg.model, cfg.effective_model_seed());
  realera::Rng rng(cfg.effective_base_training_seed());
  st.model = realera::train_base(init, st.dataset, st.vocab,
                                 cfg.base_training, st.schedule, rng);
  return st;
}

CsvTable alignment_log_csv(const std::vector<realera::AlignmentStepRecord>& log) {
  CsvTable t;
  t.header = {"step",         "epoch",        "parity",     "loss",
              "assoc_term",   "preserve_term", "assoc_radius",
              "assoc_cosine", "pres_radius",  "pres_cosine"};
  for (const auto& r : log)
    t.rows.push_back({std::to_string(r.step), std::to_string(r.epoch),
                      std::string(1, r.parity), realera::format_double(r.loss),
                      realera::format_double(r.assoc_term),
                      realera::format_double(r.preserve_term),
                      realera::format_double(r.assoc_radius),
                      realera::format_double(r.assoc_cosine),
                      realera::format_double(r.pres_radius),
                      realera::format_double(r.pres_cosine)});
  return t;
}

nlohmann::ordered_json embedding_json(const Eigen::VectorXd& v) {
  nlohmann::ordered_json arr = nlohmann::ordered_json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v[i]);
  return arr;
}

std::string audit_json(const realera::ErasureAudit& audit) {
  nlohmann::ordered_json doc;
  doc["run_seed"] = audit.run_seed;
  doc["mine_seed"] = audit.mine_seed;
  doc["beyond_seed"] = audit.beyond_seed;
  doc["align_seed"] = audit.align_seed;
  doc["mined"] = nlohmann::ordered_json::array();
  for (const auto& p : audit.mined)
    doc["mined"].push_back({{"radius", p.radius},
                            {"anchor_radius", p.anchor_radius},
                            {"cosine_to_center", p.cosine_to_center},
                            {"perturbed_erase", embedding_json(p.perturbed_erase)},
                            {"perturbed_anchor", embedding_json(p.perturbed_anchor)}});
  doc["preserved"] = nlohmann::ordered_json::array();
  for (const auto& p : audit.preserved)
    doc["preserved"].push_back({{"radius", p.radius},
                                {"cosine_to_center", p.cosine_to_center},
                                {"embedding", embedding_json(p.embedding)}});
  doc["alignment_steps"] = audit.alignment_log.size();
  return doc.dump(2) + "\n";
}

CsvTable probe_csv(const realera::EvalReport& report) {
  CsvTable t;
  t.header = {"probe", "target", "acc", "samples"};
  for (const auto& row : report.rows)
    t.rows.push_back({row.probe, row.target, realera::format_double(row.acc),
                      std::to_string(row.samples)});
  return t;
}

CsvTable summary_csv(const realera::EvalPair& pair) {
  CsvTable t;
  t.header = {"model", "acc_e", "acc_s", "acc_g", "h_o"};
  const auto row = [](const char* name, const realera::EvalReport& r) {
    return std::vector<std::string>{
        name, realera::format_double(r.acc_e), realera::format_double(r.acc_s),
        realera::format_double(r.acc_g),
        r.h_o ? realera::format_double(*r.h_o) : ""};
  };
  t.rows.push_back(row("erased", pair.erased));
  t.rows.push_back(row("base", pair.base));
  return t;
}

int find_column(const CsvTable& t, const std::string& name) {
  for (std::size_t i = 0; i < t.header.size(); ++i)
    if (t.header[i] == name) return static_cast<int>(i);
  throw realera::IoError("hmean csv is missing column '" + name + "'");
}

int cmd_check_hmean(const std::string& csv_path) {
  const CsvTable table = csv_path.empty()
                             ? realera::parse_csv(realera::tools::kHmeanReferenceCsv)
                             : realera::read_csv(csv_path);
  const int ce = find_column(table, "acc_e");
  const int cs = find_column(table, "acc_s");
  const int cg = find_column(table, "acc_g");
  const int ch = find_column(table, "expected_h");
  std::vector<int> label_cols;
  for (std::size_t i = 0; i < table.header.size(); ++i)
    if (static_cast<int>(i) != ce && static_cast<int>(i) != cs &&
        static_cast<int>(i) != cg && static_cast<int>(i) != ch)
      label_cols.push_back(static_cast<int>(i));

  int flagged = 0;
  for (const auto& row : table.rows) {
    const double e = realera::parse_double(row[ce]);
    const double s = realera::parse_double(row[cs]);
    const double g = realera::parse_double(row[cg]);
    const double expected = realera::parse_double(row[ch]);
    const double computed = realera::harmonic_mean(e, s, g);
    const double dev = std::abs(computed - expected);
    const bool flag = dev > 0.05;
    if (flag) ++flagged;
    std::string label;
    for (const int i : label_cols) label += row[i] + " ";
    std::printf("%-24s expected %7.2f  computed %7.2f  dev %5.3f%s\n",
                label.c_str(), expected, computed, dev,
                flag ? "  FLAGGED" : "");
  }
  const std::size_t n = table.rows.size();
  std::printf("%zu rows, %d flagged (> 0.05), pass rate %.2f%%\n", n, flagged,
              n ? 100.0 * static_cast<double>(n - flagged) / n : 0.0);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"RealEra concept-erasure pipeline on a toy latent diffusion model"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir = "out";
  std::optional<std::uint64_t> seed_override;

  const auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", config_path, "Run configuration (JSON)");
    cmd->add_option("--out", out_dir, "Output directory");
    cmd->add_option("--seed", seed_override,
                    "Override the run seed from the config");
  };

  auto* train = app.add_subcommand("train-base", "Train the base model");
  add_common(train);

  auto* erase_cmd = app.add_subcommand("erase", "Erase a concept");
  add_common(erase_cmd);
  std::string base_path;
  erase_cmd->add_option("base", base_path, "Base model checkpoint")->required();

  auto* eval_cmd = app.add_subcommand("eval", "Evaluate base vs erased model");
  add_common(eval_cmd);
  std::string eval_base, eval_erased;
  eval_cmd->add_option("base", eval_base, "Base model checkpoint")->required();
  eval_cmd->add_option("erased", eval_erased, "Erased model checkpoint")
      ->required();

  auto* sweep_cmd = app.add_subcommand("sweep", "Hyperparameter sweep");
  add_common(sweep_cmd);
  std::string sweep_base, grid_text;
  sweep_cmd->add_option("base", sweep_base, "Base model checkpoint")
      ->required();
  sweep_cmd->add_option("--grid", grid_text, "Axes, e.g. \"m=1,5,10;n=0,80\"")
      ->required();

  auto* hmean_cmd =
      app.add_subcommand("check-hmean", "Verify printed harmonic means");
  std::string hmean_csv;
  hmean_cmd->add_option("csv", hmean_csv,
                        "Accuracy triples (default: bundled table)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (app.got_subcommand(hmean_cmd)) return cmd_check_hmean(hmean_csv);

    const RunConfig cfg = load_config(config_path, seed_override);
    fs::create_directories(out_dir);

    if (app.got_subcommand(train)) {
      const realera::ModelState st = build_base_state(cfg);
      realera::save_model_state(fs::path(out_dir) / "base.ckpt", st);
      write_effective_config(cfg, out_dir);
      std::cout << "wrote " << (fs::path(out_dir) / "base.ckpt").string()
                << "\n";
      return 0;
    }

    if (app.got_subcommand(erase_cmd)) {
      realera::ModelState st = realera::load_model_state(base_path);
      const realera::ErasureSpec spec = cfg.make_erasure_spec();
      const realera::ErasureResult result =
          realera::erase(st.model, st.vocab, st.schedule, spec);
      realera::ModelState erased = st;
      erased.model = result.model;
      realera::save_model_state(fs::path(out_dir) / "erased.ckpt", erased);
      write_text(fs::path(out_dir) / "audit.json", audit_json(result.audit));
      realera::write_csv(fs::path(out_dir) / "alignment-log.csv",
                         alignment_log_csv(result.audit.alignment_log));
      write_effective_config(cfg, out_dir);
      std::cout << "wrote " << (fs::path(out_dir) / "erased.ckpt").string()
                << "\n";
      return 0;
    }

    if (app.got_subcommand(eval_cmd)) {
      const realera::ModelState base_st = realera::load_model_state(eval_base);
      const realera::ModelState erased_st =
          realera::load_model_state(eval_erased);
      if (realera::vocabulary_hash(base_st.vocab) !=
          realera::vocabulary_hash(erased_st.vocab))
        throw realera::ValidationError(
            "checkpoints do not share a vocabulary (hash mismatch)");
      const realera::CentroidClassifier clf =
          realera::make_classifier(base_st.vocab, base_st.dataset);
      const realera::EvalSetup setup = realera::make_eval_setup(
          base_st.vocab, cfg.erasure.erase_concept, cfg.erasure.anchor_concept,
          cfg.erasure.sampler, cfg.eval_n_probes, cfg.eval_samples_per_probe,
          cfg.effective_evaluation_seed());
      const realera::EvalPair pair = realera::evaluate_erasure(
          base_st.model, erased_st.model, base_st.vocab, clf, setup,
          base_st.schedule, cfg.effective_evaluation_seed());
      realera::write_csv(fs::path(out_dir) / "eval-erased-probes.csv",
                         probe_csv(pair.erased));
      realera::write_csv(fs::path(out_dir) / "eval-base-probes.csv",
                         probe_csv(pair.base));
      realera::write_csv(fs::path(out_dir) / "eval-summary.csv",
                         summary_csv(pair));
      write_effective_config(cfg, out_dir);
      std::cout << realera::to_csv(summary_csv(pair));
      return 0;
    }

    if (app.got_subcommand(sweep_cmd)) {
      const realera::ModelState st = realera::load_model_state(sweep_base);
      const realera::SweepGrid grid = realera::parse_grid(grid_text);
      const realera::SweepOutcome outcome = realera::run_sweep(
          cfg, grid, st.model, st.vocab, st.schedule, st.dataset);
      realera::write_csv(fs::path(out_dir) / "sweep.csv", outcome.csv);
      write_effective_config(cfg, out_dir);
      std::cout << "wrote " << (fs::path(out_dir) / "sweep.csv").string()
                << " (" << outcome.rows.size() << " points)\n";
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
