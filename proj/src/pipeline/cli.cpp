#include "physmass/cli.hpp"

#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <ostream>

#include "physmass/checkpoint.hpp"
#include "physmass/config.hpp"
#include "physmass/dataset_io.hpp"
#include "physmass/errors.hpp"
#include "physmass/experiments.hpp"
#include "physmass/reports.hpp"

namespace physmass {

namespace fs = std::filesystem;

namespace {

struct CommonOptions {
  std::string config_file;
  std::vector<std::string> sets;
  std::optional<std::uint64_t> seed;
  std::string data_dir;
  std::string out_dir;
};

void add_common(CLI::App* app, CommonOptions& o, bool with_data) {
  app->add_option("--config", o.config_file, "key = value config file")->check(CLI::ExistingFile);
  app->add_option("--set", o.sets, "override one setting, key=value (repeatable)");
  app->add_option("--seed", o.seed, "run seed");
  if (with_data) app->add_option("--data", o.data_dir, "dataset directory");
  app->add_option("--out", o.out_dir, "output directory")->required();
}

RunConfig build_config(const CommonOptions& o) {
  RunConfig cfg;
  if (!o.config_file.empty()) apply_settings(cfg, load_key_values(o.config_file));
  for (const auto& s : o.sets) {
    const auto [k, v] = split_assignment(s);
    apply_setting(cfg, k, v);
  }
  if (o.seed) cfg.seed = *o.seed;
  return cfg.resolved();
}

std::string data_dir(const CommonOptions& o) { return o.data_dir.empty() ? default_data_dir() : o.data_dir; }

Dataset load_data(const std::string& dir) {
  if (!fs::exists(fs::path(dir) / "manifest.tsv")) {
    throw InputError("no manifest.tsv in " + dir + " (run 'gen' first)");
  }
  return read_dataset(dir);
}

std::vector<std::size_t> split_indices(const PreparedData& data, const std::string& split) {
  if (split == "test") return data.test_indices();
  if (split == "train") return data.train_indices();
  if (split == "test_seen") return data.indices(Split::test_seen);
  if (split == "test_unseen") return data.indices(Split::test_unseen);
  std::vector<std::size_t> all(data.samples.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  return all;
}

void write_text(const fs::path& p, const std::string& s) {
  std::ofstream f(p, std::ios::binary);
  if (!f) throw InputError("cannot write " + p.string());
  f << s;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Mass estimation from appearance, geometry and material cues"};
  app.require_subcommand(1);

  CommonOptions gen_o, train_o, ablate_o, base_o;
  auto* gen = app.add_subcommand("gen", "synthesize a benchmark dataset");
  add_common(gen, gen_o, false);

  auto* train_cmd = app.add_subcommand("train", "train the factored model");
  add_common(train_cmd, train_o, true);
  bool init_only = false;
  train_cmd->add_flag("--init-only", init_only, "write the initial checkpoint without training");

  auto* eval = app.add_subcommand("eval", "evaluate a checkpoint");
  std::string ckpt_path, eval_data, eval_out, eval_split = "test";
  eval->add_option("--checkpoint", ckpt_path, "checkpoint file")->required()->check(CLI::ExistingFile);
  eval->add_option("--data", eval_data, "dataset directory");
  eval->add_option("--split", eval_split, "test, train, test_seen, test_unseen or all")
      ->check(CLI::IsMember({"test", "train", "test_seen", "test_unseen", "all"}));
  eval->add_option("--out", eval_out, "output directory")->required();

  auto* ablate = app.add_subcommand("ablate", "train all seven cue subsets");
  add_common(ablate, ablate_o, true);

  auto* baseline = app.add_subcommand("baseline", "run a baseline");
  add_common(baseline, base_o, true);
  std::string base_kind = "direct", volume_source = "geometry";
  baseline->add_option("--kind", base_kind, "direct or rule")->check(CLI::IsMember({"direct", "rule"}));
  baseline->add_option("--volume-source", volume_source, "rule baseline volume: geometry or oracle")
      ->check(CLI::IsMember({"geometry", "oracle"}));

  auto* report = app.add_subcommand("report", "recompute metrics from stored predictions");
  std::string run_dir;
  report->add_option("--run", run_dir, "run directory holding predictions.csv")
      ->required()
      ->check(CLI::ExistingDirectory);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << "\n" << app.help();
    return 2;
  }

  try {
    if (gen->parsed()) {
      const RunConfig cfg = build_config(gen_o);
      const Dataset ds = generate_dataset(cfg.gen, MaterialVocab::default_vocab(), cfg.seed);
      write_dataset(gen_o.out_dir, ds);
      out << "wrote " << ds.samples.size() << " samples to " << gen_o.out_dir << "\n";
    } else if (train_cmd->parsed()) {
      const RunConfig cfg = build_config(train_o);
      const Dataset ds = load_data(data_dir(train_o));
      MassModel model(cfg.model, ds.vocab.embedding_rows());
      fs::create_directories(train_o.out_dir);
      const std::string ckpt = (fs::path(train_o.out_dir) / "checkpoint.bin").string();
      if (init_only) {
        save_checkpoint(ckpt, model.to_checkpoint());
        out << "wrote untrained checkpoint " << ckpt << "\n";
        return 0;
      }
      const PreparedData data = prepare_data(ds, cfg.model.num_points, cfg.model.seed);
      RunRecord r = train(model, data, cfg.train);
      save_checkpoint(ckpt, model.to_checkpoint());
      r.checkpoint_path = ckpt;
      write_run(train_o.out_dir, r);
      out << format_report(r.test_report, r.test_predictions);
    } else if (eval->parsed()) {
      const Checkpoint ck = load_checkpoint(ckpt_path);
      const Dataset ds = load_data(eval_data.empty() ? default_data_dir() : eval_data);
      RunRecord r;
      r.checkpoint_path = ckpt_path;
      r.name = "eval:" + eval_split;
      std::vector<std::size_t> idx;
      if (checkpoint_model_kind(ck) == "direct") {
        const DirectRegressor model = DirectRegressor::from_checkpoint(ck);
        const PreparedData data = prepare_data(ds, 1, model.seed());
        idx = split_indices(data, eval_split);
        r.test_predictions = predict_samples(model, data, idx);
      } else {
        const MassModel model = MassModel::from_checkpoint(ck);
        const PreparedData data = prepare_data(ds, model.config().num_points, model.config().seed);
        idx = split_indices(data, eval_split);
        r.test_predictions = predict_samples(model, data, idx);
        r.config_json = config_json(model.config(), TrainConfig{});
      }
      if (idx.empty()) throw InputError("split '" + eval_split + "' is empty");
      r.test_report = aggregate(to_pairs(r.test_predictions), Stratify::seen_unseen);
      r.train_report = r.test_report;
      write_run(eval_out, r);
      out << format_report(r.test_report, r.test_predictions);
    } else if (ablate->parsed()) {
      const RunConfig cfg = build_config(ablate_o);
      const Dataset ds = load_data(data_dir(ablate_o));
      const PreparedData data = prepare_data(ds, cfg.model.num_points, cfg.model.seed);
      const auto cells = run_ablation_grid(data, cfg.model, cfg.train);
      fs::create_directories(ablate_o.out_dir);
      std::ofstream csv(fs::path(ablate_o.out_dir) / "ablation.csv", std::ios::binary);
      write_ablation_csv(csv, cells);
      std::string notes = ablation_footnotes();
      notes += "Density-only floor on this test split: " +
               std::to_string(density_floor_oracle(data)) + "\n";
      write_text(fs::path(ablate_o.out_dir) / "ablation_notes.txt", notes);
      for (const auto& c : cells) {
        write_run((fs::path(ablate_o.out_dir) / c.cues.label()).string(), c.run);
      }
      std::ostringstream table;
      write_ablation_csv(table, cells);
      out << table.str() << notes;
    } else if (baseline->parsed()) {
      const RunConfig cfg = build_config(base_o);
      const Dataset ds = load_data(data_dir(base_o));
      const PreparedData data = prepare_data(ds, cfg.model.num_points, cfg.model.seed);
      fs::create_directories(base_o.out_dir);
      if (base_kind == "direct") {
        DirectRegressor model(kAppearanceDim, 64, cfg.model.seed);
        RunRecord r = run_baseline_direct(data, cfg.train, cfg.model.seed, &model);
        const std::string ckpt = (fs::path(base_o.out_dir) / "checkpoint.bin").string();
        save_checkpoint(ckpt, model.to_checkpoint());
        r.checkpoint_path = ckpt;
        write_run(base_o.out_dir, r);
        out << format_report(r.test_report, r.test_predictions);
      } else {
        RunRecord r;
        r.name = "rule:" + volume_source;
        std::optional<MassModel> geo;
        if (volume_source == "geometry") {
          ModelConfig mc = cfg.model;
          mc.cues = {false, false, true};
          geo.emplace(mc, data.vocab.embedding_rows());
          r = train(*geo, data, cfg.train);
          r.name = "rule:geometry";
          const std::string ckpt = (fs::path(base_o.out_dir) / "geometry_checkpoint.bin").string();
          save_checkpoint(ckpt, geo->to_checkpoint());
          r.checkpoint_path = ckpt;
        }
        const RuleBasedResult rb = run_baseline_rulebased(data, geo ? &*geo : nullptr);
        r.test_report = rb.report;
        r.test_predictions = rb.predictions;
        write_run(base_o.out_dir, r);
        write_text(fs::path(base_o.out_dir) / "excluded.txt",
                   "unknown_material_excluded " + std::to_string(rb.unknown_excluded) + "\n");
        out << format_report(rb.report, rb.predictions)
            << "unknown material excluded: " << rb.unknown_excluded << "\n";
      }
    } else if (report->parsed()) {
      std::ifstream in(fs::path(run_dir) / "predictions.csv", std::ios::binary);
      if (!in) throw InputError("no predictions.csv in " + run_dir);
      const auto records = read_predictions_csv(in);
      if (records.empty()) throw InputError("predictions.csv in " + run_dir + " is empty");
      const MetricsReport m = aggregate(to_pairs(records), Stratify::seen_unseen);
      const std::string text = format_report(m, records);
      write_text(fs::path(run_dir) / "report.txt", text);
      std::ofstream csv(fs::path(run_dir) / "report_metrics.csv", std::ios::binary);
      write_metrics_csv(csv, m);
      out << text;
    }
  } catch (const ConfigError& e) {
    err << "configuration error: " << e.what() << "\n";
    return 2;
  } catch (const InputError& e) {
    err << "input error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

}  // namespace physmass
