#include "evoes_cli/cli.hpp"

#include "evoes_cli/manifest.hpp"

#include <evoes/checkpoint.hpp>
#include <evoes/config.hpp>
#include <evoes/error.hpp>
#include <evoes/experiments.hpp>
#include <evoes/gradcheck.hpp>
#include <evoes/theoremnet.hpp>
#include <evoes/trainer.hpp>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <fstream>
#include <optional>

namespace evoes::cli {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct TrainFlags {
  std::string preset;
  std::string config;
  std::vector<std::string> sets;
  std::optional<std::uint64_t> seed;
  std::optional<std::int64_t> generations;
  int workers = 0;
  std::string out;
};

struct CheckpointFlags {
  std::string checkpoint;
  std::uint64_t seed = 0;
  int workers = 0;
  std::string out;
};

void add_workers(CLI::App* cmd, int& workers) {
  cmd->add_option("--workers", workers, "worker threads (default: $EVOES_WORKERS or 1)");
}

void add_train_flags(CLI::App* cmd, TrainFlags& f) {
  cmd->add_option("--preset", f.preset, "compiled-in preset name");
  cmd->add_option("--config", f.config, "key=value config file");
  cmd->add_option("--set", f.sets, "override, key=value (repeatable)")->take_all();
  cmd->add_option("--seed", f.seed, "run seed");
  cmd->add_option("--generations", f.generations, "generation count");
  add_workers(cmd, f.workers);
}

void add_checkpoint_flags(CLI::App* cmd, CheckpointFlags& f, bool need_out) {
  cmd->add_option("--checkpoint", f.checkpoint, "checkpoint file")->required();
  cmd->add_option("--seed", f.seed, "sampling seed");
  add_workers(cmd, f.workers);
  auto* o = cmd->add_option("--out", f.out, "output directory");
  if (need_out) o->required();
}

int resolve_workers(int flag) {
  if (flag < 0) throw ValidationError("--workers must be >= 1");
  return flag > 0 ? flag : default_workers();
}

TrainConfig load_config(const TrainFlags& f) {
  TrainConfig c = f.preset.empty() ? TrainConfig{} : preset(f.preset);
  if (!f.config.empty()) c = parse_config_file(f.config, c);
  c = apply_overrides(c, f.sets);
  if (f.seed) c.run_seed = *f.seed;
  if (f.generations) c.generations = *f.generations;
  validate(c);
  return c;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("write failed: " + path.string());
}

void make_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
}

json vec_json(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

std::string batch_csv(const EvalBatch& batch) {
  std::string s = "index,component,seed,sign";
  const auto d = batch.offspring.empty() ? 0 : batch.offspring.front().bc.size();
  for (Eigen::Index j = 0; j < d; ++j) s += ",bc" + std::to_string(j);
  s += ",fitness\n";
  for (const auto& r : batch.offspring) {
    s += std::to_string(r.index) + ',' + std::to_string(r.component) + ',' + std::to_string(r.seed) + ',' +
         std::to_string(r.sign);
    for (Eigen::Index j = 0; j < d; ++j) s += ',' + json(r.bc[j]).dump();
    s += ',' + json(r.fitness).dump() + '\n';
  }
  return s;
}

std::string stats_csv(const std::vector<GenStats>& stats, int bc_dim) {
  std::string s = stats_csv_header(bc_dim) + '\n';
  for (const auto& g : stats) s += stats_csv_row(g) + '\n';
  return s;
}

double default_heatmap_range(const TrainConfig& c) {
  if (c.env == "interference") return 5.0;
  return c.walker.speed_bound * c.walker.dt * static_cast<double>(c.walker.horizon);
}

int cmd_train(const TrainFlags& f, std::ostream& out) {
  if (f.out.empty()) throw ValidationError("train needs --out");
  const TrainConfig config = load_config(f);
  RunManifest m;
  m.command = "train";
  m.config = config_to_map(config);
  m.started_at = utc_timestamp();
  RunArtifacts art;
  const Checkpoint final_state = train_run(config, resolve_workers(f.workers), f.out, &art);
  m.finished_at = utc_timestamp();
  m.artifacts = {art.log};
  m.artifacts.insert(m.artifacts.end(), art.checkpoints.begin(), art.checkpoints.end());
  m.artifacts.push_back(art.final_checkpoint);
  m.checkpoint = art.final_checkpoint;
  write_manifest(m, f.out);
  json j;
  j["generation"] = final_state.generation;
  j["checkpoint"] = art.final_checkpoint.string();
  j["checkpoint_hash"] = git_blob_hash_file(art.final_checkpoint);
  j["log"] = art.log.string();
  out << j.dump() << '\n';
  return kExitOk;
}

int cmd_evaluate(const CheckpointFlags& f, std::size_t n, int bins, std::optional<double> range, std::ostream& out) {
  const auto started = utc_timestamp();
  const Checkpoint state = load_checkpoint(f.checkpoint);
  const EvalBatch batch = evaluate_checkpoint(state, n, f.seed, resolve_workers(f.workers));
  const Heatmap hm = export_heatmap(batch, bins, range.value_or(default_heatmap_range(state.config)));
  json j;
  j["n"] = n;
  j["bc_mean"] = vec_json(batch.bc_matrix().colwise().mean().transpose());
  if (n >= 100) {
    const auto b = bimodality_metrics(batch);
    j["frac_positive"] = b.frac_positive;
    j["mean_abs_bc"] = b.mean_abs_bc;
    j["var_trace"] = b.var_trace;
  }
  j["out_of_range"] = hm.out_of_range;
  if (!f.out.empty()) {
    make_dir(f.out);
    const fs::path dir = f.out;
    write_text(dir / "heatmap.csv", heatmap_to_csv(hm));
    write_text(dir / "batch.csv", batch_csv(batch));
    RunManifest m;
    m.command = "evaluate";
    m.config = config_to_map(state.config);
    m.started_at = started;
    m.finished_at = utc_timestamp();
    m.artifacts = {dir / "heatmap.csv", dir / "batch.csv"};
    m.checkpoint = f.checkpoint;
    write_manifest(m, dir);
    j["heatmap"] = (dir / "heatmap.csv").string();
  }
  out << j.dump() << '\n';
  return kExitOk;
}

int cmd_adapt(const CheckpointFlags& f, const std::string& objective, std::size_t k, std::size_t n_eval,
              std::ostream& out) {
  const Checkpoint state = load_checkpoint(f.checkpoint);
  const AdaptReport r = adapt_best_of_k(state, objective_from_string(objective), k, n_eval, f.seed);
  json j;
  j["objective"] = objective;
  j["best_index"] = r.best_index;
  j["best_seed"] = r.best_seed;
  j["best_score"] = r.best_score;
  j["all_scores"] = r.all_scores;
  out << j.dump() << '\n';
  return kExitOk;
}

int cmd_seed_es(const CheckpointFlags& f, const std::string& objective, std::int64_t generations,
                std::ostream& out) {
  const auto started = utc_timestamp();
  const Checkpoint state = load_checkpoint(f.checkpoint);
  Checkpoint final_state;
  const auto stats =
      seed_standard_es(state, objective_from_string(objective), generations, resolve_workers(f.workers), &final_state);
  make_dir(f.out);
  const fs::path dir = f.out;
  write_text(dir / "log.csv", stats_csv(stats, make_environment(state.config)->bc_dim()));
  save_checkpoint(final_state, dir / "final.eves");
  RunManifest m;
  m.command = "seed-es";
  m.config = config_to_map(final_state.config);
  m.started_at = started;
  m.finished_at = utc_timestamp();
  m.artifacts = {dir / "log.csv", dir / "final.eves"};
  m.checkpoint = dir / "final.eves";
  write_manifest(m, dir);
  json curve = json::array();
  for (const auto& s : stats) curve.push_back(s.fitness_mean);
  out << json{{"fitness_mean", curve}, {"checkpoint", (dir / "final.eves").string()}}.dump() << '\n';
  return kExitOk;
}

int cmd_gmm_split(const CheckpointFlags& f, std::size_t k, std::int64_t generations, std::ostream& out) {
  const auto started = utc_timestamp();
  Checkpoint state = split_checkpoint(load_checkpoint(f.checkpoint), k, f.seed);
  if (generations < 0) throw ValidationError("--generations must be >= 0");
  state.config.generations = state.generation + generations;
  const int workers = resolve_workers(f.workers);
  RunArtifacts art;
  const Checkpoint final_state = train_run(state, workers, f.out, &art);
  RunManifest m;
  m.command = "gmm-split";
  m.config = config_to_map(final_state.config);
  m.started_at = started;
  m.finished_at = utc_timestamp();
  m.artifacts = {art.log, art.final_checkpoint};
  m.checkpoint = art.final_checkpoint;
  write_manifest(m, f.out);
  json bcs = json::array();
  for (const auto& b : component_mean_bcs(final_state, 1000, f.seed, workers)) bcs.push_back(vec_json(b));
  out << json{{"component_mean_bcs", bcs}, {"checkpoint", art.final_checkpoint.string()}}.dump() << '\n';
  return kExitOk;
}

struct TheoremFlags {
  double epsilon = 0.05;
  int grid = 201;
  std::size_t trials = 1000;
  std::uint64_t seed = 0;
  std::optional<double> delta1;
  std::optional<double> delta2;
};

int cmd_theorem(const TheoremFlags& f, std::ostream& out) {
  const ReluNet2 g = relu_identity();
  const ReluNet2 h = relu_negation();
  const double d2 = f.delta2.value_or(0.9 * max_feasible_delta2(g, h, f.epsilon, 1.0));
  const double d1 = f.delta1.value_or(d2 / 10.0);
  const FlipNet net = build_flip_network(g, h, d1, d2, f.epsilon, 1.0);
  const FlipReport des = verify_flip(net, f.grid, FlipMode::designated_only);
  const FlipReport iid = verify_flip(net, f.grid, FlipMode::full_iid, d2, f.trials, f.seed);
  json j;
  j["sup_error_pos"] = des.sup_error_pos;
  j["sup_error_neg"] = des.sup_error_neg;
  j["flip_rate_pos"] = iid.flip_rate_pos;
  j["flip_rate_neg"] = iid.flip_rate_neg;
  j["theorem_bound"] = iid.theorem_bound;
  j["delta1"] = d1;
  j["delta2"] = d2;
  j["epsilon"] = f.epsilon;
  j["trials"] = iid.trials;
  j["designated_passed"] = des.passed;
  j["full_iid_passed"] = iid.passed;
  out << j.dump() << '\n';
  return kExitOk;
}

int cmd_gradcheck(std::size_t n, std::uint64_t seed, std::ostream& out) {
  json cases = json::array();
  bool all = true;
  for (const auto& c : run_gradcheck_suite(n, seed)) {
    const bool ok = c.cosine > 0.99 && c.magnitude_error < 0.1;
    all = all && ok;
    cases.push_back({{"name", c.name},
                     {"cosine", c.cosine},
                     {"magnitude_error", c.magnitude_error},
                     {"score_function", vec_json(c.score_function)},
                     {"finite_difference", vec_json(c.finite_difference)},
                     {"passed", ok}});
  }
  out << json{{"n", n}, {"seed", seed}, {"cases", cases}, {"passed", all}}.dump() << '\n';
  return all ? kExitOk : kExitRuntime;
}

}  // namespace

int dispatch(const std::vector<std::string>& argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Evolvability ES trainer and experiment drivers", "evoes"};
  app.require_subcommand(1);

  TrainFlags train;
  auto* c_train = app.add_subcommand("train", "train a population, writing log.csv and checkpoints");
  add_train_flags(c_train, train);
  c_train->add_option("--out", train.out, "output directory")->required();

  CheckpointFlags eval;
  std::size_t eval_n = 2000;
  int bins = 50;
  std::optional<double> range;
  auto* c_eval = app.add_subcommand("evaluate", "sample a batch from a checkpoint and export a heatmap");
  add_checkpoint_flags(c_eval, eval, false);
  c_eval->add_option("--n", eval_n, "offspring to evaluate");
  c_eval->add_option("--bins", bins, "heatmap bins per axis");
  c_eval->add_option("--range", range, "heatmap half-width");

  CheckpointFlags adapt;
  std::string adapt_obj = "+x";
  std::size_t k = 40;
  std::size_t n_eval = 10;
  auto* c_adapt = app.add_subcommand("adapt", "best-of-k mutation of the central individual");
  add_checkpoint_flags(c_adapt, adapt, false);
  c_adapt->add_option("--objective", adapt_obj, "+x | -x | +y | -y");
  c_adapt->add_option("--k", k, "mutations");
  c_adapt->add_option("--n-eval", n_eval, "evaluations per mutation");

  CheckpointFlags seed_es;
  std::string seed_obj = "+x";
  std::int64_t seed_gens = 20;
  auto* c_seed = app.add_subcommand("seed-es", "continue a checkpoint with standard ES on an objective");
  add_checkpoint_flags(c_seed, seed_es, true);
  c_seed->add_option("--objective", seed_obj, "+x | -x | +y | -y");
  c_seed->add_option("--generations", seed_gens, "generations of standard ES");

  CheckpointFlags split;
  std::size_t split_k = 2;
  std::int64_t split_gens = 20;
  auto* c_split = app.add_subcommand("gmm-split", "split a unimodal checkpoint into a mixture and keep training");
  add_checkpoint_flags(c_split, split, true);
  c_split->add_option("--k", split_k, "mixture components");
  c_split->add_option("--generations", split_gens, "generations after the split");

  TheoremFlags thm;
  auto* c_thm = app.add_subcommand("theorem-demo", "build and verify the flip network for g(x)=x, h(x)=-x");
  c_thm->add_option("--epsilon", thm.epsilon, "sup-error tolerance");
  c_thm->add_option("--grid", thm.grid, "grid points on [0,1]");
  c_thm->add_option("--trials", thm.trials, "full_iid trials");
  c_thm->add_option("--seed", thm.seed, "full_iid seed");
  c_thm->add_option("--delta1", thm.delta1, "lower perturbation bound");
  c_thm->add_option("--delta2", thm.delta2, "upper perturbation bound");

  std::size_t gc_n = 100000;
  std::uint64_t gc_seed = 7;
  auto* c_gc = app.add_subcommand("gradcheck", "score-function vs finite-difference gradient suite");
  c_gc->add_option("--n", gc_n, "samples per estimate");
  c_gc->add_option("--seed", gc_seed, "sampling seed");

  if (argv.size() > 1 && !argv[1].starts_with('-')) {
    bool known = false;
    for (const auto* sub : app.get_subcommands({})) known = known || sub->get_name() == argv[1];
    if (!known) {
      err << "error: unknown subcommand '" << argv[1] << "'\n" << app.help();
      return kExitValidation;
    }
  }

  std::vector<const char*> args;
  args.reserve(argv.size());
  for (const auto& a : argv) args.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(args.size()), args.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n' << app.help();
    return kExitValidation;
  }

  try {
    if (c_train->parsed()) return cmd_train(train, out);
    if (c_eval->parsed()) return cmd_evaluate(eval, eval_n, bins, range, out);
    if (c_adapt->parsed()) return cmd_adapt(adapt, adapt_obj, k, n_eval, out);
    if (c_seed->parsed()) return cmd_seed_es(seed_es, seed_obj, seed_gens, out);
    if (c_split->parsed()) return cmd_gmm_split(split, split_k, split_gens, out);
    if (c_thm->parsed()) return cmd_theorem(thm, out);
    if (c_gc->parsed()) return cmd_gradcheck(gc_n, gc_seed, out);
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  err << app.help();
  return kExitValidation;
}

}  // namespace evoes::cli
