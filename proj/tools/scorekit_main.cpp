// Command-line front end: fits score models, runs samplers and baselines, and
// writes plot-ready CSV/JSON artifacts under a manifest that echoes the fully
// resolved configuration.
//
// Exit codes: 0 success, 1 I/O failure, 2 domain precondition violation,
// 3 solver non-convergence. Failures print a machine-readable JSON object on
// stderr.

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "scorekit/scorekit.hpp"

namespace fs = std::filesystem;
using namespace scorekit;
using nlohmann::json;

namespace {

int exit_code_of(const Error& e) {
  switch (e.code()) {
    case errc::io_error:
      return 1;
    case errc::solver_not_converged:
      return 3;
    default:
      return 2;
  }
}

void emit_error(const Error& e) {
  json j{{"error", {{"code", errc_name(e.code())}, {"message", e.what()}}}};
  std::cerr << j.dump() << "\n";
}

struct CommonOpts {
  std::string out_dir = "out";
  std::string spec_path;
  std::uint64_t seed = 0;
};

// JSON spec values act as defaults; explicitly passed flags win.
json load_spec(const std::string& path) {
  if (path.empty()) return json::object();
  return io::read_json(path);
}

template <typename T>
void spec_default(const json& spec, const char* key, CLI::Option* opt, T& value) {
  if (opt->count() == 0 && spec.contains(key)) value = spec.at(key).get<T>();
}

fs::path prepare_out(const std::string& dir) {
  fs::path p(dir);
  std::error_code ec;
  fs::create_directories(p, ec);
  if (ec) throw Error(errc::io_error, "cannot create output directory " + dir);
  return p;
}

json base_manifest(const std::string& command, std::uint64_t seed) {
  return json{{"command", command},
              {"library_version", version_string},
              {"seed", seed},
              {"defaults",
               {{"solver_tol", prox::default_tol},
                {"solver_max_iters", prox::default_max_iters},
                {"adam_beta1", baseline::adam_beta1},
                {"adam_beta2", baseline::adam_beta2},
                {"adam_eps", baseline::adam_eps},
                {"eta_scale", sampling::default_eta_scale},
                {"wedge_lambda_rule", "0.01 * max_j ||K_j^T L||_2"},
                {"relu_bias_shift", sm1d::relu_bias_shift}}}};
}

Activation parse_activation(const std::string& s) {
  if (s == "relu") return Activation::ReLU;
  if (s == "abs") return Activation::Abs;
  throw Error(errc::bad_beta, "unknown activation '" + s + "' (use relu or abs)");
}

VectorXd load_column(const std::string& path) {
  MatrixXd M = io::read_matrix_csv(path);
  if (M.cols() != 1) throw Error(errc::io_error, path + " must have a single column");
  return M.col(0);
}

MatrixXd trace_to_rows(const std::vector<MatrixXd>& trace) {
  if (trace.empty()) return MatrixXd(0, 0);
  const Eigen::Index chains = trace.front().rows(), d = trace.front().cols();
  MatrixXd rows(chains * static_cast<Eigen::Index>(trace.size()), 2 + d);
  Eigen::Index r = 0;
  for (Eigen::Index c = 0; c < chains; ++c)
    for (std::size_t t = 0; t < trace.size(); ++t) {
      rows(r, 0) = static_cast<double>(c);
      rows(r, 1) = static_cast<double>(t + 1);
      rows.block(r, 2, 1, d) = trace[t].row(c);
      ++r;
    }
  return rows;
}

MatrixXd histogram(const VectorXd& values, int bins, double lo, double hi) {
  MatrixXd h = MatrixXd::Zero(bins, 2);
  const double w = (hi - lo) / bins;
  for (int b = 0; b < bins; ++b) h(b, 0) = lo + b * w;
  for (Eigen::Index i = 0; i < values.size(); ++i) {
    int b = static_cast<int>((values[i] - lo) / w);
    if (b >= 0 && b < bins) h(b, 1) += 1.0;
  }
  return h;
}

int cmd_fit_sm(const CommonOpts& common, const std::string& data_path, std::string activation,
               bool skip, double beta, bool beta_auto, int grid_points, bool dump_program) {
  auto out = prepare_out(common.out_dir);
  auto d = make_dataset_1d(VectorXd(load_column(data_path)));

  ArchitectureConfig cfg;
  cfg.activation = parse_activation(activation);
  cfg.skip = skip;
  cfg.beta = beta;

  json manifest = base_manifest("fit-sm", common.seed);
  std::optional<sm1d::BetaThresholds> th;
  if (!skip) th = sm1d::compute_beta_thresholds(d, cfg);
  if (beta_auto) {
    if (skip) throw Error(errc::not_applicable, "--beta-auto applies to no-skip variants");
    cfg.beta = th->b_inf - 1.0;  // the large-decay single-Gaussian regime
  }

  auto prog = sm1d::build_sm_program(d, cfg);
  auto sol = prox::solve_l1_quadratic(prog.to_l1_problem());
  if (sol.status == prox::SolveStatus::MaxIters)
    throw Error(errc::solver_not_converged, "solver hit the iteration cap");
  if (sol.status == prox::SolveStatus::Unbounded)
    throw Error(errc::unbounded_objective, "program is unbounded below");
  auto params = sm1d::reconstruct_network(sol.y_star, d, cfg);

  json sol_json = io::sm_solution_json(prog, sol, params);
  if (th) {
    sol_json["thresholds"] = {{"b_inf", th->b_inf}, {"beta_low", th->beta_low}};
  }
  io::write_json(out / "solution.json", sol_json);

  const double span = d.points[d.n() - 1] - d.points[0];
  VectorXd grid = VectorXd::LinSpaced(grid_points, d.points[0] - 0.25 * span,
                                      d.points[d.n() - 1] + 0.25 * span);
  MatrixXd score_grid(grid_points, 2);
  score_grid.col(0) = grid;
  score_grid.col(1) = evaluate_network(params, grid);
  io::write_matrix_csv(out / "score_grid.csv", score_grid, "x,score");

  if (dump_program) {
    io::write_matrix_csv(out / "program_A.csv", prog.A);
    io::write_matrix_csv(out / "program_b.csv", prog.b_lin);
  }

  manifest["config"] = {{"data", data_path},        {"activation", activation},
                        {"skip", skip},             {"beta", cfg.beta},
                        {"beta_auto", beta_auto},   {"grid_points", grid_points},
                        {"n", d.n()},               {"mu", d.mu},
                        {"v", d.v}};
  io::write_json(out / "manifest.json", manifest);
  std::cout << "fit-sm: objective " << io::format_double(sol.objective + prog.c_const) << ", "
            << sol.iterations << " iterations\n";
  return 0;
}

int cmd_fit_dsm(const CommonOpts& common, const std::string& data_path, std::string activation,
                double beta, double epsilon, double label_sign) {
  auto out = prepare_out(common.out_dir);
  VectorXd clean = load_column(data_path);
  const Eigen::Index n = clean.size();

  // perturb the clean points and build labels sign * delta / epsilon
  VectorXd delta(n);
  for (Eigen::Index i = 0; i < n; ++i)
    delta[i] = rng::normal(common.seed, 0xD5A, static_cast<std::uint64_t>(i), 0);
  VectorXd noisy_raw = clean + epsilon * delta;
  VectorXd labels_raw = label_sign * delta / epsilon;

  std::vector<std::pair<double, double>> paired(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) paired[static_cast<std::size_t>(i)] = {noisy_raw[i], labels_raw[i]};
  std::sort(paired.begin(), paired.end());
  VectorXd noisy(n), labels(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    noisy[i] = paired[static_cast<std::size_t>(i)].first;
    labels[i] = paired[static_cast<std::size_t>(i)].second;
  }

  auto d = make_dataset_1d(noisy);
  auto prog = dsm1d::build_dsm_program(d, labels, epsilon, parse_activation(activation), beta);
  auto sol = dsm1d::solve_dsm_program(prog);
  if (sol.status != prox::SolveStatus::Converged)
    throw Error(errc::solver_not_converged, "lasso did not converge");
  auto params = dsm1d::reconstruct_dsm_network(sol.y_star, prog);

  io::write_json(out / "solution.json",
                 json{{"variant", activation},
                      {"beta", beta},
                      {"epsilon", epsilon},
                      {"label_sign", label_sign},
                      {"solution", io::to_json(sol)},
                      {"network", io::to_json(params)}});
  const double span = d.points[n - 1] - d.points[0];
  VectorXd grid = VectorXd::LinSpaced(201, d.points[0] - 0.25 * span, d.points[n - 1] + 0.25 * span);
  MatrixXd score_grid(201, 2);
  score_grid.col(0) = grid;
  score_grid.col(1) = dsm1d::predict_dsm_score(sol.y_star, prog, grid);
  io::write_matrix_csv(out / "score_grid.csv", score_grid, "x,score");

  json manifest = base_manifest("fit-dsm", common.seed);
  manifest["config"] = {{"data", data_path},   {"activation", activation}, {"beta", beta},
                        {"epsilon", epsilon},  {"label_sign", label_sign}, {"n", n}};
  io::write_json(out / "manifest.json", manifest);
  std::cout << "fit-dsm: objective " << io::format_double(sol.objective) << ", kkt "
            << io::format_double(sol.kkt_residual) << "\n";
  return 0;
}

int cmd_sample(const CommonOpts& common, const std::string& model_path, const std::string& builtin,
               double eta, Eigen::Index steps, Eigen::Index chains, double init_lo, double init_hi,
               bool store_trace, int hist_bins) {
  auto out = prepare_out(common.out_dir);

  sampling::BatchScore score;
  Eigen::Index d = 1;
  if (!model_path.empty()) {
    json j = io::read_json(model_path);
    auto params = io::params_from_json(j.at("network"));
    d = params.dim();
    score = sampling::batch_score(params);
  } else if (builtin == "zero") {
    score = [](const MatrixXd& s) { return MatrixXd::Zero(s.rows(), s.cols()); };
  } else if (builtin == "neg-x") {
    score = [](const MatrixXd& s) { return MatrixXd(-s); };
  } else {
    throw Error(errc::io_error, "either --model or --builtin {zero, neg-x} is required");
  }

  sampling::ChainConfig cfg;
  cfg.eta = eta;
  cfg.steps_T = steps;
  cfg.num_chains = chains;
  cfg.init = sampling::InitSpec::uniform(init_lo, init_hi);
  cfg.seed = common.seed;
  cfg.store_trace = store_trace;

  auto res = sampling::run_lmc(score, cfg, d);
  io::write_matrix_csv(out / "final_samples.csv", res.final_states);
  if (store_trace) {
    std::string header = "chain,step";
    for (Eigen::Index j = 0; j < d; ++j) header += ",x" + std::to_string(j);
    io::write_matrix_csv(out / "trace.csv", trace_to_rows(res.trace), header);
  }
  if (d == 1) {
    const double lo = res.final_states.col(0).minCoeff();
    const double hi = res.final_states.col(0).maxCoeff() + 1e-9;
    io::write_matrix_csv(out / "histogram.csv", histogram(res.final_states.col(0), hist_bins, lo, hi),
                         "bin_left,count");
  }

  json manifest = base_manifest("sample", common.seed);
  manifest["config"] = {{"model", model_path}, {"builtin", builtin},
                        {"eta", eta},          {"steps", steps},
                        {"chains", chains},    {"init", {init_lo, init_hi}},
                        {"store_trace", store_trace}};
  io::write_json(out / "manifest.json", manifest);
  std::cout << "sample: " << chains << " chains x " << steps << " steps\n";
  return 0;
}

int cmd_baseline(const CommonOpts& common, const std::string& data_path, const std::string& objective,
                 std::string activation, double beta, double lr, Eigen::Index epochs,
                 Eigen::Index width, int runs, double epsilon, double label_sign) {
  auto out = prepare_out(common.out_dir);
  VectorXd clean = load_column(data_path);

  baseline::TrainConfig cfg;
  cfg.learning_rate = lr;
  cfg.epochs = epochs;
  cfg.m = width;
  cfg.arch.activation = parse_activation(activation);
  cfg.arch.beta = beta;
  cfg.objective = objective == "dsm" ? baseline::Objective::DSM : baseline::Objective::SM;

  VectorXd xs = clean;
  std::optional<VectorXd> labels;
  if (cfg.objective == baseline::Objective::DSM) {
    VectorXd delta(xs.size());
    for (Eigen::Index i = 0; i < xs.size(); ++i)
      delta[i] = rng::normal(common.seed, 0xD5A, static_cast<std::uint64_t>(i), 0);
    xs = clean + epsilon * delta;
    labels = VectorXd(label_sign * delta / epsilon);
  } else {
    std::sort(xs.data(), xs.data() + xs.size());
  }

  json summary = json::array();
  for (int run = 0; run < runs; ++run) {
    baseline::TrainConfig c = cfg;
    c.seed = common.seed + static_cast<std::uint64_t>(run);
    auto res = baseline::adam_train(c, xs, labels);
    MatrixXd curve(static_cast<Eigen::Index>(res.loss_curve.size()), 2);
    for (std::size_t e = 0; e < res.loss_curve.size(); ++e) {
      curve(static_cast<Eigen::Index>(e), 0) = static_cast<double>(e + 1);
      curve(static_cast<Eigen::Index>(e), 1) = res.loss_curve[e];
    }
    io::write_matrix_csv(out / ("loss_curve_run" + std::to_string(run) + ".csv"), curve,
                         "epoch,loss");
    summary.push_back(json{{"run", run},
                           {"seed", c.seed},
                           {"final_loss", res.loss_curve.back()},
                           {"diverged", res.diverged}});
  }
  io::write_json(out / "summary.json", summary);

  json manifest = base_manifest("baseline", common.seed);
  manifest["config"] = {{"data", data_path},        {"objective", objective},
                        {"activation", activation}, {"beta", beta},
                        {"lr", lr},                 {"epochs", epochs},
                        {"m", width},               {"runs", runs},
                        {"epsilon", epsilon},       {"label_sign", label_sign}};
  io::write_json(out / "manifest.json", manifest);
  std::cout << "baseline: " << runs << " runs done\n";
  return 0;
}

int cmd_spiral(const CommonOpts& common, Eigen::Index samples, double eta_base,
               double lambda_scale) {
  auto out = prepare_out(common.out_dir);

  spiral::SpiralConfig cfg;
  cfg.seed = common.seed;
  cfg.num_samples = samples;
  cfg.eta_base = eta_base;
  cfg.lambda_scale = lambda_scale;
  auto res = spiral::run_spiral_pipeline(cfg);

  io::write_matrix_csv(out / "spiral_clean.csv", res.clean);
  for (std::size_t l = 0; l < res.noisy_per_level.size(); ++l) {
    io::write_matrix_csv(out / ("noisy_level" + std::to_string(l) + ".csv"),
                         res.noisy_per_level[l]);
  }
  for (std::size_t s = 0; s < res.snapshots.size(); ++s) {
    io::write_matrix_csv(out / ("snapshot_level" + std::to_string(s) + ".csv"), res.snapshots[s]);
  }
  io::write_matrix_csv(out / "final_samples.csv", res.final_samples);

  json metrics{{"mean_nn_distance", res.mean_nn_distance}, {"lambdas", res.lambdas}};
  io::write_json(out / "metrics.json", metrics);

  json manifest = base_manifest("spiral", common.seed);
  manifest["config"] = {{"samples", samples},
                        {"eta_base", eta_base},
                        {"lambda_scale", lambda_scale},
                        {"sigmas", cfg.sigmas},
                        {"steps", {5, 5, 5, 5, 15}},
                        {"n_points", cfg.n_points},
                        {"init", {cfg.init_lo, cfg.init_hi}},
                        {"label_convention", "-delta/sigma"}};
  io::write_json(out / "manifest.json", manifest);
  std::cout << "spiral: final mean NN distance "
            << io::format_double(res.mean_nn_distance.back()) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"scorekit: convex score models, samplers, and baselines"};
  app.require_subcommand(1);

  CommonOpts common;

  // fit-sm
  auto* fit_sm = app.add_subcommand("fit-sm", "fit the score-matching convex program");
  std::string sm_data, sm_act = "relu";
  bool sm_skip = false, sm_beta_auto = false, sm_dump = false;
  double sm_beta = 2.0;
  int sm_grid = 201;
  auto* sm_data_opt = fit_sm->add_option("--data", sm_data, "dataset CSV, one value per row");
  auto* sm_act_opt = fit_sm->add_option("--activation", sm_act, "relu or abs");
  auto* sm_skip_opt = fit_sm->add_flag("--skip", sm_skip, "enable the skip connection");
  auto* sm_beta_opt = fit_sm->add_option("--beta", sm_beta, "weight decay");
  auto* sm_beta_auto_opt =
      fit_sm->add_flag("--beta-auto", sm_beta_auto, "use ||b||_inf - 1 (single-Gaussian regime)");
  auto* sm_grid_opt = fit_sm->add_option("--grid", sm_grid, "score grid resolution");
  fit_sm->add_flag("--dump-program", sm_dump, "also write the program matrices");

  // fit-dsm
  auto* fit_dsm = app.add_subcommand("fit-dsm", "fit the denoising lasso");
  std::string dsm_data, dsm_act = "relu";
  double dsm_beta = 0.1, dsm_eps = 0.1, dsm_label_sign = -1.0;
  auto* dsm_data_opt = fit_dsm->add_option("--data", dsm_data, "clean dataset CSV");
  auto* dsm_act_opt = fit_dsm->add_option("--activation", dsm_act, "relu or abs");
  auto* dsm_beta_opt = fit_dsm->add_option("--beta", dsm_beta, "weight decay ( > 0 )");
  auto* dsm_eps_opt = fit_dsm->add_option("--epsilon", dsm_eps, "noise scale");
  fit_dsm->add_option("--label-sign", dsm_label_sign,
                      "label convention: -1 targets the smoothed-density score");

  // sample
  auto* sample = app.add_subcommand("sample", "run Langevin chains");
  std::string sp_model, sp_builtin;
  double sp_eta = 0.01, sp_lo = -10.0, sp_hi = 10.0;
  Eigen::Index sp_steps = 500, sp_chains = 1000;
  bool sp_trace = false;
  int sp_bins = 60;
  sample->add_option("--model", sp_model, "solution.json from fit-sm / fit-dsm");
  sample->add_option("--builtin", sp_builtin, "builtin score: zero or neg-x");
  auto* sp_eta_opt = sample->add_option("--eta", sp_eta, "step size");
  auto* sp_steps_opt = sample->add_option("--steps", sp_steps, "iterations per chain");
  auto* sp_chains_opt = sample->add_option("--chains", sp_chains, "number of chains");
  sample->add_option("--init-lo", sp_lo, "uniform init lower bound");
  sample->add_option("--init-hi", sp_hi, "uniform init upper bound");
  sample->add_flag("--trace", sp_trace, "write the full trace CSV");
  sample->add_option("--hist-bins", sp_bins, "histogram bins (1-D)");

  // baseline
  auto* base = app.add_subcommand("baseline", "train the non-convex network with Adam");
  std::string bl_data, bl_obj = "sm", bl_act = "relu";
  double bl_beta = 1.0, bl_lr = 1e-2, bl_eps = 0.1, bl_label_sign = -1.0;
  Eigen::Index bl_epochs = 500, bl_m = 0;
  int bl_runs = 10;
  auto* bl_data_opt = base->add_option("--data", bl_data, "dataset CSV");
  base->add_option("--objective", bl_obj, "sm or dsm");
  base->add_option("--activation", bl_act, "relu or abs");
  base->add_option("--beta", bl_beta, "weight decay");
  auto* bl_lr_opt = base->add_option("--lr", bl_lr, "Adam step size");
  auto* bl_epochs_opt = base->add_option("--epochs", bl_epochs, "epochs");
  base->add_option("--m", bl_m, "hidden width (0 = 4n)");
  base->add_option("--runs", bl_runs, "number of seeded runs");
  base->add_option("--epsilon", bl_eps, "noise scale (dsm)");
  base->add_option("--label-sign", bl_label_sign, "label convention (dsm)");

  // spiral
  auto* spiral_cmd = app.add_subcommand("spiral", "end-to-end 2-D spiral pipeline");
  Eigen::Index spiral_samples = 500;
  double spiral_eta = 0.35, spiral_lambda = 0.01;
  auto* spiral_samples_opt = spiral_cmd->add_option("--samples", spiral_samples, "chains to draw");
  spiral_cmd->add_option("--eta-base", spiral_eta, "base step (level step = eta * sigma^2)");
  spiral_cmd->add_option("--lambda-scale", spiral_lambda, "group lasso weight scale");

  for (auto* sub : {fit_sm, fit_dsm, sample, base, spiral_cmd}) {
    sub->add_option("--out", common.out_dir, "output directory");
    sub->add_option("--seed", common.seed, "global seed");
    sub->add_option("--spec", common.spec_path, "JSON config; flags override its values");
  }

  CLI11_PARSE(app, argc, argv);

  try {
    const json spec = load_spec(common.spec_path);
    if (fit_sm->parsed()) {
      spec_default(spec, "data", sm_data_opt, sm_data);
      spec_default(spec, "activation", sm_act_opt, sm_act);
      spec_default(spec, "beta", sm_beta_opt, sm_beta);
      spec_default(spec, "grid", sm_grid_opt, sm_grid);
      if (sm_skip_opt->count() == 0 && spec.contains("skip")) sm_skip = spec.at("skip").get<bool>();
      if (sm_beta_auto_opt->count() == 0 && spec.contains("beta_auto"))
        sm_beta_auto = spec.at("beta_auto").get<bool>();
      if (sm_data.empty()) throw Error(errc::io_error, "--data is required");
      return cmd_fit_sm(common, sm_data, sm_act, sm_skip, sm_beta, sm_beta_auto, sm_grid, sm_dump);
    }
    if (fit_dsm->parsed()) {
      spec_default(spec, "data", dsm_data_opt, dsm_data);
      spec_default(spec, "activation", dsm_act_opt, dsm_act);
      spec_default(spec, "beta", dsm_beta_opt, dsm_beta);
      spec_default(spec, "epsilon", dsm_eps_opt, dsm_eps);
      if (dsm_data.empty()) throw Error(errc::io_error, "--data is required");
      return cmd_fit_dsm(common, dsm_data, dsm_act, dsm_beta, dsm_eps, dsm_label_sign);
    }
    if (sample->parsed()) {
      spec_default(spec, "eta", sp_eta_opt, sp_eta);
      spec_default(spec, "steps", sp_steps_opt, sp_steps);
      spec_default(spec, "chains", sp_chains_opt, sp_chains);
      return cmd_sample(common, sp_model, sp_builtin, sp_eta, sp_steps, sp_chains, sp_lo, sp_hi,
                        sp_trace, sp_bins);
    }
    if (base->parsed()) {
      spec_default(spec, "data", bl_data_opt, bl_data);
      spec_default(spec, "lr", bl_lr_opt, bl_lr);
      spec_default(spec, "epochs", bl_epochs_opt, bl_epochs);
      if (bl_data.empty()) throw Error(errc::io_error, "--data is required");
      return cmd_baseline(common, bl_data, bl_obj, bl_act, bl_beta, bl_lr, bl_epochs, bl_m, bl_runs,
                          bl_eps, bl_label_sign);
    }
    if (spiral_cmd->parsed()) {
      spec_default(spec, "samples", spiral_samples_opt, spiral_samples);
      return cmd_spiral(common, spiral_samples, spiral_eta, spiral_lambda);
    }
  } catch (const Error& e) {
    emit_error(e);
    return exit_code_of(e);
  } catch (const std::exception& e) {
    json j{{"error", {{"code", "Internal"}, {"message", e.what()}}}};
    std::cerr << j.dump() << "\n";
    return 2;
  }
  return 0;
}
