// Experiment runner: data generation, training, bound evaluation, audits and
// dependent-data experiments. Every command emits a JSON report (stdout, or
// --out) that embeds the resolved config and a content hash of each input
// file; per-trial tables go to CSV via --csv. Reports are byte-stable for a
// fixed argv and inputs; wall-clock timestamps live in a "<out>.sidecar.json"
// next to the report, never inside it.
//
// Exit codes: 0 all checks passed, 1 a check failed, 2 usage error,
// 3 missing file, 4 invalid configuration.

#include <chrono>
#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "sop/audit.hpp"
#include "sop/bounds.hpp"
#include "sop/datagen.hpp"
#include "sop/io.hpp"
#include "sop/mixing.hpp"
#include "sop/train.hpp"

using namespace sop;
using json = nlohmann::json;

namespace {

constexpr int kExitFail = 1;
constexpr int kExitUsage = 2;
constexpr int kExitMissingFile = 3;
constexpr int kExitInvalidConfig = 4;

struct OutputOpts {
  std::string out;  // report path; empty = stdout
  std::string csv;  // per-trial table path; empty = skip
};

void add_output_opts(CLI::App* cmd, OutputOpts& o) {
  cmd->add_option("--out", o.out, "write the JSON report here instead of stdout");
  cmd->add_option("--csv", o.csv, "write the per-trial CSV table here");
}

// The report itself stays timestamp-free so identical runs are byte-identical.
void emit_report(const OutputOpts& o, const json& report) {
  if (o.out.empty()) {
    std::cout << report.dump(2) << "\n";
    return;
  }
  io::write_json(o.out, report);
  const auto now = std::chrono::system_clock::now().time_since_epoch();
  io::write_json(o.out + ".sidecar.json",
                 json{{"written_at_unix_ms",
                       std::chrono::duration_cast<std::chrono::milliseconds>(now).count()},
                      {"report", o.out}});
}

LossKind parse_loss(const std::string& name) {
  if (name == "hamming") return LossKind::HammingUnnormalized;
  if (name == "hamming-norm") return LossKind::HammingNormalized;
  if (name == "zero-one") return LossKind::ZeroOne;
  throw std::invalid_argument("unknown loss kind '" + name + "'");
}

struct ScenarioOpts {
  std::string kind = "chain";
  int l = 4;
  int c = 3;
  int n = 3;
  int window = 2;
};

void add_scenario_opts(CLI::App* cmd, ScenarioOpts& s) {
  cmd->add_option("--scenario", s.kind, "chain | multiclass")
      ->check(CLI::IsMember({"chain", "multiclass"}));
  cmd->add_option("--l", s.l, "chain length");
  cmd->add_option("--c", s.c, "label alphabet size / class count");
  cmd->add_option("--n", s.n, "context dimension");
  cmd->add_option("--window", s.window, "factor window (chain only)");
}

GeneratorConfig scenario_config(const ScenarioOpts& s) {
  GeneratorConfig cfg;
  if (s.kind == "chain")
    cfg.scenario = ChainScenario{s.l, s.c, s.n};
  else
    cfg.scenario = MultiClassScenario{s.c, s.n};
  return cfg;
}

json scenario_json(const ScenarioOpts& s) {
  json j{{"scenario", s.kind}, {"c", s.c}, {"n", s.n}};
  if (s.kind == "chain") {
    j["l"] = s.l;
    j["window"] = s.window;
  }
  return j;
}

json constants_json(const bounds::ProblemConstants& pc) {
  return json{{"m", pc.m},       {"d", pc.d},         {"F_count", pc.F_count},
              {"psi_star", pc.psi_star}, {"Lambda", pc.Lambda}, {"rho", pc.rho},
              {"q", pc.q},       {"M", pc.M},         {"kappa", pc.kappa},
              {"delta", pc.delta}};
}

bounds::ProblemConstants constants_from_json(const json& j) {
  bounds::ProblemConstants pc;
  pc.m = j.at("m").get<int>();
  pc.d = j.value("d", 1.0);
  pc.F_count = j.value("F_count", 1.0);
  pc.psi_star = j.value("psi_star", 1.0);
  pc.Lambda = j.value("Lambda", 1.0);
  pc.rho = j.value("rho", 1.0);
  pc.q = j.value("q", 2.0);
  pc.M = j.value("M", 1.0);
  pc.kappa = j.value("kappa", 1.0);
  pc.delta = j.value("delta", 0.05);
  return pc;
}

// Constants measured from a dataset: d, |F|, Psi*, kappa, m.
bounds::ProblemConstants measure_constants(const Dataset& ds, double Lambda, double rho,
                                           double M, double delta) {
  bounds::ProblemConstants pc;
  pc.m = static_cast<int>(ds.examples.size());
  pc.d = 1.0;
  for (int f = 0; f < static_cast<int>(ds.graph.factors.size()); ++f)
    pc.d = std::max(pc.d, static_cast<double>(factor_card(ds.graph, f)));
  pc.F_count = static_cast<double>(ds.graph.factors.size());
  pc.psi_star = compute_psi_star(ds, 2.0);
  pc.kappa = compute_kappa(ds).value;
  pc.Lambda = Lambda;
  pc.rho = rho;
  pc.M = M;
  pc.q = 2.0;
  pc.delta = delta;
  return pc;
}

json tagged(double value, const char* provenance) {
  return json{{"value", value}, {"provenance", provenance}};
}

// ---- gen-data ----

int run_gen_data(const ScenarioOpts& sc, double noise, double teacher_norm,
                 std::uint64_t seed, int m, const std::string& data_out,
                 const OutputOpts& oo) {
  GeneratorConfig cfg = scenario_config(sc);
  cfg.noise = noise;
  cfg.teacher_norm = teacher_norm;
  cfg.seed = seed;
  cfg.validate();
  const GeneratedDataset gd = generate(cfg, m);
  io::write_dataset(data_out, gd.data);

  json report = io::make_report(
      "gen-data", json{{"scenario", scenario_json(sc)},
                       {"m", m},
                       {"noise", noise},
                       {"teacher_norm", teacher_norm},
                       {"seed", seed},
                       {"data_out", data_out}});
  report["dataset_hash"] = io::file_hash(data_out);
  report["examples"] = gd.data.examples.size();
  report["teacher_norm_realized"] = tagged(norm2(gd.teacher), io::kProvenanceMeasured);
  emit_report(oo, report);
  return 0;
}

// ---- train ----

int run_train(const std::string& data_path, const std::string& algo,
              const std::string& loss_name, double rho, double eta, int iters,
              bool use_schedule, double lambda, double tol, std::uint64_t seed,
              const std::string& weights_out, const OutputOpts& oo) {
  const Dataset ds = io::read_dataset(data_path);
  if (ds.examples.empty()) throw std::invalid_argument("train: empty dataset");
  const MarginSpec spec(rho, TaskLoss::make(parse_loss(loss_name), ds.graph));
  const int m = static_cast<int>(ds.examples.size());
  const KappaResult kappa = compute_kappa(ds);

  json config{{"data", data_path},        {"data_hash", io::file_hash(data_path)},
              {"algo", algo},             {"loss", loss_name},
              {"rho", rho},               {"seed", seed}};
  TrainResult res;
  if (algo == "sgd") {
    SgdConfig cfg;
    if (use_schedule) {
      const SgdSchedule sch = sgd_schedule(m, kappa.value);
      cfg.eta = sch.eta;
      cfg.iterations = sch.iterations;
    } else {
      cfg.eta = eta;
      cfg.iterations = iters;
    }
    cfg.seed = seed;
    cfg.mode = SubgradMode::Hinge;
    config["eta"] = cfg.eta;
    config["iterations"] = cfg.iterations;
    config["schedule"] = use_schedule;
    res = sgd(ds, spec, cfg);
  } else {
    RrmConfig cfg;
    cfg.lambda = lambda;
    cfg.tol = tol;
    cfg.kappa = kappa.value;
    config["lambda"] = lambda;
    config["tol"] = tol;
    res = rrm(ds, spec, cfg);
  }

  json report = io::make_report("train", config);
  report["kappa"] = tagged(kappa.value, io::kProvenanceMeasured);
  report["kappa_exact"] = kappa.exact;
  report["iterations_run"] = res.iterations_run;
  report["weight_norm"] = tagged(norm2(res.averaged_w), io::kProvenanceMeasured);
  report["empirical_risk"] =
      tagged(empirical_risk(res.averaged_w, ds, spec), io::kProvenanceMeasured);
  if (res.certificate) {
    report["certificate"] = tagged(*res.certificate, io::kProvenanceExact);
    report["certified"] = res.certified;
  }
  if (!weights_out.empty()) {
    io::write_json(weights_out, json{{"schema_version", io::kSchemaVersion},
                                     {"w", res.averaged_w}});
    report["weights_out"] = weights_out;
  }
  emit_report(oo, report);
  return 0;
}

// ---- bounds ----

int run_bounds(const std::string& constants_path, const OutputOpts& oo) {
  std::ifstream in(constants_path);
  if (!in) throw std::runtime_error("bounds: cannot open " + constants_path);
  const json cj = json::parse(in);
  const bounds::ProblemConstants pc = constants_from_json(cj);
  pc.validate();
  const double R_S = cj.value("empirical_risk", 0.0);

  json report = io::make_report(
      "bounds", json{{"constants", constants_json(pc)},
                     {"constants_file", constants_path},
                     {"constants_hash", io::file_hash(constants_path)},
                     {"empirical_risk", R_S}});
  report["rademacher_bound"] =
      tagged(bounds::rademacher_bound(pc), io::kProvenanceExact);
  report["generalization_bound_hp"] =
      tagged(bounds::generalization_bound_hp(pc, R_S), io::kProvenanceExact);
  report["prior_sqrt_d_bound"] =
      tagged(bounds::prior_sqrt_d_bound(pc), io::kProvenanceShapeOnly);
  if (cj.contains("lambda")) {
    const double lambda = cj.at("lambda").get<double>();
    report["rrm_stability_bound"] = tagged(
        bounds::rrm_stability_bound(pc.m, pc.rho, lambda, pc.kappa), io::kProvenanceExact);
    report["rrm_regularized_excess_bound"] =
        tagged(bounds::rrm_regularized_excess_bound(pc.m, pc.rho, lambda, pc.kappa),
               io::kProvenanceExact);
  }
  if (cj.contains("w_star_norm")) {
    report["rrm_excess_bound"] =
        tagged(bounds::rrm_excess_bound(pc.m, pc.rho, pc.kappa,
                                        cj.at("w_star_norm").get<double>()),
               io::kProvenanceExact);
    report["lambda_choice"] =
        tagged(lambda_choice(pc.m, pc.rho, pc.kappa,
                             cj.at("w_star_norm").get<double>()),
               io::kProvenanceExact);
  }
  {
    const SgdSchedule sch = sgd_schedule(pc.m, std::max(pc.kappa, 1e-12));
    report["sgd_schedule"] = json{{"iterations", sch.iterations}, {"eta", sch.eta}};
    report["sgd_excess_bound"] =
        tagged(bounds::sgd_excess_bound(static_cast<double>(sch.iterations),
                                        static_cast<double>(pc.m), pc.kappa, sch.eta),
               io::kProvenanceShapeOnly);
  }
  if (cj.contains("J") && cj.contains("a")) {
    const bounds::MixingBoundResult mb =
        bounds::mixing_bound(cj.at("m_docs").get<int>(), cj.at("J").get<int>(),
                             cj.at("a").get<int>(), cj.value("beta", 0.0), pc.delta, pc);
    report["mixing_bound"] = json{{"feasible", mb.feasible},
                                  {"value", mb.value},
                                  {"delta_eff", mb.delta_eff},
                                  {"provenance", io::kProvenanceShapeOnly}};
  }
  emit_report(oo, report);
  return 0;
}

// ---- audits ----

int run_audit_pointwise(const std::string& which, const ScenarioOpts& sc, double rho,
                        const std::string& loss_name, int trials, double scale,
                        std::uint64_t seed, int threads, const OutputOpts& oo) {
  const FactorGraph g = chain_graph(sc.l, sc.window, sc.c);
  const Featurizer fz = ChainCrf{sc.n, sc.c};
  const MarginSpec spec(rho, TaskLoss::make(parse_loss(loss_name), g));
  json config{{"scenario", scenario_json(sc)}, {"rho", rho},   {"loss", loss_name},
              {"trials", trials},              {"scale", scale}, {"seed", seed}};
  json report = io::make_report("audit-" + which, config);
  bool pass = false;
  if (which == "gradcheck") {
    audit::GradCheckConfig cfg;
    cfg.n_trials = trials;
    cfg.scale = scale;
    cfg.seed = seed;
    cfg.threads = threads;
    const audit::GradCheckResult r = audit::grad_check(g, fz, spec, cfg);
    report["max_rel_error"] = tagged(r.max_rel_error, io::kProvenanceMeasured);
    report["accepted"] = r.accepted;
    report["skipped"] = r.skipped;
    pass = r.pass;
  } else {
    audit::TrialsConfig cfg;
    cfg.n_trials = trials;
    cfg.scale = scale;
    cfg.seed = seed;
    cfg.threads = threads;
    const double v = which == "lipschitz" ? audit::check_lipschitz(g, fz, spec, cfg)
                                          : audit::check_dominance(g, fz, spec, cfg);
    report["max_violation"] = tagged(v, io::kProvenanceMeasured);
    report["tolerance"] = 1e-9;
    pass = v <= 1e-9;
  }
  report["pass"] = pass;
  emit_report(oo, report);
  return pass ? 0 : kExitFail;
}

int run_audit_stability_sgd(const ScenarioOpts& sc, int m, double rho, double eta,
                            int iters, std::vector<int> checkpoints, int trials,
                            std::uint64_t seed, int threads, const OutputOpts& oo) {
  GeneratorConfig gen = scenario_config(sc);
  gen.seed = seed;
  const GeneratedDataset gd = generate(gen, m);
  const MarginSpec spec(rho, TaskLoss::make(LossKind::HammingUnnormalized,
                                            gd.data.graph));
  if (checkpoints.empty()) checkpoints = {iters};
  audit::SgdStabilityConfig cfg;
  cfg.eta = eta;
  cfg.iterations = iters;
  cfg.checkpoints = checkpoints;
  cfg.n_trials = trials;
  cfg.seed = seed + 1;
  cfg.threads = threads;
  const audit::StabilityProbeResult r = audit::probe_sgd_stability(gd, gen, spec, cfg);

  json report = io::make_report(
      "audit-stability-sgd",
      json{{"scenario", scenario_json(sc)}, {"m", m},         {"rho", rho},
           {"eta", eta},                    {"iters", iters}, {"checkpoints", checkpoints},
           {"trials", trials},              {"seed", seed}});
  report["checkpoints"] = r.t_values;
  report["measured_sq_dist"] = r.measured_sq_dist;
  report["bound_values"] = r.bound_values;
  report["provenance"] = json{{"measured_sq_dist", io::kProvenanceMeasured},
                              {"bound_values", io::kProvenanceExact}};
  report["pass"] = r.pass;
  emit_report(oo, report);
  if (!oo.csv.empty()) {
    std::vector<std::vector<double>> rows;
    for (std::size_t i = 0; i < r.t_values.size(); ++i)
      rows.push_back({static_cast<double>(r.t_values[i]), r.measured_sq_dist[i],
                      r.bound_values[i]});
    io::write_csv(oo.csv, {"t", "measured_sq_dist", "bound"}, rows);
  }
  return r.pass ? 0 : kExitFail;
}

int run_audit_stability_rrm(const ScenarioOpts& sc, int m, double rho, double lambda,
                            double tol, int trials, int eval_inputs, std::uint64_t seed,
                            int threads, const OutputOpts& oo) {
  GeneratorConfig gen = scenario_config(sc);
  gen.seed = seed;
  const GeneratedDataset gd = generate(gen, m);
  const MarginSpec spec(rho, TaskLoss::make(LossKind::HammingUnnormalized,
                                            gd.data.graph));
  audit::RrmStabilityConfig cfg;
  cfg.lambda = lambda;
  cfg.tol = tol;
  cfg.n_trials = trials;
  cfg.eval_inputs = eval_inputs;
  cfg.seed = seed + 1;
  cfg.threads = threads;
  const audit::RrmStabilityResult r = audit::probe_rrm_stability(gd, gen, spec, cfg);

  json report = io::make_report(
      "audit-stability-rrm",
      json{{"scenario", scenario_json(sc)}, {"m", m},     {"rho", rho},
           {"lambda", lambda},              {"tol", tol}, {"trials", trials},
           {"eval_inputs", eval_inputs},    {"seed", seed}});
  report["max_diff"] = tagged(r.max_diff, io::kProvenanceMeasured);
  report["bound"] = tagged(r.bound, io::kProvenanceExact);
  report["slack"] = tagged(r.slack, io::kProvenanceExact);
  report["sup_approximation_note"] =
      "sup over inputs approximated by training inputs, the replacement and "
      "fresh draws with full label enumeration; a PASS is a necessary condition";
  report["pass"] = r.pass;
  emit_report(oo, report);
  if (!oo.csv.empty()) {
    std::vector<std::vector<double>> rows;
    for (std::size_t i = 0; i < r.per_trial_max.size(); ++i)
      rows.push_back({static_cast<double>(i), r.per_trial_max[i]});
    io::write_csv(oo.csv, {"trial", "max_diff"}, rows);
  }
  return r.pass ? 0 : kExitFail;
}

int run_audit_gap(const ScenarioOpts& sc, int m, int m_test, int repeats, double rho,
                  double delta, std::uint64_t seed, int threads, const OutputOpts& oo) {
  GeneratorConfig gen = scenario_config(sc);
  const MarginSpec spec(rho, TaskLoss::make(LossKind::HammingUnnormalized,
                                            chain_graph(sc.l, sc.window, sc.c)));
  audit::GapConfig cfg;
  cfg.m = m;
  cfg.m_test = m_test;
  cfg.n_repeats = repeats;
  cfg.delta = delta;
  cfg.seed = seed;
  cfg.threads = threads;
  const audit::Trainer trainer = [](const Dataset& ds, const MarginSpec& sp) {
    const SgdSchedule sch =
        sgd_schedule(static_cast<int>(ds.examples.size()), compute_kappa(ds).value);
    SgdConfig sc2;
    sc2.eta = sch.eta;
    sc2.iterations = sch.iterations;
    sc2.seed = 77;
    sc2.mode = SubgradMode::Hinge;
    return sgd(ds, sp, sc2).averaged_w;
  };
  const audit::GapResult r = audit::measure_gap(gen, trainer, spec, cfg);

  json report = io::make_report(
      "audit-gap", json{{"scenario", scenario_json(sc)}, {"m", m},
                        {"m_test", m_test},              {"repeats", repeats},
                        {"rho", rho},                    {"delta", delta},
                        {"seed", seed}});
  report["held_fraction"] = tagged(r.held_fraction, io::kProvenanceMeasured);
  report["pass"] = r.pass;
  emit_report(oo, report);
  if (!oo.csv.empty()) {
    std::vector<std::vector<double>> rows;
    for (std::size_t i = 0; i < r.trials.size(); ++i) {
      const auto& t = r.trials[i];
      rows.push_back({static_cast<double>(i), t.train_risk, t.test_risk, t.gap, t.bound,
                      t.held ? 1.0 : 0.0, t.vacuous ? 1.0 : 0.0});
    }
    io::write_csv(oo.csv, {"repeat", "train_risk", "test_risk", "gap", "bound", "held",
                           "vacuous"},
                  rows);
  }
  return r.pass ? 0 : kExitFail;
}

int run_audit_rademacher(const ScenarioOpts& sc, int m, double rho, double Lambda,
                         int n_sigma, int restarts, int ascent_iters,
                         std::uint64_t seed, int threads, const OutputOpts& oo) {
  GeneratorConfig gen = scenario_config(sc);
  gen.seed = seed;
  const GeneratedDataset gd = generate(gen, m);
  const MarginSpec spec(rho, TaskLoss::make(LossKind::HammingUnnormalized,
                                            gd.data.graph));
  audit::RademacherConfig cfg;
  cfg.Lambda = Lambda;
  cfg.n_sigma = n_sigma;
  cfg.restarts = restarts;
  cfg.ascent_iters = ascent_iters;
  cfg.seed = seed + 1;
  cfg.threads = threads;
  const audit::RademacherEstimate est = audit::estimate_rademacher(gd.data, spec, cfg);
  bounds::ProblemConstants pc =
      measure_constants(gd.data, Lambda, rho, spec.loss.max_value, 0.05);
  const double bound = bounds::rademacher_bound(pc);
  const bool pass = est.estimate <= bound;

  json report = io::make_report(
      "audit-rademacher",
      json{{"scenario", scenario_json(sc)}, {"m", m},
           {"rho", rho},                    {"Lambda", Lambda},
           {"n_sigma", n_sigma},            {"restarts", restarts},
           {"ascent_iters", ascent_iters},  {"seed", seed}});
  report["estimate"] = tagged(est.estimate, io::kProvenanceMeasured);
  report["estimate_note"] = "lower estimate: nonconcave ascent";
  report["bound"] = tagged(bound, io::kProvenanceExact);
  report["constants"] = constants_json(pc);
  report["pass"] = pass;
  emit_report(oo, report);
  if (!oo.csv.empty()) {
    std::vector<std::vector<double>> rows;
    for (std::size_t i = 0; i < est.per_sigma.size(); ++i)
      rows.push_back({static_cast<double>(i), est.per_sigma[i]});
    io::write_csv(oo.csv, {"sigma_draw", "objective"}, rows);
  }
  return pass ? 0 : kExitFail;
}

// ---- mixing ----

mixing::MarkovSource lazy_source(double eps, const ScenarioOpts& sc,
                                 std::uint64_t seed) {
  if (!(eps > 0.0 && eps < 1.0))
    throw std::invalid_argument("mixing: eps must be in (0,1)");
  return mixing::make_markov_source({{1.0 - eps, eps}, {eps, 1.0 - eps}},
                                    ChainScenario{sc.l, sc.c, sc.n}, 1.0, seed);
}

int run_mixing_gen(double eps, const ScenarioOpts& sc, int m, int J,
                   std::uint64_t seed, const std::string& data_out,
                   const OutputOpts& oo) {
  const mixing::MarkovSource src = lazy_source(eps, sc, seed);
  const mixing::DocumentDataset dd = mixing::gen_documents(src, m, J, seed + 1);
  io::write_documents(data_out, dd);
  json report = io::make_report(
      "mixing-gen", json{{"eps", eps},   {"scenario", scenario_json(sc)},
                         {"m", m},       {"J", J},
                         {"seed", seed}, {"data_out", data_out}});
  report["dataset_hash"] = io::file_hash(data_out);
  report["stationary"] = src.stationary;
  emit_report(oo, report);
  return 0;
}

int run_mixing_profile(double eps, const ScenarioOpts& sc, int a_max,
                       std::uint64_t seed, const OutputOpts& oo) {
  const mixing::MarkovSource src = lazy_source(eps, sc, seed);
  std::vector<int> a_values;
  for (int a = 1; a <= a_max; a *= 2) a_values.push_back(a);
  const mixing::MixingProfile p = mixing::make_profile(src, a_values);
  json report = io::make_report(
      "mixing-profile", json{{"eps", eps}, {"a_max", a_max}, {"seed", seed}});
  report["a_values"] = p.a_values;
  report["beta"] = json{{"values", p.beta}, {"provenance", io::kProvenanceExact}};
  report["beta_dobrushin_envelope"] =
      json{{"values", p.beta_dobrushin}, {"provenance", io::kProvenanceExact}};
  report["gamma"] = tagged(p.gamma, io::kProvenanceExact);
  report["beta_reduction_note"] =
      "beta(a) computed as sum_s pi(s) TV(P^a(s,.), pi) for stationary finite "
      "Markov chains; validated against the two-state eigendecomposition oracle";
  emit_report(oo, report);
  if (!oo.csv.empty()) {
    std::vector<std::vector<double>> rows;
    for (std::size_t i = 0; i < p.a_values.size(); ++i)
      rows.push_back({static_cast<double>(p.a_values[i]), p.beta[i],
                      p.beta_dobrushin[i]});
    io::write_csv(oo.csv, {"a", "beta", "dobrushin_envelope"}, rows);
  }
  return 0;
}

int run_mixing_sweep(double eps, const ScenarioOpts& sc, int m, int J, double delta,
                     const std::string& constants_path, std::uint64_t seed,
                     const OutputOpts& oo) {
  const mixing::MarkovSource src = lazy_source(eps, sc, seed);
  bounds::ProblemConstants pc;
  json config{{"eps", eps}, {"m", m}, {"J", J}, {"delta", delta}, {"seed", seed}};
  if (!constants_path.empty()) {
    std::ifstream in(constants_path);
    if (!in) throw std::runtime_error("sweep: cannot open " + constants_path);
    pc = constants_from_json(json::parse(in));
    config["constants_file"] = constants_path;
    config["constants_hash"] = io::file_hash(constants_path);
  } else {
    pc.m = m * J;
    pc.d = static_cast<double>(sc.c) * sc.c;
    pc.F_count = static_cast<double>(sc.l - 1);
    pc.M = static_cast<double>(sc.l);
  }
  config["constants"] = constants_json(pc);
  const mixing::SweepResult sw = mixing::sweep_feasible_a(src, m, J, delta, pc);

  json entries = json::array();
  for (const auto& e : sw.entries)
    entries.push_back(json{{"a", e.a},
                           {"beta", e.beta},
                           {"feasible", e.bound.feasible},
                           {"value", e.bound.value},
                           {"delta_eff", e.bound.delta_eff}});
  json report = io::make_report("mixing-sweep", config);
  report["entries"] = entries;
  report["entries_provenance"] = io::kProvenanceShapeOnly;
  report["best_a"] = sw.best_a;
  report["best_value"] = sw.best_value;
  report["any_feasible"] = sw.best_a != 0;
  emit_report(oo, report);
  if (!oo.csv.empty()) {
    std::vector<std::vector<double>> rows;
    for (const auto& e : sw.entries)
      rows.push_back({static_cast<double>(e.a), e.beta,
                      e.bound.feasible ? 1.0 : 0.0, e.bound.value,
                      e.bound.delta_eff});
    io::write_csv(oo.csv, {"a", "beta", "feasible", "value", "delta_eff"}, rows);
  }
  return 0;
}

int run_mixing_gap(double eps, const ScenarioOpts& sc, int m, int J, int a,
                   double rho, double delta, std::uint64_t seed,
                   const OutputOpts& oo) {
  const mixing::MarkovSource src = lazy_source(eps, sc, seed);
  const mixing::DocumentDataset dd = mixing::gen_documents(src, m, J, seed + 1);
  const Dataset pooled = mixing::pooled(dd);
  const MarginSpec spec(rho, TaskLoss::make(LossKind::HammingUnnormalized, dd.graph));

  const SgdSchedule sch = sgd_schedule(static_cast<int>(pooled.examples.size()),
                                       compute_kappa(pooled).value);
  SgdConfig tcfg;
  tcfg.eta = sch.eta;
  tcfg.iterations = sch.iterations;
  tcfg.seed = seed + 2;
  tcfg.mode = SubgradMode::Hinge;
  const TrainResult tr = sgd(pooled, spec, tcfg);

  bounds::ProblemConstants pc = measure_constants(
      pooled, std::max(norm2(tr.averaged_w), 1e-12), rho, spec.loss.max_value, delta);
  const double beta = mixing::beta_exact(src, a);
  const bounds::MixingBoundResult mb = bounds::mixing_bound(m, J, a, beta, delta, pc);
  const double train_risk = empirical_risk(tr.averaged_w, pooled, spec);

  // fresh documents as the population proxy
  const mixing::DocumentDataset test =
      mixing::gen_documents(src, 10 * m, J, seed + 3);
  const double test_risk = mixing::document_risk(tr.averaged_w, test, spec);
  const double gap = test_risk - train_risk;
  const bool pass = mb.feasible && gap <= mb.value;

  json report = io::make_report(
      "mixing-gap", json{{"eps", eps}, {"scenario", scenario_json(sc)},
                         {"m", m},     {"J", J},
                         {"a", a},     {"rho", rho},
                         {"delta", delta}, {"seed", seed}});
  report["beta"] = tagged(beta, io::kProvenanceExact);
  report["feasible"] = mb.feasible;
  report["bound"] = tagged(mb.value, io::kProvenanceShapeOnly);
  report["train_risk"] = tagged(train_risk, io::kProvenanceMeasured);
  report["test_risk"] = tagged(test_risk, io::kProvenanceMeasured);
  report["gap"] = tagged(gap, io::kProvenanceMeasured);
  report["constants"] = constants_json(pc);
  report["pass"] = pass;
  emit_report(oo, report);
  return pass ? 0 : kExitFail;
}

// ---- report ----

int run_report(const std::vector<std::string>& inputs, const OutputOpts& oo) {
  json combined = io::make_report("summary", json{{"inputs", inputs}});
  json items = json::array();
  bool all_pass = true;
  for (const auto& path : inputs) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("report: cannot open " + path);
    const json j = json::parse(in);
    json item{{"file", path},
              {"hash", io::file_hash(path)},
              {"kind", j.value("kind", std::string("unknown"))}};
    if (j.contains("pass")) {
      item["pass"] = j.at("pass");
      all_pass = all_pass && j.at("pass").get<bool>();
    }
    items.push_back(std::move(item));
  }
  combined["items"] = items;
  combined["all_pass"] = all_pass;
  emit_report(oo, combined);
  return all_pass ? 0 : kExitFail;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"structured output prediction experiment runner"};
  app.require_subcommand(1);
  int threads = 1;
  app.add_option("--threads", threads, "worker cap; outputs are identical for any value")
      ->check(CLI::PositiveNumber);

  // shared knobs
  ScenarioOpts sc;
  double rho = 1.0, noise = 0.0, teacher_norm = 1.0, scale = 1.0;
  double lambda = 1.0, tol = 1e-4, delta = 0.05, Lambda = 1.0, eta = 0.01, eps = 0.2;
  int m = 50, m_test = 1000, trials = 1000, iters = 100, repeats = 100;
  int eval_inputs = 20, n_sigma = 64, restarts = 8, ascent_iters = 150;
  int J = 32, a = 1, a_max = 64;
  std::uint64_t seed = 0;
  std::string loss_name = "hamming", algo = "sgd";
  std::string data_path, data_out, constants_path, weights_out;
  std::vector<int> checkpoints;
  std::vector<std::string> report_inputs;
  bool use_schedule = false;
  OutputOpts oo;

  auto* gen_cmd = app.add_subcommand("gen-data", "generate a synthetic dataset");
  add_scenario_opts(gen_cmd, sc);
  gen_cmd->add_option("--m", m, "example count")->check(CLI::PositiveNumber);
  gen_cmd->add_option("--noise", noise, "label resampling probability");
  gen_cmd->add_option("--teacher-norm", teacher_norm, "teacher weight norm");
  gen_cmd->add_option("--seed", seed, "rng seed");
  gen_cmd->add_option("--data-out", data_out, "dataset JSONL path")->required();
  add_output_opts(gen_cmd, oo);

  auto* train_cmd = app.add_subcommand("train", "train on a JSONL dataset");
  train_cmd->add_option("--data", data_path, "dataset JSONL path")->required();
  train_cmd->add_option("--algo", algo, "sgd | rrm")
      ->check(CLI::IsMember({"sgd", "rrm"}));
  train_cmd->add_option("--loss", loss_name, "hamming | hamming-norm | zero-one");
  train_cmd->add_option("--rho", rho, "margin scale");
  train_cmd->add_option("--eta", eta, "sgd step size");
  train_cmd->add_option("--iters", iters, "sgd iterations");
  train_cmd->add_flag("--schedule", use_schedule, "use the early-stopping schedule");
  train_cmd->add_option("--lambda", lambda, "rrm ridge weight");
  train_cmd->add_option("--tol", tol, "rrm certificate tolerance");
  train_cmd->add_option("--seed", seed, "rng seed");
  train_cmd->add_option("--weights-out", weights_out, "write learned weights here");
  add_output_opts(train_cmd, oo);

  auto* bounds_cmd = app.add_subcommand("bounds", "evaluate all bound formulas");
  bounds_cmd->add_option("--constants", constants_path, "ProblemConstants JSON file")
      ->required();
  add_output_opts(bounds_cmd, oo);

  auto* audit_cmd = app.add_subcommand("audit", "empirical verification probes");
  audit_cmd->require_subcommand(1);
  auto* lip_cmd = audit_cmd->add_subcommand("lipschitz", "score-perturbation bound");
  auto* dom_cmd = audit_cmd->add_subcommand("dominance", "margin loss vs decode loss");
  auto* grad_cmd = audit_cmd->add_subcommand("gradcheck", "finite-difference check");
  for (auto* cmd : {lip_cmd, dom_cmd, grad_cmd}) {
    add_scenario_opts(cmd, sc);
    cmd->add_option("--rho", rho, "margin scale");
    cmd->add_option("--loss", loss_name, "task loss kind");
    cmd->add_option("--trials", trials, "draw count")->check(CLI::PositiveNumber);
    cmd->add_option("--scale", scale, "weight draw scale");
    cmd->add_option("--seed", seed, "rng seed");
    add_output_opts(cmd, oo);
  }
  auto* ssgd_cmd = audit_cmd->add_subcommand("stability-sgd", "coupled replace-one runs");
  add_scenario_opts(ssgd_cmd, sc);
  ssgd_cmd->add_option("--m", m, "training set size");
  ssgd_cmd->add_option("--rho", rho, "margin scale");
  ssgd_cmd->add_option("--eta", eta, "step size");
  ssgd_cmd->add_option("--iters", iters, "iterations");
  ssgd_cmd->add_option("--checkpoints", checkpoints, "measurement points");
  ssgd_cmd->add_option("--trials", trials, "trial pairs");
  ssgd_cmd->add_option("--seed", seed, "rng seed");
  add_output_opts(ssgd_cmd, oo);

  auto* srrm_cmd = audit_cmd->add_subcommand("stability-rrm", "replace-one loss sup");
  add_scenario_opts(srrm_cmd, sc);
  srrm_cmd->add_option("--m", m, "training set size");
  srrm_cmd->add_option("--rho", rho, "margin scale");
  srrm_cmd->add_option("--lambda", lambda, "ridge weight");
  srrm_cmd->add_option("--tol", tol, "certificate tolerance");
  srrm_cmd->add_option("--trials", trials, "replacement trials");
  srrm_cmd->add_option("--eval-inputs", eval_inputs, "fresh draws in the sup pool");
  srrm_cmd->add_option("--seed", seed, "rng seed");
  add_output_opts(srrm_cmd, oo);

  auto* gap_cmd = audit_cmd->add_subcommand("gap", "train/test gap vs the bound");
  add_scenario_opts(gap_cmd, sc);
  gap_cmd->add_option("--m", m, "training set size");
  gap_cmd->add_option("--m-test", m_test, "test set size (>= 10 m)");
  gap_cmd->add_option("--repeats", repeats, "independent repeats");
  gap_cmd->add_option("--rho", rho, "margin scale");
  gap_cmd->add_option("--delta", delta, "confidence parameter");
  gap_cmd->add_option("--seed", seed, "rng seed");
  add_output_opts(gap_cmd, oo);

  auto* rad_cmd = audit_cmd->add_subcommand("rademacher", "Monte-Carlo lower estimate");
  add_scenario_opts(rad_cmd, sc);
  rad_cmd->add_option("--m", m, "sample size");
  rad_cmd->add_option("--rho", rho, "margin scale");
  rad_cmd->add_option("--Lambda", Lambda, "weight ball radius");
  rad_cmd->add_option("--n-sigma", n_sigma, "sign vector draws");
  rad_cmd->add_option("--restarts", restarts, "ascent restarts");
  rad_cmd->add_option("--ascent-iters", ascent_iters, "ascent iterations");
  rad_cmd->add_option("--seed", seed, "rng seed");
  add_output_opts(rad_cmd, oo);

  auto* mixing_cmd = app.add_subcommand("mixing", "dependent-data experiments");
  mixing_cmd->require_subcommand(1);
  auto* mgen_cmd = mixing_cmd->add_subcommand("gen", "generate a document dataset");
  auto* mprof_cmd = mixing_cmd->add_subcommand("profile", "beta and Dobrushin profile");
  auto* msweep_cmd = mixing_cmd->add_subcommand("sweep", "feasibility table over a");
  auto* mgap_cmd = mixing_cmd->add_subcommand("gap", "document-level gap vs the bound");
  for (auto* cmd : {mgen_cmd, mprof_cmd, msweep_cmd, mgap_cmd}) {
    add_scenario_opts(cmd, sc);
    cmd->add_option("--eps", eps, "two-state lazy chain flip probability");
    cmd->add_option("--seed", seed, "rng seed");
    add_output_opts(cmd, oo);
  }
  mgen_cmd->add_option("--m", m, "document count");
  mgen_cmd->add_option("--J", J, "document length");
  mgen_cmd->add_option("--data-out", data_out, "document JSONL path")->required();
  mprof_cmd->add_option("--a-max", a_max, "largest separation (powers of two)");
  msweep_cmd->add_option("--m", m, "document count");
  msweep_cmd->add_option("--J", J, "document length");
  msweep_cmd->add_option("--delta", delta, "confidence parameter");
  msweep_cmd->add_option("--constants", constants_path, "ProblemConstants JSON file");
  mgap_cmd->add_option("--m", m, "document count");
  mgap_cmd->add_option("--J", J, "document length");
  mgap_cmd->add_option("--a", a, "block separation");
  mgap_cmd->add_option("--rho", rho, "margin scale");
  mgap_cmd->add_option("--delta", delta, "confidence parameter");

  auto* report_cmd = app.add_subcommand("report", "combine report files");
  report_cmd->add_option("files", report_inputs, "JSON report files")->required();
  add_output_opts(report_cmd, oo);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitUsage;
  }

  try {
    if (gen_cmd->parsed())
      return run_gen_data(sc, noise, teacher_norm, seed, m, data_out, oo);
    if (train_cmd->parsed())
      return run_train(data_path, algo, loss_name, rho, eta, iters, use_schedule,
                       lambda, tol, seed, weights_out, oo);
    if (bounds_cmd->parsed()) return run_bounds(constants_path, oo);
    if (audit_cmd->parsed()) {
      if (lip_cmd->parsed())
        return run_audit_pointwise("lipschitz", sc, rho, loss_name, trials, scale,
                                   seed, threads, oo);
      if (dom_cmd->parsed())
        return run_audit_pointwise("dominance", sc, rho, loss_name, trials, scale,
                                   seed, threads, oo);
      if (grad_cmd->parsed())
        return run_audit_pointwise("gradcheck", sc, rho, loss_name, trials, scale,
                                   seed, threads, oo);
      if (ssgd_cmd->parsed())
        return run_audit_stability_sgd(sc, m, rho, eta, iters, checkpoints, trials,
                                       seed, threads, oo);
      if (srrm_cmd->parsed())
        return run_audit_stability_rrm(sc, m, rho, lambda, tol, trials, eval_inputs,
                                       seed, threads, oo);
      if (gap_cmd->parsed())
        return run_audit_gap(sc, m, m_test, repeats, rho, delta, seed, threads, oo);
      if (rad_cmd->parsed())
        return run_audit_rademacher(sc, m, rho, Lambda, n_sigma, restarts,
                                    ascent_iters, seed, threads, oo);
    }
    if (mixing_cmd->parsed()) {
      if (mgen_cmd->parsed()) return run_mixing_gen(eps, sc, m, J, seed, data_out, oo);
      if (mprof_cmd->parsed()) return run_mixing_profile(eps, sc, a_max, seed, oo);
      if (msweep_cmd->parsed())
        return run_mixing_sweep(eps, sc, m, J, delta, constants_path, seed, oo);
      if (mgap_cmd->parsed())
        return run_mixing_gap(eps, sc, m, J, a, rho, delta, seed, oo);
    }
    if (report_cmd->parsed()) return run_report(report_inputs, oo);
  } catch (const std::invalid_argument& e) {
    std::cerr << "invalid config: " << e.what() << "\n";
    return kExitInvalidConfig;
  } catch (const std::runtime_error& e) {
    const std::string msg = e.what();
    std::cerr << "error: " << msg << "\n";
    return msg.find("cannot open") != std::string::npos ? kExitMissingFile
                                                        : kExitInvalidConfig;
  }
  return kExitUsage;
}
