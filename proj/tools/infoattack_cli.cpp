// infoattack: generate datasets, check informativity, synthesize attacks and
// minimum-norm perturbations.

#include <infoattack/datagen.hpp>
#include <infoattack/io.hpp>

#include <CLI11.hpp>

#include <iostream>
#include <optional>
#include <string>

namespace ia = infoattack;

namespace {

enum Exit : int {
  kOk = 0,
  kConfig = 1,
  kInvalidSpec = 2,
  kNotInformative = 3,
  kDimensional = 4,
  kTargetInImage = 5,
  kNoDirection = 6,
  kVerifyFailed = 7,
  kMinNormInfeasible = 8,
  kBoundFails = 9,
};

struct Options {
  std::string system = "paper5";
  std::string data;
  std::string out;
  std::string spec;
  std::uint64_t seed = 0;
  long T = 100;
  double tol = 1e-9;
  bool skip_bound = false;
  double grid_step = 0.05;
  std::string input = "random";
  std::string x0 = "per-column";
  long pe_order = 1;
  std::string noise = "none";
  double noise_sigma = 0.0;
};

ia::SystemModel load_system(const std::string& name) {
  if (name == "paper5") return ia::paper_example_system();
  return ia::system_from_json(ia::read_json(name));
}

ia::Annihilator annihilator_for(const ia::SystemModel& sys, const ia::Tolerance& tol) {
  return ia::compute_annihilator(sys.E, sys.F, tol);
}

ia::Json base_config(const std::string& command, const Options& o) {
  return {{"command", command}, {"system", o.system}, {"data", o.data}, {"spec", o.spec},
          {"seed", o.seed},     {"T", o.T},           {"tol", o.tol},   {"skip_bound", o.skip_bound},
          {"grid_step", o.grid_step}, {"input", o.input}, {"x0", o.x0}, {"pe_order", o.pe_order},
          {"noise", o.noise},   {"noise_sigma", o.noise_sigma}};
}

void finish(const std::string& command, const Options& o, const std::string& started) {
  ia::write_json(ia::fs::path(o.out) / "manifest.json", ia::make_manifest(command, base_config(command, o), o.seed, started));
}

int cmd_gen(const Options& o, const std::string& started) {
  if (o.T < 1) throw ia::IoError("T must be at least 1");
  if (o.out.empty()) throw ia::IoError("--out is required");
  ia::SystemModel sys = load_system(o.system);
  if (!sys.A_true) throw ia::IoError("system has no state matrix A");

  ia::SimConfig cfg;
  cfg.T = o.T;
  cfg.seed = o.seed;
  if (o.input == "zero") cfg.input_mode = ia::InputMode::Zero;
  else if (o.input == "random") cfg.input_mode = ia::InputMode::Random;
  else if (o.input == "pe") cfg.input_mode = ia::InputMode::PersistentlyExciting;
  else throw ia::IoError("unknown input mode '" + o.input + "'");
  if (o.x0 == "per-column") cfg.initial_state = ia::InitialState::PerColumn;
  else if (o.x0 == "trajectory") cfg.initial_state = ia::InitialState::Trajectory;
  else throw ia::IoError("unknown initial state mode '" + o.x0 + "'");
  cfg.pe_order = o.pe_order;
  if (o.noise == "none") cfg.noise_mode = ia::NoiseMode::None;
  else if (o.noise == "structural") cfg.noise_mode = ia::NoiseMode::Structural;
  else if (o.noise == "gaussian") cfg.noise_mode = ia::NoiseMode::Gaussian;
  else throw ia::IoError("unknown noise mode '" + o.noise + "'");
  cfg.noise_sigma = o.noise_sigma;

  const ia::Dataset d = ia::simulate(sys, cfg);
  ia::save_dataset(o.out, d);
  ia::write_json(ia::fs::path(o.out) / "system.json", ia::system_to_json(sys));
  if (cfg.outside_structural_noise()) {
    std::cerr << "warning: gaussian noise lies outside the structural noise model\n";
  }
  finish("gen", o, started);
  return kOk;
}

int cmd_analyze(const Options& o, const std::string& started) {
  const ia::Tolerance tol{o.tol};
  const ia::SystemModel sys = load_system(o.system);
  const ia::Dataset d = ia::load_dataset(o.data, sys);
  const ia::InformativityReport rep = ia::is_informative_SO(d, sys, annihilator_for(sys, tol), tol);
  const ia::Json j = ia::informativity_to_json(rep);
  std::cout << j.dump(2) << '\n';
  if (!o.out.empty()) {
    ia::fs::create_directories(o.out);
    ia::write_json(ia::fs::path(o.out) / "informativity.json", j);
    finish("analyze", o, started);
  }
  return rep.informative ? kOk : kNotInformative;
}

int cmd_attack(const Options& o, const std::string& started) {
  const ia::Tolerance tol{o.tol};
  if (o.out.empty()) throw ia::IoError("--out is required");
  const ia::SystemModel sys = load_system(o.system);
  const ia::AttackSpec spec = ia::attack_spec_from_json(ia::read_json(o.spec));
  spec.validate(sys, tol);
  const ia::Dataset d = ia::load_dataset(o.data, sys);
  const ia::Annihilator ann = annihilator_for(sys, tol);

  const ia::AttackResult res = ia::run_attack(d, sys, ann, spec, tol, o.seed);
  const ia::Theorem1Report rep = ia::verify_theorem1(d, res.attacked, sys, ann, res.v, spec, tol);

  const ia::fs::path out(o.out);
  ia::save_dataset(out, res.attacked);
  ia::write_json(out / "system.json", ia::system_to_json(sys));
  for (ia::Block b : ia::kBlocks) {
    const std::string name(ia::block_name(b));
    ia::write_csv(out / ("phi_" + name + ".csv"), res.transform[b]);
    ia::write_csv(out / ("delta_" + name + ".csv"), ia::block_of(res.delta, b));
  }
  ia::write_csv(out / "v.csv", res.v);
  ia::Json ver = ia::theorem1_to_json(rep);
  ver["spec"] = ia::attack_spec_to_json(spec);
  ia::write_json(out / "verification.json", ver);
  finish("attack", o, started);
  std::cout << ver.dump(2) << '\n';
  return rep.all_passed() ? kOk : kVerifyFailed;
}

int cmd_minnorm(const Options& o, const std::string& started) {
  const ia::Tolerance tol{o.tol};
  if (o.out.empty()) throw ia::IoError("--out is required");
  if (!(o.grid_step > 0.0)) throw ia::IoError("--grid-step must be positive");
  const ia::SystemModel sys = load_system(o.system);
  const ia::Dataset d = ia::load_dataset(o.data, sys);
  const ia::Annihilator ann = annihilator_for(sys, tol);
  if (!ann.noise_free && !o.skip_bound) {
    throw ia::IoError("the distance bound needs noise-free data; pass --skip-bound");
  }

  const ia::MinNormProblem prob = ia::build_problem(d, sys, ann, tol);
  const ia::MinNormSolution sol = ia::alternating_solve(prob);
  std::optional<ia::Theorem2Check> bound;
  if (!o.skip_bound) {
    ia::GridConfig grid;
    grid.step = o.grid_step;
    bound = ia::theorem2_check(sol, d, sys, ann, tol, grid);
  }
  const ia::InformativityReport after = ia::is_informative_SO(sol.attacked, sys, ann, tol);

  const ia::fs::path out(o.out);
  ia::save_dataset(out, sol.attacked);
  ia::write_json(out / "system.json", ia::system_to_json(sys));
  ia::write_csv(out / "delta_X_plus.csv", sol.delta_X_plus);
  ia::write_csv(out / "phi_x_plus.csv", sol.phi_x_plus);
  ia::Json rep = ia::min_norm_to_json(sol, bound);
  rep["attacked_informative"] = after.informative;
  ia::write_json(out / "minnorm_report.json", rep);
  finish("minnorm", o, started);
  std::cout << rep.dump(2) << '\n';

  if (!sol.converged) return kMinNormInfeasible;
  if (bound && !bound->holds) return kBoundFails;
  return kOk;
}

int exit_for(ia::AttackFailure kind) {
  switch (kind) {
    case ia::AttackFailure::InvalidSpec: return kInvalidSpec;
    case ia::AttackFailure::DimensionalCondition: return kDimensional;
    case ia::AttackFailure::TargetInImage: return kTargetInImage;
    default: return kNoDirection;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Data-driven structural attacks on informativity for strong observability"};
  app.require_subcommand(1);
  Options o;
  app.add_option("--tol", o.tol, "Relative rank tolerance")->check(CLI::PositiveNumber);

  auto* gen = app.add_subcommand("gen", "Simulate a dataset");
  auto* analyze = app.add_subcommand("analyze", "Informativity verdict (exit 3 when not informative)");
  auto* attack = app.add_subcommand("attack", "Structural attack from an attack spec");
  auto* minnorm = app.add_subcommand("minnorm", "Minimum-norm attack on X_plus");
  for (auto* sub : {gen, analyze, attack, minnorm}) {
    sub->add_option("--system", o.system, "paper5 or a system JSON file");
    sub->add_option("--out", o.out, "Output directory");
    sub->add_option("--seed", o.seed, "Random seed");
    sub->add_option("--tol", o.tol, "Relative rank tolerance")->check(CLI::PositiveNumber);
  }
  for (auto* sub : {analyze, attack, minnorm}) sub->add_option("--data", o.data, "Dataset directory")->required();
  gen->add_option("--T", o.T, "Horizon");
  gen->add_option("--input", o.input, "zero | random | pe");
  gen->add_option("--x0", o.x0, "per-column | trajectory");
  gen->add_option("--pe-order", o.pe_order, "Hankel depth for pe input");
  gen->add_option("--noise", o.noise, "none | structural | gaussian");
  gen->add_option("--noise-sigma", o.noise_sigma, "Noise standard deviation");
  attack->add_option("--spec", o.spec, "Attack spec JSON {lambda, x0, u0}")->required();
  minnorm->add_flag("--skip-bound", o.skip_bound, "Skip the distance-to-unobservability bound");
  minnorm->add_option("--grid-step", o.grid_step, "Coarse grid step for the distance search");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kConfig;
  }

  const std::string started = ia::utc_timestamp();
  try {
    if (*gen) return cmd_gen(o, started);
    if (*analyze) return cmd_analyze(o, started);
    if (*attack) return cmd_attack(o, started);
    return cmd_minnorm(o, started);
  } catch (const ia::AttackError& e) {
    std::cerr << "attack: " << e.what() << '\n';
    return exit_for(e.kind());
  } catch (const ia::MinNormError& e) {
    std::cerr << "minnorm: " << e.what() << '\n';
    return kMinNormInfeasible;
  } catch (const ia::IoError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kConfig;
  } catch (const ia::DimensionError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kConfig;
  }
}
