// chanrev command-line driver.

#include "chanrev/chanrev.hpp"
#include "chanrev/io.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>

using namespace chanrev;
using io::Json;

namespace {

constexpr int kExitUsage = 64;
constexpr int kExitData = 65;
constexpr int kExitNumerical = 70;

int exit_code(ErrorKind k) {
  switch (k) {
    case ErrorKind::NumericalFailure:
    case ErrorKind::NumericalDegeneracy:
    case ErrorKind::ClosureNotReached:
    case ErrorKind::NotAnAlgebra:
      return kExitNumerical;
    default:
      return kExitData;
  }
}

int verdict_exit(Verdict v) {
  switch (v) {
    case Verdict::Holds: return 0;
    case Verdict::Fails: return 2;
    case Verdict::Inconclusive: return 3;
  }
  return 3;
}

void emit(const Json& j, const std::string& out) {
  const std::string text = j.dump(2) + "\n";
  if (out.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream f(out);
  if (!f) throw Error(ErrorKind::ParseError, "cannot write " + out);
  f << text;
}

struct Loaded {
  io::Problem problem;
  std::vector<std::string> names;
  std::vector<DensityOperator> sigmas;
  DensityOperator rho;
};

Loaded load(const std::string& path) {
  io::Problem p = io::load_problem(path);
  std::vector<DensityOperator> sigmas;
  const auto names = p.family_names();
  for (const auto& n : names) sigmas.push_back(p.state(n));
  DensityOperator rho = p.state(p.reference);
  return {std::move(p), names, std::move(sigmas), std::move(rho)};
}

Json summary(const ReversibilityReport& r) {
  Json conds = Json::object();
  for (const auto& c : r.conditions)
    conds[c.id] = Json{{"residual", io::number(c.residual)}, {"verdict", std::string(to_string(c.verdict))}};
  return Json{{"overall", std::string(to_string(r.overall))}, {"consistent", r.consistent}, {"conditions", conds}};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"chanrev: reversibility diagnostics for quantum channels"};
  app.require_subcommand(1);
  app.fallthrough();
  std::string problem_path;
  std::string out;
  app.add_option("--out", out, "write JSON here instead of stdout");

  CheckOptions check;
  int threads = 0;
  bool no_fisher = false;
  auto* diagnose = app.add_subcommand("diagnose", "full condition report (exit 0 reversible, 2 not, 3 inconclusive)");
  diagnose->add_option("problem", problem_path)->required();
  diagnose->add_option("--threads", threads, "worker threads (default: CHANREV_THREADS or 1)");
  diagnose->add_option("--hold", check.hold_rel, "relative hold threshold")->capture_default_str();
  diagnose->add_option("--fail", check.fail_rel, "relative fail threshold")->capture_default_str();
  diagnose->add_option("--n-max", check.n_max, "largest copy number for C8")->capture_default_str();
  diagnose->add_option("--seed", check.seed, "seed for sampled checks")->capture_default_str();
  diagnose->add_option("--samples", check.samples, "samples for Schwarz/positivity checks")->capture_default_str();
  diagnose->add_flag("--no-fisher", no_fisher, "skip C11");

  auto* recover = app.add_subcommand("recover", "Petz recovery map and recovered states");
  recover->add_option("problem", problem_path)->required();

  std::string f_tag = "xlogx";
  auto* divergence = app.add_subcommand("divergence", "f-divergence before and after the channel");
  divergence->add_option("problem", problem_path)->required();
  divergence->add_option("--f", f_tag, "xlogx | inv_one_plus | one_minus_power(s)")->capture_default_str();

  auto* chernoff_cmd = app.add_subcommand("chernoff", "Chernoff distance before and after the channel");
  chernoff_cmd->add_option("problem", problem_path)->required();

  double r = 0.0;
  auto* hoeffding_cmd = app.add_subcommand("hoeffding", "Hoeffding distance before and after the channel");
  hoeffding_cmd->add_option("problem", problem_path)->required();
  hoeffding_cmd->add_option("--r", r, "rate r >= 0")->capture_default_str();

  std::string metric_tag = "bures";
  auto* fisher = app.add_subcommand("fisher", "chi^2 divergence of a monotone metric before and after the channel");
  fisher->add_option("problem", problem_path)->required();
  fisher->add_option("--f", metric_tag, "bures | kubo_mori | rld | rich")->capture_default_str();

  double t = 1.0;
  auto* np = app.add_subcommand("np-test", "Neyman-Pearson projections of sigma - t rho");
  np->add_option("problem", problem_path)->required();
  np->add_option("--t", t, "threshold t >= 0")->capture_default_str();

  std::string which;
  auto* counter = app.add_subcommand("counterexample", "reproduce a counterexample (fdiv or bures)");
  counter->add_option("which", which)->required()->check(CLI::IsMember({"fdiv", "bures"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (*diagnose) {
      Loaded l = load(problem_path);
      l.problem.options.apply(check);
      check.threads = threads;
      if (no_fisher) check.include_fisher = false;
      const auto report = check_conditions(l.problem.build_channel(), l.sigmas, l.rho, check);
      emit(io::report_to_json(report, l.names), out);
      return verdict_exit(report.overall);
    }
    if (*recover) {
      const Loaded l = load(problem_path);
      const Channel tm = l.problem.build_channel();
      const Channel rec = petz_recovery(tm, l.rho);
      Json states = Json::object();
      for (std::size_t k = 0; k < l.sigmas.size(); ++k) {
        const Matrix back = rec.apply(tm.apply(l.sigmas[k].matrix()));
        states[l.names[k]] = Json{{"recovered", io::matrix_to_json(back)},
                                  {"residual", trace_norm(Matrix(back - l.sigmas[k].matrix()))}};
      }
      emit(Json{{"version", io::kSchema}, {"recovery", io::channel_to_json(io::record_super(rec))}, {"states", states}},
           out);
      return 0;
    }
    if (*divergence) {
      const Loaded l = load(problem_path);
      const Channel tm = l.problem.build_channel();
      const auto f = catalog::by_tag(f_tag);
      const DensityOperator image = tm.apply(l.rho);
      Json rows = Json::object();
      for (std::size_t k = 0; k < l.sigmas.size(); ++k) {
        const double a = f_divergence(f, l.sigmas[k], l.rho);
        const double b = f_divergence(f, tm.apply(l.sigmas[k]), image);
        rows[l.names[k]] = Json{{"input", io::number(a)}, {"output", io::number(b)}, {"gap", io::number(a - b)}};
      }
      emit(Json{{"version", io::kSchema}, {"f", f.tag}, {"divergences", rows}}, out);
      return 0;
    }
    if (*chernoff_cmd || *hoeffding_cmd) {
      const Loaded l = load(problem_path);
      const Channel tm = l.problem.build_channel();
      const DensityOperator image = tm.apply(l.rho);
      Json rows = Json::object();
      for (std::size_t k = 0; k < l.sigmas.size(); ++k) {
        const DensityOperator ts = tm.apply(l.sigmas[k]);
        if (*chernoff_cmd) {
          const auto a = chernoff(l.sigmas[k], l.rho);
          const auto b = chernoff(ts, image);
          rows[l.names[k]] = Json{{"input", io::number(a.value)},      {"output", io::number(b.value)},
                                  {"gap", io::number(a.value - b.value)}, {"input_u", a.minimizer_u},
                                  {"output_u", b.minimizer_u}};
        } else {
          const double a = hoeffding(l.sigmas[k], l.rho, r);
          const double b = hoeffding(ts, image, r);
          rows[l.names[k]] = Json{{"input", io::number(a)},
                                  {"output", io::number(b)},
                                  {"gap", io::number(a - b)},
                                  {"input_threshold", io::number(hoeffding_threshold(l.sigmas[k], l.rho))}};
        }
      }
      Json j{{"version", io::kSchema}};
      if (*hoeffding_cmd) j["r"] = r;
      j[*chernoff_cmd ? "chernoff" : "hoeffding"] = rows;
      emit(j, out);
      return 0;
    }
    if (*fisher) {
      const Loaded l = load(problem_path);
      const Channel tm = l.problem.build_channel();
      const DensityOperator image = tm.apply(l.rho);
      const auto f = fisher_catalog::by_tag(metric_tag, tm.in_dim(), tm.out_dim());
      Json rows = Json::object();
      for (std::size_t k = 0; k < l.sigmas.size(); ++k) {
        const double a = chi2_divergence(l.sigmas[k], l.rho, f);
        const double b = chi2_divergence(tm.apply(l.sigmas[k]), image, f);
        rows[l.names[k]] = Json{{"input", a}, {"output", b}, {"gap", a - b}};
      }
      emit(Json{{"version", io::kSchema},
                {"f", f.tag},
                {"monotonicity_margin", metric_monotonicity_margin(tm, l.rho, f)},
                {"chi2", rows}},
           out);
      return 0;
    }
    if (*np) {
      const Loaded l = load(problem_path);
      Json rows = Json::object();
      for (std::size_t k = 0; k < l.sigmas.size(); ++k) {
        const auto res = np_test(l.sigmas[k], l.rho, t);
        rows[l.names[k]] = Json{{"P_plus", io::matrix_to_json(res.P_plus.projection)},
                                {"P_zero", io::matrix_to_json(res.P_zero.projection)},
                                {"rank_plus", res.P_plus.rank},
                                {"rank_zero", res.P_zero.rank},
                                {"trace_norm", res.trace_norm},
                                {"positive_part", res.positive_part}};
      }
      emit(Json{{"version", io::kSchema}, {"t", t}, {"np_test", rows}}, out);
      return 0;
    }
    if (*counter) {
      CheckOptions opt;
      if (which == "fdiv") {
        const auto c = fdiv_counterexample();
        const auto p = probe(c);
        const auto report = check_conditions(c.instance.t, c.instance.sigmas, c.instance.rho, opt);
        emit(Json{{"version", io::kSchema},
                  {"counterexample", "fdiv"},
                  {"f", "inv_one_plus"},
                  {"lambda", p.lambda},
                  {"sf_input", p.sf_input},
                  {"sf_output", p.sf_output},
                  {"sf_gap", p.sf_gap},
                  {"recovery_residual", p.recovery_residual},
                  {"commutator_sigma_x", p.commutator_witness},
                  {"x_residual_input", p.x_residual_input},
                  {"x_residual_output", p.x_residual_output},
                  {"sigma", io::matrix_to_json(c.instance.sigmas.front().matrix())},
                  {"rho", io::matrix_to_json(c.instance.rho.matrix())},
                  {"p", io::matrix_to_json(c.p)},
                  {"report", summary(report)}},
             out);
      } else {
        const auto c = bures_counterexample();
        const auto p = probe(c);
        const auto report = check_conditions(c.instance.t, c.instance.sigmas, c.instance.rho, opt);
        emit(Json{{"version", io::kSchema},
                  {"counterexample", "bures"},
                  {"chi2_input", p.chi2_input},
                  {"chi2_output", p.chi2_output},
                  {"chi2_gap", p.chi2_gap},
                  {"recovery_residual", p.recovery_residual},
                  {"commutator_sigma_rho", p.commutator_sigma_rho},
                  {"commutator_rho2_y", p.commutator_rho2_y},
                  {"y_residual_input", p.y_residual_input},
                  {"y_residual_output", p.y_residual_output},
                  {"rich_gap", p.rich_gap},
                  {"rich_support", p.rich_support},
                  {"spectrum_union", p.spectrum_union},
                  {"sigma", io::matrix_to_json(c.instance.sigmas.front().matrix())},
                  {"rho", io::matrix_to_json(c.instance.rho.matrix())},
                  {"y", io::matrix_to_json(c.y)},
                  {"report", summary(report)}},
             out);
      }
      return 0;
    }
  } catch (const Error& e) {
    std::cerr << "chanrev: " << to_string(e.kind()) << ": " << e.what() << "\n";
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "chanrev: " << e.what() << "\n";
    return kExitNumerical;
  }
  return kExitUsage;
}
