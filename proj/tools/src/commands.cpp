#include "destab/cli/commands.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <sstream>

#include "CLI11.hpp"
#include "destab/cli/io.hpp"
#include "destab/verify.hpp"
#include "json.hpp"

namespace destab::cli {
namespace {

using nlohmann::json;

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

json complex_json(Complex z) { return json::array({z.real(), z.imag()}); }

json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json vector_json(const ComplexVector& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(complex_json(v(i)));
  return out;
}

struct Options {
  std::string system;
  std::string attack;
  std::string out;
  double tol = 1e-8;
  std::optional<double> near_minimal_eps;
  double eps_max = 0.2;
  int steps = 41;
  std::vector<double> x0;
  double t_final = 200.0;
  double dt = 1e-3;
  std::string method = "rk4";
  bool no_attack = false;
  double attack_eps = 0.0;
};

void emit(const Options& opt, const std::string& text, std::ostream& out) {
  if (opt.out.empty()) {
    out << text;
  } else {
    write_file(opt.out, text);
  }
}

int cmd_analyze(const Options& opt, std::ostream& out) {
  const LoadedSystem sys = load_system_file(opt.system);
  const StabilityClass cls = classify(sys.linear);
  if (cls.tag != Stability::kHurwitz) {
    throw PreconditionError("the system is " + to_string(cls.tag) +
                            "; the H-infinity norm needs a Hurwitz A");
  }
  const CriticalPoint cp = hinf_norm(sys.linear, opt.tol);
  json report;
  report["stability"] = to_string(cls.tag);
  report["rightmost"] = std::isfinite(cls.rightmost.real()) ? complex_json(cls.rightmost)
                                                            : json(nullptr);
  report["hinf_norm"] = cp.peak;
  report["omega0"] = finite_or_null(cp.omega0);
  report["sigma1"] = cp.peak;
  report["u"] = vector_json(cp.left_vec);
  report["v"] = vector_json(cp.right_vec);
  report["at_infinity"] = cp.at_infinity;
  out << report.dump(2) << "\n";
  return kExitOk;
}

json certificate_json(const StateSpace& g, const AttackSystem& att, const AttackCertificate& c) {
  json doc;
  doc["result"] = c.passes() ? "PASS" : "FAIL";
  doc["destabilization_residual"] = finite_or_null(c.destabilization_residual);
  doc["minimality_residual"] = c.minimality_residual;
  doc["well_posed"] = c.well_posed;
  doc["wellposedness_certificate"] = complex_json(c.wellposedness_certificate);
  doc["omega0"] = finite_or_null(c.omega0);
  doc["system_norm"] = c.system_norm;
  doc["attack_norm"] = c.attack_norm;
  if (c.closed_loop_class) {
    doc["closed_loop_class"] = to_string(c.closed_loop_class->tag);
    doc["closed_loop_rightmost"] = complex_json(c.closed_loop_class->rightmost);
    json spectrum = json::array();
    for (Complex z : eigenvalues(interconnect(g, att.realization).combined.a())) {
      spectrum.push_back(complex_json(z));
    }
    doc["closed_loop_spectrum"] = spectrum;
  } else {
    doc["closed_loop_class"] = nullptr;
  }
  return doc;
}

int cmd_synth(const Options& opt, std::ostream& out) {
  const LoadedSystem sys = load_system_file(opt.system);
  const AttackSystem att = synthesize(sys.linear, opt.near_minimal_eps, opt.tol);
  const std::string text = attack_to_json(att);
  const AttackCertificate cert = certify(sys.linear, att);
  if (opt.out.empty()) {
    out << text;
  } else {
    write_file(opt.out, text);
    json summary;
    summary["attack"] = opt.out;
    summary["construction"] = to_string(att.construction);
    summary["states"] = att.realization.states();
    summary["certificate"] = certificate_json(sys.linear, att, cert);
    out << summary.dump(2) << "\n";
  }
  return kExitOk;
}

int cmd_verify(const Options& opt, std::ostream& out) {
  const LoadedSystem sys = load_system_file(opt.system);
  const AttackSystem att = load_attack_file(opt.attack);
  const AttackCertificate cert = certify(sys.linear, att);
  out << certificate_json(sys.linear, att, cert).dump(2) << "\n";
  return cert.passes() ? kExitOk : kExitFail;
}

int cmd_sweep(const Options& opt, std::ostream& out) {
  const LoadedSystem sys = load_system_file(opt.system);
  const AttackSystem att = load_attack_file(opt.attack);
  if (att.realization.inputs() != sys.linear.outputs() ||
      att.realization.outputs() != sys.linear.inputs()) {
    throw DimensionError("attack dimensions do not match the system");
  }
  const EigenBranch branch = trace_branch(sys.linear, att, opt.eps_max, opt.steps);
  std::ostringstream csv;
  csv << "eps,re_lambda,im_lambda\n";
  for (const BranchSample& s : branch.samples) {
    csv << fmt(s.eps) << ',' << fmt(s.value.real()) << ',' << fmt(s.value.imag()) << '\n';
  }
  if (branch.truncated) csv << "# truncated: " << branch.diagnostic << '\n';
  csv << "# crossing_rate=" << fmt(branch.crossing_rate) << '\n';
  emit(opt, csv.str(), out);
  return kExitOk;
}

int cmd_simulate(const Options& opt, std::ostream& out, std::ostream& err) {
  const LoadedSystem sys = load_system_file(opt.system);
  if (opt.no_attack == !opt.attack.empty()) {
    throw PreconditionError("simulate needs exactly one of an attack file or --no-attack");
  }
  LoopField loop;
  if (opt.no_attack) {
    loop = open_loop(sys.nonlinear);
  } else {
    AttackSystem att = load_attack_file(opt.attack);
    if (opt.attack_eps != 0.0) att = scale_attack(att, opt.attack_eps);
    loop = close_loop(sys.nonlinear, att);
  }
  const Eigen::Index total = loop.plant_states + loop.attack_states;
  RealVector x0 = RealVector::Zero(total);
  if (opt.x0.empty()) {
    x0.head(loop.plant_states).setConstant(0.01);
  } else if (static_cast<Eigen::Index>(opt.x0.size()) == loop.plant_states ||
             static_cast<Eigen::Index>(opt.x0.size()) == total) {
    for (std::size_t i = 0; i < opt.x0.size(); ++i) x0(static_cast<Eigen::Index>(i)) = opt.x0[i];
  } else {
    throw DimensionError("--x0 has " + std::to_string(opt.x0.size()) + " entries; expected " +
                         std::to_string(loop.plant_states) + " or " + std::to_string(total));
  }

  IntegrationOptions io;
  io.t_final = opt.t_final;
  io.dt = opt.dt;
  io.method = opt.method == "rk45" ? Method::kRk45 : Method::kRk4;
  Trajectory traj;
  try {
    traj = integrate(loop.field, x0, io);
  } catch (const IntegrationError& e) {
    err << "integration stopped at t = " << e.last_valid_time() << ": " << e.what() << "\n";
    out << "verdict=" << to_string(Verdict::kDiverged) << "\n";
    return kExitOk;
  }
  std::ostringstream csv;
  write_trajectory_csv(csv, traj);
  emit(opt, csv.str(), out);
  out << "verdict=" << to_string(traj.verdict) << "\n";
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Minimal destabilizing feedback attacks on stable LTI systems", "destab"};
  app.require_subcommand(1);
  Options opt;

  auto* analyze = app.add_subcommand("analyze", "H-infinity norm, critical frequency, singular vectors");
  analyze->add_option("system", opt.system, "system file")->required();
  analyze->add_option("--tol", opt.tol, "relative tolerance of the norm")->capture_default_str();

  auto* synth = app.add_subcommand("synth", "synthesize a minimal destabilizing attack");
  synth->add_option("system", opt.system, "system file")->required();
  synth->add_option("--eps-near-minimal", opt.near_minimal_eps,
                    "slack for plants whose gain peaks only at infinity");
  synth->add_option("--out", opt.out, "attack file to write (default: stdout)");
  synth->add_option("--tol", opt.tol, "relative tolerance of the norm")->capture_default_str();

  auto* verify = app.add_subcommand("verify", "certify an attack; exit 0 iff PASS");
  verify->add_option("system", opt.system, "system file")->required();
  verify->add_option("attack", opt.attack, "attack file")->required();

  auto* sweep = app.add_subcommand("sweep", "trace the closed-loop eigenvalue under (1+eps) scaling");
  sweep->add_option("system", opt.system, "system file")->required();
  sweep->add_option("attack", opt.attack, "attack file")->required();
  sweep->add_option("--eps-max", opt.eps_max, "half-width of the eps grid")->capture_default_str();
  sweep->add_option("--steps", opt.steps, "odd number of grid points")->capture_default_str();
  sweep->add_option("--out", opt.out, "CSV file to write (default: stdout)");

  auto* simulate = app.add_subcommand("simulate", "integrate the nonlinear closed loop");
  simulate->add_option("system", opt.system, "system file")->required();
  simulate->add_option("attack", opt.attack, "attack file");
  simulate->add_flag("--no-attack", opt.no_attack, "simulate the plant with w = 0");
  simulate->add_option("--attack-eps", opt.attack_eps, "scale the attack by (1 + eps)")
      ->capture_default_str();
  simulate->add_option("--x0", opt.x0, "initial state, comma separated (default 0.01 each)")
      ->delimiter(',');
  simulate->add_option("--t-final", opt.t_final, "end time")->capture_default_str();
  simulate->add_option("--dt", opt.dt, "step (rk4) or sample spacing (rk45)")->capture_default_str();
  simulate->add_option("--method", opt.method, "rk4 or rk45")
      ->check(CLI::IsMember({"rk4", "rk45"}))
      ->capture_default_str();
  simulate->add_option("--out", opt.out, "CSV file to write (default: stdout)");

  auto* example = app.add_subcommand("example", "print the built-in nonlinear example system");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitPrecondition;
  }

  try {
    if (*analyze) return cmd_analyze(opt, out);
    if (*synth) return cmd_synth(opt, out);
    if (*verify) return cmd_verify(opt, out);
    if (*sweep) return cmd_sweep(opt, out);
    if (*simulate) return cmd_simulate(opt, out, err);
    if (*example) {
      out << example_system_json();
      return kExitOk;
    }
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return kExitParse;
  } catch (const ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kExitParse;
  } catch (const DimensionError& e) {
    err << "error: " << e.what() << "\n";
    return kExitDimension;
  } catch (const NumericError& e) {
    err << "error: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitPrecondition;
  }
  return kExitPrecondition;
}

}  // namespace destab::cli
