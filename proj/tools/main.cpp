#include <Eigen/Core>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "analysis.hpp"
#include "koopman/errors.hpp"

namespace {

using koopman::cli::Analysis;
using koopman::cli::Json;
using koopman::cli::SystemSource;

constexpr int kExitCertified = 0;
constexpr int kExitError = 1;
constexpr int kExitNotCertified = 2;

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw koopman::Error("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw koopman::Error("cannot write '" + path + "'");
  return out;
}

void write_json(const Json& j, const std::string& path) {
  if (path.empty() || path == "-") {
    std::cout << j.dump(2) << '\n';
  } else {
    open_out(path) << j.dump(2) << '\n';
  }
}

SystemSource load_source(const std::string& file, const std::string& builtin) {
  if (file.empty() == builtin.empty()) throw koopman::Error("give exactly one of a system file or --builtin");
  SystemSource s;
  s.builtin = builtin;
  if (!file.empty()) s.text = read_file(file);
  return s;
}

// Options shared by both analyses.
struct Common {
  std::string file;
  std::string builtin;
  std::string report;
  std::string grid;
  int grid_resolution = 101;
  int threads = 1;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("file", c.file, "System-definition file");
  cmd->add_option("--builtin", c.builtin, "Named builtin system instead of a file");
  cmd->add_option("-o,--report", c.report, "JSON report path (stdout when omitted)");
  cmd->add_option("--grid", c.grid, "Write the contour CSV here");
  cmd->add_option("--grid-resolution", c.grid_resolution, "Lattice points per axis of the CSV")->check(CLI::Range(2, 100000));
  cmd->add_option("--threads", c.threads, "Upper bound on worker threads")->check(CLI::PositiveNumber);
}

template <class T>
void override_if(const CLI::Option* opt, T& target, const T& value) {
  if (opt->count() > 0) target = value;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Koopman eigenfunction and basin-of-attraction analysis"};
  app.require_subcommand(1);

  Common fp_common, lc_common;
  koopman::cli::FpConfig fp_flags;
  std::vector<double> fp_box, fp_guess;
  int fp_p = 2;
  auto* fp = app.add_subcommand("analyze-fp", "Eigenfunctions and basin estimate at a stable fixed point");
  add_common(fp, fp_common);
  auto* o_method = fp->add_option("--method", fp_flags.method, "taylor or bernstein")->check(CLI::IsMember({"taylor", "bernstein"}));
  auto* o_order = fp->add_option("--order", fp_flags.order, "Taylor order");
  auto* o_degree = fp->add_option("--degree", fp_flags.degree, "Bernstein degree per axis");
  auto* o_box = fp->add_option("--box", fp_box, "Region bounds: lower1 upper1 lower2 upper2 ...")->expected(2, 64);
  auto* o_guess = fp->add_option("--guess", fp_guess, "Newton start for the fixed point")->expected(1, 32);
  auto* o_p = fp->add_option("--p", fp_p, "Lyapunov exponent p")->check(CLI::PositiveNumber);
  auto* o_res = fp->add_option("--resolution", fp_flags.resolution, "Basin lattice points per axis");
  auto* o_step = fp->add_option("--step", fp_flags.step, "Flow step of the decrease test");
  auto* o_hor = fp->add_option("--horizon", fp_flags.horizon, "Verification horizon");
  auto* o_samp = fp->add_option("--samples", fp_flags.samples, "Verification samples");
  auto* o_ssamp = fp->add_option("--soundness-samples", fp_flags.soundness_samples, "Basin soundness samples");
  auto* o_seed = fp->add_option("--seed", fp_flags.seed, "Sampling seed");

  koopman::cli::LcConfig lc_flags;
  std::vector<double> lc_guess;
  double lc_er = 0.0, lc_horizon = 0.0;
  std::string annulus;
  auto* lc = app.add_subcommand("analyze-lc", "Stable eigenfunction around a planar limit cycle");
  add_common(lc, lc_common);
  auto* l_nbar = lc->add_option("--nbar", lc_flags.n_bar, "Fourier harmonics kept on each side");
  auto* l_degree = lc->add_option("--degree", lc_flags.degree, "Bernstein degree in y");
  auto* l_sprime = lc->add_option("--sprime", lc_flags.s_prime, "Bernstein degree of the projected field");
  auto* l_stride = lc->add_option("--stride", lc_flags.stride, "Keep harmonics divisible by this stride");
  auto* l_delta = lc->add_option("--delta", lc_flags.delta, "Annulus inner offset");
  auto* l_er = lc->add_option("--er", lc_er, "Radial basis vector length");
  auto* l_weight = lc->add_option("--weight", lc_flags.weight, "Boundary constraint weight");
  auto* l_guess = lc->add_option("--guess", lc_guess, "Start point attracted to the cycle")->expected(2);
  auto* l_res = lc->add_option("--resolution", lc_flags.resolution, "Region lattice points per axis");
  auto* l_hor = lc->add_option("--horizon", lc_horizon, "Verification horizon (default: period)");
  auto* l_samp = lc->add_option("--samples", lc_flags.samples, "Verification samples");
  auto* l_seed = lc->add_option("--seed", lc_flags.seed, "Sampling seed");
  lc->add_option("--annulus", annulus, "Write the annulus log|phi| CSV here");

  std::string grid_report, grid_out;
  int grid_res = 101;
  bool grid_annulus = false;
  auto* eg = app.add_subcommand("emit-grid", "Regenerate a contour CSV from a report");
  eg->add_option("--report", grid_report, "Report written by an analyze command")->required();
  eg->add_option("--resolution", grid_res, "Lattice points per axis")->check(CLI::Range(2, 100000));
  eg->add_option("-o,--out", grid_out, "CSV path (stdout when omitted)");
  eg->add_flag("--annulus", grid_annulus, "Annulus log|phi| grid instead of the Cartesian grid");

  std::string ver_report, ver_out;
  int ver_samples = 500;
  std::uint64_t ver_seed = 1;
  int ver_threads = 1;
  auto* ve = app.add_subcommand("verify", "Independent verification pass over a report");
  ve->add_option("--report", ver_report, "Report written by an analyze command")->required();
  ve->add_option("--samples", ver_samples, "Samples per check")->check(CLI::PositiveNumber);
  ve->add_option("--seed", ver_seed, "Sampling seed");
  ve->add_option("-o,--out", ver_out, "JSON path (stdout when omitted)");
  ve->add_option("--threads", ver_threads, "Upper bound on worker threads")->check(CLI::PositiveNumber);

  CLI11_PARSE(app, argc, argv);

  try {
    if (fp->parsed() || lc->parsed()) {
      const Common& c = fp->parsed() ? fp_common : lc_common;
      Eigen::setNbThreads(c.threads);
      const SystemSource source = load_source(c.file, c.builtin);
      const auto def = source.definition();
      Analysis result;
      if (fp->parsed()) {
        koopman::cli::FpConfig cfg;
        if (def) cfg.apply(*def);
        override_if(o_method, cfg.method, fp_flags.method);
        override_if(o_order, cfg.order, fp_flags.order);
        override_if(o_degree, cfg.degree, fp_flags.degree);
        if (o_box->count()) cfg.box = fp_box;
        if (o_guess->count()) cfg.guess = fp_guess;
        if (o_p->count()) cfg.p = fp_p;
        override_if(o_res, cfg.resolution, fp_flags.resolution);
        override_if(o_step, cfg.step, fp_flags.step);
        override_if(o_hor, cfg.horizon, fp_flags.horizon);
        override_if(o_samp, cfg.samples, fp_flags.samples);
        override_if(o_ssamp, cfg.soundness_samples, fp_flags.soundness_samples);
        override_if(o_seed, cfg.seed, fp_flags.seed);
        result = koopman::cli::analyze_fixed_point(source, cfg);
      } else {
        koopman::cli::LcConfig cfg;
        if (def) cfg.apply(*def);
        override_if(l_nbar, cfg.n_bar, lc_flags.n_bar);
        override_if(l_degree, cfg.degree, lc_flags.degree);
        override_if(l_sprime, cfg.s_prime, lc_flags.s_prime);
        override_if(l_stride, cfg.stride, lc_flags.stride);
        override_if(l_delta, cfg.delta, lc_flags.delta);
        if (l_er->count()) cfg.e_r_norm = lc_er;
        override_if(l_weight, cfg.weight, lc_flags.weight);
        if (l_guess->count()) cfg.guess = lc_guess;
        override_if(l_res, cfg.resolution, lc_flags.resolution);
        if (l_hor->count()) cfg.horizon = lc_horizon;
        override_if(l_samp, cfg.samples, lc_flags.samples);
        override_if(l_seed, cfg.seed, lc_flags.seed);
        result = koopman::cli::analyze_limit_cycle(source, cfg);
        if (!annulus.empty()) {
          auto out = open_out(annulus);
          koopman::cli::write_annulus_csv(out, result, c.grid_resolution);
        }
      }
      result.report["input"]["threads"] = c.threads;
      write_json(result.report, c.report);
      if (!c.grid.empty()) {
        auto out = open_out(c.grid);
        koopman::cli::write_grid_csv(out, result, c.grid_resolution);
      }
      return result.certified ? kExitCertified : kExitNotCertified;
    }
    if (eg->parsed()) {
      const Analysis result = koopman::cli::rerun(Json::parse(read_file(grid_report)));
      std::ofstream file;
      if (!grid_out.empty()) file = open_out(grid_out);
      std::ostream& out = grid_out.empty() ? std::cout : file;
      if (grid_annulus) {
        koopman::cli::write_annulus_csv(out, result, grid_res);
      } else {
        koopman::cli::write_grid_csv(out, result, grid_res);
      }
      return kExitCertified;
    }
    Eigen::setNbThreads(ver_threads);
    const Analysis result = koopman::cli::rerun(Json::parse(read_file(ver_report)));
    const Json summary = koopman::cli::verify(result, ver_samples, ver_seed);
    write_json(summary, ver_out);
    return summary["passed"].get<bool>() ? kExitCertified : kExitNotCertified;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitError;
  }
}
