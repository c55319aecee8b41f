#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "nmodes/nmodes.hpp"

namespace {

using namespace nmodes;

void check_fingerprint(const Eigenmanifold& archive, const ModelSpec& spec,
                       const std::string& which) {
  if (archive.model_fingerprint != spec.fingerprint())
    throw SpecError("archive " + which + " was not produced from the given model spec " +
                    "(fingerprint " + archive.model_fingerprint + " vs " + spec.fingerprint() +
                    ")");
}

int run_linearize(const std::string& spec_path, const std::string& out_path) {
  const ModelPtr model = load_model_spec(spec_path);
  const VectorXd q_eq = find_equilibrium(*model, VectorXd::Zero(model->n_dofs()));
  const LinearModeSet modes = linearize(*model, q_eq);

  std::string csv = "mode,omega_rad_s,freq_hz,period_s\n";
  std::printf("%4s  %14s  %12s  %12s\n", "mode", "omega_rad_s", "freq_hz", "period_s");
  for (Eigen::Index i = 0; i < modes.omegas.size(); ++i) {
    const double w = modes.omegas[i];
    const double f = w / (2.0 * std::numbers::pi);
    std::printf("%4ld  %14.6f  %12.6f  %12.6f\n", static_cast<long>(i + 1), w, f, 1.0 / f);
    csv += std::to_string(i + 1) + "," + fmt9(w) + "," + fmt9(f) + "," + fmt9(1.0 / f) + "\n";
  }
  if (!out_path.empty()) write_file_atomic(out_path, csv);
  return 0;
}

int run_manifold(const std::string& spec_path, int mode, double de, double emax, int nmax,
                 const std::string& out_path) {
  const ModelPtr model = load_model_spec(spec_path);
  if (mode < 1 || mode > model->n_dofs())
    throw SpecError("mode index exceeds DoFs (" + std::to_string(mode) + " of " +
                    std::to_string(model->n_dofs()) + ")");
  if (!(de > 0.0) || !(emax > 0.0) || nmax < 1)
    throw SpecError("manifold: need de > 0, emax > 0, nmax >= 1");

  const VectorXd q_eq = find_equilibrium(*model, VectorXd::Zero(model->n_dofs()));
  const LinearModeSet modes = linearize(*model, q_eq);
  ContinuationOptions opts;
  opts.de_ref = de;
  opts.e_max = emax;
  opts.n_max = nmax;
  const Eigenmanifold mf = compute_generator(*model, modes, mode, opts);
  save_manifold(mf, out_path);

  const bool partial = mf.truncated || !mf.diagnostic.empty() || mf.points.empty() ||
                       mf.points.back().E < emax - 1e-9;
  std::printf("mode %d: %zu points, E in [%.6g, %.6g] J -> %s\n", mode, mf.points.size(),
              mf.points.empty() ? 0.0 : mf.points.front().E,
              mf.points.empty() ? 0.0 : mf.points.back().E, out_path.c_str());
  if (partial) {
    std::cerr << "partial branch: "
              << (mf.diagnostic.empty() ? "did not reach emax" : mf.diagnostic) << "\n";
    return 3;
  }
  return 0;
}

int run_compare(const std::string& spec_a, const std::string& spec_b,
                const std::string& archive_a, const std::string& archive_b,
                const std::string& out_path, double grid_de) {
  const ModelSpec sa = read_model_spec(spec_a);
  const ModelSpec sb = read_model_spec(spec_b);
  const ModelPtr ma = build_from_spec(sa);
  const ModelPtr mb = build_from_spec(sb);
  const Eigenmanifold fa = load_manifold(archive_a);
  const Eigenmanifold fb = load_manifold(archive_b);
  check_fingerprint(fa, sa, "A");
  check_fingerprint(fb, sb, "B");

  CompareOptions opts;
  opts.grid_de = grid_de;
  const ComparisonReport rep = compare_manifolds(*ma, fa, *mb, fb, opts);

  std::string csv = "model_a,model_b,mode,component,energy_J,s_m,metric,value\n";
  const std::string prefix =
      rep.model_a + "," + rep.model_b + "," + std::to_string(rep.mode) + ",";
  const char* comps = "xyz";
  for (int c = 0; c < 3; ++c) {
    const std::string comp(1, comps[c]);
    for (std::size_t k = 0; k < rep.energies.size(); ++k) {
      const std::string e = fmt9(rep.energies[k]);
      csv += prefix + comp + "," + e + "," + fmt9(rep.tip_s) + ",frechet," +
             fmt9(rep.f_tip[k][c]) + "\n";
      csv += prefix + comp + "," + e + ",integral,frechet," + fmt9(rep.f_int[k][c]) + "\n";
      csv += prefix + comp + "," + e + "," + fmt9(rep.tip_s) + ",coherence," +
             fmt9(rep.g_tip[k][c]) + "\n";
      csv += prefix + comp + "," + e + ",integral,coherence," + fmt9(rep.g_int[k][c]) + "\n";
    }
    csv += prefix + comp + ",integral,integral,frechet," + fmt9(rep.f_energy[c]) + "\n";
    csv += prefix + comp + ",integral,integral,coherence," + fmt9(rep.g_energy[c]) + "\n";
  }
  write_file_atomic(out_path, csv);
  std::printf("compared %s vs %s over %zu energies -> %s\n", rep.model_a.c_str(),
              rep.model_b.c_str(), rep.energies.size(), out_path.c_str());
  return 0;
}

int run_strobe(const std::string& archive_path, const std::string& spec_path, double energy,
               std::vector<double> fractions, const std::string& out_path) {
  const ModelSpec spec = read_model_spec(spec_path);
  const ModelPtr model = build_from_spec(spec);
  const Eigenmanifold mf = load_manifold(archive_path);
  check_fingerprint(mf, spec, "");
  if (fractions.empty()) fractions = {0.0, 0.2, 0.3, 0.5, 0.7, 0.8, 0.9};

  ContinuationOptions copts;
  const GeneratorPoint point = point_at_energy(*model, mf, energy, copts);
  std::vector<double> times(fractions.size());
  for (std::size_t i = 0; i < fractions.size(); ++i) {
    if (fractions[i] < 0.0 || fractions[i] > 1.0)
      throw DomainError("strobe: time fractions must lie in [0, 1]");
    times[i] = fractions[i] * point.T;
  }
  const std::vector<State> states =
      states_at_times(*model, State::rest(point.q0), point.T, times, copts.ode);

  const double len = model->rest_length();
  std::string csv = "fraction,time_s,s_m,x_m,y_m,z_m\n";
  for (std::size_t i = 0; i < states.size(); ++i)
    for (int k = 0; k <= 100; ++k) {
      const double s = len * k / 100.0;
      const Vector3d p = model->task_position(states[i].q, s);
      csv += fmt9(fractions[i]) + "," + fmt9(times[i]) + "," + fmt9(s) + "," + fmt9(p.x()) +
             "," + fmt9(p.y()) + "," + fmt9(p.z()) + "\n";
    }
  write_file_atomic(out_path, csv);
  std::printf("strobed %zu time fractions at E = %.6g J -> %s\n", fractions.size(), energy,
              out_path.c_str());
  return 0;
}

int run_energy_frequency(const std::string& archive_path, const std::string& out_path) {
  const Eigenmanifold mf = load_manifold(archive_path);
  const std::vector<EnergyFrequencyRow> rows = energy_frequency_table(mf);
  std::string csv = "model,mode,energy_J,omega_rad_s,freq_hz\n";
  for (const EnergyFrequencyRow& r : rows)
    csv += mf.model_label + "," + std::to_string(mf.mode_index) + "," + fmt9(r.energy) + "," +
           fmt9(r.omega) + "," + fmt9(r.freq_hz) + "\n";
  write_file_atomic(out_path, csv);
  std::printf("wrote %zu rows -> %s\n", rows.size(), out_path.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"nonlinear normal modes of planar arm models"};
  app.require_subcommand(1);

  std::string spec_a, spec_b, archive_a, archive_b, out_path;
  int mode = 1, nmax = 15;
  double de = 0.05, emax = 1.0, energy = 0.0, grid_de = 0.05;
  std::vector<double> fractions;

  CLI::App* lin = app.add_subcommand("linearize", "small-oscillation frequency table");
  lin->add_option("--model", spec_a, "model spec JSON")->required();
  lin->add_option("--out", out_path, "optional CSV path");

  CLI::App* man = app.add_subcommand("manifold", "continue one mode over energy");
  man->add_option("--model", spec_a, "model spec JSON")->required();
  man->add_option("--mode", mode, "mode index, 1-based ascending frequency")->required();
  man->add_option("--de", de, "reference energy step, J");
  man->add_option("--emax", emax, "target energy, J");
  man->add_option("--nmax", nmax, "Newton iteration cap per correction");
  man->add_option("--out", out_path, "archive path")->required();

  CLI::App* cmp = app.add_subcommand("compare", "similarity report for two archives");
  cmp->add_option("--model-a", spec_a, "model spec A")->required();
  cmp->add_option("--model-b", spec_b, "model spec B")->required();
  cmp->add_option("--archive-a", archive_a, "manifold archive A")->required();
  cmp->add_option("--archive-b", archive_b, "manifold archive B")->required();
  cmp->add_option("--grid-de", grid_de, "reporting grid pitch, J");
  cmp->add_option("--out", out_path, "report CSV path")->required();

  CLI::App* str = app.add_subcommand("strobe", "backbone snapshots over one period");
  str->add_option("--archive", archive_a, "manifold archive")->required();
  str->add_option("--model", spec_a, "model spec JSON")->required();
  str->add_option("--energy", energy, "orbit energy, J")->required();
  str->add_option("--fractions", fractions, "period fractions, comma separated")
      ->delimiter(',');
  str->add_option("--out", out_path, "CSV path")->required();

  CLI::App* ef = app.add_subcommand("energy-frequency", "energy to frequency table");
  ef->add_option("--archive", archive_a, "manifold archive")->required();
  ef->add_option("--out", out_path, "CSV path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (lin->parsed()) return run_linearize(spec_a, out_path);
    if (man->parsed()) return run_manifold(spec_a, mode, de, emax, nmax, out_path);
    if (cmp->parsed()) return run_compare(spec_a, spec_b, archive_a, archive_b, out_path, grid_de);
    if (str->parsed()) return run_strobe(archive_a, spec_a, energy, fractions, out_path);
    if (ef->parsed()) return run_energy_frequency(archive_a, out_path);
  } catch (const nmodes::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}
