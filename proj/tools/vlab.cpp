#include <chrono>
#include <cstdio>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "vlab/vlab.hpp"

using namespace vlab;
using io::json;

namespace {

enum Exit { kOk = 0, kNotDss = 1, kUnknown = 2, kInputError = 3, kUnsupported = 4, kFailure = 5 };

struct Run {
  std::vector<std::string> command;
  json inputs = json::object();
  std::string report_path;
  std::string csv_path;
  bool timing = false;
  bool print_json = false;
  std::uint64_t seed = 0;
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();

  json load(const std::string& path) {
    const std::string text = io::read_text(path);
    inputs[path] = fnv1a_hex(text);
    try {
      return json::parse(text);
    } catch (const json::parse_error& e) {
      io::fail(path, e.what());
    }
  }

  int finish(json results, const std::string& summary, int code) const {
    json report = {{"schema", io::kSchema},  {"tool", "vlab"},     {"version", kVersion},
                   {"command", command},     {"inputs", inputs},   {"results", std::move(results)},
                   {"exit_code", code}};
    if (timing)
      report["wall_time_s"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (!report_path.empty()) io::write_text(report_path, io::dump(report));
    if (print_json)
      std::cout << io::dump(report);
    else
      std::cout << summary;
    return code;
  }
};

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

std::string measured_line(const char* what, const Measured& m) {
  return std::string(what) + " = " + fmt(m.value) + " (abs error <= " + fmt(m.abs_error_bound) + ")\n";
}

int status_code(DssStatus s) {
  switch (s) {
    case DssStatus::Dss: return kOk;
    case DssStatus::NotDss: return kNotDss;
    case DssStatus::Unknown: return kUnknown;
  }
  return kUnknown;
}

std::string verdict_summary(const DssVerdict& v) {
  std::ostringstream os;
  os << "verdict: " << to_string(v.status);
  if (v.certificate) os << " via " << to_string(v.certificate->kind);
  if (v.witness) os << " (witness with " << v.witness->x.size() << " terms, r = " << v.witness->r << ")";
  os << "\n";
  for (const auto& d : v.diagnostics)
    os << "  " << d.criterion << ": " << d.outcome << (d.detail.empty() ? "" : " - " + d.detail) << "\n";
  return os.str();
}

std::vector<IntervalSet> parse_sets(const json& j, const std::string& where) {
  if (!j.is_array()) io::fail(where, "expected a list of interval sets");
  std::vector<IntervalSet> out;
  for (std::size_t i = 0; i < j.size(); ++i) out.push_back(io::parse_set(j[i], where + "[" + std::to_string(i) + "]"));
  return out;
}

json dss_run(const EmbeddingProblem& prob, const DssOptions& opt, DssVerdict& v) {
  v = dss_verdict(prob, opt);
  return io::emit(v, prob);
}

std::vector<long> sweep_sizes(long K) {
  std::vector<long> Ks;
  for (long k = 4; k <= K; k *= 2) Ks.push_back(k);
  return Ks;
}

json example24_run(const corpus::Example24Params& e, long K, std::string& csv, std::string& summary) {
  const auto fam = example24_build(e.q1, e.q2, e.delta, e.alpha, e.p, K);
  const auto Ks = sweep_sizes(K);
  const auto rows = example24_sweep(fam, Ks);
  json table = json::array();
  std::ostringstream c, s;
  c.precision(17);
  c << "K,lower_bound\n";
  s << "K  T_A lower bound\n";
  for (const auto& r : rows) {
    table.push_back({{"K", r.K}, {"lower_bound", r.bound}, {"argmax", r.argmax}});
    c << r.K << "," << r.bound << "\n";
    s << r.K << "  " << fmt(r.bound) << "\n";
  }
  csv = c.str();
  summary = s.str();
  return {{"q1", e.q1},       {"q2", e.q2},         {"delta", e.delta},
          {"alpha", e.alpha}, {"p", io::emit(e.p)}, {"normalizer", fam.normalizer.value},
          {"table", table}};
}

}  // namespace

int main(int argc, char** argv) {
  Run run;
  // The output location is not part of the run, so it is left out of the report.
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--report") {
      ++i;
      continue;
    }
    if (a.rfind("--report=", 0) == 0) continue;
    run.command.push_back(a);
  }

  CLI::App app{"Variable exponent Lebesgue space laboratory"};
  app.require_subcommand(1);
  app.add_option("--report", run.report_path, "Write the JSON report to this path");
  app.add_flag("--json", run.print_json, "Print the JSON report instead of the summary");
  app.add_flag("--timing", run.timing, "Record wall time in the report");
  app.add_option("--seed", run.seed, "Seed for randomized checks")->capture_default_str();

  std::string f_path, p_path, q_path, spec_path, xgen_path, rgen_path, term_path, cert_path, report_in;
  std::string corpus_name, op_name = "TA";
  long n0 = 1, K = 256, psi_index = 0, psi_grid = 100;
  double r_param = 1.0, q_param = 1.0, gap_param = 0.5;
  bool corpus_dss = false;

  auto* norm = app.add_subcommand("norm", "Luxemburg norm of f in L^p");
  norm->add_option("f", f_path)->required();
  norm->add_option("p", p_path)->required();
  auto* modular_cmd = app.add_subcommand("modular", "Modular of f under p");
  modular_cmd->add_option("f", f_path)->required();
  modular_cmd->add_option("p", p_path)->required();
  auto* range = app.add_subcommand("range", "Essential range, bounds and conjugate of an exponent");
  range->add_option("p", p_path)->required();
  auto* rearrange = app.add_subcommand("rearrange", "Nonincreasing rearrangement of a step or tail function");
  rearrange->add_option("f", f_path)->required();
  auto* gk = app.add_subcommand("gk", "Normalized indicators g_k of disjoint sets");
  gk->add_option("spec", spec_path, "{\"sets\": [...], \"p\": exponent}")->required();
  auto* psi = app.add_subcommand("psi", "Orlicz function psi_k of a disjoint sequence (CSV grid)");
  psi->add_option("spec", spec_path, "{\"sets\": [...], \"p\": exponent}")->required();
  psi->add_option("--k", psi_index, "0-based member index")->capture_default_str();
  psi->add_option("--grid", psi_grid, "Grid points on [0, 1]")->capture_default_str();
  psi->add_option("--csv", run.csv_path);
  auto* project = app.add_subcommand("project", "Apply T_A or P_A to a step function");
  project->add_option("spec", spec_path, "{\"sets\": [...], \"p\": exponent}")->required();
  project->add_option("f", f_path)->required();
  project->add_option("--op", op_name)->check(CLI::IsMember({"TA", "PA"}))->capture_default_str();
  auto* ex24 = app.add_subcommand("example24", "T_A lower bounds on the unbounded-projection family (CSV)");
  ex24->add_option("--K", K, "Largest K (sweep 4, 8, ..., K)")->capture_default_str();
  ex24->add_option("--csv", run.csv_path);
  auto* series = app.add_subcommand("series", "Certify convergence of a series");
  series->add_option("term", term_path, "{\"term\": expr in n, \"n0\": k}");
  series->add_option("--n0", n0, "First index (overrides the file)");
  auto* series_recheck = series->add_subcommand("recheck", "Re-validate a series report");
  series_recheck->add_option("report", cert_path)->required();
  auto* dss = app.add_subcommand("dss-check", "Decide whether L^p -> L^q is disjointly strictly singular");
  dss->add_option("--p", p_path)->required();
  dss->add_option("--q", q_path)->required();
  dss->add_option("--x-gen", xgen_path, "Extra x_n generator {\"expr\", \"n0\", \"name\"}");
  dss->add_option("--r-gen", rgen_path, "Extra r_k generator {\"expr\", \"n0\", \"name\"}");
  auto* recheck_cmd = app.add_subcommand("dss-recheck", "Re-validate a dss-check report");
  recheck_cmd->add_option("report", report_in)->required();
  auto* corpus_cmd = app.add_subcommand("corpus", "Run a built-in instance (or \"all\")");
  corpus_cmd->add_option("name", corpus_name)->required();
  corpus_cmd->add_flag("--dss-check", corpus_dss, "Run dss-check on the instance");
  corpus_cmd->add_option("--r", r_param, "power-family exponent r")->capture_default_str();
  corpus_cmd->add_option("--q", q_param, "power-family / uniform-gap q")->capture_default_str();
  corpus_cmd->add_option("--gap", gap_param, "uniform-gap gap")->capture_default_str();
  corpus_cmd->add_option("--K", K, "example24 largest K")->capture_default_str();
  corpus_cmd->add_option("--csv", run.csv_path);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kInputError;
  }

  try {
    if (*norm || *modular_cmd) {
      const Function f = io::parse_function(run.load(f_path), f_path);
      const ExponentFunction p = io::parse_exponent(run.load(p_path), p_path);
      if (*norm) {
        const auto m = luxemburg_norm(f, p);
        return run.finish({{"norm", io::emit(m)}}, measured_line("norm", m), kOk);
      }
      const auto m = modular(f, p);
      return run.finish({{"modular", io::emit(m)}}, measured_line("modular", m), kOk);
    }

    if (*range) {
      const ExponentFunction p = io::parse_exponent(run.load(p_path), p_path);
      const auto r = essential_range(p);
      json res = {{"range", io::emit(r)}, {"p_minus", p.p_minus()}, {"p_plus", p.p_plus()}};
      std::string summary = "p- = " + fmt(p.p_minus()) + ", p+ = " + fmt(p.p_plus()) + "\n";
      try {
        const auto c = conjugate_exponent(p);
        res["conjugate"] = io::emit(c);
        summary += "conjugate: p*- = " + fmt(c.p_minus()) + ", p*+ = " + fmt(c.p_plus()) + "\n";
      } catch (const Error& e) {
        if (e.code() != ErrorCode::Skipped) throw;
        res["conjugate"] = nullptr;
        summary += "conjugate: unbounded (p attains 1)\n";
      }
      return run.finish(res, summary, kOk);
    }

    if (*rearrange) {
      const Function f = io::parse_function(run.load(f_path), f_path);
      const Function r = decreasing_rearrangement(f);
      return run.finish({{"rearranged", io::emit(r)}, {"monotonicity", to_string(monotonicity_check(f))}},
                        std::string("input is ") + to_string(monotonicity_check(f)) + "\n", kOk);
    }

    if (*gk || *psi || *project) {
      const json spec = run.load(spec_path);
      const auto sets = parse_sets(io::field(spec, "sets", spec_path), spec_path + ".sets");
      const ExponentFunction p = io::parse_exponent(io::field(spec, "p", spec_path), spec_path + ".p");
      if (*gk) {
        const auto g = build_gk(sets, p);
        json members = json::array();
        std::ostringstream s;
        for (std::size_t k = 0; k < g.size(); ++k) {
          const auto m = modular(g[k], p);
          members.push_back({{"function", io::emit(g[k])}, {"modular", io::emit(m)}});
          s << "g_" << k << ": modular " << fmt(m.value) << "\n";
        }
        return run.finish({{"members", members}, {"exponent_tolerance", g.exponent_tolerance()}}, s.str(), kOk);
      }
      if (*psi) {
        if (psi_index < 0 || static_cast<std::size_t>(psi_index) >= sets.size())
          throw Error(ErrorCode::PreconditionViolation, "--k out of range");
        if (psi_grid < 1) throw Error(ErrorCode::PreconditionViolation, "--grid must be positive");
        const auto f = orlicz_psi_indicator(sets[static_cast<std::size_t>(psi_index)], p);
        json grid = json::array();
        std::ostringstream csv;
        csv.precision(17);
        csv << "s,psi\n";
        for (long i = 0; i <= psi_grid; ++i) {
          const double s = static_cast<double>(i) / static_cast<double>(psi_grid);
          const double v = f(s);
          grid.push_back(json::array({s, v}));
          csv << s << "," << v << "\n";
        }
        if (!run.csv_path.empty()) io::write_text(run.csv_path, csv.str());
        const bool ok = f.valid();
        return run.finish({{"k", psi_index}, {"grid", grid}, {"valid_orlicz", ok}},
                          std::string("psi_") + std::to_string(psi_index) + (ok ? " is" : " is not") +
                              " a valid Orlicz function on the grid\n",
                          kOk);
      }
      const StepFunction f = [&] {
        const Function fn = io::parse_function(run.load(f_path), f_path);
        if (!is_step(fn)) throw Error(ErrorCode::Unsupported, "projections act on step functions");
        return std::get<StepFunction>(fn);
      }();
      const ProjectionSpec ps{sets, p};
      const auto op = op_name == "TA" ? ProjectionOp::TA : ProjectionOp::PA;
      const auto out = apply(op, ps, f);
      const auto ratio = opnorm_lower_bound(ps, std::vector<StepFunction>{f}, op);
      return run.finish({{"op", op_name}, {"result", io::emit(out)}, {"norm_ratio", ratio.bound}},
                        "||" + op_name + " f|| / ||f|| = " + fmt(ratio.bound) + "\n", kOk);
    }

    if (*ex24) {
      std::string csv, summary;
      auto res = example24_run(corpus::example24(), K, csv, summary);
      if (!run.csv_path.empty()) io::write_text(run.csv_path, csv);
      return run.finish(res, summary, kOk);
    }

    if (*series) {
      if (*series_recheck) {
        const json rep = run.load(cert_path);
        const json& res = io::field(rep, "results", cert_path);
        const Expr term = io::parse_expr(io::field(res, "term", cert_path + ".results"), cert_path + ".results.term");
        const auto v = io::parse_series_verdict(io::field(res, "verdict", cert_path + ".results"),
                                                cert_path + ".results.verdict");
        if (!v.certificate) throw Error(ErrorCode::PreconditionViolation, "report carries no certificate");
        const auto rc = recheck(*v.certificate, SeriesTerm::from_expr(term));
        json out = {{"ok", rc.ok}, {"checked", rc.checked}};
        if (rc.first_failure) out["first_failure"] = *rc.first_failure;
        return run.finish(out, std::string(rc.ok ? "certificate holds" : "certificate FAILS") + " on " +
                                   std::to_string(rc.checked) + " indices\n",
                          rc.ok ? kOk : kFailure);
      }
      if (term_path.empty()) throw Error(ErrorCode::ParseError, "series: missing term file");
      const json tj = run.load(term_path);
      const Expr term = io::parse_expr(io::field(tj, "term", term_path), term_path + ".term");
      const long start = series->count("--n0") ? n0 : (tj.contains("n0") ? io::to_long(tj.at("n0"), term_path + ".n0") : 1);
      const auto v = certify(term, start);
      std::string summary = to_string(v.status);
      if (v.certificate) summary += " (" + to_string(v.certificate->kind) + ", N = " + std::to_string(v.certificate->N) + ")";
      if (v.status == SeriesStatus::Converges) summary += ", sum <= " + fmt(v.total_bound());
      if (!v.reason.empty()) summary += " - " + v.reason;
      return run.finish({{"term", io::emit(term, "n")}, {"n0", start}, {"verdict", io::emit(v)}}, summary + "\n",
                        v.status == SeriesStatus::Unknown ? kUnknown : kOk);
    }

    if (*dss) {
      EmbeddingProblem prob(io::parse_exponent(run.load(p_path), p_path), io::parse_exponent(run.load(q_path), q_path));
      DssOptions opt;
      opt.seed = run.seed;
      if (!xgen_path.empty()) opt.x_generators.push_back(io::parse_generator(run.load(xgen_path), xgen_path));
      if (!rgen_path.empty()) opt.r_generators.push_back(io::parse_generator(run.load(rgen_path), rgen_path));
      DssVerdict v;
      auto res = dss_run(prob, opt, v);
      res["seed"] = run.seed;
      return run.finish(res, verdict_summary(v), status_code(v.status));
    }

    if (*recheck_cmd) {
      const json rep = run.load(report_in);
      const json& res = io::field(rep, "results", report_in);
      // A corpus "all" report holds several verdicts.
      std::vector<json> verdicts;
      if (res.contains("entries"))
        for (const auto& e : res.at("entries")) verdicts.push_back(e.at("verdict"));
      else
        verdicts.push_back(res);
      const std::uint64_t seed = res.contains("seed") ? res.at("seed").get<std::uint64_t>() : run.seed;
      json checks = json::array();
      bool all_ok = true;
      int n_items = 0;
      std::ostringstream s;
      for (std::size_t i = 0; i < verdicts.size(); ++i) {
        const json& vj = verdicts[i];
        const std::string where = report_in + ".verdict[" + std::to_string(i) + "]";
        const json& pj = io::field(vj, "problem", where);
        EmbeddingProblem prob(io::parse_exponent(io::field(pj, "p", where), where + ".p"),
                              io::parse_exponent(io::field(pj, "q", where), where + ".q"));
        json item = {{"status", vj.value("status", "")}};
        if (vj.contains("certificate")) {
          const auto r = recheck_certificate(prob, io::parse_certificate(vj.at("certificate"), where + ".certificate"));
          item["certificate"] = {{"ok", r.ok}, {"detail", r.detail}};
          all_ok = all_ok && r.ok;
          ++n_items;
          s << "certificate " << (r.ok ? "ok" : "FAILED") << ": " << r.detail << "\n";
        }
        if (vj.contains("witness")) {
          const auto r = recheck_witness(prob, io::parse_witness(vj.at("witness"), where + ".witness"), seed);
          item["witness"] = {{"ok", r.ok}, {"detail", r.detail}};
          all_ok = all_ok && r.ok;
          ++n_items;
          s << "witness " << (r.ok ? "ok" : "FAILED") << ": " << r.detail << "\n";
        }
        checks.push_back(item);
      }
      s << n_items << " item(s) rechecked, " << (all_ok ? "all valid" : "some FAILED") << "\n";
      return run.finish({{"checks", checks}, {"ok", all_ok}}, s.str(), all_ok ? kOk : kFailure);
    }

    if (*corpus_cmd) {
      if (corpus_name == "example24") {
        std::string csv, summary;
        auto res = example24_run(corpus::example24(), K, csv, summary);
        if (!run.csv_path.empty()) io::write_text(run.csv_path, csv);
        return run.finish(res, summary, kOk);
      }
      if (corpus_name == "all") {
        json entries = json::array();
        std::ostringstream s;
        bool all_match = true;
        for (const auto& e : corpus::dss_entries()) {
          DssOptions opt;
          opt.seed = run.seed;
          opt.x_generators = e.x_generators;
          DssVerdict v;
          auto res = dss_run(e.problem, opt, v);
          const bool match = to_string(v.status) == e.expected;
          all_match = all_match && match;
          entries.push_back({{"name", e.name}, {"expected", e.expected}, {"verdict", res}});
          s << e.name << ": " << to_string(v.status) << (match ? "" : " (expected " + e.expected + ")") << "\n";
        }
        std::string csv, summary;
        auto ex = example24_run(corpus::example24(), K, csv, summary);
        s << "example24:\n" << summary;
        return run.finish({{"entries", entries}, {"example24", ex}, {"seed", run.seed}}, s.str(),
                          all_match ? kOk : kFailure);
      }
      const auto e = corpus::dss_entry(corpus_name, r_param, q_param, gap_param);
      if (!corpus_dss) {
        return run.finish({{"name", e.name}, {"description", e.description}, {"p", io::emit(e.problem.p)},
                           {"q", io::emit(e.problem.q)}},
                          e.name + ": " + e.description + "\n", kOk);
      }
      DssOptions opt;
      opt.seed = run.seed;
      opt.x_generators = e.x_generators;
      DssVerdict v;
      auto res = dss_run(e.problem, opt, v);
      res["seed"] = run.seed;
      return run.finish(res, e.name + "\n" + verdict_summary(v), status_code(v.status));
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    switch (e.code()) {
      case ErrorCode::ParseError:
      case ErrorCode::PreconditionViolation:
      case ErrorCode::UnknownCorpus:
      case ErrorCode::NullSet:
      case ErrorCode::BandEmpty: return kInputError;
      case ErrorCode::Unsupported: return kUnsupported;
      default: return kFailure;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kFailure;
  }
  return kFailure;
}
