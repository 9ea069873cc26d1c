#pragma once

#include <cmath>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "vlab/verdict.hpp"

namespace vlab::io {

using json = nlohmann::json;

inline constexpr const char* kSchema = "vlab/1";

[[noreturn]] inline void fail(const std::string& where, const std::string& what) {
  throw Error(ErrorCode::ParseError, where + ": " + what);
}

inline const json& field(const json& j, const char* key, const std::string& where) {
  if (!j.is_object() || !j.contains(key)) fail(where, std::string("missing field \"") + key + "\"");
  return j.at(key);
}

// Doubles: finite values as numbers, the rest as "inf", "-inf", "nan".
inline json num(double v) {
  if (std::isfinite(v)) return v;
  if (std::isnan(v)) return "nan";
  return v > 0 ? "inf" : "-inf";
}
inline double to_num(const json& j, const std::string& where) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "inf") return kInf;
    if (s == "-inf") return -kInf;
    if (s == "nan") return std::nan("");
  }
  fail(where, "expected a number");
}
inline long to_long(const json& j, const std::string& where) {
  if (!j.is_number_integer()) fail(where, "expected an integer");
  return j.get<long>();
}

// ---------------------------------------------------------------------------
// Expressions: prefix arrays, e.g. ["pow", ["sub", 1, "x"], 2]
// ---------------------------------------------------------------------------

inline json emit(const Expr& e, const char* var = "x") {
  using Op = Expr::Op;
  switch (e.op()) {
    case Op::Const: return num(e.const_value());
    case Op::Var: return var;
    case Op::Ln: return json::array({"ln", emit(e.lhs(), var)});
    case Op::Add: return json::array({"add", emit(e.lhs(), var), emit(e.rhs(), var)});
    case Op::Sub: return json::array({"sub", emit(e.lhs(), var), emit(e.rhs(), var)});
    case Op::Mul: return json::array({"mul", emit(e.lhs(), var), emit(e.rhs(), var)});
    case Op::Div: return json::array({"div", emit(e.lhs(), var), emit(e.rhs(), var)});
    case Op::Pow: return json::array({"pow", emit(e.lhs(), var), emit(e.rhs(), var)});
  }
  return nullptr;
}

/// Variables "x", "n" and "k" all denote the single free variable.
inline Expr parse_expr(const json& j, const std::string& where = "expr") {
  if (j.is_number()) return Expr::constant(j.get<double>());
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "x" || s == "n" || s == "k" || s == "t") return Expr::var();
    if (s == "inf" || s == "-inf" || s == "nan") fail(where, "non-finite constant");
    fail(where, "unknown symbol \"" + s + "\"");
  }
  if (!j.is_array() || j.empty() || !j[0].is_string()) fail(where, "expected number, variable or [op, ...]");
  const auto op = j[0].get<std::string>();
  auto arg = [&](std::size_t i) { return parse_expr(j[i], where + "[" + std::to_string(i) + "]"); };
  if (op == "ln") {
    if (j.size() != 2) fail(where, "ln takes one argument");
    return Expr::ln(arg(1));
  }
  if (j.size() != 3) {
    if (op == "add" || op == "sub" || op == "mul" || op == "div" || op == "pow") fail(where, op + " takes two arguments");
    throw Error(ErrorCode::Unsupported, where + ": unsupported operator \"" + op + "\"");
  }
  if (op == "add") return arg(1) + arg(2);
  if (op == "sub") return arg(1) - arg(2);
  if (op == "mul") return arg(1) * arg(2);
  if (op == "div") return arg(1) / arg(2);
  if (op == "pow") return Expr::pow(arg(1), arg(2));
  throw Error(ErrorCode::Unsupported, where + ": unsupported operator \"" + op + "\"");
}

// ---------------------------------------------------------------------------
// Sets and carriers
// ---------------------------------------------------------------------------

inline json emit(const Interval& iv) { return json::array({iv.lo, iv.hi}); }
inline json emit(const IntervalSet& s) {
  json a = json::array();
  for (const auto& iv : s.intervals()) a.push_back(emit(iv));
  return a;
}

inline Interval parse_interval(const json& j, const std::string& where) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number()) fail(where, "expected [lo, hi]");
  const double lo = j[0].get<double>(), hi = j[1].get<double>();
  if (!(lo >= 0.0 && hi <= 1.0 && lo < hi)) fail(where, "interval must satisfy 0 <= lo < hi <= 1");
  return Interval(lo, hi);
}
inline IntervalSet parse_set(const json& j, const std::string& where) {
  if (!j.is_array()) fail(where, "expected a list of intervals");
  std::vector<Interval> ivs;
  for (std::size_t i = 0; i < j.size(); ++i) ivs.push_back(parse_interval(j[i], where + "[" + std::to_string(i) + "]"));
  return IntervalSet(std::move(ivs));
}

inline json emit(const StepFunction& f) {
  json pieces = json::array();
  for (const auto& p : f.pieces()) pieces.push_back({{"set", emit(p.set)}, {"value", num(p.value)}});
  return {{"pieces", pieces}};
}
inline json emit(const ExprPiecewise& f) {
  json pieces = json::array();
  for (const auto& p : f.pieces()) pieces.push_back({{"interval", emit(p.iv)}, {"expr", emit(p.expr)}});
  return {{"pieces", pieces}};
}

inline StepFunction parse_step(const json& j, const std::string& where) {
  const auto& ps = field(j, "pieces", where);
  if (!ps.is_array()) fail(where + ".pieces", "expected an array");
  std::vector<StepFunction::Piece> pieces;
  for (std::size_t i = 0; i < ps.size(); ++i) {
    const auto w = where + ".pieces[" + std::to_string(i) + "]";
    pieces.push_back({parse_set(field(ps[i], "set", w), w + ".set"), to_num(field(ps[i], "value", w), w + ".value")});
  }
  try {
    return StepFunction(std::move(pieces));
  } catch (const Error& e) {
    fail(where, e.what());
  }
}

inline ExprPiecewise parse_expr_piecewise(const json& j, const std::string& where) {
  if (j.contains("expr") && !j.contains("pieces")) return ExprPiecewise(parse_expr(j.at("expr"), where + ".expr"));
  const auto& ps = field(j, "pieces", where);
  if (!ps.is_array()) fail(where + ".pieces", "expected an array");
  std::vector<ExprPiecewise::Piece> pieces;
  for (std::size_t i = 0; i < ps.size(); ++i) {
    const auto w = where + ".pieces[" + std::to_string(i) + "]";
    pieces.push_back({parse_interval(field(ps[i], "interval", w), w + ".interval"),
                      parse_expr(field(ps[i], "expr", w), w + ".expr")});
  }
  try {
    return ExprPiecewise(std::move(pieces));
  } catch (const Error& e) {
    fail(where, e.what());
  }
}

inline json emit(const Function& f) {
  if (const auto* s = std::get_if<StepFunction>(&f)) {
    json j = emit(*s);
    j["kind"] = "step";
    return j;
  }
  if (const auto* e = std::get_if<ExprPiecewise>(&f)) {
    json j = emit(*e);
    j["kind"] = "expr";
    return j;
  }
  const auto& t = std::get<TailFamily>(f);
  json prefix = std::visit(
      [](const auto& c) {
        json j = emit(c);
        j["kind"] = std::is_same_v<std::decay_t<decltype(c)>, StepFunction> ? "step" : "expr";
        return j;
      },
      t.prefix());
  return {{"kind", "tail"}, {"prefix", prefix}, {"x_n", emit(t.x_expr(), "n")}, {"v_n", emit(t.v_expr(), "n")},
          {"n0", t.n0()}};
}

inline Function parse_function(const json& j, const std::string& where = "function") {
  if (!j.is_object()) fail(where, "expected an object");
  std::string kind = "step";
  if (j.contains("kind")) {
    if (!j.at("kind").is_string()) fail(where + ".kind", "expected a string");
    kind = j.at("kind").get<std::string>();
  } else if (j.contains("x_n")) {
    kind = "tail";
  } else if (j.contains("expr")) {
    kind = "expr";
  }
  if (kind == "step") return parse_step(j, where);
  if (kind == "expr") return parse_expr_piecewise(j, where);
  if (kind != "tail") fail(where + ".kind", "expected \"step\", \"expr\" or \"tail\"");
  const auto& pj = field(j, "prefix", where);
  const Function pf = parse_function(pj, where + ".prefix");
  if (std::holds_alternative<TailFamily>(pf)) fail(where + ".prefix", "prefix cannot be a tail");
  PrefixCarrier prefix = std::holds_alternative<StepFunction>(pf) ? PrefixCarrier(std::get<StepFunction>(pf))
                                                                   : PrefixCarrier(std::get<ExprPiecewise>(pf));
  try {
    return TailFamily(std::move(prefix), parse_expr(field(j, "x_n", where), where + ".x_n"),
                      parse_expr(field(j, "v_n", where), where + ".v_n"), to_long(field(j, "n0", where), where + ".n0"));
  } catch (const Error& e) {
    if (e.code() == ErrorCode::ParseError || e.code() == ErrorCode::Unsupported) throw;
    fail(where, e.what());
  }
}

inline json emit(const ExponentFunction& p) {
  json j = emit(p.carrier());
  if (p.cap() != kExponentCap) j["cap"] = p.cap();
  return j;
}

inline ExponentFunction parse_exponent(const json& j, const std::string& where = "exponent") {
  const Function f = parse_function(j, where);
  const double cap = j.contains("cap") ? to_num(j.at("cap"), where + ".cap") : kExponentCap;
  try {
    return ExponentFunction(f, cap);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::PreconditionViolation) fail(where, e.what());
    throw;
  }
}

// ---------------------------------------------------------------------------
// Series and DSS records
// ---------------------------------------------------------------------------

inline json emit(const SequenceGenerator& g) { return {{"name", g.name}, {"expr", emit(g.expr, "n")}, {"n0", g.n0}}; }
inline SequenceGenerator parse_generator(const json& j, const std::string& where = "generator") {
  SequenceGenerator g;
  g.name = j.contains("name") && j.at("name").is_string() ? j.at("name").get<std::string>() : "user";
  g.expr = parse_expr(field(j, "expr", where), where + ".expr");
  g.n0 = to_long(field(j, "n0", where), where + ".n0");
  return g;
}

inline json emit(const ConvergenceCertificate& c) {
  return {{"kind", to_string(c.kind)}, {"s", num(c.s)},   {"C", num(c.C)}, {"ratio", num(c.ratio)},
          {"c", num(c.c)},             {"N", c.N},        {"checked_window", c.checked_window}};
}
inline ConvergenceCertificate parse_convergence(const json& j, const std::string& where) {
  ConvergenceCertificate c;
  const auto k = field(j, "kind", where).get<std::string>();
  if (k == "COMPARISON")
    c.kind = ConvergenceCertificate::Kind::Comparison;
  else if (k == "GEOMETRIC")
    c.kind = ConvergenceCertificate::Kind::Geometric;
  else if (k == "DIVERGENCE")
    c.kind = ConvergenceCertificate::Kind::Divergence;
  else
    fail(where + ".kind", "unknown certificate kind \"" + k + "\"");
  c.s = to_num(field(j, "s", where), where + ".s");
  c.C = to_num(field(j, "C", where), where + ".C");
  c.ratio = to_num(field(j, "ratio", where), where + ".ratio");
  c.c = to_num(field(j, "c", where), where + ".c");
  c.N = to_long(field(j, "N", where), where + ".N");
  c.checked_window = to_long(field(j, "checked_window", where), where + ".checked_window");
  return c;
}

inline json emit(const SeriesVerdict& v) {
  return {{"status", to_string(v.status)},
          {"certificate", v.certificate ? emit(*v.certificate) : json(nullptr)},
          {"partial_sum", num(v.partial_sum)},
          {"partial_to", v.partial_to},
          {"tail_bound", num(v.tail_bound)},
          {"total_bound", num(v.status == SeriesStatus::Converges ? v.total_bound() : kInf)},
          {"reason", v.reason}};
}
inline SeriesVerdict parse_series_verdict(const json& j, const std::string& where) {
  SeriesVerdict v;
  const auto s = field(j, "status", where).get<std::string>();
  v.status = s == "CONVERGES" ? SeriesStatus::Converges : s == "DIVERGES" ? SeriesStatus::Diverges : SeriesStatus::Unknown;
  if (j.contains("certificate") && !j.at("certificate").is_null())
    v.certificate = parse_convergence(j.at("certificate"), where + ".certificate");
  v.partial_sum = to_num(field(j, "partial_sum", where), where + ".partial_sum");
  v.partial_to = to_long(field(j, "partial_to", where), where + ".partial_to");
  v.tail_bound = to_num(field(j, "tail_bound", where), where + ".tail_bound");
  if (j.contains("reason")) v.reason = j.at("reason").get<std::string>();
  return v;
}

inline json emit(const RangeSet& r) {
  json pts = json::array(), ivs = json::array();
  for (double p : r.points()) pts.push_back(num(p));
  for (const auto& c : r.intervals()) ivs.push_back(json::array({c.lo, c.hi}));
  return {{"points", pts}, {"intervals", ivs}, {"exact", r.exact()}};
}

inline DssKind parse_dss_kind(const std::string& s, const std::string& where) {
  if (s == "UNIFORM_GAP") return DssKind::UniformGap;
  if (s == "DISJOINT_RANGES") return DssKind::DisjointRanges;
  if (s == "DYADIC_SUM") return DssKind::DyadicSum;
  if (s == "LEVEL_SET_SUM") return DssKind::LevelSetSum;
  fail(where, "unknown certificate kind \"" + s + "\"");
}

inline json emit(const DssCertificate& c) {
  json j = {{"kind", to_string(c.kind)}};
  switch (c.kind) {
    case DssKind::UniformGap:
      j["gap"] = num(c.gap);
      j["delta"] = num(c.delta);
      break;
    case DssKind::DisjointRanges:
      j["range_p"] = emit(c.range_p);
      j["range_q"] = emit(c.range_q);
      break;
    case DssKind::DyadicSum:
    case DssKind::LevelSetSum:
      j["sequence"] = emit(c.sequence);
      j["p_plus"] = num(c.p_plus);
      j["series"] = emit(c.series);
      break;
  }
  return j;
}

/// Ranges are recomputed on recheck, so only the claim's kind is restored for them.
inline DssCertificate parse_certificate(const json& j, const std::string& where = "certificate") {
  DssCertificate c;
  c.kind = parse_dss_kind(field(j, "kind", where).get<std::string>(), where + ".kind");
  switch (c.kind) {
    case DssKind::UniformGap:
      c.gap = to_num(field(j, "gap", where), where + ".gap");
      c.delta = to_num(field(j, "delta", where), where + ".delta");
      break;
    case DssKind::DisjointRanges: break;
    case DssKind::DyadicSum:
    case DssKind::LevelSetSum:
      c.sequence = parse_generator(field(j, "sequence", where), where + ".sequence");
      c.p_plus = to_num(field(j, "p_plus", where), where + ".p_plus");
      c.series = parse_series_verdict(field(j, "series", where), where + ".series");
      break;
  }
  return c;
}

inline json emit(const NotDssWitness& w) {
  json xs = json::array(), sets = json::array();
  for (double x : w.x) xs.push_back(x);
  for (const auto& b : w.s) sets.push_back(emit(b.set));
  return {{"r", num(w.r)},   {"p_plus", num(w.p_plus)}, {"equiv_constant", num(w.equiv_constant)},
          {"x", xs},         {"A", sets},               {"from_rearrangement", w.from_rearrangement}};
}
inline NotDssWitness parse_witness(const json& j, const std::string& where = "witness") {
  NotDssWitness w;
  w.r = to_num(field(j, "r", where), where + ".r");
  w.p_plus = to_num(field(j, "p_plus", where), where + ".p_plus");
  w.equiv_constant = to_num(field(j, "equiv_constant", where), where + ".equiv_constant");
  for (const auto& x : field(j, "x", where)) w.x.push_back(to_num(x, where + ".x"));
  const auto& sets = field(j, "A", where);
  for (std::size_t i = 0; i < sets.size(); ++i)
    w.s.push_back({parse_set(sets[i], where + ".A[" + std::to_string(i) + "]"), 1.0});
  if (j.contains("from_rearrangement")) w.from_rearrangement = j.at("from_rearrangement").get<bool>();
  if (w.x.size() != w.s.size()) fail(where, "x and A differ in length");
  return w;
}

inline json emit(const WitnessCheck& c) {
  json mods = json::array();
  for (double m : c.unit_modulars) mods.push_back(num(m));
  return {{"ok", c.ok}, {"tested", c.tested}, {"worst_ratio", num(c.worst_ratio)}, {"unit_modulars", mods}};
}

inline json emit(const DssVerdict& v, const EmbeddingProblem& prob) {
  json diags = json::array();
  for (const auto& d : v.diagnostics) diags.push_back({{"criterion", d.criterion}, {"outcome", d.outcome}, {"detail", d.detail}});
  json j = {{"status", to_string(v.status)}, {"problem", {{"p", emit(prob.p)}, {"q", emit(prob.q)}}}, {"diagnostics", diags}};
  if (v.certificate) j["certificate"] = emit(*v.certificate);
  if (v.witness) j["witness"] = emit(*v.witness);
  if (v.witness_check) j["witness_check"] = emit(*v.witness_check);
  return j;
}

inline json emit(const Measured& m) { return {{"value", num(m.value)}, {"abs_error_bound", num(m.abs_error_bound)}}; }

// ---------------------------------------------------------------------------
// Files
// ---------------------------------------------------------------------------

inline json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(path, "cannot open file");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    fail(path, e.what());
  }
}

inline std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(path, "cannot open file");
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

/// Writes to a sibling temporary file, then renames it into place.
inline void write_text(const std::string& path, const std::string& text) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::ParseError, path + ": cannot write file");
    out << text;
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0) throw Error(ErrorCode::ParseError, path + ": cannot write file");
}

inline std::string dump(const json& j) { return j.dump(2) + "\n"; }

}  // namespace vlab::io
