#pragma once

#include <sstream>
#include <string>
#include <vector>

#include "vlab/projection.hpp"
#include "vlab/verdict.hpp"

namespace vlab::corpus {

struct DssEntry {
  std::string name;
  std::string description;
  EmbeddingProblem problem;
  std::vector<SequenceGenerator> x_generators;
  std::string expected;  // DSS, NOT_DSS or UNKNOWN
};

/// p = 1 + f with f = 1 on [0, x_3) and f = 1/ln n on [x_n, x_{n+1}),
/// x_n = 1 - (1/n)^{n-1}; q = 1. So p+ = 1 + q+ = 2.
inline DssEntry ejemp2() {
  const Expr n = Expr::var(), one = Expr::constant(1.0);
  const SequenceGenerator gen = power_tower_generator();
  const double x3 = gen.expr.at(3);
  const auto prefix = StepFunction::from_cells(std::vector<Cell>{{Interval(0.0, x3), 2.0}});
  TailFamily p(prefix, gen.expr, one + one / Expr::ln(n), 3);
  return {"ejemp2", "p = 1 + f, f = 1/ln n on [x_n, x_{n+1}), x_n = 1 - (1/n)^(n-1); q = 1",
          EmbeddingProblem(ExponentFunction(p), ExponentFunction::constant(1.0)), {gen}, "DSS"};
}

/// p = q + (1 - x)^r with constant q.
inline DssEntry power_family(double r, double q) {
  if (!(r > 0.0)) throw Error(ErrorCode::PreconditionViolation, "power family needs r > 0");
  if (!(q >= 1.0)) throw Error(ErrorCode::PreconditionViolation, "power family needs q >= 1");
  const Expr x = Expr::var();
  const Expr p = Expr::constant(q) + Expr::pow(Expr::constant(1.0) - x, Expr::constant(r));
  std::ostringstream name;
  name << "power-family(r=" << r << ",q=" << q << ")";
  return {name.str(), "p = q + (1 - x)^r",
          EmbeddingProblem(ExponentFunction(ExprPiecewise(p)), ExponentFunction::constant(q)), {}, "NOT_DSS"};
}

/// p = q + gap with constant q.
inline DssEntry uniform_gap(double q, double gap) {
  std::ostringstream name;
  name << "uniform-gap(q=" << q << ",gap=" << gap << ")";
  return {name.str(), "p = q + gap, constant",
          EmbeddingProblem(ExponentFunction::constant(q + gap), ExponentFunction::constant(q)), {}, "DSS"};
}

/// p - q = 1/k on [x_k, x_{k+1}), x_k = 1 - 2^{-k^2}, and 1 on [0, 1/2); q = 1.
inline DssEntry level_sets() {
  const Expr n = Expr::var(), one = Expr::constant(1.0);
  const Expr xk = one - Expr::pow(Expr::constant(0.5), n * n);
  const auto prefix = StepFunction::from_cells(std::vector<Cell>{{Interval(0.0, 0.5), 2.0}});
  TailFamily p(prefix, xk, one + one / n, 1);
  return {"level-sets", "p - q = 1/k on cells of measure about 2^(-k^2); q = 1",
          EmbeddingProblem(ExponentFunction(p), ExponentFunction::constant(1.0)), {}, "DSS"};
}

/// Every DSS problem in the registry with its default parameters.
inline std::vector<DssEntry> dss_entries() {
  return {ejemp2(), power_family(1.0, 1.0), power_family(2.0, 1.0), power_family(3.0, 1.0), uniform_gap(1.0, 0.5),
          level_sets()};
}

struct Example24Params {
  double q1 = 1.0;
  double q2 = 2.0;
  double delta = 0.2;
  double alpha = 2.0;
  ExponentFunction p;
};

/// Default family: p = 1 on [0, 1/2), 2 on [1/2, 1).
inline Example24Params example24() {
  Example24Params e;
  e.p = ExponentFunction(StepFunction::from_cells(std::vector<Cell>{{Interval(0.0, 0.5), 1.0}, {Interval(0.5, 1.0), 2.0}}));
  return e;
}

inline std::vector<std::string> names() { return {"ejemp2", "example24", "power-family", "uniform-gap", "level-sets"}; }

inline DssEntry dss_entry(const std::string& name, double r = 1.0, double q = 1.0, double gap = 0.5) {
  if (name == "ejemp2") return ejemp2();
  if (name == "power-family") return power_family(r, q);
  if (name == "uniform-gap") return uniform_gap(q, gap);
  if (name == "level-sets") return level_sets();
  if (name == "example24") throw Error(ErrorCode::PreconditionViolation, "example24 is a projection family, not an embedding");
  throw Error(ErrorCode::UnknownCorpus, "no corpus entry \"" + name + "\"");
}

}  // namespace vlab::corpus
