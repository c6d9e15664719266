#pragma once

// Random expression trees evaluable on long doubles and on jets.

#include <cmath>
#include <memory>
#include <string>
#include <vector>

#include "finsler/jet.hpp"
#include "finsler/sampling.hpp"

namespace oracle {

struct Expr {
  enum Op { Var, Const, Add, Sub, Mul, Div, Exp, Log, Sqrt, Pow, Sin, Cos };
  Op op = Const;
  int index = 0;
  double c = 0.0;
  std::vector<std::shared_ptr<Expr>> kids;

  template <class T>
  T eval(const std::vector<T>& x) const {
    using std::cos;
    using std::exp;
    using std::log;
    using std::pow;
    using std::sin;
    using std::sqrt;
    auto k = [&](int i) { return kids[static_cast<std::size_t>(i)]->eval(x); };
    switch (op) {
      case Var:
        return x[static_cast<std::size_t>(index)];
      case Const:
        return T(c);
      case Add:
        return k(0) + k(1);
      case Sub:
        return k(0) - k(1);
      case Mul:
        return k(0) * k(1);
      case Div: {
        const T b = k(1);
        return k(0) / (T(1.5) + b * b);
      }
      case Exp:
        return exp(k(0) * T(0.5));
      case Log: {
        const T a = k(0);
        return log(T(1.0) + a * a);
      }
      case Sqrt: {
        const T a = k(0);
        return sqrt(T(0.5) + a * a);
      }
      case Pow: {
        const T a = k(0);
        return pow(T(1.0) + a * a, c);
      }
      case Sin:
        return sin(k(0));
      case Cos:
        return cos(k(0));
    }
    return T(0.0);
  }

  std::string str() const {
    auto k = [&](int i) { return kids[static_cast<std::size_t>(i)]->str(); };
    switch (op) {
      case Var:
        return "x" + std::to_string(index);
      case Const:
        return std::to_string(c);
      case Add:
        return "(" + k(0) + "+" + k(1) + ")";
      case Sub:
        return "(" + k(0) + "-" + k(1) + ")";
      case Mul:
        return "(" + k(0) + "*" + k(1) + ")";
      case Div:
        return "(" + k(0) + "/(1.5+" + k(1) + "^2))";
      case Exp:
        return "exp(" + k(0) + "/2)";
      case Log:
        return "log(1+" + k(0) + "^2)";
      case Sqrt:
        return "sqrt(0.5+" + k(0) + "^2)";
      case Pow:
        return "(1+" + k(0) + "^2)^" + std::to_string(c);
      case Sin:
        return "sin(" + k(0) + ")";
      case Cos:
        return "cos(" + k(0) + ")";
    }
    return "?";
  }
};

inline std::shared_ptr<Expr> random_expr(finsler::Rng& rng, int nvars, int depth) {
  auto e = std::make_shared<Expr>();
  if (depth == 0 || rng.uniform() < 0.15) {
    if (rng.uniform() < 0.8) {
      e->op = Expr::Var;
      e->index = static_cast<int>(rng.uniform() * nvars);
    } else {
      e->op = Expr::Const;
      e->c = rng.uniform(-1.0, 1.0);
    }
    return e;
  }
  const int pick = static_cast<int>(rng.uniform() * 10);
  static const Expr::Op ops[10] = {Expr::Add, Expr::Sub, Expr::Mul, Expr::Div, Expr::Exp,
                                   Expr::Log, Expr::Sqrt, Expr::Pow, Expr::Sin, Expr::Cos};
  e->op = ops[pick];
  const int arity = pick < 4 ? 2 : 1;
  for (int i = 0; i < arity; ++i) e->kids.push_back(random_expr(rng, nvars, depth - 1));
  if (e->op == Expr::Pow) e->c = rng.uniform(-1.5, 1.5);
  return e;
}

}  // namespace oracle
