#include "doctest.h"

#include <random>

#include "sdgrad/autodiff.hpp"
#include "sdgrad/error.hpp"
#include "sdgrad/eval.hpp"
#include "sdgrad/parser.hpp"
#include "sdgrad/printer.hpp"
#include "sdgrad/unary_ops.hpp"

using namespace sdg;

namespace {

ExprPtr P(const char* s) { return parse_internal(s); }

TypeEnv reals(std::initializer_list<const char*> names) {
  TypeEnv env;
  for (const char* n : names) env.push(n, Type::real());
  return env;
}

}  // namespace

TEST_CASE("anf of the unrolled dot product") {
  auto e = parse("x1 * y1 + x2 * y2");
  auto a = to_anf(e);
  CHECK(alpha_equal(a, P("let t1 = x1 * y1 in let t2 = x2 * y2 in let t3 = t1 + t2 in t3")));
  CHECK(is_anf(a));
  CHECK_FALSE(is_anf(e));
  CHECK(structurally_equal(to_anf(a), a));
  CHECK(structurally_equal(to_anf(parse("x")), parse("x")));
}

TEST_CASE("anf keeps let names and blocks") {
  auto e = parse("let s = sum(<i, a> in V) a * W(i) in s * s + 1.0");
  auto a = to_anf(e);
  CHECK(is_anf(a));
  CHECK(alpha_equal(a, P("let s = sum(<i, a> in V) let t1 = W(i) in let t2 = a * t1 in t2 in "
                         "let t3 = s * s in let t4 = t3 + 1.0 in t4")));
  CHECK(structurally_equal(to_anf(a), a));
}

TEST_CASE("anf preserves semantics under shadowing") {
  auto e = parse("(let x = 2.0 in x * y) + x * (let y = 3.0 in y)");
  Env env{{"x", Value::real(5.0)}, {"y", Value::real(7.0)}};
  CHECK(eval(env, to_anf(e)).as_real() == eval(env, e).as_real());
}

TEST_CASE("scalar fad reproduces the paired-let listing") {
  auto src = P("let t1 = x1*y1 in let t2 = x2*y2 in let t3 = t1+t2 in t3");
  auto env = reals({"x1", "x2", "y1", "y2"});
  auto f = fad_scalar(src, env, DualContext::from_env(env));
  auto want = P(
      "let <t1, t1'> = <x1*y1, x1*y1' + x1'*y1> in "
      "let <t2, t2'> = <x2*y2, x2*y2' + x2'*y2> in "
      "let <t3, t3'> = <t1+t2, t1'+t2'> in t3'");
  CHECK(alpha_equal(f, want));
}

TEST_CASE("scalar fad of the vector dot product") {
  TypeEnv env{{"V1", Type::tensor(1)}, {"V2", Type::tensor(1)}};
  auto src = parse("sum(<i, a> in V2) V1(i) * a");
  auto f = fad_scalar(src, env, DualContext::from_env(env), false);
  auto want = P("sum(<i,a> in V2) let <i',a'> = <0.0, V2'(i)> in V1(i) * a' + V1'(i) * a");
  CHECK(alpha_equal(f, want));
  CHECK_THROWS_AS(fad_scalar(src, env, DualContext::from_env(env), true), TransformError);
  CHECK(pretty(fad_scalar(parse("2.5"), {}, {}, false)) == "0.0");
}

TEST_CASE("tensorized fad of the vector dot product") {
  TypeEnv env{{"V1", Type::tensor(1)}, {"V2", Type::tensor(1)}};
  auto src = parse("sum(<i, a> in V2) V1(i) * a");
  FadConfig cfg;
  cfg.tau = Type::tensor(1);
  cfg.require_anf = false;
  auto f = fad_tensor(cfg, src, env, DualContext::from_env(env));
  auto want = P("sum(<i,a> in V2) let <i',a'> = <0.0, V2'(i)> in V1(i) * a' + V1'(i) * a");
  CHECK(alpha_equal(f, want));
  TypeEnv fenv = env;
  fenv.push("V1$d", Type::tensor(2));
  fenv.push("V2$d", Type::tensor(2));
  CHECK(typecheck(fenv, f) == Type::tensor(1));
}

TEST_CASE("tensorized fad of the trace") {
  TypeEnv env{{"M", Type::tensor(2)}};
  FadConfig cfg;
  cfg.tau = Type::tensor(2);
  cfg.require_anf = false;
  auto f = fad_tensor(cfg, parse("sum(<i,r> in M) r(i)"), env, DualContext::from_env(env));
  CHECK(alpha_equal(f, P("sum(<i,r> in M) let <i',r'> = <0.0, M'(i)> in r'(i)")));
}

TEST_CASE("constants differentiate to the tangent zero") {
  FadConfig cfg;
  cfg.tau = Type::tensor(2);
  auto f = fad_tensor(cfg, parse("5.0"), {}, {});
  CHECK(f->is<ast::EmptyDict>());
  cfg.tau = Type::real();
  CHECK(pretty(fad_tensor(cfg, parse("5.0"), {}, {})) == "0.0");
  CHECK(pretty(fad_tensor(cfg, parse("3"), {}, {})) == "0.0");
}

TEST_CASE("tensor-tensor product uses the nested-sum expansion") {
  TypeEnv env{{"U", Type::tensor(1)}, {"W", Type::tensor(1)}};
  FadConfig cfg;
  cfg.tau = Type::tensor(1);
  cfg.require_anf = false;
  auto f = fad_tensor(cfg, parse("U * W"), env, DualContext::from_env(env));
  CHECK(alpha_equal(f, P("U * W' + (sum(<i, v> in U') { i -> 1.0 } * W * v)")));
  TypeEnv fenv = env;
  fenv.push("U$d", Type::tensor(2));
  fenv.push("W$d", Type::tensor(2));
  CHECK(typecheck(fenv, f) == Type::tensor(3));
}

TEST_CASE("gradient expansion of the dot product") {
  TypeEnv env{{"V1", Type::tensor(1)}, {"V2", Type::tensor(1)}};
  auto g = expand_gradient(parse("sum(<i, a> in V1) a * V2(i)"), "V2", env);
  auto want = P(
      "let V1' = { } in let V2' = sum(<i,_> in V2) {i -> {i -> 1.0}} in "
      "sum(<i, a> in V1) let <i', a'> = <0.0, V1'(i)> in a * V2'(i) + a' * V2(i)");
  CHECK(alpha_equal(g, want));
  CHECK(typecheck(env, g) == Type::tensor(1));
  Env vals{{"V1", parse_value("{0 -> 1.0, 2 -> 3.0}")}, {"V2", parse_value("{0 -> 5.0, 1 -> 7.0}")}};
  CHECK(approx_equal(eval(vals, g), parse_value("{0 -> 1.0}")));
  CHECK_THROWS_AS(expand_gradient(parse("V1"), "V2", env), TransformError);
}

TEST_CASE("onehot instances") {
  NameGen names;
  Env env{{"x", parse_value("{0 -> 4.0, 1 -> 5.0}")}};
  CHECK(exact_equal(eval(env, onehot(Type::tensor(1), "x", names)), parse_value("{0 -> {0 -> 1.0}, 1 -> {1 -> 1.0}}")));
  Env m{{"x", parse_value("{0 -> {1 -> 2.0}, 2 -> {0 -> 1.0, 2 -> 1.0}}")}};
  CHECK(exact_equal(eval(m, onehot(Type::tensor(2), "x", names)),
                    parse_value("{0 -> {1 -> {0 -> {1 -> 1.0}}}, 2 -> {0 -> {2 -> {0 -> 1.0}}, 2 -> {2 -> {2 -> 1.0}}}}")));
  CHECK(pretty(onehot(Type::real(), "s", names)) == "1.0");
}

TEST_CASE("gradient of the scaled vector") {
  TypeEnv env{{"V", Type::tensor(1)}, {"s", Type::real()}};
  auto g = expand_gradient(parse("sum(<i, v> in V) { i -> v * s * s }"), "s", env);
  Env vals{{"V", parse_value("{0 -> 3.0, 4 -> -1.0}")}, {"s", Value::real(2.0)}};
  CHECK(approx_equal(eval(vals, g), parse_value("{0 -> 12.0, 4 -> -4.0}")));
}

TEST_CASE("unary operations use their derivatives") {
  auto env = reals({"x"});
  auto g = expand_gradient(parse("sin(x) * exp(x) + log(x) + recip(x)"), "x", env);
  double x = 0.7;
  double want = std::cos(x) * std::exp(x) + std::sin(x) * std::exp(x) + 1 / x - 1 / (x * x);
  CHECK(std::abs(eval({{"x", Value::real(x)}}, g).as_real() - want) < 1e-12);
}

TEST_CASE("gradients match finite differences on small kernels") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.1, 1.0);
  auto vec = [&](int n) {
    Value::Map m;
    for (int i = 0; i < n; ++i) m.emplace(i, Value::real(u(rng)));
    return Value::dict(std::move(m));
  };
  auto mat = [&](int n) {
    Value::Map m;
    for (int i = 0; i < n; ++i) m.emplace(i, vec(n));
    return Value::dict(std::move(m));
  };
  TypeEnv env{{"A", Type::tensor(2)}, {"X", Type::tensor(1)}, {"beta", Type::real()}};
  Env vals{{"A", mat(3)}, {"X", vec(3)}, {"beta", Value::real(1.5)}};
  const char* kernels[] = {
      "sum(<i, r> in A) sum(<j, v1> in r) sum(<k, v2> in r) { j -> ((beta * v1) * v2) * X(k) }",
      "sum(<i, row> in A) sum(<j, a> in row) a * X(j)",
      "sum(<i, row> in A) { i -> sum(<j, a> in row) a * X(j) * X(j) }",
      "X * X",
      "sum(<i, x> in X) { i -> sin(x) }",
  };
  for (const char* k : kernels) {
    auto e = parse(k);
    auto g = expand_gradient(to_anf(e), "X", env);
    CHECK_MESSAGE(approx_equal(eval(vals, g), finite_diff(e, "X", vals)), k);
    if (!occurs_free(e, "A")) continue;
    auto gb = expand_gradient(to_anf(e), "A", env);
    CHECK_MESSAGE(approx_equal(eval(vals, gb), finite_diff(e, "A", vals)), k);
  }
}
