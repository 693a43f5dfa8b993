#include "doctest.h"

#include <random>

#include "sdgrad/error.hpp"
#include "sdgrad/eval.hpp"
#include "sdgrad/parser.hpp"

using namespace sdg;

namespace {

Value V(const char* s) { return parse_value(s); }

Value random_vec(std::mt19937_64& rng, int n, double density) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_real_distribution<double> val(-2.0, 2.0);
  Value::Map m;
  for (int i = 0; i < n; ++i) {
    if (u(rng) < density) m.emplace(i, Value::real(val(rng)));
  }
  return Value::dict(std::move(m));
}

Value random_mat(std::mt19937_64& rng, int n, double density) {
  Value::Map m;
  for (int i = 0; i < n; ++i) {
    Value r = random_vec(rng, n, density);
    if (!r.is_zero()) m.emplace(i, r);
  }
  return Value::dict(std::move(m));
}

}  // namespace

TEST_CASE("value literal round trip") {
  const char* srcs[] = {"{}", "{0 -> {1 -> 2.0}}", "3", "-1.5", "true", "{0 -> 1.0, 5 -> -2.0}"};
  for (const char* s : srcs) CHECK(to_string(V(s)) == s);
  CHECK(to_string(V("{0 -> 0.0, 1 -> {}}")) == "{}");
  CHECK_THROWS_AS(V("{0 -> }"), Error);
  CHECK_THROWS_AS(V("{0 -> 1.0, 0 -> 2.0}"), Error);
}

TEST_CASE("dot product evaluates to 11") {
  Env env{{"V1", V("{0 -> 1.0, 1 -> 2.0}")}, {"V2", V("{0 -> 3.0, 1 -> 4.0}")}};
  Value r = eval(env, parse("sum(<i, a> in V1) a * V2(i)"));
  CHECK(r.as_real() == 11.0);
}

TEST_CASE("lookup of a missing key is zero") {
  Value r = eval({{"d", V("{0 -> 5.0}")}}, parse("d(7)"));
  CHECK(r.is_zero());
  CHECK(approx_equal(r, Value::real(0.0)));
}

TEST_CASE("sum over empty is empty") {
  Value r = eval({}, parse("sum(<i, v> in { }) { i -> v }"));
  CHECK(r.is_dict());
  CHECK(r.is_zero());
}

TEST_CASE("semiring add") {
  CHECK(exact_equal(semiring_add(V("{0 -> 1.0}"), V("{0 -> 2.0, 1 -> 3.0}")), V("{0 -> 3.0, 1 -> 3.0}")));
  CHECK(exact_equal(semiring_add(V("{0 -> 1.0}"), Value()), V("{0 -> 1.0}")));
  Value z = semiring_add(V("{0 -> 1.0}"), V("{0 -> -1.0}"));
  CHECK(z.is_zero());
  CHECK(to_string(z) == "{}");
  CHECK_THROWS_AS(semiring_add(Value::real(1.0), V("{0 -> 1.0}")), EvalError);
}

TEST_CASE("semiring mul") {
  CHECK(exact_equal(semiring_mul(Value::real(2.0), V("{0 -> 3.0}")), V("{0 -> 6.0}")));
  CHECK(exact_equal(semiring_mul(V("{0 -> 1.0, 1 -> 2.0}"), V("{0 -> 3.0}")),
                    V("{0 -> {0 -> 3.0}, 1 -> {0 -> 6.0}}")));
  CHECK(semiring_mul(Value(), V("{0 -> 3.0}")).is_zero());
  CHECK(semiring_mul(Value::real(0.0), V("{0 -> 3.0}")).is_zero());
  CHECK_THROWS_AS(semiring_mul(Value::boolean(true), Value::real(1.0)), EvalError);
}

TEST_CASE("semiring laws on random values") {
  std::mt19937_64 rng(11);
  for (int t = 0; t < 50; ++t) {
    Value a = random_vec(rng, 6, 0.5), b = random_vec(rng, 6, 0.5), c = random_vec(rng, 6, 0.5);
    CHECK(approx_equal(semiring_add(a, b), semiring_add(b, a), 1e-12, 0));
    CHECK(approx_equal(semiring_add(semiring_add(a, b), c), semiring_add(a, semiring_add(b, c)), 1e-12, 0));
    CHECK(approx_equal(semiring_mul(a, semiring_add(b, c)),
                       semiring_add(semiring_mul(a, b), semiring_mul(a, c)), 1e-12, 0));
    CHECK(approx_equal(semiring_mul(semiring_add(a, b), c),
                       semiring_add(semiring_mul(a, c), semiring_mul(b, c)), 1e-12, 0));
    CHECK(semiring_mul(Value(), a).is_zero());
  }
}

TEST_CASE("lookup singleton law") {
  Env env{{"v", V("{3 -> 2.0}")}};
  CHECK(exact_equal(eval(env, parse("{ 4 -> v }(4)")), V("{3 -> 2.0}")));
  CHECK(eval(env, parse("{ 4 -> v }(5)")).is_zero());
}

TEST_CASE("if without else yields zero") {
  CHECK(eval({}, parse("if 1 = 2 then { 1 -> 2.0 }")).is_zero());
  CHECK(eval({}, parse("if not (1 = 2) then 3.0")).as_real() == 3.0);
}

TEST_CASE("physical arrays iterate densely") {
  Env env{{"row", Value::int_array({0, 2, 0})}, {"val", Value::array({1.0, 0.0, 3.0})},
          {"len", Value::integer(3)}};
  auto e = parse_physical("sum(<_, i> in (0:len)) { unique(row(i)) -> val(i) }");
  CHECK(exact_equal(eval(env, e), V("{0 -> 4.0}")));
  Env env2{{"idx", Value::int_array({5, 0, 7, 9})}};
  auto s = parse_physical("sum(<p, j> in idx(1:3)) { j -> p }");
  CHECK(exact_equal(eval(env2, s), V("{0 -> 1, 7 -> 2}")));
  CHECK_THROWS_AS(eval(env2, parse_physical("idx(2:9)")), EvalError);
  CHECK(eval({}, parse_physical("(0:4)(2)")).as_int() == 2);
}

TEST_CASE("eval counts operations") {
  Env env{{"V1", V("{0 -> 1.0, 1 -> 2.0}")}, {"V2", V("{0 -> 3.0, 1 -> 4.0, 2 -> 1.0}")}};
  EvalStats st;
  eval(env, parse("sum(<i, a> in V2) V1(i) * a"), &st);
  CHECK(st.binding_visits == 3);
  CHECK(st.lookups == 3);
  CHECK(st.accumulations == 2);
}

TEST_CASE("finite differences") {
  auto fd = finite_diff(parse("x * x"), "x", {{"x", Value::real(3.0)}});
  CHECK(std::abs(fd.as_real() - 6.0) < 1e-6);

  Env env{{"V1", V("{0 -> 1.0, 1 -> 2.0}")}, {"V2", V("{0 -> 3.0, 1 -> 4.0}")}};
  auto g = finite_diff(parse("sum(<i, a> in V1) a * V2(i)"), "V1", env);
  CHECK(approx_equal(g, V("{0 -> 3.0, 1 -> 4.0}")));

  Env m{{"M", V("{0 -> {0 -> 1.0, 1 -> 2.0}, 1 -> {0 -> 0.5, 1 -> 4.0}}")}};
  auto t = finite_diff(parse("sum(<i, r> in M) r(i)"), "M", m);
  CHECK(approx_equal(t, V("{0 -> {0 -> 1.0}, 1 -> {1 -> 1.0}}")));

  // Vector-valued output: layout is (type of e) ⊗ (type of wrt).
  Env s{{"s", Value::real(2.0)}, {"V", V("{0 -> 3.0}")}};
  auto j = finite_diff(parse("sum(<i, v> in V) { i -> v * s * s }"), "s", s);
  CHECK(approx_equal(j, V("{0 -> 12.0}")));
  auto jv = finite_diff(parse("s * V"), "V", s);
  CHECK(approx_equal(jv, V("{0 -> {0 -> 2.0}}")));

  FiniteDiffOptions dense;
  dense.dense_shape = std::vector<std::int64_t>{3};
  auto gd = finite_diff(parse("sum(<i, a> in V2) V1(i) * a"), "V1", env, dense);
  CHECK(approx_equal(gd, V("{0 -> 3.0, 1 -> 4.0}")));

  FiniteDiffOptions bad;
  bad.eps = 0;
  CHECK_THROWS_AS(finite_diff(parse("x"), "x", {{"x", Value::real(1.0)}}, bad), Error);
}

TEST_CASE("random matrix product values") {
  std::mt19937_64 rng(3);
  Value A = random_mat(rng, 5, 0.4);
  Value B = random_mat(rng, 5, 0.4);
  Env env{{"A", A}, {"B", B}};
  Value r = eval(env, parse("sum(<i, row> in A) { i -> sum(<k, a> in row) sum(<j, b> in B(k)) { j -> a * b } }"));
  for (int i = 0; i < 5; ++i) {
    for (int j = 0; j < 5; ++j) {
      double want = 0;
      for (int k = 0; k < 5; ++k) want += A.at(i).at(k).as_number() * B.at(k).at(j).as_number();
      CHECK(std::abs(r.at(i).at(j).as_number() - want) < 1e-12);
    }
  }
}
