#include "doctest.h"

#include <random>

#include "sdgrad/egraph.hpp"
#include "sdgrad/error.hpp"
#include "sdgrad/eval.hpp"
#include "sdgrad/optimizer.hpp"
#include "sdgrad/parser.hpp"
#include "sdgrad/pipeline.hpp"
#include "sdgrad/printer.hpp"
#include "sdgrad/storage.hpp"

using namespace sdg;

namespace {

ExprPtr P(const char* s) { return parse_internal(s); }

TypeEnv vectors() {
  return TypeEnv{{"V1", Type::tensor(1)}, {"V2", Type::tensor(1)}, {"s", Type::real()}};
}

Value vec(std::initializer_list<std::pair<std::int64_t, double>> entries) {
  Value v = Value::dict();
  for (auto [k, x] : entries) v.accumulate(k, Value::real(x));
  return v;
}

}  // namespace

TEST_CASE("sparsity propagation removes symbolic zeros") {
  TypeEnv env = vectors();
  CHECK(alpha_equal(propagate_sparsity(P("{ } * V1"), env), P("{ }")));
  CHECK(alpha_equal(propagate_sparsity(P("V1 + { }"), env), P("V1")));
  CHECK(alpha_equal(propagate_sparsity(P("let z = { } in z + V2"), env), P("V2")));
  CHECK(alpha_equal(propagate_sparsity(P("sum(<i, a> in { }) { i -> a }"), env), P("{ }")));
  CHECK(alpha_equal(propagate_sparsity(P("{ 1 -> { } }"), env), P("{ }")));
  CHECK(alpha_equal(propagate_sparsity(P("V1 * s"), env), P("V1 * s")));
}

TEST_CASE("let inlining keeps lets used inside loops") {
  CHECK(alpha_equal(inline_lets(P("let a = s in a * a")), P("s * s")));
  CHECK(alpha_equal(inline_lets(P("let a = V1(1) in a + 1.0")), P("V1(1) + 1.0")));
  CHECK(alpha_equal(inline_lets(P("let u = V1(1) in 2.0")), P("2.0")));
  auto loop = P("let t = V1(1) * s in sum(<i, a> in V2) a * t");
  CHECK(alpha_equal(inline_lets(loop), loop));
}

TEST_CASE("linearity test") {
  CHECK(is_linear_in(P("a * 2.0"), "a"));
  CHECK(is_linear_in(P("{ i -> a * s }"), "a"));
  CHECK(is_linear_in(P("sum(<j, b> in a) b * s"), "a"));
  CHECK_FALSE(is_linear_in(P("a * a"), "a"));
  CHECK_FALSE(is_linear_in(P("a + 1.0"), "a"));
  CHECK_FALSE(is_linear_in(P("sin(a)"), "a"));
}

TEST_CASE("multiplication normalization keeps the value") {
  TypeEnv env = vectors();
  Env vals{{"V1", vec({{0, 2.0}, {3, -1.0}})}, {"V2", vec({{1, 4.0}})}, {"s", Value::real(0.5)}};
  for (const char* src : {"V1 * V2", "s * V1", "V1 * s", "(V1 + V2) * (V2 * s)"}) {
    CAPTURE(src);
    ExprPtr e = parse(src);
    ExprPtr n = fuse_loops(normalize_mult(e, env));
    CHECK(only_scalar_mults(n, env));
    CHECK(approx_equal(eval(vals, n), eval(vals, e), 1e-12, 1e-12));
  }
  CHECK_FALSE(only_scalar_mults(parse("V1 * V2"), env));
}

TEST_CASE("cost prefers iterating the sparse side") {
  TypeEnv env = vectors();
  double loop = term_cost(P("sum(<i, a> in V2) a * V1(i)"), env);
  double product = term_cost(P("sum(<i, a> in V2 * V1) a"), env);
  CHECK(loop < product);
  CHECK(term_cost(P("s * V1"), env) < term_cost(P("V1 * s"), env));
}

TEST_CASE("saturation of the dot-product gradient") {
  TypeEnv env = vectors();
  auto e = P("let V1' = sum(<j, _> in V1) { j -> { j -> 1.0 } } in sum(<i, a> in V2) V1'(i) * a");
  SaturationOptions o;
  o.dense = {"V1"};
  auto r = saturate(e, env, o);
  CHECK(r.saturated);
  CHECK(r.cost <= r.input_cost);
  CHECK(alpha_equal(r.term, P("V2")));
}

TEST_CASE("e-graph represents both sides of a rewrite") {
  TypeEnv env = vectors();
  EGraph g(env, {"V1"});
  EClassId root = g.add_term(P("sum(<i, a> in V2) { i -> a }"));
  g.rebuild();
  CHECK(g.represents(root, P("sum(<i, a> in V2) { i -> a }")));
  for (const auto& rule : default_rules()) {
    if (rule.name != "identity-map") continue;
    for (EClassId c : g.classes()) {
      for (const auto& m : match_pattern(g, rule.lhs, c)) g.merge(m.root, instantiate(g, rule.rhs, m));
    }
  }
  g.rebuild();
  CHECK(g.represents(root, P("V2")));
  auto best = g.extractor().extract(root);
  REQUIRE(best);
  CHECK(alpha_equal(best->term, P("V2")));
  auto all = g.enumerate(root, 3, 10);
  CHECK(all.size() == 2);
}

TEST_CASE("match budget") {
  TypeEnv env{{"x", Type::real()}, {"y", Type::real()}};
  EGraph g(env);
  EClassId root = g.add_term(P("(x * y) * (x * y)"));
  g.rebuild();
  CHECK(match_pattern(g, P("?a * ?b"), root).size() == 1);
  CHECK(match_pattern(g, P("?a * ?b"), root, 0).empty());
}

TEST_CASE("zero-laden products saturate quickly") {
  TypeEnv env{{"x", Type::real()}, {"W", Type::tensor(1)}};
  auto r = saturate(P("({ } * (W * x)) * ((W * x) * { })"), env);
  CHECK(alpha_equal(r.term, P("{ }")));
  CHECK(r.nodes < 100);
}

TEST_CASE("unique fusion needs a body that vanishes at zero") {
  TypeEnv env{{"n", Type::integer()}, {"y", Type::real()}, {"V", Type::tensor(1)}};
  auto rows = "sum(<_, i> in (0:n)) { unique(i) -> V(i) }";
  auto fused = saturate(P((std::string("sum(<k, r> in ") + rows + ") r * r").c_str()), env);
  CHECK(fused.term->as<ast::Sum>()->range->is<ast::Range>());
  auto kept = saturate(P((std::string("sum(<k, r> in ") + rows + ") y").c_str()), env);
  Env vals{{"n", Value::integer(3)}, {"y", Value::real(2.0)}, {"V", vec({{1, 5.0}})}};
  CHECK(approx_equal(eval(vals, kept.term), Value::real(2.0), 1e-12, 1e-12));
}

TEST_CASE("storage specs") {
  auto specs = parse_storage_specs("A = csr, V = coo(len=n, row=r, val=v), s = scalar");
  REQUIRE(specs.size() == 3);
  CHECK(specs[0].format == Format::MatrixCSR);
  CHECK(specs[1].array("row") == "r");
  CHECK(specs[1].array("len") == "n");
  CHECK_THROWS_AS(parse_storage_specs("A = blocked"), ParseError);
  CHECK_THROWS_AS(parse_storage_specs("A csr"), ParseError);

  TypeEnv env{{"A", Type::tensor(2)}, {"V", Type::tensor(1)}, {"s", Type::real()}};
  auto resolved = resolve_storage(parse_storage_specs("A = coo, V = dense"), env);
  CHECK(resolved[0].format == Format::MatrixCOO);
  CHECK(resolved[0].array("val") == "A_VVal");
  CHECK(resolved[1].format == Format::VectorDense);
  CHECK(resolved.size() == 3);
  CHECK_THROWS_AS(resolve_storage(parse_storage_specs("V = csr"), env), TransformError);
  CHECK_THROWS_AS(resolve_storage(parse_storage_specs("Q = dense"), env), TransformError);
}

TEST_CASE("storage definitions decode their arrays") {
  TypeEnv env{{"A", Type::tensor(2)}};
  Env arrays{{"A_len", Value::integer(2)},
             {"A_VRow", Value::int_array({0, 1, 3})},
             {"A_VCol", Value::int_array({2, 0, 1})},
             {"A_VVal", Value::array({1.0, 2.0, 3.0})}};
  auto spec = resolve_storage(parse_storage_specs("A = csr"), env)[0];
  Value a = eval(arrays, storage_definition(spec));
  CHECK(to_string(a) == "{0 -> {2 -> 1.0}, 1 -> {0 -> 2.0, 1 -> 3.0}}");
  auto composed = compose_storage(P("sum(<i, r> in A) sum(<j, v> in r) v"), env, {spec});
  CHECK(approx_equal(eval(arrays, composed), Value::real(6.0), 1e-12, 1e-12));
}

TEST_CASE("pipeline stages on the dot product") {
  TypeEnv env = vectors();
  PipelineOptions o;
  o.wrt = "V1";
  o.storage = parse_storage_specs("V1 = dense, V2 = coo");
  auto r = run_pipeline(parse("sum(<i, a> in V2) V1(i) * a"), env, o);
  std::vector<std::string> names;
  for (const auto& s : r.stages) names.push_back(s.name);
  CHECK(names == stage_names());
  CHECK(alpha_equal(r.logical(), P("V2")));
  CHECK(alpha_equal(r.physical(), P("sum(<_, i> in (0:V2_len)) { V2_VRow(i) -> V2_VVal(i) }")));
  CHECK(r.result_type == Type::tensor(1));
  CHECK_THROWS(r.stage("bogus"));
  CHECK_THROWS(run_pipeline(parse("V1 + s"), env, {}));
}
