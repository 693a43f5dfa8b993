#include "doctest.h"

#include "sdgrad/backend.hpp"
#include "sdgrad/driver.hpp"
#include "sdgrad/error.hpp"
#include "sdgrad/parser.hpp"
#include "sdgrad/printer.hpp"

using namespace sdg;

namespace {

Kernel lowered(const GradientSetup& g, bool dps = true) {
  LowerOptions o;
  o.dps = dps;
  return lower_dps(g.pipeline.physical(), g.signature(), o);
}

bool contains(const std::string& text, const std::string& part) { return text.find(part) != std::string::npos; }

}  // namespace

TEST_CASE("dot-product gradient lowers to one scatter loop") {
  GradientSetup g = prepare_gradient(*find_kernel("VVD"));
  Kernel k = lowered(g);
  std::string code = emit_kernel(k);
  CHECK(contains(code, "void VVD_wrt_V1("));
  CHECK(contains(code, "arr_type<size_t>& V2_VRow, arr_type<double>& V2_VVal, size_t V2_len,"));
  CHECK(contains(code, "dict_type<size_t, double>& result) {"));
  CHECK(contains(code, "for(size_t i = 0; i < V2_len; i++) {\n    result[V2_VRow[i]] += V2_VVal[i];\n  }"));
  CHECK(in_loop_dict_decls(k.body) == 0);
}

TEST_CASE("destination passing removes per-row temporaries") {
  GradientSetup g = prepare_gradient(*find_kernel("BATAX"));
  Kernel on = lowered(g, true);
  Kernel off = lowered(g, false);
  CHECK(in_loop_dict_decls(on.body) == 0);
  CHECK(in_loop_dict_decls(off.body) > 0);
  CHECK(contains(emit_kernel(on), "result[j][j_1] += beta_S * (v * A_VVal[p_1]);"));
  CHECK(contains(emit_kernel(off), "dict_type<"));
}

TEST_CASE("IR interpreter agrees with the evaluator on every catalog kernel") {
  for (const auto& entry : kernel_catalog()) {
    CAPTURE(entry.name);
    GradientSetup g = prepare_gradient(entry);
    for (bool dps : {true, false}) {
      Kernel k = lowered(g, dps);
      for (std::uint64_t seed : {1u, 2u, 3u}) {
        KernelInstance inst = make_instance(entry, g.specs, {{"n", 7}, {"m", 5}, {"k", 4}}, 0.3, seed);
        Value want = eval(inst.physical, g.pipeline.physical());
        CHECK(approx_equal(run_kernel(k, inst.physical), want, 1e-12, 1e-12));
      }
    }
  }
}

TEST_CASE("lowering is deterministic") {
  GradientSetup a = prepare_gradient(*find_kernel("SMMM"));
  GradientSetup b = prepare_gradient(*find_kernel("SMMM"));
  CHECK(emit_kernel(lowered(a)) == emit_kernel(lowered(b)));
  CHECK(dump_ir(lowered(a)) == dump_ir(lowered(b)));
}

TEST_CASE("constant and empty gradients") {
  TypeEnv env{{"V", Type::tensor(1)}};
  auto specs = resolve_storage(parse_storage_specs("V = coo"), env);
  KernelSignature sig = make_signature("zero", specs, physical_env(specs), Type::tensor(1));
  Kernel empty = lower_dps(parse_internal("{ }"), sig);
  CHECK(empty.body.empty());
  CHECK(contains(emit_kernel(empty), "void zero("));
  Env in{{"V_len", Value::integer(0)}, {"V_VRow", Value::int_array({})}, {"V_VVal", Value::array({})}};
  CHECK(run_kernel(empty, in).is_zero());

  KernelSignature ssig = make_signature("two", specs, physical_env(specs), Type::real());
  Kernel two = lower_dps(parse_internal("2.0"), ssig);
  CHECK(approx_equal(run_kernel(two, in), Value::real(2.0), 0, 0));
  CHECK(contains(emit_kernel(two), "double& result"));
}

TEST_CASE("lowering rejects unbound variables and tensor products") {
  TypeEnv env{{"V", Type::tensor(1)}};
  auto specs = resolve_storage(parse_storage_specs("V = dense"), env);
  KernelSignature sig = make_signature("bad", specs, physical_env(specs), Type::real());
  CHECK_THROWS_AS(lower_dps(parse_internal("q * 2.0"), sig), TransformError);
  KernelSignature dsig = make_signature("bad", specs, physical_env(specs), Type::tensor(2));
  CHECK_THROWS_AS(lower_dps(parse_internal("sum(<i, a> in V_V) { i -> a } * sum(<i, a> in V_V) { i -> a }"), dsig),
                  TransformError);
}

TEST_CASE("translation unit with a driver main") {
  GradientSetup g = prepare_gradient(*find_kernel("SMVM"));
  EmitOptions o;
  o.with_main = true;
  std::string src = emit_source({lowered(g)}, o);
  CHECK(contains(src, "#include \"sdg_runtime.hpp\""));
  CHECK(contains(src, "int main(int argc, char** argv)"));
  CHECK(contains(src, "SMVM_wrt_X("));
  CHECK(contains(src, "sdg_rt::print(std::cout, result)"));
  CHECK_FALSE(contains(emit_source({lowered(g)}), "int main"));
}

TEST_CASE("C++ types") {
  CHECK(cpp_type(Type::real()) == "double");
  CHECK(cpp_type(Type::tensor(1)) == "dict_type<size_t, double>");
  CHECK(cpp_type(Type::tensor(2)) == "dict_type<size_t, dict_type<size_t, double>>");
}
