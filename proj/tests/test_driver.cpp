#include "doctest.h"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "sdgrad/driver.hpp"
#include "sdgrad/dump.hpp"
#include "sdgrad/error.hpp"
#include "sdgrad/parser.hpp"

using namespace sdg;

namespace {

std::string fixture(const char* name) { return std::string(SDGRAD_FIXTURE_DIR) + "/" + name; }

std::filesystem::path scratch(const char* name) {
  auto dir = std::filesystem::temp_directory_path() / ("sdgrad_test_" + std::string(name));
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("matrix market general file") {
  SparseInstance m = load_matrix_market_file(fixture("small_general.mtx"));
  CHECK(m.dims == std::vector<std::int64_t>{2, 3});
  REQUIRE(m.nnz() == 3);
  CHECK(m.coords[0] == std::vector<std::int64_t>{0, 0});
  CHECK(m.coords[1] == std::vector<std::int64_t>{0, 1});
  CHECK(m.coords[2] == std::vector<std::int64_t>{1, 2});
  CHECK(m.vals == std::vector<double>{1.5, 0.25, -2.0});
}

TEST_CASE("matrix market symmetric file is mirrored") {
  SparseInstance m = load_matrix_market_file(fixture("small_symmetric.mtx"));
  CHECK(m.nnz() == 4);
  CHECK(m.value().at(0).at(2).as_real() == 2.0);
  CHECK(m.value().at(2).at(0).as_real() == 2.0);
  CHECK(m.value().at(1).at(1).as_real() == 1.0);
}

TEST_CASE("malformed matrix market files") {
  CHECK_THROWS_AS(load_matrix_market_file(fixture("bad_header.mtx")), ParseError);
  CHECK_THROWS_AS(load_matrix_market_file(fixture("out_of_range.mtx")), ParseError);
  CHECK_THROWS_AS(load_matrix_market_file(fixture("missing.mtx")), Error);
  std::istringstream truncated("%%MatrixMarket matrix coordinate real general\n2 2 2\n1 1 1.0\n");
  CHECK_THROWS_AS(load_matrix_market(truncated), ParseError);
}

TEST_CASE("matrix market round trip") {
  SparseInstance a = gen_sparse({6, 4}, 0.4, 9);
  std::stringstream buf;
  write_matrix_market(buf, a);
  SparseInstance b = load_matrix_market(buf);
  CHECK(b.dims == a.dims);
  CHECK(b.coords == a.coords);
  CHECK(b.vals == a.vals);
}

TEST_CASE("synthetic sparse tensors") {
  SparseInstance full = gen_sparse({3, 4}, 1.0, 5);
  CHECK(full.nnz() == 12);
  for (double v : full.vals) CHECK((v >= 0.1 && v <= 1.0));

  SparseInstance a = gen_sparse({50, 50}, 0.1, 42);
  SparseInstance b = gen_sparse({50, 50}, 0.1, 42);
  CHECK(a.coords == b.coords);
  CHECK(a.vals == b.vals);
  CHECK(gen_sparse({50, 50}, 0.1, 43).coords != a.coords);
  CHECK(std::is_sorted(a.coords.begin(), a.coords.end()));

  const double n = 1000.0 * 1000.0, p = 1.0 / 16;
  SparseInstance big = gen_sparse({1000, 1000}, p, 7);
  CHECK(std::abs(static_cast<double>(big.nnz()) - n * p) < 3 * std::sqrt(n * p * (1 - p)));

  CHECK_THROWS_AS(gen_sparse({3}, 1.5, 1), std::invalid_argument);
  CHECK_THROWS_AS(gen_sparse({-1}, 0.5, 1), std::invalid_argument);
}

TEST_CASE("backing arrays of every matrix format hold the same matrix") {
  TypeEnv env{{"A", Type::tensor(2)}};
  SparseInstance a = gen_sparse({5, 4}, 0.5, 3);
  for (const char* f : {"csr", "csc", "coo", "dense", "dense_col"}) {
    CAPTURE(f);
    auto spec = resolve_storage(parse_storage_specs(std::string("A = ") + f), env)[0];
    Value decoded = eval(backing_arrays(a, spec), storage_definition(spec));
    CHECK(approx_equal(decoded, a.value(), 0, 0));
  }
}

TEST_CASE("dump round trip") {
  Env env{{"n", Value::integer(3)},
          {"s", Value::real(-0.5)},
          {"idx", Value::int_array({0, 2, 7})},
          {"val", Value::array({1.0, 2.5})},
          {"d", parse_value("{1 -> {2 -> 3.0}}")}};
  std::stringstream buf;
  write_dump(buf, env);
  CHECK(buf.str().substr(0, 4) == "SDG1");
  Env back = read_dump(buf);
  REQUIRE(back.entries().size() == env.entries().size());
  for (std::size_t i = 0; i < env.entries().size(); ++i) {
    CHECK(back.entries()[i].first == env.entries()[i].first);
    CHECK(approx_equal(back.entries()[i].second, env.entries()[i].second, 0, 0));
  }
  std::istringstream bad("SDG2");
  CHECK_THROWS_AS(read_dump(bad), ParseError);
  std::string cut = buf.str().substr(0, buf.str().size() - 3);
  std::istringstream truncated(cut);
  CHECK_THROWS_AS(read_dump(truncated), ParseError);
}

TEST_CASE("catalog") {
  const auto& all = kernel_catalog();
  CHECK(all.size() == 6);
  for (const auto& k : all) {
    CAPTURE(k.name);
    CHECK(typecheck(k.env(), k.term()).order() == k.result_order);
  }
  CHECK(find_kernel("batax") == find_kernel("BATAX"));
  CHECK(find_kernel("nope") == nullptr);
}

TEST_CASE("verification of a scaled vector") {
  const KernelEntry& vsm = *find_kernel("VSM");
  GradientSetup g = prepare_gradient(vsm, "", "V = dense");
  KernelInstance inst = make_instance(vsm, g.specs, {{"n", 1}}, 1.0, 1, {{"V", from_value(parse_value("{0 -> 3.0}"), {1})}});
  inst.logical.set("s", Value::real(2.0));
  inst.physical.set("s_S", Value::real(2.0));
  VerifyReport r = verify_gradient(g, inst, wrt_shape(vsm, g.wrt, {{"n", 1}}));
  CHECK(r.pass);
  CHECK(g.wrt == "s");
  CHECK(approx_equal(r.logical, parse_value("{0 -> 12.0}"), 1e-9, 1e-9));
}

TEST_CASE("verification of a matrix-vector product") {
  const KernelEntry& smvm = *find_kernel("SMVM");
  GradientSetup g = prepare_gradient(smvm);
  std::map<std::string, std::int64_t> dims{{"n", 4}, {"m", 3}};
  KernelInstance inst = make_instance(smvm, g.specs, dims, 0.5, 11);
  VerifyReport r = verify_gradient(g, inst, wrt_shape(smvm, g.wrt, dims));
  CHECK(r.pass);
  Value cols = Value::dict();
  for (const auto& [i, row] : inst.logical.find("A")->entries()) {
    for (const auto& [j, v] : row.entries()) cols.accumulate(j, v);
  }
  CHECK(approx_equal(r.gradient, cols, 1e-12, 1e-12));
}

TEST_CASE("benchmark sweep") {
  const KernelEntry& vvd = *find_kernel("VVD");
  CHECK(bench_json(bench_command(vvd, {})) == "[]");
  BenchOptions o;
  o.repeats = 2;
  o.verify = true;
  auto results = bench_command(vvd, {{{{"n", 32}}, 0.25}, {{{"n", 64}}, 0.25}}, o);
  REQUIRE(results.size() == 2);
  for (const auto& r : results) {
    CHECK(r.run_ms.size() == 2);
    CHECK(r.oracle_max_rel.has_value());
    CHECK(r.ops.total() > 0);
  }
  CHECK(bench_json(results).front() == '[');
  CHECK(bench_json(results).find("\"median_ms\"") != std::string::npos);
}

TEST_CASE("runtime fixtures") {
  FixtureOptions o;
  o.dir = scratch("fixtures").string();
  o.count = 2;
  auto paths = emit_runtime_fixtures(o);
  CHECK(paths.size() == 3 * (1 + 2 * 2) + 1);
  for (const auto& p : paths) CHECK(std::filesystem::exists(p));
  Env in = read_dump_file(o.dir + "/VVD_wrt_V1_0.sdg1");
  CHECK(in.find("V2_VRow") != nullptr);
  std::ifstream expected(o.dir + "/VVD_wrt_V1_0.expected");
  std::string text((std::istreambuf_iterator<char>(expected)), {});
  CHECK_NOTHROW(parse_value(text));
  std::ifstream vectors(o.dir + "/semiring_vectors.txt");
  std::string line;
  REQUIRE(std::getline(vectors, line));
  CHECK(std::count(line.begin(), line.end(), '\t') == 3);
}

TEST_CASE("two-by-two matrix market files") {
  SparseInstance m = load_matrix_market_file(fixture("two_by_two.mtx"));
  GradientSetup g = prepare_gradient(*find_kernel("SMVM"), "", "A = coo, X = dense");
  Env coo = backing_arrays(m, g.specs[0]);
  CHECK(to_string(*coo.find("A_VRow")) == to_string(Value::int_array({0, 1})));
  CHECK(to_string(*coo.find("A_VCol")) == to_string(Value::int_array({0, 0})));
  CHECK(to_string(*coo.find("A_VVal")) == to_string(Value::array({5.0, 3.0})));
  CHECK(m.nnz() == 2);
  CHECK(load_matrix_market_file(fixture("two_by_two_symmetric.mtx")).nnz() == 2);
}

TEST_CASE("sparse vector density bound") {
  SparseInstance v = gen_sparse({1000}, 1.0 / 16, 2024);
  const double mean = 62.5, sd = std::sqrt(1000 * (1.0 / 16) * (15.0 / 16));
  CHECK(std::abs(static_cast<double>(v.nnz()) - mean) < 3 * sd);
  CHECK(gen_sparse({4}, 1.0, 1).nnz() == 4);
}

TEST_CASE("dot-product gradient equals the other vector") {
  const KernelEntry& vvd = *find_kernel("VVD");
  GradientSetup g = prepare_gradient(vvd, "V1", "V1=dense, V2=coo");
  for (std::uint64_t seed : {7u, 8u, 9u}) {
    KernelInstance inst = make_instance(vvd, g.specs, {{"n", 64}}, 0.25, seed);
    CHECK(approx_equal(eval(inst.physical, g.pipeline.physical()), inst.tensors.at("V2").value(), 0, 0));
  }
}

TEST_CASE("end-to-end determinism") {
  const KernelEntry& batax = *find_kernel("BATAX");
  GradientSetup a = prepare_gradient(batax), b = prepare_gradient(batax);
  for (const auto& s : a.pipeline.stages) CHECK(structurally_equal(s.term, b.pipeline.stage(s.name).term));
  KernelInstance i1 = make_instance(batax, a.specs, {{"n", 9}, {"m", 7}}, 0.3, 5);
  KernelInstance i2 = make_instance(batax, b.specs, {{"n", 9}, {"m", 7}}, 0.3, 5);
  CHECK(to_string(eval(i1.physical, a.pipeline.physical())) == to_string(eval(i2.physical, b.pipeline.physical())));
}
