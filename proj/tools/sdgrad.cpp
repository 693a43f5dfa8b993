#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "sdgrad/driver.hpp"
#include "sdgrad/error.hpp"
#include "sdgrad/parser.hpp"
#include "sdgrad/printer.hpp"

namespace {

using namespace sdg;

constexpr int kUserError = 1;
constexpr int kVerifyFailed = 2;

struct UserError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::pair<std::string, std::string> split_assign(const std::string& s, const char* what) {
  auto eq = s.find('=');
  if (eq == std::string::npos || eq == 0) throw UserError(std::string("expected NAME=VALUE for ") + what);
  return {s.substr(0, eq), s.substr(eq + 1)};
}

std::vector<std::int64_t> int_list(const std::string& s) {
  std::vector<std::int64_t> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      long long v = std::stoll(item, &used);
      if (used != item.size() || v <= 0) throw std::invalid_argument(item);
      out.push_back(v);
    } catch (const std::exception&) {
      throw UserError("bad dimension '" + item + "'");
    }
  }
  if (out.empty()) throw UserError("empty dimension list");
  return out;
}

std::map<std::string, std::int64_t> parse_dims(const std::vector<std::string>& items) {
  std::map<std::string, std::int64_t> dims;
  for (const auto& it : items) {
    auto [name, v] = split_assign(it, "--dim");
    dims[name] = int_list(v).front();
  }
  return dims;
}

/// Catalog kernel, file or inline term.
struct Input {
  std::string text;
  std::vector<std::string> types;
  std::string wrt;

  std::string source() const {
    if (const KernelEntry* k = find_kernel(text)) return k->source;
    if (!std::filesystem::is_regular_file(text)) return text;
    std::ifstream in(text);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  }

  KernelEntry resolve() const {
    if (const KernelEntry* k = find_kernel(text)) return *k;
    TypeEnv env;
    for (const auto& t : types) {
      auto [name, ty] = split_assign(t, "--type");
      env.push(name, parse_type(ty));
    }
    return user_kernel("kernel", source(), env, wrt);
  }
};

void add_input(CLI::App* cmd, Input& in) {
  cmd->add_option("input", in.text, "Catalog kernel (BATAX, SMMM, SMVM, VVA, VVD, VSM), file or term")
      ->required();
  cmd->add_option("--type", in.types, "Input type for a user term, e.g. V=\"tensor 1\"");
}

std::map<std::string, SparseInstance> load_given(const KernelEntry& k, const std::vector<std::string>& mtx,
                                                 std::map<std::string, std::int64_t>& dims) {
  std::map<std::string, SparseInstance> given;
  for (const auto& item : mtx) {
    auto [name, path] = split_assign(item, "--mtx");
    const TensorDecl* decl = nullptr;
    for (const auto& in : k.inputs) {
      if (in.name == name) decl = &in;
    }
    if (!decl || decl->shape.size() != 2) throw UserError("'" + name + "' is not a matrix input of " + k.name);
    SparseInstance m = load_matrix_market_file(path);
    for (std::size_t d = 0; d < 2; ++d) {
      auto it = dims.find(decl->shape[d]);
      if (it != dims.end() && it->second != m.dims[d]) {
        throw UserError("dimension '" + decl->shape[d] + "' is already " + std::to_string(it->second));
      }
      dims[decl->shape[d]] = m.dims[d];
    }
    given.emplace(name, std::move(m));
  }
  return given;
}

void write_output(const std::string& path, const std::string& text) {
  if (path.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream out(path);
  if (!out) throw UserError("cannot write '" + path + "'");
  out << text;
}

struct GradArgs {
  Input in;
  std::string spec;
  std::vector<std::string> stages;
  bool emit_cpp = false;
  bool with_main = false;
  bool ir = false;
  std::string dps = "on";
  bool run = false;
  std::uint64_t seed = 1;
  double density = 0.25;
  std::vector<std::string> dims;
  std::vector<std::string> mtx;
  bool json = false;
  std::string output;
};

int cmd_grad(const GradArgs& a) {
  KernelEntry k = a.in.resolve();
  GradientSetup g = prepare_gradient(k, a.in.wrt, a.spec);
  std::vector<std::string> stages = a.stages;
  if (stages.size() == 1 && stages[0] == "all") stages = stage_names();
  if (stages.empty() && !a.emit_cpp && !a.run && !a.ir) stages = {"normalize"};
  for (const auto& s : stages) {
    const auto& names = stage_names();
    if (std::find(names.begin(), names.end(), s) == names.end()) throw UserError("unknown stage '" + s + "'");
  }
  nlohmann::json j;
  std::ostringstream text;
  j["kernel"] = g.function_name();
  for (const auto& s : g.specs) j["storage"].push_back(to_string(s));
  for (const auto& name : stages) {
    const Stage& st = g.pipeline.stage(name);
    j["stages"][name] = {{"term", pretty(st.term)}, {"ms", st.millis}};
    if (st.saturated) j["stages"][name]["saturated"] = *st.saturated;
    if (stages.size() > 1) text << "-- " << name << "\n";
    text << pretty(st.term) << "\n";
  }
  if (a.emit_cpp || a.ir) {
    LowerOptions lo;
    lo.dps = a.dps == "on";
    Kernel kern = lower_dps(g.pipeline.physical(), g.signature(), lo);
    if (a.ir) {
      j["ir"] = dump_ir(kern);
      text << dump_ir(kern);
    }
    if (a.emit_cpp) {
      EmitOptions eo;
      eo.with_main = a.with_main;
      std::string src = emit_source({kern}, eo);
      j["cpp"] = src;
      text << src;
    }
  }
  if (a.run) {
    auto dims = parse_dims(a.dims);
    auto given = load_given(k, a.mtx, dims);
    KernelInstance inst = make_instance(k, g.specs, dims, a.density, a.seed, given);
    Value v = eval(inst.physical, g.pipeline.physical());
    j["result"] = to_string(v);
    j["nnz"] = inst.nnz;
    text << to_string(v) << "\n";
  }
  write_output(a.output, a.json ? j.dump(2) + "\n" : text.str());
  return 0;
}

struct VerifyArgs {
  Input in;
  std::string spec;
  std::uint64_t seed = 1;
  double eps = 1e-5;
  std::string support = "dense";
  int instances = 1;
  double density = 0.25;
  std::vector<std::string> dims;
  std::vector<std::string> mtx;
  bool json = false;
};

int cmd_verify(const VerifyArgs& a) {
  KernelEntry k = a.in.resolve();
  GradientSetup g = prepare_gradient(k, a.in.wrt, a.spec);
  auto dims = parse_dims(a.dims);
  auto given = load_given(k, a.mtx, dims);
  VerifyOptions vo;
  vo.eps = a.eps;
  vo.dense_support = a.support == "dense";
  bool all = true;
  nlohmann::json reports = nlohmann::json::array();
  for (int i = 0; i < a.instances; ++i) {
    KernelInstance inst = make_instance(k, g.specs, dims, a.density, a.seed + i, given);
    VerifyReport r = verify_gradient(g, inst, wrt_shape(k, g.wrt, dims), vo);
    all = all && r.pass;
    reports.push_back({{"seed", a.seed + i},
                       {"pass", r.pass},
                       {"max_abs", r.diff.max_abs},
                       {"max_rel", r.diff.max_rel},
                       {"nnz", inst.nnz}});
    if (!a.json) {
      std::cout << g.function_name() << " seed " << a.seed + i << ": " << (r.pass ? "pass" : "FAIL")
                << " max_abs=" << r.diff.max_abs << " max_rel=" << r.diff.max_rel << "\n";
      if (!r.pass) {
        std::cout << "  gradient: " << to_string(r.gradient) << "\n  oracle:   " << to_string(r.oracle) << "\n";
      }
    }
  }
  if (a.json) std::cout << reports.dump(2) << "\n";
  return all ? 0 : kVerifyFailed;
}

struct BenchArgs {
  Input in;
  std::string spec;
  std::vector<std::string> dims;
  std::vector<double> densities = {1.0};
  int repeats = 3;
  std::uint64_t seed = 1;
  bool verify = false;
  std::string output;
};

int cmd_bench(const BenchArgs& a) {
  KernelEntry k = a.in.resolve();
  std::vector<BenchCell> sweep = {{}};
  for (const auto& item : a.dims) {
    auto [name, vals] = split_assign(item, "--dim");
    std::vector<BenchCell> next;
    for (const auto& c : sweep) {
      for (auto v : int_list(vals)) {
        BenchCell n = c;
        n.dims[name] = v;
        next.push_back(n);
      }
    }
    sweep = std::move(next);
  }
  std::vector<BenchCell> cells;
  for (const auto& c : sweep) {
    for (double d : a.densities) {
      if (!(d > 0 && d <= 1)) throw UserError("density must be in (0, 1]");
      BenchCell n = c;
      n.density = d;
      cells.push_back(n);
    }
  }
  BenchOptions bo;
  bo.repeats = a.repeats;
  bo.seed = a.seed;
  bo.verify = a.verify;
  bo.specs = a.spec;
  write_output(a.output, bench_json(bench_command(k, cells, bo)) + "\n");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sparse forward-mode differentiation and code generation"};
  app.require_subcommand(1);

  Input parse_in;
  bool parse_json = false;
  auto* parse_cmd = app.add_subcommand("parse", "Parse a term and print it");
  add_input(parse_cmd, parse_in);
  parse_cmd->add_flag("--json", parse_json, "Print the AST as JSON");

  Input tc_in;
  auto* tc_cmd = app.add_subcommand("typecheck", "Print the type of a term");
  add_input(tc_cmd, tc_in);

  GradArgs grad;
  auto* grad_cmd = app.add_subcommand("grad", "Differentiate, optimize and lower a term");
  add_input(grad_cmd, grad.in);
  grad_cmd->add_option("--wrt", grad.in.wrt, "Differentiation target");
  grad_cmd->add_option("--spec", grad.spec, "Storage formats, e.g. \"V1=dense, V2=coo\"");
  grad_cmd->add_option("--dump-stage", grad.stages, "Print the term after a stage (or 'all')");
  grad_cmd->add_flag("--emit-cpp", grad.emit_cpp, "Print the generated C++ kernel");
  grad_cmd->add_flag("--main", grad.with_main, "Add a main reading an SDG1 dump");
  grad_cmd->add_flag("--ir", grad.ir, "Print the lowered loop IR");
  grad_cmd->add_option("--dps", grad.dps, "Destination-passing lowering")->check(CLI::IsMember({"on", "off"}));
  grad_cmd->add_flag("--run", grad.run, "Evaluate the gradient on a generated instance");
  grad_cmd->add_option("--seed", grad.seed, "Instance seed");
  grad_cmd->add_option("--density", grad.density, "Density of sparse inputs")->check(CLI::Range(1e-12, 1.0));
  grad_cmd->add_option("--dim", grad.dims, "Dimension, e.g. n=64");
  grad_cmd->add_option("--mtx", grad.mtx, "Matrix Market file for a matrix input, e.g. A=m.mtx");
  grad_cmd->add_flag("--json", grad.json, "JSON output");
  grad_cmd->add_option("-o,--output", grad.output, "Write to a file");

  VerifyArgs ver;
  auto* ver_cmd = app.add_subcommand("verify", "Check a gradient against finite differences");
  add_input(ver_cmd, ver.in);
  ver_cmd->add_option("--wrt", ver.in.wrt, "Differentiation target");
  ver_cmd->add_option("--spec", ver.spec, "Storage formats");
  ver_cmd->add_option("--seed", ver.seed, "First instance seed");
  ver_cmd->add_option("--eps", ver.eps, "Finite difference step")->check(CLI::PositiveNumber);
  ver_cmd->add_option("--grad-support", ver.support, "Perturbed coordinates")
      ->check(CLI::IsMember({"dense", "stored"}));
  ver_cmd->add_option("--instances", ver.instances, "Number of instances")->check(CLI::PositiveNumber);
  ver_cmd->add_option("--density", ver.density, "Density of sparse inputs")->check(CLI::Range(1e-12, 1.0));
  ver_cmd->add_option("--dim", ver.dims, "Dimension, e.g. n=16");
  ver_cmd->add_option("--mtx", ver.mtx, "Matrix Market file for a matrix input");
  ver_cmd->add_flag("--json", ver.json, "JSON output");

  BenchArgs bench;
  bool bench_json_flag = true;
  auto* bench_cmd = app.add_subcommand("bench", "Time and count interpreted gradient runs over a sweep");
  add_input(bench_cmd, bench.in);
  bench_cmd->add_option("--spec", bench.spec, "Storage formats");
  bench_cmd->add_option("--dim", bench.dims, "Dimension values, e.g. n=256,1024");
  bench_cmd->add_option("--density", bench.densities, "Densities")->delimiter(',');
  bench_cmd->add_option("--repeats", bench.repeats, "Timing samples per cell")->check(CLI::PositiveNumber);
  bench_cmd->add_option("--seed", bench.seed, "Instance seed");
  bench_cmd->add_flag("--verify", bench.verify, "Record the oracle error per cell");
  bench_cmd->add_flag("--json", bench_json_flag, "JSON output (the only format)");
  bench_cmd->add_option("-o,--output", bench.output, "Write to a file");

  FixtureOptions fx;
  fx.dir = "fixtures";
  auto* fx_cmd = app.add_subcommand("emit-runtime-fixtures", "Write kernels and SDG1 inputs for the C++ runtime");
  fx_cmd->add_option("--out", fx.dir, "Output directory");
  fx_cmd->add_option("--count", fx.count, "Instances per kernel")->check(CLI::PositiveNumber);
  fx_cmd->add_option("--seed", fx.seed, "First instance seed");
  fx_cmd->add_option("--density", fx.density, "Density of sparse inputs")->check(CLI::Range(1e-12, 1.0));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : kUserError;
  }

  try {
    if (*parse_cmd) {
      ExprPtr e = parse(parse_in.source());
      std::cout << (parse_json ? to_json(e) : pretty(e)) << "\n";
    } else if (*tc_cmd) {
      KernelEntry k = tc_in.resolve();
      std::cout << typecheck(k.env(), k.term()).str() << "\n";
    } else if (*grad_cmd) {
      return cmd_grad(grad);
    } else if (*ver_cmd) {
      return cmd_verify(ver);
    } else if (*bench_cmd) {
      return cmd_bench(bench);
    } else if (*fx_cmd) {
      for (const auto& f : emit_runtime_fixtures(fx)) std::cout << f << "\n";
    }
  } catch (const UserError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUserError;
  } catch (const sdg::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUserError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUserError;
  }
  return 0;
}
