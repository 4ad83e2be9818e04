// Command-line front end: compiles functions to ACAM images, runs the
// simulation pipelines against their oracles, drives fine-tuning and fault
// experiments, and emits the row-count and energy reports.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "nldpe/acam.hpp"
#include "nldpe/config.hpp"
#include "nldpe/costmodel.hpp"
#include "nldpe/crossbar.hpp"
#include "nldpe/dtcompile.hpp"
#include "nldpe/functions.hpp"
#include "nldpe/naf.hpp"
#include "nldpe/parallel.hpp"
#include "nldpe/pipelines.hpp"
#include "nldpe/serialize.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace nldpe;

namespace {

struct GlobalOpts {
  std::string config_path;
  std::uint64_t seed = 0;
  double noise_scale = -1.0;  // <0: take the config/default value
  std::string out_dir = "out";
  int threads = 1;

  Config config;
  NoiseSpec noise;
};

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void finish_globals(GlobalOpts& g) {
  if (!g.config_path.empty()) g.config = Config::load(g.config_path);
  g.noise = noise_from_config(g.config);
  if (g.seed != 0) g.noise.seed = g.seed;
  if (g.noise_scale >= 0.0) g.noise.scale = g.noise_scale;
  set_thread_count(g.threads);
  fs::create_directories(g.out_dir);
}

void write_out(const GlobalOpts& g, const std::string& name, const std::string& content) {
  write_file((fs::path(g.out_dir) / name).string(), content);
}

double uniform_in(std::uint64_t seed, std::uint64_t tag, std::uint64_t k, double lo, double hi) {
  return lo + (hi - lo) * uniform_at(seed, tag, k, 0x6d61696e);
}

// ---- compile-fn ----------------------------------------------------------

int cmd_compile_fn(GlobalOpts& g, const std::string& fn_name, int bits,
                   const std::string& encoding, const std::string& domain) {
  const BuiltinFunction& f = builtin(fn_name);
  QuantSpec q = f.qspec;
  if (g.config.sections().count("quant")) {
    QuantSpec base = q;
    base.in_lo = g.config.get_double("quant", "in_lo", q.in_lo);
    base.in_hi = g.config.get_double("quant", "in_hi", q.in_hi);
    base.out_lo = g.config.get_double("quant", "out_lo", q.out_lo);
    base.out_hi = g.config.get_double("quant", "out_hi", q.out_hi);
    q = base;
  }
  q.n_bits = bits;
  q.encoding = encoding_from_string(encoding);
  if (!domain.empty()) {
    const auto colon = domain.find(':');
    if (colon == std::string::npos)
      throw std::invalid_argument("--domain expects LO:HI");
    q.in_lo = std::stod(domain.substr(0, colon));
    q.in_hi = std::stod(domain.substr(colon + 1));
  }
  CompiledFunction c = compile_function(f.fn, q, fn_name);
  write_out(g, "rowcounts_" + fn_name + ".csv", row_counts_csv(c));
  write_out(g, "compiled_" + fn_name + ".txt", compiled_to_text(c));

  json manifest;
  manifest["command"] = "compile-fn";
  manifest["function"] = fn_name;
  manifest["bits"] = bits;
  manifest["encoding"] = encoding;
  manifest["domain"] = {q.in_lo, q.in_hi};
  manifest["rows"] = row_counts(c);
  manifest["mse_vs_float"] = compile_fixed_mse(c, f.fn, 100000);
  write_out(g, "compile_manifest.json", manifest.dump(2) + "\n");
  std::cout << "compiled " << fn_name << " (" << bits << "-bit " << encoding << ")\n";
  return 0;
}

// ---- table1 ---------------------------------------------------------------

int cmd_table1(GlobalOpts& g) {
  std::ostringstream os;
  const auto& fns = builtin_functions();
  os << "bit";
  for (const auto& f : fns) os << ',' << f.name << "_B," << f.name << "_G";
  os << '\n';
  std::vector<std::vector<std::size_t>> cols;
  std::vector<double> mses;
  for (const auto& f : fns) {
    for (Encoding enc : {Encoding::Binary, Encoding::Gray}) {
      QuantSpec q = f.qspec;
      q.encoding = enc;
      CompiledFunction c = compile_function(f.fn, q, f.name);
      cols.push_back(row_counts(c));
      mses.push_back(compile_fixed_mse(c, f.fn, 100000));
    }
  }
  for (int bit = 7; bit >= 0; --bit) {
    os << "bit_" << bit;
    for (const auto& col : cols) os << ',' << col[static_cast<std::size_t>(7 - bit)];
    os << '\n';
  }
  os << "total";
  for (const auto& col : cols) {
    std::size_t t = 0;
    for (auto v : col) t += v;
    os << ',' << t;
  }
  os << "\nmse";
  for (double m : mses) os << ',' << fmt(m);
  os << '\n';
  write_out(g, "table1.csv", os.str());
  std::cout << "table1.csv written\n";
  return 0;
}

// ---- simulate -------------------------------------------------------------

int cmd_simulate(GlobalOpts& g, const std::string& pipeline, const std::string& fn_name,
                 int length, int trials) {
  RunLedger ledger;
  SearchContext ctx;
  NoiseSpec noise = g.noise;
  ctx.noise = noise.enabled() ? &noise : nullptr;
  ctx.ledger = &ledger;
  json manifest;
  manifest["command"] = "simulate";
  manifest["pipeline"] = pipeline;
  manifest["seed"] = noise.seed;
  manifest["noise_scale"] = noise.scale;
  std::ostringstream csv;

  if (pipeline == "fn") {
    const BuiltinFunction& f = builtin(fn_name);
    CompiledFunction c = compile_builtin(fn_name);
    AcamUnit u = program_unit(c, noise, 1);
    csv << "x,level,value,expected,abs_err\n";
    double mse = 0.0;
    for (int i = 0; i < trials; ++i) {
      const double x = uniform_in(noise.seed, 1, static_cast<std::uint64_t>(i),
                                  f.qspec.in_lo, f.qspec.in_hi);
      ctx.search_index = static_cast<std::uint64_t>(i);
      const std::uint32_t level = eval_unit_level(u, x, ctx);
      const double value = dequantize_level(level, c.qspec);
      const double expected = f.fn(x);
      mse += (value - expected) * (value - expected);
      csv << fmt(x) << ',' << level << ',' << fmt(value) << ',' << fmt(expected) << ','
          << fmt(std::fabs(value - expected)) << '\n';
    }
    manifest["function"] = fn_name;
    manifest["mse"] = mse / trials;
  } else if (pipeline == "mul") {
    LogExpUnits lu = make_logexp_units(noise);
    csv << "a,b,got,expected,err\n";
    double mse = 0.0;
    for (int i = 0; i < trials; ++i) {
      const double a = uniform_in(noise.seed, 2, static_cast<std::uint64_t>(2 * i), 0, 1);
      const double b = uniform_in(noise.seed, 2, static_cast<std::uint64_t>(2 * i + 1), 0, 1);
      ctx.search_index = static_cast<std::uint64_t>(i) * 8;
      const double got = mul_logexp(a, b, lu, ctx);
      mse += (got - a * b) * (got - a * b);
      csv << fmt(a) << ',' << fmt(b) << ',' << fmt(got) << ',' << fmt(a * b) << ','
          << fmt(got - a * b) << '\n';
    }
    manifest["mse"] = mse / trials;
  } else if (pipeline == "dot") {
    LogExpUnits lu = make_logexp_units(noise);
    csv << "trial,got,expected,rel_err\n";
    double worst = 0.0;
    for (int t = 0; t < trials; ++t) {
      std::vector<double> a(static_cast<std::size_t>(length)), b(a.size());
      double expected = 0.0;
      for (std::size_t i = 0; i < a.size(); ++i) {
        a[i] = uniform_in(noise.seed, 3, static_cast<std::uint64_t>(t) * 100000 + 2 * i, 0, 1);
        b[i] = uniform_in(noise.seed, 3, static_cast<std::uint64_t>(t) * 100000 + 2 * i + 1, 0, 1);
        expected += a[i] * b[i];
      }
      ctx.search_index = static_cast<std::uint64_t>(t) * 1000000;
      const double got = dot_logexp(a, b, lu, ctx);
      const double rel = std::fabs(got - expected) / expected;
      worst = std::fmax(worst, rel);
      csv << t << ',' << fmt(got) << ',' << fmt(expected) << ',' << fmt(rel) << '\n';
    }
    manifest["length"] = length;
    manifest["worst_rel_err"] = worst;
  } else if (pipeline == "softmax") {
    SoftmaxUnits su = make_softmax_units(static_cast<std::size_t>(length), noise);
    csv << "trial,element,got,expected,err\n";
    std::vector<double> errs;
    for (int t = 0; t < trials; ++t) {
      std::vector<double> y(static_cast<std::size_t>(length));
      for (std::size_t i = 0; i < y.size(); ++i)
        y[i] = uniform_in(noise.seed, 4, static_cast<std::uint64_t>(t) * 10000 + i, -2, 2);
      ctx.search_index = static_cast<std::uint64_t>(t) * 100000;
      auto got = softmax_logexp(y, su, ctx);
      std::vector<double> expected(y.size());
      {
        double m = y[0], s = 0.0;
        for (double v : y) m = std::fmax(m, v);
        for (std::size_t i = 0; i < y.size(); ++i) s += (expected[i] = std::exp(y[i] - m));
        for (auto& v : expected) v /= s;
      }
      for (std::size_t i = 0; i < y.size(); ++i) {
        errs.push_back(got[i] - expected[i]);
        csv << t << ',' << i << ',' << fmt(got[i]) << ',' << fmt(expected[i]) << ','
            << fmt(got[i] - expected[i]) << '\n';
      }
    }
    double mean = 0.0;
    for (double e : errs) mean += e;
    mean /= errs.size();
    double var = 0.0;
    for (double e : errs) var += (e - mean) * (e - mean);
    var /= errs.size() - 1;
    manifest["length"] = length;
    manifest["mean_err"] = mean;
    manifest["var_err"] = var;
  } else if (pipeline == "attention") {
    csv << "trial,max_abs_err,fused_equals_unfused\n";
    double worst = 0.0;
    bool all_equal = true;
    for (int t = 0; t < trials; ++t) {
      auto mat = [&](std::size_t r, std::size_t c, std::uint64_t tag, double lo, double hi) {
        Matrix m(r, c);
        for (std::size_t i = 0; i < m.data.size(); ++i)
          m.data[i] = uniform_in(noise.seed, tag, static_cast<std::uint64_t>(t) * 10000 + i,
                                 lo, hi);
        return m;
      };
      Matrix wq = mat(8, 8, 10, -0.35, 0.35), wk = mat(8, 8, 11, -0.35, 0.35),
             wv = mat(8, 8, 12, -0.5, 0.5);
      Matrix xq = mat(4, 8, 13, 0.0, 0.4), xk = mat(4, 8, 14, 0.0, 0.4),
             xv = mat(4, 8, 15, -0.6, 0.6);
      AttentionEngine eng = make_attention_engine(wq, wk, wv, 4, noise, 0x4000);
      ctx.search_index = static_cast<std::uint64_t>(t) * 1000000;
      Matrix fused = attention(eng, xq, xk, xv, true, ctx);
      Matrix unfused = attention(eng, xq, xk, xv, false, ctx);
      Matrix oracle = attention_oracle(xq, xk, xv, wq, wk, wv);
      double err = 0.0;
      bool equal = true;
      for (std::size_t i = 0; i < fused.data.size(); ++i) {
        err = std::fmax(err, std::fabs(fused.data[i] - oracle.data[i]));
        equal &= fused.data[i] == unfused.data[i];
      }
      worst = std::fmax(worst, err);
      all_equal &= equal;
      csv << t << ',' << fmt(err) << ',' << (equal ? 1 : 0) << '\n';
    }
    manifest["max_abs_err"] = worst;
    manifest["fused_equals_unfused"] = all_equal;
  } else {
    throw std::invalid_argument("unknown pipeline: " + pipeline);
  }

  manifest["ledger"] = json::object();
  for (EventKind k : all_event_kinds())
    manifest["ledger"][to_string(k)] = ledger.count(k);
  write_out(g, pipeline + "_outputs.csv", csv.str());
  write_out(g, pipeline + "_manifest.json", manifest.dump(2) + "\n");
  write_out(g, pipeline + "_ledger.csv", ledger_csv(ledger));
  std::cout << "simulate " << pipeline << " done\n";
  return 0;
}

// ---- naf -------------------------------------------------------------------

int cmd_naf(GlobalOpts& g, const std::string& fn_name, int epochs) {
  NoiseSpec noise = g.noise;
  NafConfig cfg = naf_from_config(g.config);
  cfg.epochs = epochs;
  cfg.seed = noise.seed + 1;
  CompiledFunction c = compile_builtin(fn_name);
  AcamUnit unit = program_unit(c, noise, 7);

  std::ostringstream losses;
  losses << "bit,epoch,loss\n";
  for (int slot = 0; slot < c.qspec.n_bits; ++slot) {
    DtFinetuneResult r = finetune_dt(c, slot, noise, cfg);
    for (std::size_t e = 0; e < r.epoch_loss.size(); ++e)
      losses << (c.qspec.n_bits - 1 - slot) << ',' << e << ',' << fmt(r.epoch_loss[e]) << '\n';
    apply_bit_params(unit, slot, r.params);
  }
  write_out(g, "naf_loss.csv", losses.str());
  write_out(g, "naf_unit.txt", unit_to_text(unit));

  // deployment-style MSE before/after, fresh draws
  const BuiltinFunction& f = builtin(fn_name);
  AcamUnit raw = program_unit(c, noise, 7);
  auto noisy_mse = [&](const AcamUnit& u, std::uint64_t salt) {
    double acc = 0.0;
    const int n = 20000;
    NoiseSpec eval_noise = noise;
    eval_noise.seed = noise.seed + salt;
    SearchContext ctx;
    ctx.noise = eval_noise.enabled() ? &eval_noise : nullptr;
    for (int i = 0; i < n; ++i) {
      const double x = uniform_in(noise.seed, 21, static_cast<std::uint64_t>(i),
                                  f.qspec.in_lo, f.qspec.in_hi);
      ctx.search_index = static_cast<std::uint64_t>(i);
      const double v = dequantize_level(eval_unit_level(u, x, ctx), c.qspec);
      acc += (v - f.fn(x)) * (v - f.fn(x));
    }
    return acc / n;
  };
  json manifest;
  manifest["command"] = "naf";
  manifest["function"] = fn_name;
  manifest["epochs"] = epochs;
  manifest["noisy_mse_before"] = noisy_mse(raw, 101);
  manifest["noisy_mse_after"] = noisy_mse(unit, 101);
  write_out(g, "naf_manifest.json", manifest.dump(2) + "\n");
  std::cout << "naf " << fn_name << " done\n";
  return 0;
}

// ---- faults ----------------------------------------------------------------

FaultMap random_faults(std::uint64_t image, std::size_t planes, std::size_t rows,
                       std::size_t cols, double rate, std::uint64_t seed) {
  FaultMap fm;
  std::uint64_t k = 0;
  for (std::size_t p = 0; p < planes; ++p)
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t c = 0; c < cols; ++c, ++k) {
        if (uniform_at(seed, 0xfau, k, 0) < rate) {
          const bool high = uniform_at(seed, 0xfbu, k, 0) < 0.5;
          fm.entries.push_back({SiteKey{image, static_cast<std::uint32_t>(p),
                                        static_cast<std::uint32_t>(r),
                                        static_cast<std::uint32_t>(c), 0},
                                high ? FaultMode::StuckHighG : FaultMode::StuckLowG});
        }
      }
  return fm;
}

int cmd_faults(GlobalOpts& g, double rate, const std::string& scheme,
               const std::string& map_path) {
  NoiseSpec noise = g.noise;
  json manifest;
  manifest["command"] = "faults";
  manifest["rate"] = rate;
  manifest["scheme"] = scheme;

  if (scheme == "acam") {
    CompiledFunction c = compile_builtin("identity");
    AcamUnit unit = program_unit(c, noise, 77);
    FaultMap fm;
    if (!map_path.empty()) {
      fm = faultmap_from_csv(read_file(map_path), 77, true);
    } else {
      // spare-capacity rows only, so the remap can always succeed
      fm.entries.push_back({SiteKey{77, 3, 2, 0, 0}, FaultMode::StuckLowG});
      fm.entries.push_back({SiteKey{77, 1, 0, 0, 1}, FaultMode::StuckHighG});
    }
    inject_faults(unit, fm);
    MitigationPlan plan = mitigation_plan(unit, fm);
    apply_mitigation(unit, plan);
    SearchContext ctx;
    int mismatches = 0;
    const int n = 20000;
    for (int i = 0; i < n; ++i) {
      const double x = c.qspec.in_lo +
                       (c.qspec.in_hi - c.qspec.in_lo) * (i + 0.5) / n;
      if (eval_unit_level(unit, x, ctx) != quantize_level(x, c.qspec)) ++mismatches;
    }
    manifest["remapped_rows"] = plan.remaps.size();
    manifest["disabled_rows"] = plan.disabled.size();
    manifest["unrecoverable_bits"] = plan.unrecoverable_bits.size();
    manifest["post_mitigation_mismatches"] = mismatches;
    write_out(g, "faults_plan.csv", faultmap_to_csv(unit.faults));
  } else {
    const std::size_t n = 64;
    Matrix w(n, n);
    for (std::size_t i = 0; i < w.data.size(); ++i)
      w.data[i] = uniform_in(noise.seed, 0x57, i, -1.0, 1.0);
    std::vector<double> x(n);
    for (std::size_t i = 0; i < n; ++i)
      x[i] = uniform_in(noise.seed, 0x58, i, -1.0, 1.0);

    QuantSpec wq;
    wq.in_lo = wq.out_lo = -1;
    wq.in_hi = wq.out_hi = 1;
    wq.n_bits = 8;
    wq.encoding = Encoding::Binary;
    NoiseSpec quiet = noise;
    quiet.scale = 0.0;
    CrossbarImage ref = program_asl(w, quiet, 800);
    VmmResult clean = vmm(ref, x, quiet);

    auto mse_for = [&](SliceScheme s, std::uint64_t image) {
      const std::size_t planes = s == SliceScheme::ASL ? 4 : 8;
      double acc = 0.0;
      for (std::uint64_t trial = 0; trial < 20; ++trial) {
        FaultMap fm = map_path.empty()
                          ? random_faults(image, planes, n, n, rate, noise.seed + trial)
                          : faultmap_from_csv(read_file(map_path), image, false);
        CrossbarImage img = s == SliceScheme::ASL
                                ? program_asl(w, quiet, image, fm)
                                : program_dsl(w, wq, quiet, image, fm);
        VmmResult r = vmm(img, x, quiet);
        for (std::size_t j = 0; j < n; ++j) {
          const double d = r.analog_out[j] - clean.analog_out[j];
          acc += d * d;
        }
      }
      return acc / (20.0 * n);
    };
    const double asl = mse_for(SliceScheme::ASL, 801);
    const double dsl = mse_for(SliceScheme::DSL, 802);
    manifest["asl_mse"] = asl;
    manifest["dsl_mse"] = dsl;
    std::ostringstream csv;
    csv << "scheme,rate,mse\nasl," << fmt(rate) << ',' << fmt(asl) << "\ndsl," << fmt(rate)
        << ',' << fmt(dsl) << '\n';
    write_out(g, "faults_report.csv", csv.str());
  }
  write_out(g, "faults_manifest.json", manifest.dump(2) + "\n");
  std::cout << "faults (" << scheme << ") done\n";
  return 0;
}

// ---- report ----------------------------------------------------------------

int cmd_report(GlobalOpts& g, const std::string& ledger_path) {
  const std::string text = read_file(ledger_path);
  RunLedger ledger;
  std::istringstream in(text);
  std::string line;
  std::getline(in, line);  // header
  while (std::getline(in, line)) {
    const auto comma = line.find(',');
    if (comma == std::string::npos) continue;
    const std::string name = line.substr(0, comma);
    const std::uint64_t count = std::stoull(line.substr(comma + 1));
    for (EventKind k : all_event_kinds())
      if (to_string(k) == name) ledger.counters[k] = count;
  }
  ComponentCosts costs = costs_from_config(g.config);
  EnergyReport r = energy_report(ledger, costs);
  write_out(g, "energy.csv", energy_report_csv(r));
  json j;
  j["command"] = "report";
  j["total_pj"] = r.total_pj;
  j["components"] = json::array();
  for (const auto& lineit : r.lines) {
    json c;
    c["component"] = lineit.component;
    c["events"] = lineit.events;
    c["energy_pj"] = lineit.energy_pj;
    c["share_percent"] = lineit.share_percent;
    j["components"].push_back(c);
  }
  write_out(g, "energy.json", j.dump(2) + "\n");
  std::cout << "report done\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"analog in-memory DPE + ACAM simulator"};
  app.require_subcommand(1);

  GlobalOpts g;
  app.add_option("--config", g.config_path, "config file (TOML-style sections)");
  app.add_option("--seed", g.seed, "RNG seed (overrides config)");
  app.add_option("--noise-scale", g.noise_scale, "noise scale (0 disables noise)");
  app.add_option("--out", g.out_dir, "output directory")->capture_default_str();
  app.add_option("--threads", g.threads, "worker threads")->capture_default_str();

  auto* compile = app.add_subcommand("compile-fn", "compile a function to interval sets");
  std::string fn_name = "sigmoid", encoding = "gray", domain;
  int bits = 8;
  compile->add_option("--fn", fn_name, "builtin function name")->required();
  compile->add_option("--bits", bits, "output bits");
  compile->add_option("--encoding", encoding, "binary|gray");
  compile->add_option("--domain", domain, "LO:HI compile domain override");

  auto* simulate = app.add_subcommand("simulate", "run a pipeline against its oracle");
  std::string pipeline = "fn";
  int length = 64, trials = 100;
  simulate->add_option("--pipeline", pipeline, "fn|mul|dot|softmax|attention")->required();
  simulate->add_option("--fn", fn_name, "function for --pipeline fn");
  simulate->add_option("--length", length, "vector length for dot/softmax");
  simulate->add_option("--trials", trials, "number of random trials");

  auto* naf = app.add_subcommand("naf", "noise-aware fine-tuning of one function unit");
  int epochs = 10;
  naf->add_option("--fn", fn_name, "builtin function name")->required();
  naf->add_option("--epochs", epochs, "fine-tuning epochs");

  auto* faults = app.add_subcommand("faults", "stuck-at fault experiment");
  double rate = 0.1;
  std::string scheme = "asl", map_path;
  faults->add_option("--rate", rate, "fault rate");
  faults->add_option("--scheme", scheme, "asl|dsl|acam");
  faults->add_option("--map", map_path, "fault map CSV");

  auto* report = app.add_subcommand("report", "energy report from a run ledger");
  std::string ledger_path;
  report->add_option("--ledger", ledger_path, "ledger CSV from simulate")->required();

  auto* table1 = app.add_subcommand("table1", "row-count table for all builtins");

  CLI11_PARSE(app, argc, argv);

  try {
    finish_globals(g);
    if (compile->parsed()) return cmd_compile_fn(g, fn_name, bits, encoding, domain);
    if (simulate->parsed()) return cmd_simulate(g, pipeline, fn_name, length, trials);
    if (naf->parsed()) return cmd_naf(g, fn_name, epochs);
    if (faults->parsed()) return cmd_faults(g, rate, scheme, map_path);
    if (report->parsed()) return cmd_report(g, ledger_path);
    if (table1->parsed()) return cmd_table1(g);
  } catch (const std::exception& e) {
    json err;
    err["error"] = e.what();
    err["command"] = app.get_subcommands().empty() ? "" : app.get_subcommands()[0]->get_name();
    std::cout << err.dump() << "\n";
    return 1;
  }
  return 0;
}
