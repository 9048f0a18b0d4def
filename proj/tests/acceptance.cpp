#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "hypcse/checks.hpp"
#include "hypcse/diag.hpp"
#include "hypcse/pipeline.hpp"

using namespace hypcse;
namespace fs = std::filesystem;

namespace {

const fs::path kConfigs = HYPCSE_CONFIG_DIR;

struct Outcome {
  bool passed = false;
  std::string detail;
};

struct Criterion {
  int id;
  std::string name;
  std::function<Outcome()> run;
};

Outcome from_check(const checks::CheckResult& r, double limit_seconds) {
  Outcome o;
  o.passed = r.passed && r.seconds < limit_seconds;
  std::ostringstream s;
  s << r.detail;
  if (r.seconds >= limit_seconds) s << "; over the " << limit_seconds << " s limit";
  o.detail = s.str();
  return o;
}

pipeline::RunConfig dataset_config(const std::string& name, std::uint64_t seed) {
  pipeline::RunConfig cfg = pipeline::RunConfig::from_file(kConfigs / (name + ".cfg"));
  cfg.seed = seed;
  return cfg;
}

struct SeedSweep {
  std::vector<pipeline::RunReport> reports;
  double mean_dp = 0.0;
  int below_reference = 0;
  double seconds = 0.0;
};

SeedSweep sweep(const std::string& name, int seeds, const std::function<void(pipeline::RunConfig&)>& edit) {
  SeedSweep out;
  for (int s = 0; s < seeds; ++s) {
    pipeline::RunConfig cfg = dataset_config(name, static_cast<std::uint64_t>(s));
    if (edit) edit(cfg);
    out.reports.push_back(pipeline::run_training(cfg));
    const pipeline::RunReport& r = out.reports.back();
    out.mean_dp += r.best.dp / seeds;
    out.below_reference += r.best.se < r.reference_se ? 1 : 0;
    out.seconds += r.seconds;
  }
  return out;
}

std::string sweep_summary(const std::string& name, const SeedSweep& s) {
  std::ostringstream o;
  o.precision(4);
  o << std::fixed << name << " mean DP " << s.mean_dp << ", SE below single linkage " << s.below_reference
    << "/" << s.reports.size() << " [";
  for (std::size_t i = 0; i < s.reports.size(); ++i) {
    o << (i ? " " : "") << s.reports[i].best.se << "<" << s.reports[i].reference_se;
  }
  o.precision(0);
  o << "], " << s.seconds << " s";
  return o.str();
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::set<int> parse_ids(const std::string& text) {
  std::set<int> ids;
  std::stringstream s(text);
  std::string item;
  while (std::getline(s, item, ',')) {
    if (!item.empty()) ids.insert(std::stoi(item));
  }
  return ids;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance criteria"};
  std::string expect_fail_text;
  std::string only_text;
  int seeds = 5;
  app.add_option("--expect-fail", expect_fail_text, "comma-separated criteria expected to fail");
  app.add_option("--only", only_text, "comma-separated criteria to run");
  app.add_option("--seeds", seeds, "seeds per dataset")->check(CLI::Range(1, 100));
  CLI11_PARSE(app, argc, argv);
  const std::set<int> expect_fail = parse_ids(expect_fail_text);
  const std::set<int> only = parse_ids(only_text);

  diag::set_warning_sink([](std::string_view) {});

  // Shared between criteria 8 to 11.
  SeedSweep zoo, iris;
  auto need_zoo = [&] {
    if (zoo.reports.empty()) zoo = sweep("zoo", seeds, nullptr);
  };
  auto need_iris = [&] {
    if (iris.reports.empty()) iris = sweep("iris", seeds, nullptr);
  };

  std::vector<Criterion> criteria{
      {1, "SE equals its LCA form", [] { return from_check(checks::lca_form(), 30.0); }},
      {2, "binary trees attain the minimum SE", [] { return from_check(checks::binary_min(), 120.0); }},
      {3, "SE ratio bounded below by conductance", [] { return from_check(checks::conductance_bound(), 60.0); }},
      {4, "geodesic origin distance closed form", [] { return from_check(checks::origin_distance(), 30.0); }},
      {5, "soft LCA loss approaches the discrete cost", [] { return from_check(checks::hard_limit(), 60.0); }},
      {6, "analytic gradients match finite differences",
       [] { return from_check(checks::gradcheck(6, 50), 600.0); }},
      {7, "fast decoding matches naive decoding",
       [] { return from_check(checks::decode_equivalence(), 60.0); }},
      {8, "Zoo and Iris purity and SE",
       [&] {
         need_zoo();
         need_iris();
         const int quorum = seeds - seeds / 5;
         Outcome o;
         o.passed = zoo.mean_dp >= 0.90 && iris.mean_dp >= 0.85 && zoo.below_reference >= quorum &&
                    iris.below_reference >= quorum && zoo.seconds < 600.0 && iris.seconds < 600.0;
         o.detail = sweep_summary("zoo", zoo) + "; " + sweep_summary("iris", iris);
         return o;
       }},
      {9, "graph learning does not degrade the base",
       [&] {
         need_iris();
         SeedSweep base = sweep("iris", seeds, [](pipeline::RunConfig& c) {
           c.tau = 1.0;
           c.eta1 = 0.0;
         });
         Outcome o;
         o.passed = iris.mean_dp >= base.mean_dp - 0.02;
         char buf[160];
         std::snprintf(buf, sizeof buf, "iris mean DP full %.4f, base %.4f, delta %+.4f", iris.mean_dp,
                       base.mean_dp, iris.mean_dp - base.mean_dp);
         o.detail = buf;
         return o;
       }},
      {10, "embeddings stay on the hyperboloid",
       [&] {
         need_zoo();
         const pipeline::RunReport& r = zoo.reports.front();
         Outcome o;
         o.passed = r.config.epochs == 200 && r.max_manifold_error < 1e-5;
         char buf[160];
         std::snprintf(buf, sizeof buf, "zoo seed 0, %d epochs, max |<z,z> + 1| = %.3g", r.config.epochs,
                       r.max_manifold_error);
         o.detail = buf;
         return o;
       }},
      {11, "identical seeds give identical losses.csv",
       [&] {
         need_zoo();
         const fs::path dir = fs::temp_directory_path() / "hypcse_acceptance";
         fs::remove_all(dir);
         pipeline::export_run(zoo.reports.front(), dir / "first");
         pipeline::export_run(pipeline::run_training(zoo.reports.front().config), dir / "second");
         const std::string a = slurp(dir / "first" / "losses.csv");
         const std::string b = slurp(dir / "second" / "losses.csv");
         Outcome o;
         o.passed = !a.empty() && a == b;
         o.detail = "zoo seed 0, " + std::to_string(a.size()) + " bytes, " + (a == b ? "identical" : "different");
         fs::remove_all(dir);
         return o;
       }},
  };

  int unexpected = 0;
  for (const Criterion& c : criteria) {
    if (!only.empty() && !only.count(c.id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o.passed = false;
      o.detail = std::string("threw: ") + e.what();
    }
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool expected = expect_fail.count(c.id) ? !o.passed : o.passed;
    if (!expected) ++unexpected;
    std::printf("%s %2d %s: %s (%.1f s)%s\n", o.passed ? "PASS" : "FAIL", c.id, c.name.c_str(),
                o.detail.c_str(), seconds, expected ? "" : "  [unexpected]");
    std::fflush(stdout);
  }
  return unexpected == 0 ? 0 : 1;
}
