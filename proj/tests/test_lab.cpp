#include <filesystem>
#include <fstream>
#include <string>

#include "cclab/config.hpp"
#include "cclab/lab.hpp"
#include "support.hpp"

using namespace cclab;
namespace fs = std::filesystem;

namespace {

std::string scratch_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("cclab_test_" + name);
  fs::remove_all(p);
  return p.string();
}

ExperimentConfig small_volume(const std::string& out) {
  ExperimentConfig c = ExperimentConfig::parse(
      "experiment = volume\n"
      "frame = heisenberg1\n"
      "eps_list = 0.5, 0\n"
      "seed = 11\n"
      "[lattice]\n"
      "nodes = 15\n"
      "[volume]\n"
      "radii = 0.3, 0.6\n"
      "samples = 20000\n");
  c.out_dir = out;
  return c;
}

std::string error_text(const std::string& ini) {
  try {
    ExperimentConfig::parse(ini).validate();
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::ParseError);
    return e.what();
  }
  FAIL("expected ParseError");
  return {};
}

}  // namespace

TEST_CASE("config parsing") {
  const ExperimentConfig c = small_volume("unused");
  CHECK(c.experiment == "volume");
  CHECK(c.eps_list == std::vector<double>{0.5, 0.0});
  CHECK(c.nodes == 15);
  CHECK(c.integer("samples", 0) == 20000);
  CHECK(c.numbers("radii", {}) == std::vector<double>{0.3, 0.6});
  CHECK(*c.seed == 11);
  ExperimentConfig d = c;
  d.out_dir = "elsewhere";
  d.threads = 4;
  CHECK(d.hash() == c.hash());
  d.set("samples", "30000");
  CHECK(d.hash() != c.hash());
}

TEST_CASE("config errors") {
  const std::string neg = error_text("experiment = volume\nseed = 1\neps_list = 0.5, -0.1\n");
  CHECK(neg.find("line 3") != std::string::npos);
  CHECK(neg.find("column") != std::string::npos);
  CHECK(error_text("experiment = volume\n").find("seed") != std::string::npos);
  CHECK(error_text("experiment = volume\nseed = 1\nbogus = 2\n").find("line 3") != std::string::npos);
  CHECK(error_text("experiment = nothing\nseed = 1\n").find("unknown experiment") != std::string::npos);
  CHECK(error_text("experiment = volume\nseed = 1\n[lattice]\nnodes = x\n").find("line 4") != std::string::npos);
  ExperimentConfig c;
  c.experiment = "volume";
  c.seed = 1;
  CHECK_ERROR_KIND(c.set_eps_list({0.1, -1.0}), ParseError);
}

TEST_CASE("runs are deterministic across reruns and thread counts") {
  ExperimentConfig a = small_volume(scratch_dir("det_a"));
  a.use_cache = false;
  ExperimentConfig b = a;
  b.out_dir = scratch_dir("det_b");
  b.threads = 3;
  const ResultManifest ma = run(a);
  const ResultManifest mb = run(b);
  CHECK(!ma.scalars.empty());
  CHECK(ma.scalar_summary() == mb.scalar_summary());
  CHECK(ma.config_hash == mb.config_hash);
  CHECK(fs::exists(fs::path(a.out_dir) / "manifest.json"));
  const ResultManifest again = run(a);
  CHECK(again.scalar_summary() == ma.scalar_summary());
}

TEST_CASE("cached and uncached runs agree") {
  ExperimentConfig c = small_volume(scratch_dir("cache"));
  c.use_cache = false;
  const ResultManifest plain = run(c);
  c.use_cache = true;
  const ResultManifest first = run(c);
  const ResultManifest second = run(c);
  CHECK(first.cache_misses > 0);
  CHECK(second.cache_hits == first.cache_misses);
  CHECK(second.cache_misses == 0);
  CHECK(plain.scalar_summary() == first.scalar_summary());
  CHECK(first.scalar_summary() == second.scalar_summary());
}

TEST_CASE("plot data") {
  ExperimentConfig c = small_volume(scratch_dir("plot"));
  const ResultManifest m = run(c);
  const std::string path = emit_plot_data(m);
  std::ifstream in(path);
  std::string header;
  std::getline(in, header);
  CHECK(header == "experiment,frame,eps,axis,x,quantity,value");

  ResultManifest empty = m;
  empty.plot.clear();
  CHECK_ERROR_KIND(emit_plot_data(empty), ManifestIncomplete);
  ResultManifest missing = m;
  missing.outputs.push_back({(fs::path(c.out_dir) / "nope.csv").string(), "table", 0});
  CHECK_ERROR_KIND(emit_plot_data(missing), ManifestIncomplete);
}

TEST_CASE("failed runs still write a manifest") {
  ExperimentConfig c = ExperimentConfig::parse("experiment = dist\nseed = 1\nframe = heisenberg1\n[dist]\nto = 9, 0, 0\n");
  c.out_dir = scratch_dir("fail");
  bool thrown = false;
  try {
    run(c);
  } catch (const Error&) {
    thrown = true;
  }
  CHECK(thrown);
  std::ifstream in(fs::path(c.out_dir) / "manifest.json");
  const std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  CHECK(text.find("\"error\"") != std::string::npos);
}

TEST_CASE("ini documents") {
  const IniDocument d = IniDocument::parse("# comment\na = 1\n[s]\nb = x, y\n");
  REQUIRE(d.find("", "a"));
  CHECK(d.find("", "a")->line == 2);
  CHECK(d.find("s", "b")->value == "x, y");
  CHECK(split_list("x, y") == std::vector<std::string>{"x", "y"});
  CHECK_ERROR_KIND(IniDocument::parse("[unterminated\n"), ParseError);
}
