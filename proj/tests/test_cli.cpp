#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "trackdeg/io.hpp"
#include "trackdeg/mcmc.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

namespace fs = std::filesystem;
using trackdeg::read_text_file;
using trackdeg::write_text_file;

namespace {

const std::string kCli = TRACKDEG_CLI_PATH;

int run(const std::string& args, const std::string& log = "/dev/null") {
  const std::string cmd = kCli + " " + args + " >" + log + " 2>&1";
  const int status = std::system(cmd.c_str());
  return WEXITSTATUS(status);
}

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::path("cli_tmp") / name) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

void write_raw_fixture(const std::string& path) {
  std::ofstream f(path);
  f << "date,channel,position_m,deviation_mm\n";
  for (const char* date : {"2020-01-23", "2020-04-20", "2020-07-15"}) {
    for (const char* ch : {"top_left", "top_right"}) {
      for (double pos = 0.0; pos < 200.0; pos += 0.25) {
        const double base = (date[5] - '0') * 1.7 + (pos < 100.0 ? 1.0 : 2.0);
        f << date << "," << ch << "," << pos << "," << base << "\n";
      }
    }
  }
}

std::string scenario_config(int segments, int inspections, const std::string& tamping) {
  return "[scenario]\n"
         "segments = " + std::to_string(segments) + "\n"
         "indicators = 4\n"
         "inspections = " + std::to_string(inspections) + "\n"
         "draw_from_hyper = false\n"
         "mu_fixed = 0.03\n"
         "sigma_fixed = 0.08\n"
         "correlation = block:0.8\n"
         "tamping = " + tamping + "\n"
         "tamping_threshold = 10\n"
         "zplus_m = 0.9\n"
         "zplus_s = 0.3\n";
}

}  // namespace

TEST_CASE("cli: help output and unknown flags") {
  TempDir tmp("help");
  const std::string log = tmp.file("help.txt");
  CHECK(run("--help", log) == 0);
  const std::string text = read_text_file(log);
  for (const char* word : {"ingest", "identify", "fit", "validate", "predict", "hit",
                           "compare", "simulate"})
    CHECK(text.find(word) != std::string::npos);

  const std::string sub_log = tmp.file("sub.txt");
  CHECK(run("fit --help", sub_log) == 0);
  const std::string sub = read_text_file(sub_log);
  for (const char* flag : {"--config", "--seed", "--threads", "--out", "--force"})
    CHECK(sub.find(flag) != std::string::npos);

  CHECK(run("fit --config x.ini --no-such-flag") != 0);
  CHECK(run("nonsense") != 0);
}

TEST_CASE("cli ingest: segments a raw file and reports counts") {
  TempDir tmp("ingest");
  write_raw_fixture(tmp.file("raw.csv"));
  write_text_file(tmp.file("run.ini"),
                  "[ingest]\n"
                  "input = " + tmp.file("raw.csv") + "\n"
                  "track_end = 200\n"
                  "indicators = top_left,top_right\n");
  CHECK(run("ingest --config " + tmp.file("run.ini") + " --out " + tmp.file("out")) == 0);
  REQUIRE(fs::exists(tmp.file("out/series.csv")));
  const auto data = trackdeg::read_series_file(tmp.file("out/series.csv"));
  CHECK(data.segments.size() == 2);       // 200 m / 100 m
  CHECK(data.segments[0].n_obs() == 3);   // three inspection dates
  CHECK(fs::exists(tmp.file("out/load_report.txt")));
}

TEST_CASE("cli ingest: missing header and empty file fail with data errors") {
  TempDir tmp("ingest_bad");
  write_text_file(tmp.file("bad.csv"), "pos,dev\n1,2\n");
  write_text_file(tmp.file("run.ini"),
                  "[ingest]\n"
                  "input = " + tmp.file("bad.csv") + "\n"
                  "track_end = 200\n"
                  "indicators = top_left\n");
  const std::string log = tmp.file("log.txt");
  CHECK(run("ingest --config " + tmp.file("run.ini") + " --out " + tmp.file("out"), log) == 2);
  CHECK(read_text_file(log).find("missing header") != std::string::npos);

  write_text_file(tmp.file("bad.csv"), "");
  CHECK(run("ingest --config " + tmp.file("run.ini") + " --out " + tmp.file("out")) == 2);
}

TEST_CASE("cli: config errors exit with code 1 and touch no outputs") {
  TempDir tmp("cfg");
  write_text_file(tmp.file("broken.ini"), "[ingest\n");
  CHECK(run("ingest --config " + tmp.file("broken.ini") + " --out " + tmp.file("out")) == 1);
  CHECK(run("fit --config " + tmp.file("nonexistent.ini") + " --out " + tmp.file("out")) == 1);
  CHECK_FALSE(fs::exists(tmp.file("out")));
}

TEST_CASE("cli simulate + identify: flags match the generated truth") {
  TempDir tmp("sim");
  write_text_file(tmp.file("scenario.ini"), scenario_config(8, 20, "threshold"));
  CHECK(run("simulate --config " + tmp.file("scenario.ini") + " --seed 5 --out " +
            tmp.file("out")) == 0);
  REQUIRE(fs::exists(tmp.file("out/series.csv")));
  REQUIRE(fs::exists(tmp.file("out/truth.csv")));

  const auto truth_data = trackdeg::read_series_file(tmp.file("out/series.csv"));
  write_text_file(tmp.file("run.ini"),
                  "[identify]\n"
                  "input = " + tmp.file("out/series.csv") + "\n"
                  "min_drop = 0.5\n");
  CHECK(run("identify --config " + tmp.file("run.ini") + " --out " + tmp.file("id")) == 0);
  const auto flagged = trackdeg::read_series_file(tmp.file("id/series_flagged.csv"));
  int mismatches = 0;
  for (std::size_t i = 0; i < truth_data.segments.size(); ++i)
    for (int k = 0; k < truth_data.segments[i].n_obs(); ++k)
      if (truth_data.segments[i].maint_flags[k] != flagged.segments[i].maint_flags[k])
        ++mismatches;
  CHECK(mismatches == 0);

  // idempotent: re-running on the flagged file reproduces it byte for byte
  write_text_file(tmp.file("run2.ini"),
                  "[identify]\n"
                  "input = " + tmp.file("id/series_flagged.csv") + "\n"
                  "min_drop = 0.5\n");
  CHECK(run("identify --config " + tmp.file("run2.ini") + " --out " + tmp.file("id2")) == 0);
  CHECK(read_text_file(tmp.file("id2/series_flagged.csv")) ==
        read_text_file(tmp.file("id/series_flagged.csv")));
}

TEST_CASE("cli fit: writes posterior + diagnostics and is byte-identical across runs") {
  TempDir tmp("fit");
  write_text_file(tmp.file("scenario.ini"), scenario_config(2, 10, "none"));
  REQUIRE(run("simulate --config " + tmp.file("scenario.ini") + " --seed 3 --out " +
              tmp.file("data")) == 0);
  write_text_file(tmp.file("run.ini"),
                  "[fit]\n"
                  "input = " + tmp.file("data/series.csv") + "\n"
                  "chains = 2\n"
                  "warmup = 150\n"
                  "draws = 60\n");
  const int rc1 = run("fit --config " + tmp.file("run.ini") + " --seed 11 --out " +
                      tmp.file("a") + " --force");
  const int rc2 = run("fit --config " + tmp.file("run.ini") + " --seed 11 --out " +
                      tmp.file("b") + " --force");
  CHECK(rc1 == 0);
  CHECK(rc2 == 0);
  REQUIRE(fs::exists(tmp.file("a/posterior.csv")));
  CHECK(read_text_file(tmp.file("a/posterior.csv")) == read_text_file(tmp.file("b/posterior.csv")));

  // diagnostics carry one row per stored parameter
  const auto posterior = trackdeg::read_posterior_csv(tmp.file("a/posterior.csv"));
  const std::string diag = read_text_file(tmp.file("a/diagnostics.csv"));
  int rows = -1;  // header
  for (char c : diag)
    if (c == '\n') ++rows;
  CHECK(rows == posterior.n_params());
}

TEST_CASE("cli fit: under-iterated run exits 3 without --force") {
  TempDir tmp("fit3");
  write_text_file(tmp.file("scenario.ini"), scenario_config(2, 12, "none"));
  REQUIRE(run("simulate --config " + tmp.file("scenario.ini") + " --seed 4 --out " +
              tmp.file("data")) == 0);
  write_text_file(tmp.file("run.ini"),
                  "[fit]\n"
                  "input = " + tmp.file("data/series.csv") + "\n"
                  "chains = 2\n"
                  "warmup = 0\n"
                  "draws = 12\n");
  const std::string log = tmp.file("log.txt");
  CHECK(run("fit --config " + tmp.file("run.ini") + " --seed 1 --out " + tmp.file("out"), log) ==
        3);
  CHECK(read_text_file(log).find("not converged") != std::string::npos);
  CHECK(fs::exists(tmp.file("out/posterior.csv")));  // results still written
  CHECK(run("fit --config " + tmp.file("run.ini") + " --seed 1 --out " + tmp.file("out") +
            " --force") == 0);
}

TEST_CASE("cli: simulate/hit/predict are reproducible byte for byte") {
  TempDir tmp("repro");
  write_text_file(tmp.file("scenario.ini"), scenario_config(3, 10, "none"));
  REQUIRE(run("simulate --config " + tmp.file("scenario.ini") + " --seed 9 --out " +
              tmp.file("d1")) == 0);
  REQUIRE(run("simulate --config " + tmp.file("scenario.ini") + " --seed 9 --out " +
              tmp.file("d2")) == 0);
  CHECK(read_text_file(tmp.file("d1/series.csv")) == read_text_file(tmp.file("d2/series.csv")));
  CHECK(read_text_file(tmp.file("d1/truth.csv")) == read_text_file(tmp.file("d2/truth.csv")));

  write_text_file(tmp.file("fit.ini"),
                  "[fit]\n"
                  "input = " + tmp.file("d1/series.csv") + "\n"
                  "chains = 2\nwarmup = 200\ndraws = 100\n");
  REQUIRE(run("fit --config " + tmp.file("fit.ini") + " --seed 2 --out " + tmp.file("fit") +
              " --force") == 0);

  const std::string common = "[hit]\n"
                             "posterior = " + tmp.file("fit/posterior.csv") + "\n"
                             "series = " + tmp.file("d1/series.csv") + "\n"
                             "segment = 0\n"
                             "n_paths = 400\n"
                             "horizon_days = 2000\n"
                             "[thresholds]\n"
                             "limits = 45\n"
                             "[predict]\n"
                             "posterior = " + tmp.file("fit/posterior.csv") + "\n"
                             "series = " + tmp.file("d1/series.csv") + "\n"
                             "segment = 0\n"
                             "horizon_days = 180\n"
                             "step_days = 45\n";
  write_text_file(tmp.file("post.ini"), common);
  for (const char* dir : {"h1", "h2"})
    CHECK(run("hit --config " + tmp.file("post.ini") + " --seed 7 --force --out " +
              tmp.file(dir)) == 0);
  CHECK(read_text_file(tmp.file("h1/first_hit.csv")) ==
        read_text_file(tmp.file("h2/first_hit.csv")));
  CHECK(read_text_file(tmp.file("h1/hitting_times.csv")) ==
        read_text_file(tmp.file("h2/hitting_times.csv")));

  for (const char* dir : {"p1", "p2"})
    CHECK(run("predict --config " + tmp.file("post.ini") + " --seed 8 --force --out " +
              tmp.file(dir)) == 0);
  CHECK(read_text_file(tmp.file("p1/bands.csv")) == read_text_file(tmp.file("p2/bands.csv")));
}
