#define DOCTEST_CONFIG_IMPLEMENT
#include "doctest.h"

#include <sys/wait.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

namespace fs = std::filesystem;

namespace {

std::string g_cli;
fs::path g_dir;

int run_cli(const std::string& args) {
  const std::string cmd = g_cli + " " + args + " >" + (g_dir / "out.txt").string() +
                          " 2>" + (g_dir / "err.txt").string();
  const int rc = std::system(cmd.c_str());
  return WEXITSTATUS(rc);
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::string out_text() { return slurp(g_dir / "out.txt"); }
std::string err_text() { return slurp(g_dir / "err.txt"); }

}  // namespace

TEST_CASE("enumerate writes the documented corpus") {
  const auto corpus = (g_dir / "c6.corpus").string();
  REQUIRE(run_cli("enumerate --max-len 6 --max-steps 10 --out " + corpus) == 0);
  const std::string text = slurp(corpus);
  CHECK(text.starts_with("#ALGTHERMO v1 machine=bitvm1 L=6 Tmax=10\n"));
  int r_lines = 0;
  for (size_t pos = 0; (pos = text.find("\nR ", pos)) != std::string::npos; ++pos)
    ++r_lines;
  if (text.starts_with("R ")) ++r_lines;
  CHECK(r_lines == 3);

  REQUIRE(run_cli("enumerate --max-len 8 --max-steps 64 --verify --out " +
                  (g_dir / "c8.corpus").string()) == 0);
  CHECK(out_text().find("verify") != std::string::npos);
}

TEST_CASE("thread count never changes the corpus file") {
  const auto serial = (g_dir / "t1.corpus").string();
  const auto pooled = (g_dir / "t4.corpus").string();
  REQUIRE(run_cli("enumerate --max-len 11 --max-steps 128 --threads 1 --out " +
                  serial) == 0);
  REQUIRE(run_cli("enumerate --max-len 11 --max-steps 128 --threads 4 --out " +
                  pooled) == 0);
  CHECK(slurp(serial) == slurp(pooled));
  CHECK_FALSE(slurp(serial).empty());
}

TEST_CASE("omega prints the L=6 enclosure") {
  const auto corpus = (g_dir / "c6.corpus").string();
  REQUIRE(run_cli("omega --corpus " + corpus) == 0);
  CHECK(out_text().find("0.09375") != std::string::npos);
}

TEST_CASE("stats succeeds inside the region and is deterministic") {
  const auto corpus = (g_dir / "c6.corpus").string();
  const auto csv1 = (g_dir / "s1.csv").string();
  const auto csv2 = (g_dir / "s2.csv").string();
  REQUIRE(run_cli("stats --corpus " + corpus +
                  " --beta 0.5 --gamma 1.0 --delta 0.1 --csv " + csv1) == 0);
  REQUIRE(run_cli("stats --corpus " + corpus +
                  " --beta 0.5 --gamma 1.0 --delta 0.1 --csv " + csv2) == 0);
  CHECK(slurp(csv1) == slurp(csv2));
  CHECK(!slurp(csv1).empty());
}

TEST_CASE("divergent points are refused with exit 1 and no CSV output") {
  const auto corpus = (g_dir / "c6.corpus").string();
  const auto csv = (g_dir / "refused.csv").string();
  CHECK(run_cli("stats --corpus " + corpus + " --beta 0 --gamma 0 --delta 0 --csv " +
                csv) == 1);
  CHECK(err_text().find("certified") != std::string::npos);
  CHECK_FALSE(fs::exists(csv));

  CHECK(run_cli("stats --corpus " + corpus + " --beta 1 --gamma 0.5 --delta 0") == 1);
  CHECK(run_cli("stats --corpus " + corpus +
                " --beta 0 --gamma 0 --delta 0 --uncertified") == 0);
}

TEST_CASE("entropy subcommand reports both units") {
  const auto corpus = (g_dir / "c6.corpus").string();
  REQUIRE(run_cli("entropy --corpus " + corpus +
                  " --gamma 0.6931471805599453 --output-value 1") == 0);
  const std::string text = out_text();
  CHECK(text.find("nats") != std::string::npos);
  CHECK(text.find("bits") != std::string::npos);
  CHECK(run_cli("entropy --corpus " + corpus + " --gamma 0.3 --output-value 1") == 1);
}

TEST_CASE("relations runs the identity checks on a moderate corpus") {
  const auto corpus = (g_dir / "c10.corpus").string();
  REQUIRE(run_cli("enumerate --max-len 10 --max-steps 256 --out " + corpus) == 0);
  const auto csv = (g_dir / "rel.csv").string();
  REQUIRE(run_cli("relations --corpus " + corpus +
                  " --beta 0.7 --gamma 1.2 --delta 0.2 --csv " + csv) == 0);
  CHECK(out_text().find("Maxwell") != std::string::npos);
  CHECK(slurp(csv).find("maxwell_resid") != std::string::npos);
}

TEST_CASE("cycle integrates a loop spec") {
  const auto corpus = (g_dir / "c10.corpus").string();
  const auto spec = g_dir / "loop.spec";
  {
    std::ofstream out(spec);
    out << "# four-leg loop at fixed mean output\n"
        << "START 1.0 1.0 0.3\n"
        << "ISO_V 0.6\n"
        << "ISO_S 0.85\n"
        << "ISO_V MATCH_S\n"
        << "ISO_S 1.0\n";
  }
  const auto csv = (g_dir / "cycle.csv").string();
  REQUIRE(run_cli("cycle --corpus " + corpus + " --spec " + spec.string() +
                  " --refinement 32 --csv " + csv) == 0);
  CHECK(out_text().find("closure") != std::string::npos);
  CHECK(slurp(csv).find("ISO_V") != std::string::npos);
}

TEST_CASE("bad invocations exit nonzero") {
  CHECK(run_cli("stats --corpus /nonexistent.corpus --beta 1 --gamma 1 --delta 0") ==
        1);
  CHECK(run_cli("nonsense-subcommand") != 0);
  CHECK(run_cli("enumerate --max-len 99 --max-steps 10 --out " +
                (g_dir / "no.corpus").string()) == 1);
}

int main(int argc, char** argv) {
  if (argc < 2) {
    std::fprintf(stderr, "usage: test_cli <path-to-cli-binary>\n");
    return 1;
  }
  g_cli = argv[1];
  g_dir = fs::temp_directory_path() / "algothermo_cli_test";
  fs::create_directories(g_dir);

  doctest::Context ctx;
  ctx.applyCommandLine(1, argv);
  const int rc = ctx.run();
  fs::remove_all(g_dir);
  return rc;
}
