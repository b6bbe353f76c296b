#include <doctest.h>

#include "commands.hpp"
#include "run_config.hpp"
#include "sdistill/util/error.hpp"

using namespace sdistill;
using cli::RunConfig;

TEST_CASE("config precedence: default, file, section, command line, --set") {
  RunConfig c("corrupt", cli::command_specs());
  CHECK(c.str("rate") == "0.15");
  c.merge_file_text("# comment\ncorrupt.dupe = 3\ndupe=2\nrate=0.2\n\n", "demo.conf");
  CHECK(c.str("dupe") == "3");  // section beats global regardless of order
  CHECK(c.real("rate") == 0.2);
  c.set_from_cli("rate", "0.3");
  CHECK(c.real("rate") == 0.3);
  c.apply_override("corrupt.rate=0.25");
  CHECK(c.real("rate") == 0.25);
}

TEST_CASE("config keys accept underscores; foreign keys are skipped, unknown ones rejected") {
  RunConfig c("train-student", cli::command_specs());
  c.merge_file_text("learning_rate=0.5\ngrammar=x.pcfg\nsample.n=10\n", "f");
  CHECK(c.real("learning-rate") == 0.5);
  CHECK_THROWS_AS(c.merge_file_text("no_such_key=1\n", "f"), UsageError);
  CHECK_THROWS_AS(c.merge_file_text("nocommand.rate=1\n", "f"), UsageError);
  CHECK_THROWS_AS(c.merge_file_text("sample.no_such_key=1\n", "f"), UsageError);
  CHECK_THROWS_AS(c.merge_file_text("just text\n", "f"), UsageError);
  CHECK_THROWS_AS(RunConfig("nope", cli::command_specs()), UsageError);
}

TEST_CASE("typed getters and the echo") {
  RunConfig c("sample", cli::command_specs());
  CHECK_THROWS_AS(c.required("output"), UsageError);
  c.set_from_cli("n", "ten");
  CHECK_THROWS_AS(c.integer("n"), UsageError);
  c.set_from_cli("n", "10");
  c.set_from_cli("seed", "18446744073709551615");
  CHECK(c.u64("seed") == 18446744073709551615ULL);
  c.set_from_cli("jobs", "4");
  const auto echo = c.echo();
  CHECK(echo.find("n=10\n") != std::string::npos);
  CHECK(echo.find("jobs") == std::string::npos);
  RunConfig d("sample", cli::command_specs());
  d.set_from_cli("n", "10");
  d.set_from_cli("seed", "18446744073709551615");
  CHECK(d.echo() == echo);  // jobs never reaches the echo
}

TEST_CASE("every file format reports a version") {
  const auto v = cli::version_text();
  for (const char* f : {"tree-file", "action-file", "checkpoint", "posterior-dump", "masks", "kd-dataset",
                        "probe-dataset", "unigram-model", "ngram-model"}) {
    CHECK(v.find(f) != std::string::npos);
  }
}
