#include <doctest.h>

#include <yaml-cpp/yaml.h>

#include <cstdlib>
#include <filesystem>

#include <nlohmann/json.hpp>

#include "idorscan/cli.hpp"
#include "test_support.hpp"

using namespace idorscan;
using namespace idorscan::cli;
using test_support::fixture_path;
using test_support::read_file;
using test_support::TempDir;
namespace fs = std::filesystem;

namespace {

ScanConfig config_for(const fs::path& input, const fs::path& out_dir) {
  ScanConfig config;
  config.input_path = input.string();
  config.output_dir = out_dir.string();
  return config;
}

}  // namespace

TEST_CASE("cmd_scan exit codes and outputs") {
  TempDir dir("scan");
  SUBCASE("findings present with fail-on-findings") {
    ScanConfig config = config_for(fixture_path("vaults.yaml"), dir.path());
    config.fail_on_findings = true;
    CHECK(cmd_scan(config) == kExitFindings);
    YAML::Node report = YAML::Load(read_file(dir.path() / "vaults.report.yaml"));
    CHECK(report["/vaults/{vaultUuid}"]["count"].as<int>() == 3);
    auto metrics = nlohmann::json::parse(read_file(dir.path() / "vaults.metrics.json"));
    CHECK(metrics["findings_total"] == 3);
    // Without the flag the same scan exits clean.
    config.fail_on_findings = false;
    CHECK(cmd_scan(config) == kExitClean);
  }
  SUBCASE("empty specification") {
    fs::path input = dir.path() / "empty.yaml";
    test_support::write_file(input, "openapi: \"3.0.0\"\npaths: {}\n");
    ScanConfig config = config_for(input, dir.path());
    config.fail_on_findings = true;
    CHECK(cmd_scan(config) == kExitClean);
    YAML::Node report = YAML::Load(read_file(dir.path() / "empty.report.yaml"));
    CHECK(report.size() == 0);
  }
  SUBCASE("malformed input exits 2 and writes nothing") {
    fs::path input = dir.path() / "broken.yaml";
    test_support::write_file(input, "paths: [unterminated\n");
    ScanConfig config = config_for(input, dir.path());
    CHECK(cmd_scan(config) == kExitInputError);
    CHECK_FALSE(fs::exists(dir.path() / "broken.report.yaml"));
    CHECK_FALSE(fs::exists(dir.path() / "broken.metrics.json"));
  }
  SUBCASE("missing input exits 2") {
    ScanConfig config = config_for(dir.path() / "absent.yaml", dir.path());
    CHECK(cmd_scan(config) == kExitInputError);
  }
  SUBCASE("json report format") {
    ScanConfig config = config_for(fixture_path("vaults.yaml"), dir.path());
    config.format = reporting::ReportFormat::Json;
    CHECK(cmd_scan(config) == kExitClean);
    auto report = nlohmann::json::parse(read_file(dir.path() / "vaults.report.json"));
    CHECK(report["/vaults/{vaultUuid}"]["count"] == 3);
  }
}

TEST_CASE("cmd_annotate writes the annotated document") {
  TempDir dir("annotate");
  SUBCASE("vault fixture") {
    CHECK(cmd_annotate(config_for(fixture_path("vaults.yaml"), dir.path())) == kExitClean);
    std::string annotated = read_file(dir.path() / "vaults.annotated.yaml");
    CHECK(annotated.find("parameter_level_properties:") != std::string::npos);
    CHECK(annotated.find("method_level_properties:") != std::string::npos);
    CHECK(annotated.find("endpoint_level_properties:") != std::string::npos);
  }
  SUBCASE("empty specification is stamped") {
    fs::path input = dir.path() / "empty.yaml";
    test_support::write_file(input, "openapi: \"3.0.0\"\npaths: {}\n");
    CHECK(cmd_annotate(config_for(input, dir.path())) == kExitClean);
    std::string annotated = read_file(dir.path() / "empty.annotated.yaml");
    CHECK(annotated.rfind("# idorscan:", 0) == 0);
  }
  SUBCASE("ten endpoint corpus annotates ten endpoints") {
    GenerateConfig generate_config;
    fs::path plan = dir.path() / "plan.yaml";
    test_support::write_file(plan, "seed: 6\nclean_count: 10\n");
    generate_config.plan_path = plan.string();
    generate_config.out_dir = dir.path().string();
    REQUIRE(cmd_generate(generate_config) == kExitClean);
    CHECK(cmd_annotate(config_for(dir.path() / "corpus.yaml", dir.path())) == kExitClean);
    std::string annotated = read_file(dir.path() / "corpus.annotated.yaml");
    std::size_t blocks = 0;
    for (std::size_t pos = annotated.find("endpoint_level_properties:");
         pos != std::string::npos;
         pos = annotated.find("endpoint_level_properties:", pos + 1)) {
      ++blocks;
    }
    CHECK(blocks == 10);
  }
}

TEST_CASE("cmd_metrics against a generated sidecar") {
  TempDir dir("metrics");
  fs::path plan = dir.path() / "plan.yaml";
  test_support::write_file(plan,
                           "seed: 12\n"
                           "clean_count: 3\n"
                           "plants:\n"
                           "  - technique: Enumeration without a priori knowledge\n"
                           "    count: 2\n");
  GenerateConfig generate_config;
  generate_config.plan_path = plan.string();
  generate_config.out_dir = dir.path().string();
  REQUIRE(cmd_generate(generate_config) == kExitClean);

  SUBCASE("recall is total on plants") {
    CHECK(cmd_metrics(config_for(dir.path() / "corpus.yaml", dir.path()),
                      (dir.path() / "corpus.truth.yaml").string()) == kExitClean);
    auto metrics = nlohmann::json::parse(read_file(dir.path() / "corpus.metrics.json"));
    CHECK(metrics["truth"]["identifier_true_positive_percent"] == 100.0);
    CHECK(metrics["truth"]["test_true_positive_percent"] == 100.0);
    CHECK(metrics["truth"]["false_negative_percent"] == 0.0);
    CHECK(metrics["endpoint_processing_ratio_percent"] == 100.0);
  }
  SUBCASE("mismatched sidecar exits 2") {
    fs::path bad = dir.path() / "bad.truth.yaml";
    test_support::write_file(bad, "/not/a/real/path:\n  identifiers: []\n");
    CHECK(cmd_metrics(config_for(dir.path() / "corpus.yaml", dir.path()), bad.string()) ==
          kExitInputError);
  }
  SUBCASE("missing sidecar exits 2") {
    CHECK(cmd_metrics(config_for(dir.path() / "corpus.yaml", dir.path()),
                      (dir.path() / "absent.yaml").string()) == kExitInputError);
  }
}

TEST_CASE("cmd_generate writes both corpus files") {
  TempDir dir("generate");
  fs::path plan = dir.path() / "plan.yaml";
  test_support::write_file(plan,
                           "seed: 1\n"
                           "clean_count: 1\n"
                           "plants:\n"
                           "  - technique: Parameter pollution\n"
                           "    count: 1\n");
  GenerateConfig config;
  config.plan_path = plan.string();
  config.out_dir = (dir.path() / "out").string();
  CHECK(cmd_generate(config) == kExitClean);
  CHECK(fs::exists(dir.path() / "out" / "corpus.yaml"));
  CHECK(fs::exists(dir.path() / "out" / "corpus.truth.yaml"));
  SUBCASE("seed override changes the corpus") {
    GenerateConfig other = config;
    other.seed = 999;
    other.out_dir = (dir.path() / "other").string();
    CHECK(cmd_generate(other) == kExitClean);
    CHECK(read_file(dir.path() / "out" / "corpus.yaml") !=
          read_file(dir.path() / "other" / "corpus.yaml"));
  }
  SUBCASE("invalid plan exits 2") {
    fs::path bad = dir.path() / "bad.yaml";
    test_support::write_file(bad, "clean_count: -4\n");
    GenerateConfig invalid;
    invalid.plan_path = bad.string();
    invalid.out_dir = dir.path().string();
    CHECK(cmd_generate(invalid) == kExitInputError);
    CHECK_FALSE(fs::exists(dir.path() / "corpus.yaml"));
  }
}

TEST_CASE("installed binary honors the exit-code contract") {
  TempDir dir("binary");
  const std::string binary = IDORSCAN_BIN;
  auto run = [&](const std::string& args) {
    std::string cmd = binary + " " + args + " > /dev/null 2>&1";
    int status = std::system(cmd.c_str());
    return WEXITSTATUS(status);
  };
  CHECK(run("scan " + fixture_path("vaults.yaml").string() + " --out-dir " +
            dir.path().string() + " --fail-on-findings") == kExitFindings);
  CHECK(run("scan " + fixture_path("vaults.yaml").string() + " --out-dir " +
            dir.path().string()) == kExitClean);
  fs::path broken = dir.path() / "broken.yaml";
  test_support::write_file(broken, "][\n");
  CHECK(run("scan " + broken.string() + " --out-dir " + dir.path().string()) == kExitInputError);
  CHECK(run("annotate " + fixture_path("petstore.yaml").string() + " --out-dir " +
            dir.path().string()) == kExitClean);
  CHECK(run("nonsense") == kExitInputError);
}
