// soap-sim: scenario runner, frame and size reports, crypto timings, and the
// attack suite.
//
// Exit codes: 0 success, 1 expectation or verdict mismatch, 2 usage error.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "soap/attack_suite.hpp"
#include "soap/metrics.hpp"
#include "soap/scenario_json.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kMismatch = 1;
constexpr int kUsage = 2;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::uint64_t resolve_seed(const std::optional<std::uint64_t>& flag) {
  if (flag) return *flag;
  const char* env = std::getenv("SOAP_SIM_SEED");
  if (!env || !*env) return 0;
  try {
    std::size_t used = 0;
    auto value = std::stoull(env, &used, 10);
    if (used != std::string_view(env).size()) throw std::invalid_argument(env);
    return value;
  } catch (const std::exception&) {
    throw UsageError(std::string("SOAP_SIM_SEED is not an unsigned integer: ") + env);
  }
}

void emit(const std::string& text, const std::string& output) {
  if (output.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream out(output, std::ios::binary);
  if (!out) throw UsageError("cannot write " + output);
  out << text;
}

struct RunArgs {
  std::string scenario;
  std::optional<std::uint64_t> seed;
  std::string output;
  std::string format = "json";
  bool hex = false;
};

int cmd_run(const RunArgs& a) {
  const auto script = soap::sim::load_scenario(a.scenario);
  const auto transcript = soap::sim::run_scenario(script, resolve_seed(a.seed));
  const auto report = soap::sim::check_expectations(script, transcript);
  const soap::sim::TranscriptFormat format{a.hex};
  emit(a.format == "text" ? soap::sim::transcript_to_text(transcript, &report, format)
                          : soap::sim::transcript_to_json(transcript, &report, format),
       a.output);
  for (const auto& f : report.failures) std::cerr << "expectation not met: " << f << "\n";
  return report.all_met ? kOk : kMismatch;
}

struct FramesArgs {
  unsigned group = soap::crypto::kGroupP224;
  std::size_t m = 1;
  bool strict = false;
  std::optional<std::uint64_t> seed;
  std::string output;
  std::string format = "text";
};

int cmd_frames(const FramesArgs& a) {
  if (a.group > 255 || !soap::crypto::registry_lookup(static_cast<soap::crypto::GroupId>(a.group))) {
    throw UsageError("unknown group " + std::to_string(a.group));
  }
  if (a.m > soap::frames::kMaxElementPayload - 2 - 66) throw UsageError("--m is too large for one element");
  const auto group = static_cast<soap::crypto::GroupId>(a.group);
  const auto report = soap::metrics::size_report(group, a.m, a.strict);
  const auto golden = soap::metrics::golden_frames(group, a.m, a.strict, resolve_seed(a.seed));
  std::string text;
  if (a.format == "csv") {
    text = soap::metrics::to_csv(report);
  } else if (a.format == "json") {
    auto doc = nlohmann::ordered_json::parse(soap::metrics::to_json(report));
    for (const auto& f : golden) doc["hex"][f.name] = soap::to_hex(f.octets);
    text = doc.dump(2) + "\n";
  } else {
    text = soap::metrics::to_text(report) + "\n";
    for (const auto& f : golden) {
      text += f.name + " (" + std::to_string(f.octets.size()) + " octets)\n" + soap::hex_dump(f.octets) + "\n";
    }
  }
  emit(text, a.output);
  return kOk;
}

struct BenchArgs {
  unsigned group = soap::crypto::kGroupP224;
  std::size_t iterations = 100;
  std::string output;
  std::string format = "text";
};

int cmd_bench(const BenchArgs& a) {
  if (a.group > 255 || !soap::crypto::registry_lookup(static_cast<soap::crypto::GroupId>(a.group))) {
    throw UsageError("unknown group " + std::to_string(a.group));
  }
  if (a.iterations < 100) throw UsageError("--iterations must be at least 100");
  const auto report = soap::metrics::bench_crypto(static_cast<soap::crypto::GroupId>(a.group), a.iterations);
  emit(a.format == "json" ? soap::metrics::to_json(report) : soap::metrics::to_text(report), a.output);
  return kOk;
}

struct SuiteArgs {
  std::optional<std::uint64_t> seed;
  bool no_blacklist = false;
  bool no_signing = false;
  bool skip_signature_check = false;
  std::string scenarios;
  std::string export_dir;
  std::string output;
  std::string format = "text";
};

int cmd_attack_suite(const SuiteArgs& a) {
  if (!a.export_dir.empty()) {
    std::filesystem::create_directories(a.export_dir);
    for (const auto& s : soap::attack::suite_scenarios()) {
      std::ofstream(std::filesystem::path(a.export_dir) / (s.name + ".json")) << soap::sim::scenario_to_json(s);
    }
    return kOk;
  }
  soap::attack::SuiteOptions o;
  o.seed = resolve_seed(a.seed);
  o.blacklist = !a.no_blacklist;
  o.mgmt_signing = !a.no_signing;
  o.debug.skip_signature_check = a.skip_signature_check;
  if (!a.scenarios.empty()) o.scenario_dir = a.scenarios;
  const auto report = soap::attack::run_attack_suite(o);
  emit(a.format == "json" ? soap::attack::to_json(report) : soap::attack::to_text(report), a.output);
  return report.all_match ? kOk : kMismatch;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"SOAP handshake simulator and reports"};
  app.require_subcommand(1);
  const std::vector<std::string> text_json{"text", "json"};

  RunArgs run;
  auto* run_cmd = app.add_subcommand("run", "Run a scenario file and check its expectations");
  run_cmd->add_option("scenario", run.scenario, "Scenario JSON file")->required()->check(CLI::ExistingFile);
  run_cmd->add_option("--seed", run.seed, "Random seed (default: $SOAP_SIM_SEED or 0)");
  run_cmd->add_option("-o,--output", run.output, "Write the transcript here instead of stdout");
  run_cmd->add_option("--format", run.format)->check(CLI::IsMember(text_json));
  run_cmd->add_flag("--hex", run.hex, "Include every frame's octets");

  FramesArgs frames;
  auto* frames_cmd = app.add_subcommand("frames", "Golden hex dumps and the frame size table");
  frames_cmd->add_option("--group", frames.group, "ECDH group id");
  frames_cmd->add_option("--m", frames.m, "Number of advertised groups");
  frames_cmd->add_flag("--strict", frames.strict, "Sign the public key only; no session nonce");
  frames_cmd->add_option("--seed", frames.seed, "Key material seed (default: $SOAP_SIM_SEED or 0)");
  frames_cmd->add_option("-o,--output", frames.output);
  frames_cmd->add_option("--format", frames.format)->check(CLI::IsMember({"text", "json", "csv"}));

  BenchArgs bench;
  auto* bench_cmd = app.add_subcommand("bench", "Time the handshake's crypto operations");
  bench_cmd->add_option("--group", bench.group, "ECDH/ECDSA group id");
  bench_cmd->add_option("--iterations", bench.iterations, "Samples per operation (at least 100)");
  bench_cmd->add_option("-o,--output", bench.output);
  bench_cmd->add_option("--format", bench.format)->check(CLI::IsMember(text_json));

  SuiteArgs suite;
  auto* suite_cmd = app.add_subcommand("attack-suite", "Run one scenario per threat and compare verdicts");
  suite_cmd->add_option("--seed", suite.seed, "Random seed (default: $SOAP_SIM_SEED or 0)");
  suite_cmd->add_flag("--no-blacklist", suite.no_blacklist, "Disable blacklisting in the mitigation cases");
  suite_cmd->add_flag("--no-mgmt-signing", suite.no_signing, "Disable management frame signing");
  suite_cmd->add_flag("--skip-signature-check", suite.skip_signature_check,
                      "Mutation test: stations accept any SOAP signature");
  suite_cmd->add_option("--scenarios", suite.scenarios, "Load <case>.json files from this directory")
      ->check(CLI::ExistingDirectory);
  suite_cmd->add_option("--export", suite.export_dir, "Write the built-in scenarios here and exit");
  suite_cmd->add_option("-o,--output", suite.output);
  suite_cmd->add_option("--format", suite.format)->check(CLI::IsMember(text_json));

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  try {
    if (*run_cmd) return cmd_run(run);
    if (*frames_cmd) return cmd_frames(frames);
    if (*bench_cmd) return cmd_bench(bench);
    if (*suite_cmd) return cmd_attack_suite(suite);
  } catch (const soap::sim::ScriptError& e) {
    std::cerr << "invalid scenario: " << e.what() << "\n";
    return kUsage;
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  }
  return kUsage;
}
