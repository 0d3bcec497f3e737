#include "soap/attack_suite.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "json.hpp"
#include "soap/scenario_json.hpp"

namespace {

using namespace soap;
using namespace soap::attack;

const CaseResult& find_case(const SuiteReport& r, const std::string& scenario) {
  for (const auto& c : r.cases) {
    if (c.scenario == scenario) return c;
  }
  throw std::out_of_range(scenario);
}

std::string describe(const SuiteReport& r) {
  std::string out;
  for (const auto& c : r.cases) {
    if (!c.matches) out += c.scenario + ": " + c.evidence + "\n";
  }
  return out;
}

TEST(AttackSuite, EveryRowMatchesUnderThreeSeeds) {
  for (std::uint64_t seed : {0u, 1u, 2u}) {
    SuiteOptions o;
    o.seed = seed;
    auto r = run_attack_suite(o);
    EXPECT_TRUE(r.all_match) << "seed " << seed << "\n" << describe(r);
    EXPECT_EQ(r.cases.size(), suite_scenarios().size());
  }
}

TEST(AttackSuite, ExpectedMarks) {
  auto r = run_attack_suite({});
  EXPECT_EQ(find_case(r, "ephemeral-psk").expected, Mark::kSecure);
  EXPECT_EQ(find_case(r, "eavesdrop").expected, Mark::kSecure);
  EXPECT_EQ(find_case(r, "replay").expected, Mark::kSecure);
  EXPECT_EQ(find_case(r, "injection").expected, Mark::kVulnerable);
  EXPECT_EQ(find_case(r, "injection-blacklist").expected, Mark::kSolution);
  EXPECT_EQ(find_case(r, "hijack-disassoc").expected, Mark::kVulnerable);
  EXPECT_EQ(find_case(r, "hijack-signed").expected, Mark::kSolution);
  EXPECT_EQ(find_case(r, "hijack-mitm").expected, Mark::kSolution);
  EXPECT_NE(find_case(r, "injection-blacklist").evidence.find("blacklisted after 3 "), std::string::npos);
}

TEST(AttackSuite, DisabledMitigationTurnsRowVulnerable) {
  SuiteOptions o;
  o.blacklist = false;
  auto r = run_attack_suite(o);
  EXPECT_TRUE(r.all_match) << describe(r);
  const auto& c = find_case(r, "injection-blacklist");
  EXPECT_EQ(c.expected, Mark::kVulnerable);
  EXPECT_EQ(c.observed, Mark::kVulnerable);

  SuiteOptions unsigned_frames;
  unsigned_frames.mgmt_signing = false;
  auto u = run_attack_suite(unsigned_frames);
  EXPECT_TRUE(u.all_match) << describe(u);
  EXPECT_EQ(find_case(u, "hijack-signed").observed, Mark::kVulnerable);
}

TEST(AttackSuite, SkippingSignatureChecksIsDetected) {
  SuiteOptions o;
  o.debug.skip_signature_check = true;
  auto r = run_attack_suite(o);
  EXPECT_FALSE(r.all_match);
  EXPECT_FALSE(find_case(r, "hijack-mitm").matches);
}

TEST(AttackSuite, ExportedScenariosReproduceTheBuiltIns) {
  auto dir = std::filesystem::temp_directory_path() / "soap_attack_suite_export";
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  for (const auto& s : suite_scenarios()) {
    std::ofstream(dir / (s.name + ".json")) << sim::scenario_to_json(s);
  }
  SuiteOptions from_files;
  from_files.scenario_dir = dir;
  EXPECT_EQ(to_text(run_attack_suite(from_files)), to_text(run_attack_suite({})));
  std::filesystem::remove_all(dir);
}

TEST(AttackSuite, ReportsAreDeterministic) {
  SuiteOptions o;
  o.seed = 9;
  EXPECT_EQ(to_json(run_attack_suite(o)), to_json(run_attack_suite(o)));
  auto doc = nlohmann::json::parse(to_json(run_attack_suite(o)));
  EXPECT_EQ(doc["seed"], 9);
  EXPECT_EQ(doc["cases"].size(), suite_scenarios().size());
}

}  // namespace
