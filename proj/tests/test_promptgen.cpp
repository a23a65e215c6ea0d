#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <thread>

#include "aadllm/promptgen.hpp"

using namespace aadllm;
using namespace aadllm::prompt;

namespace {

const char* kContext = R"(# comment
[context]
Raw operator notes.
Second line.

[restructured_context]
Cleaned up notes.

[correlation_groups]
# comments are fine here
pack = A, B
thermal = B, C

[normal_ranges]
A = 1.5, 2.5

[settings]
z_threshold_hint = 2.5
)";

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected an aadllm::Error";
  return ErrorCode::Io;
}

stats::StatDerivatives sd(double max, double z, double mean = 0.0, double std = 1.0) {
  stats::StatDerivatives s;
  s.window_max = max;
  s.z_score = z;
  s.baseline_mean = mean;
  s.baseline_std = std;
  return s;
}

}  // namespace

TEST(ParseContext, AllSections) {
  auto ctx = parse_domain_context(kContext);
  EXPECT_EQ(ctx.raw_text, "Raw operator notes.\nSecond line.");
  EXPECT_EQ(ctx.restructured_text, "Cleaned up notes.");
  EXPECT_EQ(ctx.prompt_text(), "Cleaned up notes.");
  ASSERT_EQ(ctx.correlation_groups.size(), 2u);
  EXPECT_EQ(ctx.correlation_groups[0].name, "pack");
  EXPECT_EQ(ctx.correlation_groups[1].members, (std::vector<std::string>{"B", "C"}));
  ASSERT_TRUE(ctx.range_for("A"));
  EXPECT_EQ(*ctx.range_for("A"), (NormalRange{1.5, 2.5}));
  EXPECT_FALSE(ctx.range_for("B"));
  EXPECT_EQ(ctx.z_threshold_hint, 2.5);
}

TEST(ParseContext, RawTextUsedWithoutRestructured) {
  auto ctx = parse_domain_context("[context]\nonly raw\n");
  EXPECT_EQ(ctx.prompt_text(), "only raw");
  EXPECT_TRUE(ctx.correlation_groups.empty());
}

TEST(ParseContext, Malformed) {
  for (const char* bad : {
           "",
           "[context]\n\n",
           "stray\n[context]\nx\n",
           "[context]\nx\n[weird]\n",
           "[context]\nx\n[correlation_groups]\ng = A\n",
           "[context]\nx\n[correlation_groups]\ng = A, A\n",
           "[context]\nx\n[correlation_groups]\ng = A, B\ng = C, D\n",
           "[context]\nx\n[correlation_groups]\nno equals sign\n",
           "[context]\nx\n[normal_ranges]\nA = 3, 1\n",
           "[context]\nx\n[normal_ranges]\nA = low, 1\n",
           "[context]\nx\n[normal_ranges]\nA = 1, 2\nA = 1, 3\n",
           "[context]\nx\n[settings]\ncolor = red\n",
           "[context]\nx\n[settings]\nz_threshold_hint = -1\n",
       }) {
    EXPECT_EQ(code_of([&] { parse_domain_context(bad); }), ErrorCode::MalformedContext) << bad;
  }
}

TEST(ParseContext, ValidateForInstanceChannels) {
  auto ctx = parse_domain_context(kContext);
  std::vector<std::string> ok{"A", "B", "C"}, missing{"A", "B"};
  EXPECT_NO_THROW(validate_for(ctx, ok));
  EXPECT_EQ(code_of([&] { validate_for(ctx, missing); }), ErrorCode::MalformedContext);
}

TEST(ContextCache, ParsesOncePerFile) {
  const auto dir = std::filesystem::temp_directory_path() / "aadllm_ctx_cache";
  std::filesystem::create_directories(dir);
  const auto path = dir / "ctx.txt";
  std::ofstream(path) << kContext;
  ContextCache cache;
  auto a = cache.load(path);
  auto b = cache.load(dir / "." / "ctx.txt");
  EXPECT_EQ(a.get(), b.get());
  EXPECT_EQ(cache.parse_count(), 1u);

  std::vector<std::thread> pool;
  std::vector<const DomainContext*> seen(8);
  for (std::size_t i = 0; i < seen.size(); ++i) {
    pool.emplace_back([&, i] { seen[i] = cache.load(path).get(); });
  }
  for (auto& t : pool) t.join();
  for (auto* p : seen) EXPECT_EQ(p, a.get());
  EXPECT_EQ(cache.parse_count(), 1u);

  EXPECT_EQ(code_of([&] { cache.load(dir / "absent.txt"); }), ErrorCode::FileNotFound);
}

TEST(Render, SentenceSkeleton) {
  auto s = render_channel_template("Temperature 1", sd(210.5, 0.12), "mean 208.1, std 1.9");
  EXPECT_EQ(s,
            "Temperature 1 has a maximum of 210.500 and a z-score of 0.120000. "
            "Normal operating conditions for Temperature 1 is mean 208.1, std 1.9.");
  EXPECT_FALSE(has_placeholder(s));
}

TEST(Render, NoSignedZero) {
  EXPECT_EQ(format_number(0.0), "0.00000");
  EXPECT_EQ(format_number(-0.0), "0.00000");
  auto s = render_channel_template("A", sd(1.0, -0.0), "x");
  EXPECT_NE(s.find("z-score of 0.00000."), std::string::npos);
  EXPECT_EQ(format_number(-1234567.0), "-1.23457e+06");
}

TEST(Render, NormalDescriptor) {
  EXPECT_EQ(normal_descriptor(sd(0, 0, 208.1, 1.9)), "mean 208.100, std 1.90000");
  EXPECT_EQ(normal_descriptor(sd(0, 0, 5, 1), NormalRange{1, 9}),
            "mean 5.00000, std 1.00000, configured range 1.00000 to 9.00000");
}

TEST(Assemble, ThreeChannelsInOrder) {
  auto ctx = parse_domain_context(kContext);
  std::vector<std::string> names{"C", "A", "B"};
  std::vector<std::string> renders;
  for (const auto& n : names) renders.push_back(render_channel_template(n, sd(1, 1), "n"));
  auto b = assemble_prompt(ctx, names, renders);
  const auto pc = b.data_block.find("C has"), pa = b.data_block.find("A has"), pb = b.data_block.find("B has");
  ASSERT_NE(pc, std::string::npos);
  EXPECT_LT(pc, pa);
  EXPECT_LT(pa, pb);
  EXPECT_EQ(b.data_block.rfind("The following sensor data was collected over the last 15 minutes", 0), 0u);
  const auto text = b.text();
  EXPECT_EQ(text.rfind("CONTEXT: Cleaned up notes.", 0), 0u);
  EXPECT_LT(text.find("DATA: "), text.find(b.instruction));
  EXPECT_LT(text.find(b.instruction), text.find("VERDICT: <channel>"));
  EXPECT_NE(b.response_schema.find("C; A; B."), std::string::npos);
  EXPECT_FALSE(has_placeholder(text));
}

TEST(Assemble, Errors) {
  auto ctx = parse_domain_context(kContext);
  std::vector<std::string> none;
  EXPECT_EQ(code_of([&] { assemble_prompt(ctx, none, none); }), ErrorCode::ChannelCountMismatch);
  std::vector<std::string> one{"A"}, two{"x", "y"};
  EXPECT_EQ(code_of([&] { assemble_prompt(ctx, one, two); }), ErrorCode::ChannelCountMismatch);
  PromptOptions tiny;
  tiny.max_chars = 50;
  std::vector<std::string> r{"A has..."};
  EXPECT_EQ(code_of([&] { assemble_prompt(ctx, one, r, tiny); }), ErrorCode::PromptTooLong);
  std::vector<std::string> leftover{"{max}"};
  EXPECT_EQ(code_of([&] { assemble_prompt(ctx, one, leftover); }), ErrorCode::MalformedContext);
}

TEST(Assemble, DeterministicAndRangesFilled) {
  auto ctx = parse_domain_context(kContext);
  std::vector<ChannelEntry> entries{{"A", sd(2.0, 0.5, 2.0, 0.1), std::nullopt}, {"B", sd(3.0, 1.5), std::nullopt}};
  auto a = build_prompt(ctx, entries), b = build_prompt(ctx, entries);
  EXPECT_EQ(a.text(), b.text());
  ASSERT_TRUE(a.entries[0].range);
  EXPECT_FALSE(a.entries[1].range);
  EXPECT_NE(a.data_block.find("configured range 1.50000 to 2.50000"), std::string::npos);
}
