#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "irm/dataset.hpp"
#include "irm/errors.hpp"
#include "irm/synthetic.hpp"
#include "oracles.hpp"

namespace fs = std::filesystem;
using namespace irm;

namespace {

IVQAItem basic_item() {
  IVQAItem item;
  item.id = "i0";
  item.video_id = "v0";
  item.duration = 60.0;
  item.excluded_spans = {{7, 23}};
  item.question = "Why does the boy climb?";
  item.options = {"to play", "to rest"};
  item.answer_index = 0;
  item.clues.push_back({"the boy grabs the bar", "swing", {30, 40}, 1, false, ""});
  return item;
}

fs::path temp_path(const std::string& name) {
  return fs::temp_directory_path() / ("irm_dataset_" + std::to_string(::getpid()) + "_" + name);
}

}  // namespace

TEST(ExtendSpan, MiddleOfVideo) {
  const auto s = extend_span({10, 20}, 60, 20);
  EXPECT_DOUBLE_EQ(s.start, 7);
  EXPECT_DOUBLE_EQ(s.end, 23);
}

TEST(ExtendSpan, ClampsAtBothEnds) {
  EXPECT_EQ(extend_span({0, 5}, 60, 20), (TimeSpan{0, 8}));
  EXPECT_EQ(extend_span({55, 60}, 60, 20), (TimeSpan{52, 60}));
}

TEST(ExtendSpan, DefaultSigmaIsTwenty) {
  EXPECT_EQ(kDefaultSigma, 20.0);
  EXPECT_EQ(extend_span({10, 20}, 60), (TimeSpan{7, 23}));
}

TEST(ExtendSpan, RejectsInvalidSpans) {
  EXPECT_THROW(extend_span({5, 5}, 60, 20), ValidationError);
  EXPECT_THROW(extend_span({50, 70}, 60, 20), ValidationError);
  EXPECT_THROW(extend_span({-1, 3}, 60, 20), ValidationError);
  EXPECT_THROW(extend_span({1, 3}, 60, 0), ValidationError);
}

TEST(ExtendSpan, SmallerSigmaWidensMask) {
  oracle::Gen g(11);
  for (int trial = 0; trial < 200; ++trial) {
    const double d = g.real(10, 300);
    const double a = g.real(0, d * 0.9);
    const double b = g.real(a + 1e-3, d);
    const auto wide = extend_span({a, b}, d, 10);
    const auto narrow = extend_span({a, b}, d, 20);
    EXPECT_LE(wide.start, narrow.start);
    EXPECT_GE(wide.end, narrow.end);
  }
}

TEST(VisibleTimeline, Examples) {
  const std::vector<EvidenceSpan> one = {{7, 23}};
  EXPECT_EQ(visible_timeline(60, one), (std::vector<TimeSpan>{{0, 7}, {23, 60}}));
  const std::vector<EvidenceSpan> all = {{0, 60}};
  EXPECT_TRUE(visible_timeline(60, all).empty());
  const std::vector<EvidenceSpan> overlap = {{10, 20}, {15, 30}};
  EXPECT_EQ(visible_timeline(60, overlap), (std::vector<TimeSpan>{{0, 10}, {30, 60}}));
}

TEST(VisibleTimeline, MeasuresAddUpOnRandomSpanSets) {
  oracle::Gen g(5);
  for (int trial = 0; trial < 500; ++trial) {
    const double d = g.real(1, 500);
    std::vector<EvidenceSpan> spans;
    std::vector<oracle::Interval> ref;
    const int n = g.integer(0, 5);
    for (int i = 0; i < n; ++i) {
      const double a = g.real(0, d * 0.95);
      const double b = g.real(a + 1e-6, d);
      spans.push_back({a, b});
      ref.push_back({a, b});
    }
    const auto visible = visible_timeline(d, spans);
    double visible_len = 0.0;
    for (std::size_t i = 0; i < visible.size(); ++i) {
      EXPECT_LT(visible[i].start, visible[i].end);
      if (i > 0) EXPECT_LT(visible[i - 1].end, visible[i].start + 1e-12);
      visible_len += visible[i].length();
    }
    EXPECT_NEAR(visible_len + oracle::union_measure(ref), d, 1e-9);
  }
}

TEST(SampleFrames, MidpointRule) {
  const std::vector<TimeSpan> one = {{0, 8}};
  EXPECT_EQ(sample_frames(one, 4), (std::vector<double>{1, 3, 5, 7}));
  const std::vector<TimeSpan> gap = {{0, 4}, {6, 10}};
  EXPECT_EQ(sample_frames(gap, 4), (std::vector<double>{1, 3, 7, 9}));
  const std::vector<TimeSpan> full = {{0, 60}};
  const auto eight = sample_frames(full, 8);
  ASSERT_EQ(eight.size(), 8u);
  for (std::size_t i = 0; i < 8; ++i) EXPECT_DOUBLE_EQ(eight[i], 3.75 + 7.5 * static_cast<double>(i));
}

TEST(SampleFrames, FullyMaskedIsAnError) {
  try {
    sample_frames(std::vector<TimeSpan>{}, 4);
    FAIL() << "expected an error";
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("fully masked video"), std::string::npos);
  }
  const std::vector<TimeSpan> one = {{0, 8}};
  EXPECT_THROW(sample_frames(one, 0), ValidationError);
}

TEST(Filters, TemporalAnswers) {
  EXPECT_TRUE(answer_has_timestamp("at 00:15"));
  EXPECT_FALSE(answer_has_timestamp("happy"));
  EXPECT_TRUE(answer_has_timestamp("from 12s to 20s"));
  EXPECT_TRUE(answer_has_timestamp("at 5 seconds"));
  EXPECT_TRUE(answer_has_timestamp("1:02:03"));
  EXPECT_TRUE(answer_has_timestamp("after 3 minutes"));
  EXPECT_FALSE(answer_has_timestamp("to catch 2 fish"));
  EXPECT_FALSE(answer_has_timestamp("the ratio is 3 to 1"));
  IVQAItem item = basic_item();
  item.answer = "at 00:15";
  item.answer_index.reset();
  item.options.clear();
  EXPECT_TRUE(filter_temporal_answer(item));
}

TEST(Filters, WhInsufficient) {
  IVQAItem item = basic_item();
  item.question = "When does the boy fall?";
  EXPECT_TRUE(filter_wh_insufficient(item));
  item.question = "  where is the vase?";
  EXPECT_TRUE(filter_wh_insufficient(item));
  item.question = "Why did the man laugh?";
  EXPECT_FALSE(filter_wh_insufficient(item));
  item.question = "Whenever possible, what does he do?";
  EXPECT_FALSE(filter_wh_insufficient(item));
}

TEST(ClueEligibility, Examples) {
  const std::vector<EvidenceSpan> ex = {{7, 23}};
  EXPECT_TRUE(check_clue_eligibility({0, 6}, ex));
  EXPECT_FALSE(check_clue_eligibility({5, 9}, ex));
  EXPECT_TRUE(check_clue_eligibility({23, 30}, ex));
  EXPECT_TRUE(check_clue_eligibility({0, 7}, ex));
}

TEST(RelationAnnotation, ScriptedJudge) {
  const std::vector<ClueCandidate> clues = {{"a", "b"}, {"c", "d"}, {"e", "f"}};
  ScriptedRelationJudge judge({"1,0,1"});
  const auto r = annotate_relations(clues, "why?", judge);
  ASSERT_TRUE(r.complete());
  ASSERT_EQ(r.labels.size(), 3u);
  EXPECT_EQ(*r.labels[0], 1);
  EXPECT_EQ(*r.labels[1], 0);
  EXPECT_EQ(*r.labels[2], 1);
}

TEST(RelationAnnotation, EmptyAndUnparseable) {
  ScriptedRelationJudge judge({"no idea"});
  EXPECT_TRUE(annotate_relations(std::vector<ClueCandidate>{}, "q", judge).labels.empty());
  const std::vector<ClueCandidate> clues = {{"a", "b"}, {"c", "d"}};
  const auto r = annotate_relations(clues, "q", judge);
  EXPECT_FALSE(r.complete());
  for (const auto& l : r.labels) EXPECT_FALSE(l.has_value());
}

TEST(RelationAnnotation, ShortReplyFlagsMissingClues) {
  ScriptedRelationJudge judge({"1"});
  const std::vector<ClueCandidate> clues = {{"a", "b"}, {"c", "d"}};
  const auto r = annotate_relations(clues, "q", judge);
  EXPECT_FALSE(r.complete());
  EXPECT_EQ(r.labels[0], 1);
  EXPECT_FALSE(r.labels[1].has_value());
}

TEST(Statistics, Examples) {
  std::vector<IVQAItem> items;
  IVQAItem a = basic_item();
  a.excluded_spans = {{10, 22}};
  a.question = "Why does he run?";
  a.clues.assign(3, a.clues.front());
  IVQAItem b = a;
  b.id = "i1";
  b.question = "What is he holding?";
  b.clues.assign(4, a.clues.front());
  IVQAItem c = a;
  c.id = "i2";
  items = {a, b, c};
  const auto s = compute_statistics(items);
  EXPECT_EQ(s.item_count, 3u);
  EXPECT_EQ(s.question_first_word_histogram.at("Why"), 2u);
  EXPECT_EQ(s.question_first_word_histogram.at("What"), 1u);
  EXPECT_EQ(s.clues_per_item_histogram.at(3), 2u);
  EXPECT_EQ(s.clues_per_item_histogram.at(4), 1u);
  EXPECT_EQ(s.evidence_ratio_histogram.size(), 1u);
  EXPECT_NEAR(s.evidence_ratio_histogram.begin()->first, 0.2, 1e-12);
  for (const auto* h : {&s.duration_histogram, &s.evidence_ratio_histogram}) {
    std::size_t total = 0;
    for (const auto& [k, v] : *h) total += v;
    EXPECT_EQ(total, 3u);
  }
  EXPECT_DOUBLE_EQ(s.relation_positive_fraction, 1.0);
  EXPECT_THROW(compute_statistics(std::vector<IVQAItem>{}), ValidationError);
  EXPECT_NE(render_stats_svg(s).find("<svg"), std::string::npos);
}

TEST(Persistence, RoundTripOfSyntheticItems) {
  SyntheticOptions o;
  o.count = 25;
  o.seed = 99;
  auto items = make_synthetic_dataset(o);
  items[0].extra = {{"source", "custom"}, {"n", 3}};
  const fs::path path = temp_path("roundtrip.jsonl");
  write_dataset(path, items, {{"command", "test"}});
  const auto back = read_dataset(path);
  fs::remove(path);
  ASSERT_EQ(back.size(), items.size());
  for (std::size_t i = 0; i < items.size(); ++i) EXPECT_EQ(back[i], items[i]) << items[i].id;
}

TEST(Persistence, BadLineIsReportedWithItsNumber) {
  const fs::path path = temp_path("bad.jsonl");
  {
    std::ofstream out(path);
    out << item_to_json(basic_item()).dump() << "\n";
    IVQAItem broken = basic_item();
    auto j = item_to_json(broken);
    j["answer_index"] = 7;
    out << j.dump() << "\n";
  }
  try {
    read_dataset(path);
    FAIL() << "expected an error";
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("record 2"), std::string::npos) << e.what();
  }
  fs::remove(path);
}

TEST(ItemValidation, Invariants) {
  IVQAItem item = basic_item();
  EXPECT_NO_THROW(validate_item(item));
  item.answer_index = 2;
  EXPECT_THROW(validate_item(item), ValidationError);
  item = basic_item();
  item.clues[0].source_span = {20, 25};  // overlaps the mask
  EXPECT_THROW(validate_item(item), ValidationError);
  item = basic_item();
  item.clues[0].relation_label = 2;
  EXPECT_THROW(validate_item(item), ValidationError);
  item = basic_item();
  item.clues[0].intent = "";
  EXPECT_THROW(validate_item(item), ValidationError);
  item = basic_item();
  item.excluded_spans = {{50, 70}};
  EXPECT_THROW(validate_item(item), ValidationError);
}

TEST(BuildDataset, FiltersFireOnFixture) {
  const auto sources = read_source(fs::path(IRM_TEST_DATA_DIR) / "fixtures" / "source_10.jsonl");
  ASSERT_EQ(sources.size(), 10u);
  BuildOptions opts;
  const auto result = build_dataset(sources, opts);
  EXPECT_EQ(result.items.size(), 7u);
  ASSERT_EQ(result.dropped.size(), 3u);
  std::multiset<std::string> reasons;
  for (const auto& d : result.dropped) reasons.insert(d.reason.substr(0, d.reason.find(':')));
  EXPECT_EQ(reasons.count("temporal_answer"), 1u);
  EXPECT_EQ(reasons.count("wh_insufficient"), 2u);
  for (const auto& item : result.items) {
    EXPECT_NO_THROW(validate_item(item));
    for (const auto& c : item.clues) EXPECT_TRUE(check_clue_eligibility(c.source_span, item.excluded_spans));
  }
}

TEST(BuildDataset, HooksAndPassthrough) {
  auto sources = read_source(fs::path(IRM_TEST_DATA_DIR) / "fixtures" / "source_10.jsonl");
  BuildOptions opts;
  opts.commonsense_hook = [](const IVQAItem& item) { return item.id == "s1"; };
  const auto result = build_dataset(sources, opts);
  EXPECT_EQ(result.items.size(), 6u);
  bool found = false;
  for (const auto& item : result.items) {
    if (item.id == "s0") {
      found = true;
      EXPECT_EQ(item.extra.value("dataset", ""), "nextgqa");
    }
  }
  EXPECT_TRUE(found);
}

TEST(BuildDataset, ContextQuestionsAreRewritten) {
  auto sources = read_source(fs::path(IRM_TEST_DATA_DIR) / "fixtures" / "source_10.jsonl");
  const auto result = build_dataset(sources, BuildOptions{});
  for (const auto& item : result.items) {
    for (const auto& c : item.clues) EXPECT_EQ(c.action.find('?'), std::string::npos) << c.action;
  }
}

TEST(BuildDataset, SmallerSigmaMasksMore) {
  auto sources = read_source(fs::path(IRM_TEST_DATA_DIR) / "fixtures" / "source_10.jsonl");
  BuildOptions wide;
  wide.sigma = 10;
  const auto a = build_dataset(sources, wide);
  const auto b = build_dataset(sources, BuildOptions{});
  std::map<std::string, const IVQAItem*> narrow;
  for (const auto& item : b.items) narrow[item.id] = &item;
  for (const auto& item : a.items) {
    if (!narrow.count(item.id)) continue;
    const auto& other = *narrow[item.id];
    ASSERT_EQ(item.excluded_spans.size(), other.excluded_spans.size());
    for (std::size_t i = 0; i < item.excluded_spans.size(); ++i) {
      EXPECT_LE(item.excluded_spans[i].start, other.excluded_spans[i].start);
      EXPECT_GE(item.excluded_spans[i].end, other.excluded_spans[i].end);
    }
  }
}

TEST(Synthetic, DeterministicAndValid) {
  SyntheticOptions o;
  o.count = 40;
  const auto a = make_synthetic_dataset(o);
  const auto b = make_synthetic_dataset(o);
  EXPECT_EQ(a, b);
  std::size_t relevant = 0;
  std::size_t total = 0;
  for (const auto& item : a) {
    EXPECT_NO_THROW(validate_item(item));
    for (const auto& c : item.clues) {
      relevant += static_cast<std::size_t>(*c.relation_label);
      ++total;
    }
  }
  EXPECT_GT(relevant, 0u);
  EXPECT_LT(relevant, total);
}
